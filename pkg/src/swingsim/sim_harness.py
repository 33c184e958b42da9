"""Closed-loop swing trials at 1 kHz and randomized trial campaigns.

One trial is a single swing: a late-stance perception capture fixes the
control target, the swing starts at toe-off, and each tick samples the
human hip, runs the planner, integrates the commanded knee velocity
(ideally or through a first-order lag), and checks for contact. Geometric
contact stands in for the hardware's ground-reaction threshold: landing is
only recognized in the mirror sub-mode with the foot moving down; any other
surface intersection is a trip (obstacle) or scuff (ground).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .leg_kinematics import DEG, LegGeometry, HipPose, JointState, FootPoints, forward_points
from .perception import (
    Box,
    CameraModel,
    ControlTarget,
    ObstacleScene,
    camera_pose_from_thigh,
    capture,
    control_modify,
    crop_and_project,
    elevation_keypoints,
    extract_estimate,
)
from .swing_planner import Phase, PhaseState, PlannerParams, planner_step
from . import human_model
from .human_model import GaitIntent, HipTrajectoryParams

# Late-stance capture pose: thigh extended, knee flexed into pre-swing with
# the heel off the ground, which leaves the capture toe a couple of
# centimeters up (that toe height is the z_t entering the safety floor).
CAPTURE_THETA_H = -10.0 * DEG
CAPTURE_THETA_K = 28.0 * DEG

# Toe-off initial prosthesis configuration.
TOE_OFF_THETA_K = 10.0 * DEG

TIMEOUT_FACTOR = 2.0
# Profile window handed to the pruning stage: keypoints behind the capture
# toe carry no obstacle information, and past the nominal 1 m ground
# look-ahead the profile is frustum-edge noise; trimming both keeps the
# cluster budget on the stretch that matters.
BEHIND_TOE_TRIM = 0.0
PROFILE_AHEAD_CAP = 0.90  # m ahead of the capture toe


class Outcome(Enum):
    SUCCESS_STEP_OVER = "SUCCESS_STEP_OVER"
    SUCCESS_STEP_ON = "SUCCESS_STEP_ON"
    SUCCESS_LEVEL = "SUCCESS_LEVEL"
    TRIP = "TRIP"
    SCUFF = "SCUFF"
    TIMEOUT = "TIMEOUT"


SUCCESSES = {Outcome.SUCCESS_STEP_OVER, Outcome.SUCCESS_STEP_ON, Outcome.SUCCESS_LEVEL}


class Surface(Enum):
    GROUND = "GROUND"
    OBSTACLE_TOP = "OBSTACLE_TOP"


@dataclass(frozen=True)
class TrialConfig:
    scene: ObstacleScene = ObstacleScene()
    intent: GaitIntent = GaitIntent.LEVEL
    geometry: LegGeometry = LegGeometry()
    planner: PlannerParams = PlannerParams()
    human: Optional[HipTrajectoryParams] = None   # None -> preset(intent)
    camera: CameraModel = CameraModel()
    seed: int = 0
    tracking_lag_tau: float = 0.0   # s; 0 = ideal velocity tracking
    aim_landing: bool = True        # cooperative step-on progression aiming
    kmeans_k: int = 50
    kmeans_restarts: int = 8
    corridor_width: float = 0.15
    z_weight: float = 6.0
    edge_threshold: float = 0.02


@dataclass
class LogRow:
    t: float
    phase: str
    theta_h: float
    theta_h_dot: float
    theta_k: float
    theta_k_dot_cmd: float
    theta_k_dot_actual: float
    x_h: float
    z_h: float
    x_t: float
    z_t: float
    x_l: float
    z_l: float
    z_m: float
    x_c: float
    k_slope: float
    c_t: float
    gamma_1: float


LOG_COLUMNS = (
    "t_s", "phase", "theta_h_rad", "theta_h_dot_rads", "theta_k_rad",
    "theta_k_dot_cmd_rads", "theta_k_dot_actual_rads", "x_h_m", "z_h_m",
    "x_t_m", "z_t_m", "x_l_m", "z_l_m", "z_m_m", "x_c_m", "k_slope", "c_t",
    "gamma_1",
)


@dataclass
class StepLog:
    rows: list = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(LOG_COLUMNS) + "\n")
            for r in self.rows:
                vals = [f"{r.t:.6f}", r.phase]
                vals += [f"{v:.6f}" for v in (
                    r.theta_h, r.theta_h_dot, r.theta_k, r.theta_k_dot_cmd,
                    r.theta_k_dot_actual, r.x_h, r.z_h, r.x_t, r.z_t, r.x_l,
                    r.z_l, r.z_m, r.x_c, r.k_slope, r.c_t, r.gamma_1)]
                fh.write(",".join(vals) + "\n")


@dataclass
class TrialResult:
    outcome: Outcome
    swing_duration: float                 # s, toe-off to contact (or timeout horizon)
    peak_knee_flexion: float              # rad
    min_clearance: Optional[float]        # m over a box top; None if never crossed one
    landing_x: Optional[float]            # m, world x of the contact point
    landing_surface: Optional[Surface]
    target: ControlTarget                 # planner target, x_c absolute world x
    capture_toe: tuple                    # (x, z) of the toe at capture

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "swing_duration_s": round(self.swing_duration, 6),
            "peak_knee_flexion_rad": round(self.peak_knee_flexion, 6),
            "peak_knee_flexion_deg": round(self.peak_knee_flexion / DEG, 3),
            "min_clearance_m": None if self.min_clearance is None else round(self.min_clearance, 6),
            "landing_x_m": None if self.landing_x is None else round(self.landing_x, 6),
            "landing_surface": None if self.landing_surface is None else self.landing_surface.value,
            "target_z_m_m": round(self.target.z_m, 6),
            "target_x_c_world_m": round(self.target.x_c, 6),
        }


@dataclass(frozen=True)
class Contact:
    kind: str              # "landing" | "trip" | "scuff"
    surface: Optional[Surface]
    x: float
    z: float


def capture_state(cfg: TrialConfig) -> tuple:
    """Late-stance camera/toe state used for perception and box placement."""
    base = (cfg.human or human_model.preset(cfg.intent)).hip_height_base
    hip = HipPose(x_h=0.0, z_h=base, theta_h=CAPTURE_THETA_H)
    pts = forward_points(cfg.geometry, hip, CAPTURE_THETA_K)
    return hip, pts


def perceive(cfg: TrialConfig, seed_capture: int, seed_kmeans: int):
    """Run the full perception pipeline for one trial.

    Returns (target with x_c as a distance, keypoints-or-None, profile,
    capture toe). An empty capture or crop degrades to the level-ground
    target rather than failing.
    """
    hip, pts = capture_state(cfg)
    toe = pts.toe
    pose = camera_pose_from_thigh(hip.x_h, hip.z_h, hip.theta_h, cfg.camera)
    cloud = capture(cfg.scene, pose, cfg.camera, seed_capture, capture_toe=toe)
    flat = crop_and_project(cloud, corridor_width=cfg.corridor_width)
    if flat.shape[0]:
        keep = (flat[:, 0] >= toe[0] - BEHIND_TOE_TRIM) & \
               (flat[:, 0] <= toe[0] + PROFILE_AHEAD_CAP)
        flat = flat[keep]

    delta = cfg.planner.delta
    if flat.shape[0] == 0:
        est = None
        kps = None
        target = ControlTarget(z_m=toe[1] + delta, x_c=0.20)
    else:
        kps = elevation_keypoints(flat, k=cfg.kmeans_k, seed=seed_kmeans,
                                  restarts=cfg.kmeans_restarts, z_weight=cfg.z_weight)
        est = extract_estimate(kps, toe, edge_threshold=cfg.edge_threshold)
        target = control_modify(est, z_t=toe[1], delta=delta)
    return target, kps, flat, toe


def _segment_lowest_over_span(p0, p1, x_lo, x_hi):
    """Lowest z of segment p0->p1 restricted to x in [x_lo, x_hi].

    Returns (z, x) or None when the segment does not overlap the span.
    """
    (x0, z0), (x1, z1) = p0, p1
    if x1 < x0:
        x0, z0, x1, z1 = x1, z1, x0, z0
    lo, hi = max(x0, x_lo), min(x1, x_hi)
    if lo > hi:
        return None
    if x1 - x0 < 1e-12:
        z = min(z0, z1)
        return z, x0
    zl = z0 + (z1 - z0) * (lo - x0) / (x1 - x0)
    zh = z0 + (z1 - z0) * (hi - x0) / (x1 - x0)
    return (zl, lo) if zl <= zh else (zh, hi)


def _crosses_face(p0, p1, face_x, z_lo, z_hi):
    """z at which segment p0->p1 crosses the vertical line x = face_x, if the
    crossing lies inside (z_lo, z_hi)."""
    (x0, z0), (x1, z1) = p0, p1
    if (x0 - face_x) * (x1 - face_x) > 0.0 or abs(x1 - x0) < 1e-12:
        return None
    z = z0 + (z1 - z0) * (face_x - x0) / (x1 - x0)
    if z_lo < z < z_hi:
        return z
    return None


def contact_check(pts: FootPoints, scene: ObstacleScene, in_mirror: bool,
                  downward: bool) -> Optional[Contact]:
    """Classify foot/shank contact with the scene, if any.

    Vertical box faces always trip. Surface touches land only in the mirror
    sub-mode with downward foot velocity; otherwise they are trips (box top)
    or scuffs (ground).
    """
    g = scene.ground_height
    foot = (pts.heel, pts.toe)
    shank = (pts.knee, pts.ankle)

    for box in scene.boxes:
        top = g + box.height
        for seg in (foot, shank):
            for face_x in (box.front_x, box.back_x):
                z = _crosses_face(seg[0], seg[1], face_x, g, top - 1e-9)
                if z is not None:
                    return Contact("trip", None, face_x, z)
        hit = _segment_lowest_over_span(foot[0], foot[1], box.front_x, box.back_x)
        if hit is not None and hit[0] <= top:
            z, x = hit
            if in_mirror and downward:
                return Contact("landing", Surface.OBSTACLE_TOP, x, z)
            return Contact("trip", Surface.OBSTACLE_TOP, x, z)

    low, low_x = (pts.heel[1], pts.heel[0]) if pts.heel[1] <= pts.toe[1] else (pts.toe[1], pts.toe[0])
    if low <= g:
        covered = any(b.front_x <= low_x <= b.back_x for b in scene.boxes)
        if not covered:
            if in_mirror and downward:
                return Contact("landing", Surface.GROUND, low_x, low)
            return Contact("scuff", Surface.GROUND, low_x, low)
    return None


def _classify(contact: Optional[Contact], cfg: TrialConfig) -> tuple:
    """Map a contact event to a trial outcome under the trial's intent."""
    if contact is None:
        return Outcome.TIMEOUT, None, None
    if contact.kind == "trip":
        return Outcome.TRIP, contact.x, contact.surface
    if contact.kind == "scuff":
        return Outcome.SCUFF, contact.x, contact.surface

    surface = contact.surface
    if cfg.intent is GaitIntent.LEVEL:
        out = Outcome.SUCCESS_LEVEL if surface is Surface.GROUND else Outcome.TRIP
    elif cfg.intent is GaitIntent.STEP_ON:
        out = Outcome.SUCCESS_STEP_ON if surface is Surface.OBSTACLE_TOP else Outcome.SCUFF
    else:  # STEP_OVER: must come down on the ground past every box it crossed
        if surface is not Surface.GROUND:
            out = Outcome.TRIP
        else:
            beyond = all(contact.x > b.back_x or contact.x < b.front_x
                         for b in cfg.scene.boxes)
            clear_of_crossed = all(contact.x > b.back_x for b in cfg.scene.boxes
                                   if b.front_x < contact.x)
            out = Outcome.SUCCESS_STEP_OVER if (beyond and clear_of_crossed) else Outcome.SCUFF
    return out, contact.x, surface


def resolve_human(cfg: TrialConfig) -> HipTrajectoryParams:
    """Preset resolution plus the cooperative step-on aiming."""
    params = cfg.human if cfg.human is not None else human_model.preset(cfg.intent)
    if (cfg.aim_landing and cfg.intent is GaitIntent.STEP_ON
            and len(cfg.scene.boxes) == 1):
        box = cfg.scene.boxes[0]
        params = human_model.aim_step_on_progression(
            params, box.front_x, box.depth, thigh=cfg.geometry.thigh_m)
    return params


def run_swing(cfg: TrialConfig) -> tuple:
    """Simulate one swing; returns (StepLog, TrialResult)."""
    ss = np.random.SeedSequence(cfg.seed)
    s_capture, s_kmeans, s_noise = (int(c.generate_state(1)[0]) for c in ss.spawn(3))

    human = resolve_human(cfg)
    target_rel, _, _, cap_toe = perceive(cfg, s_capture, s_kmeans)
    target = ControlTarget(z_m=target_rel.z_m, x_c=cap_toe[0] + target_rel.x_c)

    params = cfg.planner
    dt = params.dt
    t = 0.0
    noise_seed = s_noise if human.noise_sigma > 0.0 else None

    def hip_at(tt: float) -> HipPose:
        """Hip pose whose rate is the exact average over the coming tick.

        The planner's velocity command is held for one tick, so the hip
        velocity the controller should synchronize with is the ground-truth
        displacement over that tick; feeding the instantaneous rate instead
        would leak the hip's intra-tick curvature into the knee command and
        let the mirror lock drift.
        """
        now = human_model.hip_pose(human, tt, noise_seed)
        nxt = human_model.hip_pose(human, tt + dt, noise_seed)
        return HipPose(x_h=now.x_h, z_h=now.z_h, theta_h=now.theta_h,
                       theta_h_dot=(nxt.theta_h - now.theta_h) / dt)

    hip = hip_at(t)
    joint = JointState(theta_k=TOE_OFF_THETA_K, theta_k_dot=0.0, theta_k_ddot=0.0)
    state = PhaseState()
    log = StepLog()

    horizon = TIMEOUT_FACTOR * human.swing_duration
    peak_flex = joint.theta_k
    min_clear: Optional[float] = None
    contact: Optional[Contact] = None
    prev_low = None

    pts = forward_points(cfg.geometry, hip, joint.theta_k)
    while t < horizon + dt / 2:
        cmd = planner_step(cfg.geometry, hip, joint, joint.theta_k_dot, target,
                           state, params)
        log.rows.append(LogRow(
            t=t, phase=state.phase.value, theta_h=hip.theta_h,
            theta_h_dot=hip.theta_h_dot, theta_k=joint.theta_k,
            theta_k_dot_cmd=cmd.knee_vel_cmd, theta_k_dot_actual=joint.theta_k_dot,
            x_h=hip.x_h, z_h=hip.z_h, x_t=pts.toe[0], z_t=pts.toe[1],
            x_l=pts.heel[0], z_l=pts.heel[1], z_m=target.z_m, x_c=target.x_c,
            k_slope=cmd.slope, c_t=cmd.c_t, gamma_1=cmd.gamma_1,
        ))

        # integrate the velocity command over [t, t + dt)
        if cfg.tracking_lag_tau > 0.0:
            v_new = joint.theta_k_dot + (dt / cfg.tracking_lag_tau) * \
                (cmd.knee_vel_cmd - joint.theta_k_dot)
        else:
            v_new = cmd.knee_vel_cmd
        theta_k_new = joint.theta_k + v_new * dt
        theta_k_new = min(max(theta_k_new, 0.0), params.knee_limit)
        v_actual = (theta_k_new - joint.theta_k) / dt
        a_actual = (v_actual - joint.theta_k_dot) / dt
        joint = JointState(theta_k=theta_k_new, theta_k_dot=v_actual,
                           theta_k_ddot=a_actual)

        t += dt
        hip = hip_at(t)
        pts = forward_points(cfg.geometry, hip, joint.theta_k)
        peak_flex = max(peak_flex, joint.theta_k)

        for box in cfg.scene.boxes:
            hit = _segment_lowest_over_span(pts.heel, pts.toe, box.front_x, box.back_x)
            if hit is not None:
                clear = hit[0] - (cfg.scene.ground_height + box.height)
                min_clear = clear if min_clear is None else min(min_clear, clear)

        low_now = min(pts.heel[1], pts.toe[1])
        downward = prev_low is not None and low_now < prev_low
        prev_low = low_now
        contact = contact_check(pts, cfg.scene, state.phase is Phase.THREE_MIRROR,
                                downward)
        if contact is not None:
            break

    outcome, landing_x, surface = _classify(contact, cfg)
    result = TrialResult(
        outcome=outcome,
        swing_duration=t,
        peak_knee_flexion=peak_flex,
        min_clearance=min_clear,
        landing_x=landing_x,
        landing_surface=surface,
        target=target,
        capture_toe=cap_toe,
    )
    return log, result


# ---------------------------------------------------------------------------
# campaigns


@dataclass(frozen=True)
class CampaignConfig:
    seed: int = 2024
    n_step_over: int = 150
    n_step_on: int = 30
    n_level: int = 30
    heights: tuple = (0.04, 0.08, 0.16)
    step_on_height: float = 0.16
    distance_range: tuple = (0.15, 0.70)
    step_on_distance_range: tuple = (0.50, 0.70)   # steppable window; see notes
    box_depth: float = 0.15
    box_width: float = 0.40
    base: TrialConfig = TrialConfig()
    expect_all_success: bool = True

    @staticmethod
    def reproduction_profile(seed: int = 2024, base: Optional[TrialConfig] = None) -> "CampaignConfig":
        return CampaignConfig(seed=seed, base=base or TrialConfig())


@dataclass(frozen=True)
class TrialSpec:
    index: int
    intent: GaitIntent
    height: Optional[float]
    distance: Optional[float]
    seed: int


@dataclass
class CampaignResult:
    specs: list
    results: list
    logs: Optional[list]
    summary: dict


def build_trial_specs(cc: CampaignConfig) -> list:
    """Deterministic (box, distance, seed) draws for every trial."""
    master = np.random.SeedSequence(cc.seed)
    children = master.spawn(1 + cc.n_step_over + cc.n_step_on + cc.n_level)
    rng = np.random.default_rng(children[0])
    specs = []
    idx = 0
    for _ in range(cc.n_step_over):
        h = float(rng.choice(cc.heights))
        d = float(rng.uniform(*cc.distance_range))
        specs.append(TrialSpec(idx, GaitIntent.STEP_OVER, h, d,
                               int(children[1 + idx].generate_state(1)[0])))
        idx += 1
    for _ in range(cc.n_step_on):
        d = float(rng.uniform(*cc.step_on_distance_range))
        specs.append(TrialSpec(idx, GaitIntent.STEP_ON, cc.step_on_height, d,
                               int(children[1 + idx].generate_state(1)[0])))
        idx += 1
    for _ in range(cc.n_level):
        specs.append(TrialSpec(idx, GaitIntent.LEVEL, None, None,
                               int(children[1 + idx].generate_state(1)[0])))
        idx += 1
    return specs


def trial_config_for(cc: CampaignConfig, spec: TrialSpec) -> TrialConfig:
    base = cc.base
    if spec.height is None:
        scene = ObstacleScene(boxes=())
    else:
        _, cap_pts = capture_state(replace(base, intent=spec.intent))
        front = cap_pts.toe[0] + spec.distance
        scene = ObstacleScene(boxes=(
            Box(front_x=front, height=spec.height, depth=cc.box_depth,
                width=cc.box_width),))
    return replace(base, scene=scene, intent=spec.intent, seed=spec.seed)


def _run_one(args) -> tuple:
    cc, spec, keep_log = args
    log, result = run_swing(trial_config_for(cc, spec))
    return (log if keep_log else None), result


def run_campaign(cc: CampaignConfig, jobs: int = 1, keep_logs: bool = False) -> CampaignResult:
    """Run every trial (optionally in parallel; each trial owns its RNG
    stream) and aggregate per-condition statistics."""
    specs = build_trial_specs(cc)
    work = [(cc, s, keep_logs) for s in specs]
    if jobs > 1:
        import multiprocessing as mp
        with mp.Pool(jobs) as pool:
            out = pool.map(_run_one, work)
    else:
        out = [_run_one(w) for w in work]
    logs = [o[0] for o in out] if keep_logs else None
    results = [o[1] for o in out]
    summary = summarize(cc, specs, results)
    return CampaignResult(specs=specs, results=results, logs=logs, summary=summary)


def _condition_key(spec: TrialSpec) -> str:
    if spec.intent is GaitIntent.LEVEL:
        return "level"
    return f"{spec.intent.value}_h{spec.height:.2f}"


def _stats(values) -> dict:
    vals = list(values)
    if not vals:
        return {"n": 0}
    return {
        "n": len(vals),
        "mean": round(sum(vals) / len(vals), 6),
        "min": round(min(vals), 6),
        "max": round(max(vals), 6),
    }


def summarize(cc: CampaignConfig, specs, results) -> dict:
    conditions = {}
    for spec, res in zip(specs, results):
        key = _condition_key(spec)
        conditions.setdefault(key, []).append((spec, res))

    cond_summaries = {}
    for key in sorted(conditions):
        entries = conditions[key]
        ok = [r for _, r in entries if r.outcome in SUCCESSES]
        clear = [r.min_clearance for _, r in entries if r.min_clearance is not None]
        outcome_counts = {}
        for _, r in entries:
            outcome_counts[r.outcome.value] = outcome_counts.get(r.outcome.value, 0) + 1
        cond_summaries[key] = {
            "n": len(entries),
            "n_success": len(ok),
            "success_rate": round(len(ok) / len(entries), 6),
            "outcomes": dict(sorted(outcome_counts.items())),
            "swing_duration_s": _stats(r.swing_duration for _, r in entries),
            "peak_knee_flexion_deg": _stats(r.peak_knee_flexion / DEG for _, r in entries),
            "min_clearance_m": _stats(clear),
        }

    n = len(results)
    n_ok = sum(1 for r in results if r.outcome in SUCCESSES)
    return {
        "campaign": {
            "seed": cc.seed,
            "n_step_over": cc.n_step_over,
            "n_step_on": cc.n_step_on,
            "n_level": cc.n_level,
            "heights_m": list(cc.heights),
            "distance_range_m": list(cc.distance_range),
            "step_on_distance_range_m": list(cc.step_on_distance_range),
        },
        "conditions": cond_summaries,
        "overall": {"n": n, "n_success": n_ok,
                    "success_rate": round(n_ok / n, 6) if n else 0.0},
    }


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True)


def write_trial_index_csv(path, specs, results) -> None:
    with open(path, "w") as fh:
        fh.write("trial,intent,height_m,distance_m,seed,outcome,duration_s,"
                 "peak_flexion_deg,min_clearance_m,landing_x_m\n")
        for spec, res in zip(specs, results):
            h = "" if spec.height is None else f"{spec.height:.6f}"
            d = "" if spec.distance is None else f"{spec.distance:.6f}"
            mc = "" if res.min_clearance is None else f"{res.min_clearance:.6f}"
            lx = "" if res.landing_x is None else f"{res.landing_x:.6f}"
            fh.write(f"{spec.index},{spec.intent.value},{h},{d},{spec.seed},"
                     f"{res.outcome.value},{res.swing_duration:.6f},"
                     f"{res.peak_knee_flexion / DEG:.6f},{mc},{lx}\n")
