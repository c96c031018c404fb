"""Quadrotor transport drones: dynamics, position control, mission modes.

The airframe is a saturated double integrator per axis under PID
position control, which is all the docking and transport logic needs.
Mode logic runs on estimated state; physically grounded events (object
detection, grasp outcome, touchdown) are resolved by the world model and
fed back through UavObservations, so the mode machine itself stays
deterministic and unit-testable.

Mission key points follow the deck handling scheme: P0 is the launch pad,
P1 sits a fixed clearance above P0, P2 the same clearance above the
object, P3 the object itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .frames import wrap_angle
from .perception import RectangleFit
from .sensors import QrObservation


@dataclass
class UavParams:
    accel_max_mps2: float = 4.0
    drag_coeff: float = 0.5  # relative-wind acceleration per m/s
    yaw_tau_s: float = 0.6
    payload_max_kg: float = 5.0


@dataclass
class UavGains:
    kp: float = 2.0
    ki: float = 0.3
    kd: float = 2.6
    integral_band_m: float = 1.0  # integrate only near the setpoint
    integral_max: float = 2.0  # clamp on the integral accel term


@dataclass
class UavState:
    position: np.ndarray = None  # (3,) [m]
    velocity: np.ndarray = None  # (3,) [m/s]
    yaw: float = 0.0
    carrying: Optional[int] = None  # object id when loaded

    def __post_init__(self) -> None:
        self.position = (
            np.zeros(3) if self.position is None else np.asarray(self.position, float).reshape(3)
        )
        self.velocity = (
            np.zeros(3) if self.velocity is None else np.asarray(self.velocity, float).reshape(3)
        )

    def copy(self) -> "UavState":
        return UavState(self.position.copy(), self.velocity.copy(), self.yaw, self.carrying)


class PositionController:
    """Per-axis PID with conditional integration and output saturation."""

    def __init__(self, gains: UavGains | None = None):
        self.gains = gains or UavGains()
        self.integral = np.zeros(3)

    def reset(self) -> None:
        self.integral[:] = 0.0

    def accel_command(
        self, error: np.ndarray, velocity: np.ndarray, dt: float, a_max: float
    ) -> np.ndarray:
        g = self.gains
        near = np.abs(error) < g.integral_band_m
        self.integral[near] += error[near] * dt
        self.integral = np.clip(
            self.integral, -g.integral_max / max(g.ki, 1e-9), g.integral_max / max(g.ki, 1e-9)
        )
        a = g.kp * error + g.ki * self.integral - g.kd * velocity
        return np.clip(a, -a_max, a_max)


def step_uav(
    state: UavState,
    controller: PositionController,
    setpoint: np.ndarray,
    wind: np.ndarray,
    dt: float,
    params: UavParams | None = None,
    yaw_setpoint: float | None = None,
) -> UavState:
    """Advance the airframe one control step (dt at most 0.1 s)."""
    if not 0.0 < dt <= 0.1:
        raise ValueError(f"dt must lie in (0, 0.1], got {dt}")
    p = params or UavParams()
    sp = np.asarray(setpoint, dtype=float).reshape(3)
    w = np.asarray(wind, dtype=float).reshape(3)
    a_cmd = controller.accel_command(
        sp - state.position, state.velocity, dt, p.accel_max_mps2
    )
    a = a_cmd + p.drag_coeff * (w - state.velocity)
    out = state.copy()
    out.velocity = state.velocity + a * dt
    out.position = state.position + out.velocity * dt
    if yaw_setpoint is not None:
        rate = wrap_angle(yaw_setpoint - state.yaw) / p.yaw_tau_s
        rate = min(max(rate, -2.0), 2.0)
        out.yaw = wrap_angle(state.yaw + rate * dt)
    return out


def grasp_success_probability(hover_error_m: float, threshold_m: float = 0.1) -> float:
    """Electromagnet capture odds given the hover error over the object."""
    return 0.95 if hover_error_m < threshold_m else 0.5


class UavMode(Enum):
    IDLE = "idle"
    TAKEOFF = "takeoff"
    TRANSIT_TO_SEARCH = "transit_to_search"
    COVERAGE_SEARCH = "coverage_search"
    HOVER_OVER_OBJECT = "hover_over_object"
    DESCEND = "descend"
    GRASP = "grasp"
    ASCEND = "ascend"
    RETURN_TRANSIT = "return_transit"
    QR_ACQUIRE = "qr_acquire"
    PRECISION_LAND = "precision_land"
    LANDED = "landed"
    ABORT = "abort"


# Modes from which the machine may leave for each destination. ABORT is
# reachable from anywhere and therefore not listed.
_ALLOWED = {
    UavMode.TAKEOFF: {UavMode.IDLE},
    UavMode.TRANSIT_TO_SEARCH: {UavMode.TAKEOFF},
    UavMode.COVERAGE_SEARCH: {UavMode.TRANSIT_TO_SEARCH},
    UavMode.HOVER_OVER_OBJECT: {UavMode.COVERAGE_SEARCH},
    UavMode.DESCEND: {UavMode.HOVER_OVER_OBJECT},
    UavMode.GRASP: {UavMode.DESCEND},
    UavMode.ASCEND: {UavMode.GRASP},
    UavMode.RETURN_TRANSIT: {UavMode.ASCEND, UavMode.TAKEOFF},
    UavMode.QR_ACQUIRE: {UavMode.RETURN_TRANSIT},
    UavMode.PRECISION_LAND: {UavMode.QR_ACQUIRE},
    UavMode.LANDED: {UavMode.PRECISION_LAND, UavMode.IDLE},
}


@dataclass
class TakeoffCommand:
    search_waypoints: np.ndarray  # (n, 2) deck-frame search pattern
    search_alt_m: float = 3.0
    object_id: Optional[int] = None
    return_only: bool = False  # climb and go straight to landing


@dataclass
class AbortCommand:
    reason: str = "carrier_abort"


@dataclass
class GraspResult:
    success: bool
    object_id: int


@dataclass
class UavObservations:
    """Per-tick sensor and event inputs to the mode machine."""

    qr: Optional[QrObservation] = None
    object_rel: Optional[np.ndarray] = None  # camera fix, object minus UAV (3,)
    detection: Optional[tuple[int, np.ndarray]] = None  # id, position (3,)
    grasp_result: Optional[GraspResult] = None
    touched_down: bool = False
    ekf_diverged: bool = False
    command: Optional[object] = None  # TakeoffCommand | AbortCommand


@dataclass
class MissionConfig:
    clearance_alt_m: float = 3.0  # P1/P2 height over pad and object
    search_alt_m: float = 3.0
    arrive_tol_m: float = 0.8
    waypoint_tol_m: float = 0.7
    hover_tol_m: float = 0.25
    hover_vel_tol_mps: float = 0.3
    hover_settle_s: float = 1.0
    descent_rate_mps: float = 0.5
    grasp_alt_m: float = 0.4
    grasp_settle_s: float = 0.5
    max_grasp_attempts: int = 4
    land_descent_rate_mps: float = 0.35
    qr_hold_after_s: float = 0.5
    qr_reacquire_climb_m: float = 1.0
    qr_abort_after_s: float = 10.0
    touchdown_alt_m: float = 0.05


@dataclass
class UavMissionPlan:
    """Mutable mission memory for one UAV."""

    mode: UavMode = UavMode.IDLE
    pad_position: np.ndarray = None  # P0, deck frame (3,)
    p1: np.ndarray = None
    search_waypoints: np.ndarray = None
    wp_index: int = 0
    search_alt_m: float = 3.0
    object_id: Optional[int] = None
    object_position: np.ndarray = None  # refreshed by detection (3,)
    grasp_attempts: int = 0
    mode_entered_t: float = 0.0
    settled_since: Optional[float] = None
    qr_invalid_since: Optional[float] = None
    land_alt_ref: Optional[float] = None
    abort_reason: Optional[str] = None
    touchdown_t: Optional[float] = None
    visited_waypoints: list = field(default_factory=list)
    return_only: bool = False
    _hold_setpoint: np.ndarray = None

    def transition(self, mode: UavMode, t: float) -> None:
        if mode is not UavMode.ABORT and self.mode not in _ALLOWED.get(mode, set()):
            raise ValueError(f"illegal mode transition {self.mode} -> {mode}")
        self.mode = mode
        self.mode_entered_t = t
        self.settled_since = None


def uav_mission_step(
    plan: UavMissionPlan,
    est_position: np.ndarray,
    est_velocity: np.ndarray,
    obs: UavObservations,
    t: float,
    cfg: MissionConfig | None = None,
) -> np.ndarray:
    """One tick of the mission mode machine; returns the position setpoint.

    The plan is updated in place. Objects are tracked by servoing on the
    relative camera fix when available, so steady estimator bias does not
    leak into the hover error over the object or the pad.
    """
    c = cfg or MissionConfig()
    pos = np.asarray(est_position, dtype=float).reshape(3)
    vel = np.asarray(est_velocity, dtype=float).reshape(3)

    if obs.ekf_diverged or isinstance(obs.command, AbortCommand):
        if plan.mode not in (UavMode.ABORT, UavMode.LANDED, UavMode.IDLE):
            plan.abort_reason = (
                "ekf_divergence" if obs.ekf_diverged else obs.command.reason
            )
            plan._hold_setpoint = pos.copy()
            plan.transition(UavMode.ABORT, t)

    mode = plan.mode

    if mode is UavMode.IDLE:
        if isinstance(obs.command, TakeoffCommand):
            plan.pad_position = pos.copy()
            plan.p1 = pos + np.array([0.0, 0.0, c.clearance_alt_m])
            plan.search_waypoints = np.asarray(
                obs.command.search_waypoints, dtype=float
            ).reshape(-1, 2)
            plan.search_alt_m = obs.command.search_alt_m
            plan.object_id = obs.command.object_id
            plan.return_only = obs.command.return_only
            plan.wp_index = 0
            plan.grasp_attempts = 0
            plan.visited_waypoints = []
            plan.transition(UavMode.TAKEOFF, t)
        return pos if plan.pad_position is None else plan.pad_position

    if mode is UavMode.TAKEOFF:
        if pos[2] >= plan.p1[2] - 0.3:
            if plan.return_only:
                plan.transition(UavMode.RETURN_TRANSIT, t)
            else:
                plan.transition(UavMode.TRANSIT_TO_SEARCH, t)
        return plan.p1

    if mode is UavMode.TRANSIT_TO_SEARCH:
        wp = plan.search_waypoints[0]
        sp = np.array([wp[0], wp[1], plan.search_alt_m])
        if float(np.hypot(*(pos[:2] - wp))) < c.arrive_tol_m:
            plan.transition(UavMode.COVERAGE_SEARCH, t)
        return sp

    if mode is UavMode.COVERAGE_SEARCH:
        if obs.detection is not None:
            obj_id, obj_pos = obs.detection
            if plan.object_id is None or obj_id == plan.object_id:
                plan.object_id = obj_id
                plan.object_position = np.asarray(obj_pos, float).reshape(3)
                plan.transition(UavMode.HOVER_OVER_OBJECT, t)
                return plan.object_position + np.array([0.0, 0.0, c.clearance_alt_m])
        wp = plan.search_waypoints[plan.wp_index]
        if float(np.hypot(*(pos[:2] - wp))) < c.waypoint_tol_m:
            plan.visited_waypoints.append(plan.wp_index)
            plan.wp_index = (plan.wp_index + 1) % len(plan.search_waypoints)
            wp = plan.search_waypoints[plan.wp_index]
        return np.array([wp[0], wp[1], plan.search_alt_m])

    if mode is UavMode.HOVER_OVER_OBJECT:
        p2 = plan.object_position + np.array([0.0, 0.0, c.clearance_alt_m])
        if obs.object_rel is not None:
            rel = np.asarray(obs.object_rel, float).reshape(3)
            plan.object_position = pos + rel
            p2 = plan.object_position + np.array([0.0, 0.0, c.clearance_alt_m])
            horiz = float(np.hypot(rel[0], rel[1]))
            if horiz < c.hover_tol_m and float(np.linalg.norm(vel)) < c.hover_vel_tol_mps:
                if plan.settled_since is None:
                    plan.settled_since = t
                elif t - plan.settled_since >= c.hover_settle_s:
                    plan.transition(UavMode.DESCEND, t)
            else:
                plan.settled_since = None
        return p2

    if mode is UavMode.DESCEND:
        if obs.object_rel is not None:
            plan.object_position = pos + np.asarray(obs.object_rel, float).reshape(3)
        target_alt = plan.object_position[2] + c.grasp_alt_m
        alt_err = pos[2] - target_alt
        if alt_err <= 0.05:
            plan.transition(UavMode.GRASP, t)
        sp_z = max(target_alt, pos[2] - c.descent_rate_mps * 0.5)
        return np.array([plan.object_position[0], plan.object_position[1], sp_z])

    if mode is UavMode.GRASP:
        if obs.object_rel is not None:
            plan.object_position = pos + np.asarray(obs.object_rel, float).reshape(3)
        if obs.grasp_result is not None:
            plan.grasp_attempts += 1
            if obs.grasp_result.success:
                plan.transition(UavMode.ASCEND, t)
            elif plan.grasp_attempts >= c.max_grasp_attempts:
                plan.transition(UavMode.ASCEND, t)  # give up, come home empty
            else:
                plan.settled_since = None  # stabilize again before a retry
        return np.array(
            [
                plan.object_position[0],
                plan.object_position[1],
                plan.object_position[2] + c.grasp_alt_m,
            ]
        )

    if mode is UavMode.ASCEND:
        target_alt = max(plan.p1[2], plan.object_position[2] + c.clearance_alt_m)
        if pos[2] >= target_alt - 0.3:
            plan.transition(UavMode.RETURN_TRANSIT, t)
        return np.array([pos[0], pos[1], target_alt])

    if mode is UavMode.RETURN_TRANSIT:
        if float(np.hypot(*(pos[:2] - plan.p1[:2]))) < 1.0:
            plan.transition(UavMode.QR_ACQUIRE, t)
        return plan.p1

    if mode is UavMode.QR_ACQUIRE:
        if obs.qr is not None and obs.qr.valid:
            plan.qr_invalid_since = None
            plan.land_alt_ref = pos[2]
            plan.transition(UavMode.PRECISION_LAND, t)
            return precision_land(plan, pos, obs, t, c)
        return plan.p1

    if mode is UavMode.PRECISION_LAND:
        return precision_land(plan, pos, obs, t, c)

    if mode is UavMode.LANDED:
        return plan.pad_position if plan.pad_position is not None else pos

    # ABORT holds position awaiting recovery by the carrier crew.
    return plan._hold_setpoint if plan._hold_setpoint is not None else pos


def precision_land(
    plan: UavMissionPlan,
    pos: np.ndarray,
    obs: UavObservations,
    t: float,
    cfg: MissionConfig | None = None,
) -> np.ndarray:
    """Camera-relative descent onto the pad pattern.

    Descends along the measured pad offset. Short pattern losses hold
    altitude; longer ones climb to reacquire; persistent loss aborts to
    a hover. Touchdown is declared by the world through obs.touched_down
    or by the altitude reference when the pattern tracks all the way in.
    """
    c = cfg or MissionConfig()
    if obs.touched_down:
        plan.touchdown_t = t
        plan.transition(UavMode.LANDED, t)
        return plan.pad_position if plan.pad_position is not None else pos

    qr = obs.qr
    if qr is not None and qr.valid:
        plan.qr_invalid_since = None
        pad = pos + qr.offset
        plan.pad_position = pad.copy()
        sp_z = pos[2] - c.land_descent_rate_mps * 0.5
        sp_z = max(sp_z, pad[2])
        return np.array([pad[0], pad[1], sp_z])

    if plan.qr_invalid_since is None:
        plan.qr_invalid_since = t
    lost_for = t - plan.qr_invalid_since
    if lost_for > c.qr_abort_after_s:
        plan.abort_reason = "qr_lost"
        plan._hold_setpoint = pos.copy()
        plan.transition(UavMode.ABORT, t)
        return plan._hold_setpoint
    if lost_for > c.qr_hold_after_s:
        # Climb gently to widen the camera footprint and reacquire.
        base = plan.pad_position[:2] if plan.pad_position is not None else pos[:2]
        return np.array([base[0], base[1], pos[2] + c.qr_reacquire_climb_m])
    hold = plan.pad_position if plan.pad_position is not None else pos
    return np.array([hold[0], hold[1], pos[2]])


class CooperativePlanError(ValueError):
    pass


def cooperative_drag_plan(
    object_fit: RectangleFit,
    reach_center: np.ndarray,
    reach_radius_m: float,
    uav_positions: list[np.ndarray],
    drag_alt_m: float = 1.0,
    step_m: float = 0.5,
    margin_m: float = 0.2,
    min_separation_m: float = 2.0,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Two-drone tether drag of a long object into the manipulator disc.

    Drones grip the ends of the object's long axis and translate its
    centroid along the straight line toward the reach center, keeping
    their rigid end offsets (and hence separation) throughout. Returns a
    waypoint array per drone plus the final centroid.
    """
    if len(uav_positions) != 2:
        raise CooperativePlanError("cooperative drag needs exactly 2 drones")
    if object_fit.length_m < min_separation_m:
        raise CooperativePlanError(
            f"object long axis {object_fit.length_m:.2f} m violates the "
            f"{min_separation_m:.1f} m separation minimum"
        )
    center = np.asarray(object_fit.center, dtype=float).reshape(2)
    goal = np.asarray(reach_center, dtype=float).reshape(2)
    u = np.array([math.cos(object_fit.heading_rad), math.sin(object_fit.heading_rad)])
    ends = [center + 0.5 * object_fit.length_m * u, center - 0.5 * object_fit.length_m * u]

    p0 = np.asarray(uav_positions[0], dtype=float).reshape(-1)[:2]
    p1 = np.asarray(uav_positions[1], dtype=float).reshape(-1)[:2]
    direct = np.linalg.norm(p0 - ends[0]) + np.linalg.norm(p1 - ends[1])
    crossed = np.linalg.norm(p0 - ends[1]) + np.linalg.norm(p1 - ends[0])
    if crossed < direct:
        assignment = (ends[1], ends[0])
    else:
        assignment = (ends[0], ends[1])
    offsets = [assignment[0] - center, assignment[1] - center]

    to_goal = goal - center
    dist = float(np.linalg.norm(to_goal))
    stop = max(reach_radius_m - margin_m, 0.0)
    if dist <= stop:
        return [np.zeros((0, 3)), np.zeros((0, 3))], center
    direction = to_goal / dist
    travel = dist - stop
    n = max(1, int(math.ceil(travel / step_m)))
    plans: list[np.ndarray] = []
    centroids = center[None, :] + np.outer(
        np.arange(1, n + 1) * (travel / n), direction
    )
    for off in offsets:
        pts = centroids + off[None, :]
        plans.append(
            np.column_stack([pts, np.full(len(pts), drag_alt_m)])
        )
    return plans, centroids[-1]
