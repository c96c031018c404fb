"""Guidance and control for the carrier: headings, Dubins paths, docking.

Angles follow the math convention (counterclockwise positive, zero along
+x east). A heading command names its source so the mission layer can
switch between shore camera, onboard camera and LiDAR guidance and log
which one steered the boat at any time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .frames import wrap_angle
from .usv import HydroParams, ThrusterCommand, Wrench, allocate_vectored


class GuidanceError(ValueError):
    pass


class InfeasiblePathError(GuidanceError):
    pass


class HeadingSource(Enum):
    ONSHORE_GIMBAL = "onshore_gimbal"
    ONBOARD_GIMBAL = "onboard_gimbal"
    LIDAR = "lidar"
    DEAD_RECKONING = "dead_reckoning"
    NONE = "none"


@dataclass
class HeadingCommand:
    beta: float  # desired heading in the inertial frame [rad]
    source: HeadingSource = HeadingSource.NONE


def heading_to_target(
    yaw_imu: float,
    usv_pos: np.ndarray,
    target_pos: np.ndarray,
    source: HeadingSource = HeadingSource.NONE,
) -> HeadingCommand:
    """Line-of-sight heading from estimated positions.

    The bearing uses the full-quadrant arctangent of the position
    difference, so it is exact in every quadrant; yaw_imu only serves to
    express the result as the nearest equivalent heading for the
    onboard controller (the error wraps either way).
    """
    u = np.asarray(usv_pos, dtype=float).reshape(-1)[:2]
    g = np.asarray(target_pos, dtype=float).reshape(-1)[:2]
    dx, dy = float(g[0] - u[0]), float(g[1] - u[1])
    if dx == 0.0 and dy == 0.0:
        raise GuidanceError("usv and target positions coincide, bearing undefined")
    beta = wrap_angle(yaw_imu - wrap_angle(yaw_imu - math.atan2(dy, dx)))
    return HeadingCommand(beta, source)


@dataclass
class HeadingGains:
    kp: float = 900.0  # [N m / rad]
    kd: float = 1700.0  # [N m s / rad]


def heading_controller(
    yaw_meas: float,
    yaw_rate_meas: float,
    cmd: HeadingCommand,
    cruise_thrust_n: float,
    params: HydroParams,
    gains: HeadingGains | None = None,
) -> ThrusterCommand:
    """Differential-thrust PD law for the fixed-mount configuration."""
    g = gains or HeadingGains()
    err = wrap_angle(cmd.beta - yaw_meas)
    mz = g.kp * err - g.kd * yaw_rate_meas
    half = 0.5 * mz / params.lever_arm_m
    lim = params.thrust_max_n
    t1 = min(max(cruise_thrust_n + half, -lim), lim)
    t2 = min(max(cruise_thrust_n - half, -lim), lim)
    return ThrusterCommand(t1, t2, 0.0, 0.0)


def min_turn_radius(speed_mps: float, k_s: float = 6.0, floor_m: float = 3.0) -> float:
    """Kinematic turn radius limit for a given stage speed."""
    return max(k_s * abs(speed_mps), floor_m)


@dataclass
class Pose2:
    x: float
    y: float
    theta: float

    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class ArcSegment:
    center: np.ndarray  # (2,)
    radius: float
    direction: int  # +1 counterclockwise (L), -1 clockwise (R)
    heading0: float  # heading at segment start
    sweep: float  # nonnegative heading change magnitude [rad]
    speed_mps: float = 0.0

    @property
    def length(self) -> float:
        return self.radius * self.sweep

    def pose_at(self, s: float) -> Pose2:
        h = self.heading0 + self.direction * (s / self.radius)
        p = self.center + self.direction * self.radius * np.array([math.sin(h), -math.cos(h)])
        return Pose2(float(p[0]), float(p[1]), wrap_angle(h))


@dataclass
class StraightSegment:
    start: np.ndarray  # (2,)
    heading: float
    length: float
    speed_mps: float = 0.0

    def pose_at(self, s: float) -> Pose2:
        return Pose2(
            float(self.start[0] + s * math.cos(self.heading)),
            float(self.start[1] + s * math.sin(self.heading)),
            self.heading,
        )


Segment = ArcSegment | StraightSegment


@dataclass
class DubinsPath:
    word: str
    segments: list  # of Segment
    length: float

    def end_pose(self) -> Pose2:
        seg = self.segments[-1]
        return seg.pose_at(seg.length)

    def sample(self, ds: float = 0.5) -> np.ndarray:
        """Poses (n, 3) spaced at most ds apart along the path."""
        rows = []
        for seg in self.segments:
            n = max(1, int(math.ceil(seg.length / ds)))
            for i in range(n):
                p = seg.pose_at(seg.length * i / n)
                rows.append((p.x, p.y, p.theta))
        p = self.end_pose()
        rows.append((p.x, p.y, p.theta))
        return np.array(rows)

    def max_curvature(self) -> float:
        curv = 0.0
        for seg in self.segments:
            if isinstance(seg, ArcSegment) and seg.sweep > 1e-12:
                curv = max(curv, 1.0 / seg.radius)
        return curv


def _turn_center(pose: Pose2, radius: float, direction: int) -> np.ndarray:
    return np.array(
        [
            pose.x + direction * radius * (-math.sin(pose.theta)),
            pose.y + direction * radius * (math.cos(pose.theta)),
        ]
    )


def _ccw_sweep(h_from: float, h_to: float) -> float:
    sweep = (h_to - h_from) % (2.0 * math.pi)
    # A tiny negative difference wraps to ~2*pi and would insert a spurious
    # full circle (e.g. collinear poses, where the tangent heading equals
    # the start heading up to rounding). Treat it as zero.
    if sweep > 2.0 * math.pi - 1e-9:
        return 0.0
    return sweep


def _csc_candidate(
    word: str, start: Pose2, goal: Pose2, r1: float, r2: float
) -> DubinsPath | None:
    d1 = +1 if word[0] == "L" else -1
    d2 = +1 if word[2] == "L" else -1
    c1 = _turn_center(start, r1, d1)
    c2 = _turn_center(goal, r2, d2)
    dvec = c2 - c1
    d = float(np.linalg.norm(dvec))
    psi = math.atan2(dvec[1], dvec[0])
    # Offset between the tangent heading and the center line: same-side
    # tangents depend on the radius difference, crossing tangents on the sum.
    if d1 == d2:
        k = d1 * (r1 - r2)
    else:
        k = d1 * (r1 + r2)
    if d < 1e-12:
        if abs(k) > 1e-12:
            return None
        phi = psi
    else:
        ratio = k / d
        if abs(ratio) > 1.0:
            return None
        phi = psi + math.asin(ratio)
    tangent = np.array([math.cos(phi), math.sin(phi)])
    s_len = float(dvec @ tangent)
    if s_len < -1e-9:
        return None
    s_len = max(s_len, 0.0)

    sweep1 = _ccw_sweep(start.theta, phi) if d1 > 0 else _ccw_sweep(phi, start.theta)
    sweep2 = _ccw_sweep(phi, goal.theta) if d2 > 0 else _ccw_sweep(goal.theta, phi)
    arc1 = ArcSegment(c1, r1, d1, start.theta, sweep1)
    p_mid = arc1.pose_at(arc1.length)
    straight = StraightSegment(p_mid.position(), phi, s_len)
    p_end_straight = straight.pose_at(s_len)
    arc2 = ArcSegment(
        _turn_center(p_end_straight, r2, d2), r2, d2, phi, sweep2
    )
    length = arc1.length + s_len + arc2.length
    return DubinsPath(word, [arc1, straight, arc2], length)


def _ccc_candidate(
    word: str, start: Pose2, goal: Pose2, r1: float, rm: float, r2: float
) -> DubinsPath | None:
    d1 = +1 if word[0] == "L" else -1
    dm = -d1
    c1 = _turn_center(start, r1, d1)
    c2 = _turn_center(goal, r2, d1)
    dvec = c2 - c1
    d = float(np.linalg.norm(dvec))
    ra, rb = r1 + rm, r2 + rm
    if d < 1e-12 or d > ra + rb or d < abs(ra - rb):
        return None
    # Middle-circle center from the two-circle intersection.
    a = (ra * ra - rb * rb + d * d) / (2.0 * d)
    h2 = ra * ra - a * a
    if h2 < 0.0:
        return None
    h = math.sqrt(max(h2, 0.0))
    base = c1 + a * dvec / d
    perp = np.array([-dvec[1], dvec[0]]) / d
    best = None
    for sign in (+1.0, -1.0):
        cm = base + sign * h * perp
        u1 = (cm - c1) / ra
        p1 = c1 + r1 * u1
        h1 = math.atan2(u1[1], u1[0]) + d1 * 0.5 * math.pi
        u2 = (c2 - cm) / rb
        p2 = cm + rm * u2
        # Radial direction from c2 to the contact point is -u2, so the
        # tangent heading flips sign relative to the first junction.
        h2b = math.atan2(u2[1], u2[0]) - d1 * 0.5 * math.pi

        sweep1 = _ccw_sweep(start.theta, h1) if d1 > 0 else _ccw_sweep(h1, start.theta)
        sweep_m = _ccw_sweep(h1, h2b) if dm > 0 else _ccw_sweep(h2b, h1)
        sweep2 = _ccw_sweep(h2b, goal.theta) if d1 > 0 else _ccw_sweep(goal.theta, h2b)
        arc1 = ArcSegment(c1, r1, d1, start.theta, sweep1)
        arcm = ArcSegment(cm, rm, dm, h1, sweep_m)
        arc2 = ArcSegment(c2, r2, d1, h2b, sweep2)
        length = arc1.length + arcm.length + arc2.length
        path = DubinsPath(word, [arc1, arcm, arc2], length)
        end = path.end_pose()
        err = math.hypot(end.x - goal.x, end.y - goal.y)
        # The final arc ends on the goal by construction, so continuity at
        # the middle junction is what actually validates the candidate.
        mid_end = arcm.pose_at(arcm.length)
        err = max(err, math.hypot(mid_end.x - p2[0], mid_end.y - p2[1]))
        if err < 1e-6 and (best is None or length < best.length):
            best = path
    return best


_CSC_WORDS = ("LSL", "RSR", "LSR", "RSL")
_CCC_WORDS = ("LRL", "RLR")


def plan_dubins(
    start: Pose2,
    goal: Pose2,
    radii: float | tuple[float, ...],
    speeds: tuple[float, float, float] | None = None,
) -> DubinsPath:
    """Shortest bounded-curvature path between two planar poses.

    radii gives the turn radius per stage (start turn, middle stage, end
    turn); a scalar applies everywhere. Distinct stage radii let the
    approach decelerate into a tighter final turn near the dock. The six
    candidate words are constructed analytically and the shortest
    feasible one wins.

    Raises InfeasiblePathError when no word closes the boundary
    conditions, which happens for nearby goals boxed inside the start
    and goal turn circles.
    """
    if isinstance(radii, (int, float)):
        r1 = rm = r2 = float(radii)
    else:
        seq = tuple(float(r) for r in radii)
        if len(seq) == 2:
            r1, r2 = seq
            rm = max(seq)
        elif len(seq) == 3:
            r1, rm, r2 = seq
        else:
            raise ValueError("radii must be a scalar or a 2/3-sequence")
    if min(r1, rm, r2) <= 0.0:
        raise ValueError("turn radii must be positive")
    if (
        abs(start.x - goal.x) < 1e-12
        and abs(start.y - goal.y) < 1e-12
        and abs(wrap_angle(start.theta - goal.theta)) < 1e-12
    ):
        raise GuidanceError("start and goal poses coincide")

    best: DubinsPath | None = None
    for word in _CSC_WORDS:
        cand = _csc_candidate(word, start, goal, r1, r2)
        if cand is not None and (best is None or cand.length < best.length):
            best = cand
    for word in _CCC_WORDS:
        cand = _ccc_candidate(word, start, goal, r1, rm, r2)
        if cand is not None and (best is None or cand.length < best.length):
            best = cand
    if best is None:
        d = math.hypot(goal.x - start.x, goal.y - start.y)
        raise InfeasiblePathError(
            f"no Dubins word feasible: separation {d:.2f} m, radii "
            f"({r1:.2f}, {rm:.2f}, {r2:.2f}) m"
        )
    if speeds is not None:
        for seg, v in zip(best.segments, speeds):
            seg.speed_mps = v
    end = best.end_pose()
    pos_err = math.hypot(end.x - goal.x, end.y - goal.y)
    ang_err = abs(wrap_angle(end.theta - goal.theta))
    if pos_err > 1e-6 or ang_err > 1e-6:
        raise InfeasiblePathError(
            f"constructed path misses goal by {pos_err:.2e} m / {ang_err:.2e} rad"
        )
    return best


def circle_target(
    center: np.ndarray,
    from_pose: Pose2,
    radius_m: float = 50.0,
    approach_radius_m: float | None = None,
    loop_fraction: float = 1.0,
) -> DubinsPath:
    """Tangential entry onto a counterclockwise survey circle.

    Plans a Dubins leg from the current pose to the closest point of the
    circle and appends the loop itself (loop_fraction of a full turn) as
    a final arc, tangent-continuous at the junction.
    """
    c = np.asarray(center, dtype=float).reshape(2)
    gamma = math.atan2(from_pose.y - c[1], from_pose.x - c[0])
    entry = Pose2(
        float(c[0] + radius_m * math.cos(gamma)),
        float(c[1] + radius_m * math.sin(gamma)),
        wrap_angle(gamma + 0.5 * math.pi),
    )
    r_in = approach_radius_m if approach_radius_m is not None else radius_m * 0.5
    leg = plan_dubins(from_pose, entry, (r_in, max(r_in, radius_m * 0.5), r_in))
    loop = ArcSegment(c, radius_m, +1, entry.theta, 2.0 * math.pi * loop_fraction)
    segments = list(leg.segments) + [loop]
    return DubinsPath(leg.word + "+O", segments, leg.length + loop.length)


ALIGNMENT_GATE_RAD = math.radians(15.0)


@dataclass
class DockGains:
    k_closure: float = 0.25  # closure speed per meter of offset [1/s]
    closure_max_mps: float = 0.3
    k_sway: float = 600.0  # sway velocity tracking [N s/m]
    k_yaw: float = 900.0  # alignment hold [N m/rad]
    k_yaw_rate: float = 1500.0
    k_along: float = 60.0  # station keeping along the face [N/m]


@dataclass
class DockCommand:
    thruster: ThrusterCommand | None
    realign: bool
    closure_cmd_mps: float = 0.0


def lateral_dock_controller(
    lateral_offset_m: float,
    along_offset_m: float,
    relative_yaw_rad: float,
    sway_meas_mps: float,
    yaw_rate_meas: float,
    surge_meas_mps: float,
    params: HydroParams,
    gains: DockGains | None = None,
) -> DockCommand:
    """Vectored-thrust sidle onto a hull face lying abeam.

    lateral_offset_m is the gap to the face along the carrier +y axis
    (positive when the face is to port). Closure speed ramps down with
    the gap and is capped; yaw misalignment beyond the 15 degree gate
    yields a realignment request instead of a thruster command.
    """
    g = gains or DockGains()
    if abs(wrap_angle(relative_yaw_rad)) > ALIGNMENT_GATE_RAD:
        return DockCommand(None, True)
    direction = 1.0 if lateral_offset_m >= 0.0 else -1.0
    v_des = direction * min(g.closure_max_mps, g.k_closure * abs(lateral_offset_m))
    dy = float(params.drag[1, 1])
    fy = dy * v_des + g.k_sway * (v_des - sway_meas_mps)
    mz = -g.k_yaw * wrap_angle(relative_yaw_rad) - g.k_yaw_rate * yaw_rate_meas
    dx = float(params.drag[0, 0])
    v_along = -g.k_along * along_offset_m / max(dx, 1.0)
    fx = dx * v_along + 250.0 * (v_along - surge_meas_mps)
    cmd = allocate_vectored(Wrench(fx, fy, mz), params)
    return DockCommand(cmd, False, v_des)


def spiral_coverage(
    length_m: float, width_m: float, spacing_m: float
) -> np.ndarray:
    """Inward rectangular spiral waypoints over a deck footprint.

    Coordinates are local to the rectangle (origin at its center, x along
    the length). The outer loop sits half a spacing inside the boundary,
    successive loops a full spacing apart, so no deck point is farther
    than spacing/sqrt(2) from the polyline. Consecutive waypoints are at
    most twice the spacing apart.
    """
    if length_m <= 0.0 or width_m <= 0.0 or spacing_m <= 0.0:
        raise ValueError("deck extents and spacing must be positive")
    s = spacing_m
    x_lo, x_hi = -0.5 * length_m + 0.5 * s, 0.5 * length_m - 0.5 * s
    y_lo, y_hi = -0.5 * width_m + 0.5 * s, 0.5 * width_m - 0.5 * s

    pts: list[tuple[float, float]] = []
    if x_lo > x_hi and y_lo > y_hi:
        pts = [(0.0, 0.0)]
    elif x_lo > x_hi:
        pts = [(0.0, y_lo), (0.0, y_hi)]
    elif y_lo > y_hi:
        pts = [(x_lo, 0.0), (x_hi, 0.0)]
    else:
        pts.append((x_lo, y_lo))
        while True:
            pts.append((x_hi, y_lo))
            if y_hi > y_lo:
                pts.append((x_hi, y_hi))
                pts.append((x_lo, y_hi))
            y_next = y_lo + s
            if y_next > y_hi:
                break
            pts.append((x_lo, y_next))
            x_lo += s
            x_hi -= s
            y_lo = y_next
            y_hi -= s
            if x_lo > x_hi or y_lo > y_hi:
                break

    # Subdivide long edges so a follower never jumps more than 2 spacings.
    max_step = 1.5 * s
    out: list[tuple[float, float]] = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        seg = math.hypot(b[0] - a[0], b[1] - a[1])
        if seg < 1e-12:
            continue
        n = max(1, int(math.ceil(seg / max_step)))
        for i in range(1, n + 1):
            out.append(
                (a[0] + (b[0] - a[0]) * i / n, a[1] + (b[1] - a[1]) * i / n)
            )

    wps = np.array(out)
    # Make sure the very center is covered when the spiral ends off-center.
    d_center = np.min(np.linalg.norm(wps, axis=1))
    if d_center > s / math.sqrt(2.0) - 1e-9:
        wps = np.vstack([wps, [0.0, 0.0]])
    return wps


@dataclass
class PathFollower:
    """Carrot follower over a sampled path polyline."""

    path: DubinsPath
    lookahead_m: float = 6.0
    sample_ds: float = 0.5
    _samples: np.ndarray = field(init=False, repr=False)
    _arclen: np.ndarray = field(init=False, repr=False)
    _idx: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        self._samples = self.path.sample(self.sample_ds)
        d = np.linalg.norm(np.diff(self._samples[:, :2], axis=0), axis=1)
        self._arclen = np.concatenate([[0.0], np.cumsum(d)])

    @property
    def done(self) -> bool:
        return self._idx >= len(self._samples) - 1

    def progress_m(self) -> float:
        return float(self._arclen[self._idx])

    def desired_heading(self, pos: np.ndarray) -> float:
        """Advance along the path and aim at the carrot point."""
        p = np.asarray(pos, dtype=float).reshape(-1)[:2]
        window_end = min(len(self._samples), self._idx + 80)
        seg = self._samples[self._idx : window_end, :2]
        d = np.linalg.norm(seg - p, axis=1)
        self._idx += int(np.argmin(d))
        s_carrot = self._arclen[self._idx] + self.lookahead_m
        j = int(np.searchsorted(self._arclen, s_carrot))
        j = min(j, len(self._samples) - 1)
        carrot = self._samples[j, :2]
        if j == len(self._samples) - 1 and float(np.linalg.norm(carrot - p)) < 0.3:
            return float(self._samples[-1, 2])
        return math.atan2(carrot[1] - p[1], carrot[0] - p[0])
