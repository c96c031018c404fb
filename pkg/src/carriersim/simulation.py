"""End-to-end mission simulation: truth, sensing, guidance, and logging.

One fixed-step loop at 20 Hz drives everything. The tick order is fixed
(sense -> communicate -> estimate -> decide -> actuate -> integrate ->
resolve events -> log) and every random draw comes from a named stream
spawned from the master seed in a fixed order, so a run is a pure
function of (scenario, seed) and its event log replays byte for byte.

Frames: vessels live in the inertial ENU frame. Everything the drones
do — UWB anchors, landing pads, deck objects, search patterns — lives in
the deck frame (carrier body, x forward), which is what an onboard
system without satellite positioning can actually observe. Carrier
guidance in the docking phase runs on a dead-reckoned pose integrated
from DVL/IMU; its slow drift affects the planned path and the follower
equally, so it cancels where it must.
"""

from __future__ import annotations

import dataclasses
import json
import math
import multiprocessing
import os
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .estimation import (
    AnchorGeometryError,
    EstimatorState,
    InsufficientAnchorsError,
    TargetBearingFilter,
    UavEkf,
    robust_position_filter,
    trilaterate,
)
from .frames import rotation_from_yaw, wrap_angle
from .geometry import OrientedRect
from .guidance import (
    HeadingCommand,
    HeadingSource,
    InfeasiblePathError,
    PathFollower,
    Pose2,
    heading_controller,
    heading_to_target,
    lateral_dock_controller,
    min_turn_radius,
    plan_dubins,
    spiral_coverage,
)
from .manipulator import ManipulatorModel, scan_for_objects
from .mission import (
    CarrierAction,
    CommChannel,
    CommLink,
    MissionController,
    MissionPhase,
    MissionView,
    phase_index,
)
from .perception import (
    DegenerateFitError,
    RectangleFit,
    cluster_points,
    fit_rectangle,
)
from .scenario import Scenario
from .sensors import (
    GimbalCamera,
    ImuDvlConfig,
    LidarConfig,
    QrConfig,
    UwbConfig,
    gimbal_base_to_inertial,
    gimbal_observe,
    gimbal_project,
    lidar_scan,
    proprioceptive_observe,
    qr_observe,
    uwb_ranges,
)
from .uav import (
    GraspResult,
    MissionConfig,
    PositionController,
    TakeoffCommand,
    UavMissionPlan,
    UavMode,
    UavObservations,
    UavParams,
    UavState,
    cooperative_drag_plan,
    grasp_success_probability,
    step_uav,
    uav_mission_step,
)
from .usv import (
    HydroParams,
    ThrusterCommand,
    UsvState,
    WaveField,
    Wrench,
    actuation_simplified,
    actuation_vectored,
    allocate_vectored,
    step_dynamics,
)

DT_S = 0.05
LOG_EVERY_TICKS = 2  # 10 Hz state logging
SHORE_CAM_EVERY = 2  # 10 Hz
ONBOARD_CAM_EVERY = 2  # 10 Hz
LIDAR_EVERY = 4  # 5 Hz
UWB_EVERY = 2  # 10 Hz
SHORE_FIX_EVERY = 10  # 2 Hz fix datalink


@dataclass
class SimTuning:
    """Speeds, gates and geometry knobs for the mission executive."""

    approach_speed_mps: float = 3.5
    circle_speed_mps: float = 2.5
    stage_speed_mps: float = 2.0
    final_speed_mps: float = 1.2
    circle_radius_m: float = 50.0
    circle_gain_rad_per_m: float = 0.025
    staging_standoff_m: float = 18.0
    staging_pos_tol_m: float = 3.0
    staging_yaw_tol_rad: float = math.radians(15.0)
    prestage_out_m: float = 30.0  # standoff of the planned approach point
    prestage_back_m: float = 28.0  # how far behind the face centre it sits
    prestage_pos_tol_m: float = 5.0
    replan_period_s: float = 5.0
    track_stale_s: float = 1.0  # dock metrics older than this are unusable
    lateral_abort_m: float = 30.0  # face offset beyond which docking restages
    lateral_blind_max_s: float = 8.0
    contact_gap_m: float = 0.15
    contact_speed_mps: float = 0.5
    alongside_yaw_rad: float = math.radians(10.0)
    alongside_along_frac: float = 0.35
    id_fits_needed: int = 40
    fit_min_dim_m: float = 1.0
    assoc_gate_m: float = 30.0
    track_gate_m: float = 8.0
    circle_timeout_s: float = 260.0
    search_spacing_m: float = 1.6
    search_alt_m: float = 3.5
    deck_scan_repeats: int = 5
    drag_alt_m: float = 1.0
    landing_cycle_alt_m: float = 7.0
    wind_east_mps: float = 0.8
    wind_north_mps: float = 0.5
    detection_range_m: float = 2.0
    vision_range_m: float = 2.5
    vision_alt_max_m: float = 4.0
    grasp_retry_period_s: float = 1.2
    command_resend_s: float = 0.5


@dataclass
class ShoreFix:
    """Tracked carrier and target states broadcast by the shore station."""

    carrier_pos: np.ndarray  # (2,) ENU [m]
    carrier_vel: np.ndarray  # (2,) [m/s]
    target_pos: np.ndarray
    target_vel: np.ndarray
    t: float


@dataclass
class RunReport:
    scenario: str
    seed: int
    outcome: str  # "success" | "timeout" | "failure:<reason>"
    success: bool
    duration_s: float
    final_phase: str
    phase_index_sequence: list
    phase_durations: dict
    n_regressions: int
    docked: bool
    docking_time_s: Optional[float]
    final_target_error_m: Optional[float]
    objects_delivered: int
    small_objects_delivered: int
    landing_errors_m: list
    uavs_recovered: bool
    wall_time_s: float
    out_dir: Optional[str]


class ShoreStation:
    """Gimbal camera plus two bearing trackers on the beach."""

    def __init__(self, camera: GimbalCamera, rng: np.random.Generator):
        self.camera = camera
        self.rng = rng
        self.filters: dict[str, Optional[TargetBearingFilter]] = {
            "carrier": None,
            "target": None,
        }
        self.last_update_t = {"carrier": -math.inf, "target": -math.inf}

    def sense(self, t: float, carrier_xy: np.ndarray, target_xy: np.ndarray) -> None:
        for label, pos in (("carrier", carrier_xy), ("target", target_xy)):
            meas = gimbal_observe(self.camera, pos, t, self.rng, label)
            if meas is None:
                continue
            filt = self.filters[label]
            if filt is None:
                ground = gimbal_base_to_inertial(
                    gimbal_project(meas, self.camera), self.camera
                )
                rho = float(np.linalg.norm(ground - self.camera.position))
                sigma = max(0.05 * rho, 5.0)
                state = EstimatorState(
                    np.array([ground[0], ground[1], 0.0, 0.0]),
                    np.diag([sigma**2, sigma**2, 4.0, 4.0]),
                    t,
                )
                self.filters[label] = TargetBearingFilter(state)
                self.last_update_t[label] = t
            elif filt.update(meas, self.camera):
                self.last_update_t[label] = t

    def make_fix(self, t: float) -> Optional[ShoreFix]:
        fc = self.filters["carrier"]
        ft = self.filters["target"]
        if fc is None or ft is None:
            return None
        if t - self.last_update_t["carrier"] > 3.0 or (
            t - self.last_update_t["target"] > 3.0
        ):
            return None
        fc.predict(t)
        ft.predict(t)
        return ShoreFix(
            fc.state.mean[:2].copy(),
            fc.state.mean[2:].copy(),
            ft.state.mean[:2].copy(),
            ft.state.mean[2:].copy(),
            t,
        )


@dataclass
class _TrackedTarget:
    """Onboard LiDAR track of the vessel being approached.

    The persistent centre/heading live in the dead-reckoned frame so the
    association gate is immune to the carrier's own turning; the raw
    cluster stays in the deck frame because the face metrics consume it
    the same tick it was scanned.
    """

    center_dr: Optional[np.ndarray] = None  # (2,) dead-reckoned frame
    points_dc: Optional[np.ndarray] = None  # latest cluster (m, 2), deck frame
    streak: int = 0
    last_seen_t: float = -math.inf
    dims: deque = field(default_factory=lambda: deque(maxlen=200))  # (L, W) pairs
    identified: bool = False
    length_m: float = 0.0
    width_m: float = 0.0
    heading_dr: float = 0.0  # long-axis heading, dead-reckoned frame, mod pi


def _long_axis_direction(points: np.ndarray, fit: RectangleFit) -> float:
    """Resolve the 90-degree fold: heading of the fit's long axis."""
    h = fit.heading_rad
    spread = float(np.ptp(points @ np.array([math.cos(h), math.sin(h)])))
    if abs(spread - fit.length_m) <= abs(spread - fit.width_m):
        return h
    return h + 0.5 * math.pi


def _rect_gap(a: OrientedRect, b: OrientedRect) -> float:
    """Approximate clearance between two rectangle outlines (0 on overlap)."""
    # Far apart the corner tests cannot matter; a centre-distance bound
    # keeps this out of the per-tick budget during transit.
    lo = math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1]) - 0.5 * (
        math.hypot(a.length_m, a.width_m) + math.hypot(b.length_m, b.width_m)
    )
    if lo > 5.0:
        return lo
    for corner in a.corners():
        if b.contains(corner):
            return 0.0
    for corner in b.corners():
        if a.contains(corner):
            return 0.0
    d = min(b.boundary_distance(c) for c in a.corners())
    return min(d, min(a.boundary_distance(c) for c in b.corners()))


@dataclass
class _ObjectTruth:
    spec_id: int
    mass_kg: float
    length_m: float
    width_m: float
    deck_xy: np.ndarray  # position in the target-vessel frame (2,)
    status: str = "target_deck"  # -> carried -> delivered | secured | abandoned
    pos_dc: Optional[np.ndarray] = None  # (3,) deck frame once docked
    carried_by: Optional[int] = None


@dataclass
class _UavUnit:
    index: int
    pad_dc: np.ndarray  # (3,)
    truth: UavState
    controller: PositionController
    params: UavParams
    rng_uwb: np.random.Generator
    rng_qr: np.random.Generator
    rng_imu: np.random.Generator
    yaw_bias_rad: float
    plan: Optional[UavMissionPlan] = None
    ekf: Optional[UavEkf] = None
    accel_dc: np.ndarray = field(default_factory=lambda: np.zeros(3))
    cmd_outbox: Optional[TakeoffCommand] = None
    cmd_last_sent_t: float = -math.inf
    pending_cmd: Optional[TakeoffCommand] = None
    pending_grasp: Optional[GraspResult] = None
    last_grasp_t: float = -math.inf
    assigned_object: Optional[int] = None
    airborne: bool = False

    def start_ekf(self, t: float) -> None:
        state = EstimatorState(
            np.concatenate([self.truth.position, np.zeros(3), [0.0]]),
            np.diag([0.04, 0.04, 0.04, 0.05, 0.05, 0.05, 0.02]),
            t,
        )
        self.ekf = UavEkf(state)

    def est_position(self) -> np.ndarray:
        if self.ekf is None:
            return self.truth.position.copy()
        return self.ekf.state.mean[:3].copy()

    def est_velocity(self) -> np.ndarray:
        if self.ekf is None:
            return self.truth.velocity.copy()
        return self.ekf.state.mean[3:6].copy()


@dataclass
class _DragTask:
    uav_idx: tuple[int, int]
    object_id: int
    plans: list  # per-UAV waypoint arrays (n, 3)
    stage: str = "lift"  # lift -> to_grip -> descend -> drag -> return
    wp: int = 0
    land_plans: Optional[list] = None


# Landing pads on the carrier deck, deck frame [m]. Kept clear of the
# manipulator base at (2, 0).
_PAD_LAYOUT = np.array(
    [
        [0.8, 1.2, 0.0],
        [0.8, -1.2, 0.0],
        [-2.2, 1.2, 0.0],
        [-2.2, -1.2, 0.0],
    ]
)


class SimWorld:
    """One seeded mission run over a scenario."""

    def __init__(
        self,
        scenario: Scenario,
        seed: Optional[int] = None,
        out_dir: Optional[str] = None,
        max_sim_s: float = 2400.0,
        stop_after_phase: Optional[int] = None,
        tuning: Optional[SimTuning] = None,
    ):
        self.scenario = scenario
        self.seed = scenario.master_seed if seed is None else int(seed)
        self.out_dir = out_dir
        self.max_sim_s = max_sim_s
        self.stop_after_phase = stop_after_phase
        self.tuning = tuning or SimTuning()
        self._apply_overrides()
        self._spawn_rngs()
        self._build()

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------
    def _apply_overrides(self) -> None:
        ov = self.scenario.overrides
        self.imu_cfg = ImuDvlConfig()
        if ov.imu_yaw_sigma_rad is not None:
            self.imu_cfg.yaw_sigma_rad = ov.imu_yaw_sigma_rad
        if ov.imu_yaw_drift_rate_rad_s is not None:
            self.imu_cfg.yaw_drift_rate_rad_s = ov.imu_yaw_drift_rate_rad_s
        self.lidar_cfg = LidarConfig()
        if ov.lidar_range_sigma_m is not None:
            self.lidar_cfg.range_sigma_m = ov.lidar_range_sigma_m
        self.uwb_cfg = UwbConfig()
        if ov.uwb_range_sigma_m is not None:
            self.uwb_cfg.range_sigma_m = ov.uwb_range_sigma_m
        self.qr_cfg = QrConfig()
        if ov.wind_east_mps is not None:
            self.tuning.wind_east_mps = ov.wind_east_mps
        if ov.wind_north_mps is not None:
            self.tuning.wind_north_mps = ov.wind_north_mps
        if ov.search_spacing_m is not None:
            self.tuning.search_spacing_m = ov.search_spacing_m

    def _spawn_rngs(self) -> None:
        n_uav = self.scenario.uav_count
        children = np.random.SeedSequence(self.seed).spawn(10 + 3 * n_uav)
        names = [
            "waves",
            "shore_camera",
            "onboard_camera",
            "lidar",
            "imu_dvl",
            "datalink",
            "wifi",
            "scan",
            "grasp",
            "misc",
        ]
        self.rng = {name: np.random.default_rng(ss) for name, ss in zip(names, children)}
        self._uav_seeds = children[10:]

    def _build(self) -> None:
        sc = self.scenario
        ov = sc.overrides
        self.t = 0.0
        self.tick = 0
        self.hydro = HydroParams()
        self.carrier = UsvState(
            np.array([sc.carrier.start_x_m, sc.carrier.start_y_m]),
            sc.carrier.start_yaw_rad,
        )
        self.waves = WaveField(sc.sea_state, self.rng["waves"])
        self.carrier_rect = OrientedRect(
            self.carrier.position.copy(),
            sc.carrier.length_m,
            sc.carrier.width_m,
            self.carrier.yaw,
            height_m=1.0,
        )

        def _drift(speed: float, heading: float) -> np.ndarray:
            return speed * np.array([math.cos(heading), math.sin(heading)])

        self.target_rect = OrientedRect(
            np.array([sc.target.x_m, sc.target.y_m]),
            sc.target.length_m,
            sc.target.width_m,
            sc.target.yaw_rad,
            sc.target.height_m,
        )
        self.target_drift = _drift(sc.target.drift_speed_mps, sc.target.drift_heading_rad)
        self.distractor_rects = [
            OrientedRect(
                np.array([d.x_m, d.y_m]), d.length_m, d.width_m, d.yaw_rad, d.height_m
            )
            for d in sc.distractors
        ]
        self.distractor_drifts = [
            _drift(d.drift_speed_mps, d.drift_heading_rad) for d in sc.distractors
        ]

        shore_cam = GimbalCamera(
            position=np.array([sc.onshore_camera.x_m, sc.onshore_camera.y_m]),
            height_m=sc.onshore_camera.height_m,
            yaw=sc.onshore_camera.yaw_rad,
        )
        if ov.gimbal_angle_sigma_rad is not None:
            shore_cam.angle_sigma_rad = ov.gimbal_angle_sigma_rad
        self.shore = ShoreStation(shore_cam, self.rng["shore_camera"])
        self.onboard_cam = GimbalCamera(
            position=self.carrier.position.copy(),
            height_m=3.0,
            yaw=self.carrier.yaw,
            detection_range_m=500.0,
            phi_min_rad=math.radians(0.15),
        )
        if ov.onboard_phi_min_rad is not None:
            self.onboard_cam.phi_min_rad = ov.onboard_phi_min_rad

        self.datalink = CommChannel(
            CommLink("datalink", latency_s=0.3, drop_rate=0.02, max_range_m=5000.0),
            self.rng["datalink"],
        )
        self.wifi = CommChannel(
            CommLink("deck_wifi", latency_s=0.1, drop_rate=0.01, max_range_m=200.0),
            self.rng["wifi"],
        )

        self.controller = MissionController(return_home=sc.mission.return_home)
        self.manipulator = ManipulatorModel()

        # Carrier-side navigation state.
        self.yaw_est = sc.carrier.start_yaw_rad
        self.pos_dr = self.carrier.position.copy()
        self.imu = None
        self.shore_fix: Optional[ShoreFix] = None
        self.shore_target_dr: Optional[np.ndarray] = None
        self.onboard_theta: Optional[float] = None
        self.onboard_meas_t = -math.inf
        self.lock_streak = 0
        self.track = _TrackedTarget()
        self.staging_path: Optional[PathFollower] = None
        self.staging_pose: Optional[Pose2] = None
        self.staging_planned_t = -math.inf
        self.staging_goal: Optional[Pose2] = None
        self.staging_reached = False
        self.staging_leg = "prestage"
        self.stage_out_dr: Optional[np.ndarray] = None
        self.lateral_blind_t: Optional[float] = None
        self.dock_face_sign = 0.0  # which long face to dock on, committed once
        self.stage_dir = 0.0  # travel direction along the hull axis at staging
        self.dock_side = 0.0  # +1 face to port, -1 to starboard
        self.dock_center_dc: Optional[np.ndarray] = None  # frozen at latch
        self.dock_heading_dc = 0.0
        self.dock_metrics: Optional[tuple[float, float, float]] = None
        self.dock_offset: Optional[tuple[np.ndarray, float]] = None
        self.clearance_m: Optional[float] = None
        self.circle_dir = 0.0
        self.circle_entered_t: Optional[float] = None
        self.last_thruster = ThrusterCommand()
        self.vectored_mode = False
        self._last_action = CarrierAction.HOLD

        # Deck operations.
        self.objects = [
            _ObjectTruth(o.id, o.mass_kg, o.length_m, o.width_m,
                         np.array([o.deck_x_m, o.deck_y_m]))
            for o in sc.objects
        ]
        self.object_estimates: dict[int, np.ndarray] = {}
        self.scan_done = False
        self.pending_small: list[int] = []
        self.pending_large: list[int] = []
        self.small_task: Optional[tuple[int, int]] = None  # (uav, object)
        self.drag_task: Optional[_DragTask] = None
        self.objects_delivered = 0
        self.small_delivered = 0
        self.landing_errors: list[float] = []
        self.uavs = [
            _UavUnit(
                i,
                _PAD_LAYOUT[i % len(_PAD_LAYOUT)].copy(),
                UavState(_PAD_LAYOUT[i % len(_PAD_LAYOUT)].copy()),
                PositionController(),
                UavParams(),
                np.random.default_rng(self._uav_seeds[3 * i]),
                np.random.default_rng(self._uav_seeds[3 * i + 1]),
                np.random.default_rng(self._uav_seeds[3 * i + 2]),
                yaw_bias_rad=math.radians(1.5) * (1.0 if i % 2 == 0 else -1.0),
            )
            for i in range(sc.uav_count)
        ]

        # Landing-only mode bookkeeping.
        self.landing_mode = sc.mission.mode == "landing_only"
        if self.landing_mode:
            self.uav_cfg = MissionConfig(clearance_alt_m=self.tuning.landing_cycle_alt_m)
        else:
            self.uav_cfg = MissionConfig(search_alt_m=self.tuning.search_alt_m)
        self.landing_uav = 0
        self.landing_cycle = 0
        self.landing_pause_until = 0.0

        # Outputs.
        self.events: list[str] = []
        self.log_carrier: list[str] = []
        self.log_dvl: list[str] = []
        self.log_lidar: list[str] = []
        self.log_fits: list[str] = []
        self.log_uav: list[list[str]] = [[] for _ in self.uavs]
        self.final_target_error_m: Optional[float] = None
        self.docking_time_s: Optional[float] = None
        self.outcome: Optional[str] = None
        self.complete = False
        self._beta_cmd = math.nan
        self._beta_source = "none"
        self._stop = False

    # ------------------------------------------------------------------
    # Events
    # ------------------------------------------------------------------
    def _emit(self, name: str, t: float, payload: Optional[dict] = None) -> None:
        record = {"t": round(t, 3), "event": name}
        if payload:
            record.update(payload)
        self.events.append(json.dumps(record, sort_keys=True))

    # ------------------------------------------------------------------
    # Sensing and estimation
    # ------------------------------------------------------------------
    def _sense_carrier(self, t: float) -> None:
        self.imu = proprioceptive_observe(
            self.carrier.yaw,
            float(self.carrier.velocity[2]),
            self.carrier.velocity[:2],
            t,
            self.imu_cfg,
            self.rng["imu_dvl"],
        )
        # Complementary heading: integrate the gyro, lean on the compass.
        self.yaw_est = wrap_angle(self.yaw_est + self.imu.yaw_rate_rad_s * DT_S)
        self.yaw_est = wrap_angle(
            self.yaw_est + 0.02 * wrap_angle(self.imu.yaw_rad - self.yaw_est)
        )
        c, s = math.cos(self.yaw_est), math.sin(self.yaw_est)
        vx = c * self.imu.velocity_body[0] - s * self.imu.velocity_body[1]
        vy = s * self.imu.velocity_body[0] + c * self.imu.velocity_body[1]
        self.pos_dr = self.pos_dr + np.array([vx, vy]) * DT_S

    def _shore_step(self, t: float) -> None:
        if self.tick % SHORE_CAM_EVERY == 0:
            self.shore.sense(t, self.carrier.position, self.target_rect.center)
        if self.tick % SHORE_FIX_EVERY == 0:
            fix = self.shore.make_fix(t)
            if fix is not None:
                self.datalink.send(
                    fix, t, self.shore.camera.position, self.carrier.position
                )
        for msg in self.datalink.poll(t):
            self.shore_fix = msg
            # Re-anchor the shore estimate in the dead-reckoned frame: the
            # shore camera's common range bias cancels in the difference.
            self.shore_target_dr = self.pos_dr + (msg.target_pos - msg.carrier_pos)

    def _onboard_camera_step(self, t: float) -> None:
        if self.tick % ONBOARD_CAM_EVERY != 0:
            return
        self.onboard_cam.position = self.carrier.position.copy()
        self.onboard_cam.yaw = self.carrier.yaw
        meas = gimbal_observe(
            self.onboard_cam, self.target_rect.center, t, self.rng["onboard_camera"],
            "target",
        )
        if meas is None:
            self.lock_streak = 0
            return
        self.lock_streak += 1
        self.onboard_theta = meas.theta_rad
        self.onboard_meas_t = t

    def _to_dc(self, p_dr: np.ndarray) -> np.ndarray:
        """Dead-reckoned frame point -> deck frame."""
        rel = p_dr - self.pos_dr
        c, s = math.cos(-self.yaw_est), math.sin(-self.yaw_est)
        return np.array([c * rel[0] - s * rel[1], s * rel[0] + c * rel[1]])

    def _to_dr(self, p_dc: np.ndarray) -> np.ndarray:
        """Deck frame point -> dead-reckoned frame."""
        c, s = math.cos(self.yaw_est), math.sin(self.yaw_est)
        return self.pos_dr + np.array(
            [c * p_dc[0] - s * p_dc[1], s * p_dc[0] + c * p_dc[1]]
        )

    def _expected_target_dc(self) -> Optional[np.ndarray]:
        """Predicted target position in the deck frame from shore fixes."""
        if self.shore_target_dr is None:
            return None
        return self._to_dc(self.shore_target_dr)

    def _lidar_step(self, t: float) -> None:
        if self.tick % LIDAR_EVERY != 0:
            return
        # While latched alongside nothing moves in the deck frame; scan only
        # when the survey actually steers the boat or it is backing clear.
        if self.controller.phase is MissionPhase.DOCKED_OPERATIONS and (
            self._last_action is not CarrierAction.REVERSE_CLEAR
        ):
            return
        hulls = [self.target_rect] + self.distractor_rects
        near = min(
            float(np.linalg.norm(h.center - self.carrier.position)) for h in hulls
        )
        if near > self.lidar_cfg.max_range_m + 30.0:
            return
        cloud = lidar_scan(
            self.carrier.position,
            self.carrier.yaw,
            hulls,
            self.lidar_cfg,
            self.rng["lidar"],
            t,
        )
        clusters = cluster_points(cloud)
        if not clusters:
            self.track.streak = 0
            return

        if self.track.center_dr is None or t - self.track.last_seen_t > 5.0:
            expected = self._expected_target_dc()
            gate = self.tuning.assoc_gate_m
        else:
            expected = self._to_dc(self.track.center_dr)
            gate = self.tuning.track_gate_m
        if expected is None:
            return
        best, best_d = None, math.inf
        for cl in clusters:
            d = float(np.linalg.norm(cl.centroid - expected))
            if d < best_d:
                best, best_d = cl, d
        if best is None or best_d > gate:
            self.track.streak = 0
            return

        self.track.center_dr = self._to_dr(best.centroid)
        self.track.points_dc = best.points.copy()
        self.track.streak += 1
        self.track.last_seen_t = t
        if self.out_dir is not None:
            self.log_lidar.append(
                f"{t!r},{float(best.centroid[0])!r},{float(best.centroid[1])!r},"
                f"{len(best.points)}"
            )
        try:
            fit = fit_rectangle(best.points)
        except DegenerateFitError:
            return
        if (
            fit.length_m >= self.tuning.fit_min_dim_m
            and fit.width_m >= self.tuning.fit_min_dim_m
        ):
            self.track.dims.append((fit.length_m, fit.width_m))
            self.track.center_dr = self._to_dr(fit.center)
            self.track.heading_dr = (
                _long_axis_direction(best.points, fit) + self.yaw_est
            ) % math.pi
            if self.out_dir is not None:
                self.log_fits.append(
                    f"{t!r},{float(fit.length_m)!r},{float(fit.width_m)!r},"
                    f"{float(fit.heading_rad)!r},{float(fit.residual)!r}"
                )
        self._maybe_identify(t)

    def _maybe_identify(self, t: float) -> None:
        if self.track.identified or len(self.track.dims) < self.tuning.id_fits_needed:
            return
        dims = np.array(self.track.dims)
        med_l = float(np.median(dims[:, 0]))
        med_w = float(np.median(dims[:, 1]))
        tol = self.scenario.target.dim_tolerance
        exp_l, exp_w = self.scenario.target.length_m, self.scenario.target.width_m
        if abs(med_l - exp_l) <= tol * exp_l and abs(med_w - exp_w) <= tol * exp_w:
            self.track.identified = True
            self.track.length_m = med_l
            self.track.width_m = med_w
            self._emit(
                "vessel_dimensions_confirmed",
                t,
                {"length_m": round(med_l, 2), "width_m": round(med_w, 2)},
            )

    def _uav_sensors_step(self, t: float) -> None:
        for unit in self.uavs:
            if not unit.airborne or unit.ekf is None:
                continue
            a_body = unit.accel_dc + 0.05 * unit.rng_imu.standard_normal(3)
            yaw_imu = unit.yaw_bias_rad + math.radians(0.3) * float(
                unit.rng_imu.standard_normal()
            )
            unit.ekf.predict(a_body, yaw_imu, t)
            if self.tick % UWB_EVERY == 0:
                pairs = uwb_ranges(unit.truth.position, self.uwb_cfg, unit.rng_uwb)
                if len(pairs) >= 4:
                    idx = [i for i, _ in pairs]
                    rng_vals = np.array([r for _, r in pairs])
                    try:
                        fix = trilaterate(self.uwb_cfg.anchors[idx], rng_vals)
                    except (InsufficientAnchorsError, AnchorGeometryError):
                        continue
                    unit.ekf.update_position(
                        fix.position, max(self.uwb_cfg.range_sigma_m, 0.02)
                    )

    # ------------------------------------------------------------------
    # Mission view assembly
    # ------------------------------------------------------------------
    def _target_range_est(self) -> Optional[float]:
        if self.track.center_dr is not None and self.track.streak > 0:
            return float(np.linalg.norm(self.track.center_dr - self.pos_dr))
        if self.shore_fix is not None:
            return float(
                np.linalg.norm(self.shore_fix.target_pos - self.shore_fix.carrier_pos)
            )
        return None

    def _contact_state(self) -> tuple[bool, bool]:
        gap = _rect_gap(self.carrier_rect, self.target_rect)
        c, s = math.cos(self.carrier.yaw), math.sin(self.carrier.yaw)
        vel_enu = np.array(
            [
                c * self.carrier.velocity[0] - s * self.carrier.velocity[1],
                s * self.carrier.velocity[0] + c * self.carrier.velocity[1],
            ]
        )
        rel_speed = float(np.linalg.norm(vel_enu - self.target_drift))
        contact = gap <= self.tuning.contact_gap_m and (
            rel_speed <= self.tuning.contact_speed_mps
        )
        alongside = False
        if self.dock_metrics is not None:
            _, along, rel_yaw = self.dock_metrics
            alongside = (
                abs(rel_yaw) <= self.tuning.alongside_yaw_rad
                and abs(along)
                <= self.tuning.alongside_along_frac * self.scenario.target.length_m
            )
        return contact, alongside

    def _make_view(self, t: float) -> MissionView:
        contact, alongside = self._contact_state()
        home = np.array([self.scenario.home.x_m, self.scenario.home.y_m])
        home_dist = None
        if self.shore_fix is not None:
            home_dist = float(np.linalg.norm(self.shore_fix.carrier_pos - home))
        return MissionView(
            t=t,
            shore_fix_age_s=t - (self.shore_fix.t if self.shore_fix else -math.inf),
            onboard_lock_streak=self.lock_streak,
            onboard_bearing_age_s=t - self.onboard_meas_t,
            lidar_fit_streak=self.track.streak,
            lidar_fit_age_s=t - self.track.last_seen_t,
            target_range_m=self._target_range_est(),
            target_identified=self.track.identified,
            staging_reached=self.staging_reached,
            contact=contact,
            alongside_ok=alongside,
            scan_done=self.scan_done,
            small_objects_pending=len(self.pending_small),
            large_objects_pending=len(self.pending_large),
            uav_task_active=self.small_task is not None,
            drag_task_active=self.drag_task is not None,
            any_uav_airborne=any(u.airborne for u in self.uavs),
            home_distance_m=home_dist,
            clearance_m=self.clearance_m,
        )

    # ------------------------------------------------------------------
    # Carrier guidance execution
    # ------------------------------------------------------------------
    def _base_thrust(self, v_des: float) -> float:
        surge = float(self.imu.velocity_body[0]) if self.imu else 0.0
        dx = float(self.hydro.drag[0, 0])
        return max(0.5 * (dx * v_des + 260.0 * (v_des - surge)), -80.0)

    def _steer(self, beta: float, v_des: float, source: HeadingSource) -> None:
        self._beta_cmd = beta
        self._beta_source = source.value
        cmd = HeadingCommand(beta, source)
        self.last_thruster = heading_controller(
            self.yaw_est,
            self.imu.yaw_rate_rad_s if self.imu else 0.0,
            cmd,
            self._base_thrust(v_des),
            self.hydro,
        )
        self.vectored_mode = False

    def _execute_carrier(self, action: CarrierAction, t: float) -> None:
        tun = self.tuning
        sc = self.scenario
        if action is CarrierAction.HOLD:
            self.last_thruster = ThrusterCommand()
            self.vectored_mode = False
            self._beta_cmd = math.nan
            self._beta_source = "none"

        elif action is CarrierAction.HEAD_TO_TARGET:
            if self.shore_fix is None:
                self.last_thruster = ThrusterCommand()
                return
            fix = self.shore_fix
            age = t - fix.t
            carrier = fix.carrier_pos + fix.carrier_vel * age
            target = fix.target_pos + fix.target_vel * age
            rng_est = float(np.linalg.norm(target - carrier))
            v_des = (
                sc.carrier.cruise_speed_mps if rng_est > 550.0 else tun.approach_speed_mps
            )
            cmd = heading_to_target(
                self.yaw_est, carrier, target, HeadingSource.ONSHORE_GIMBAL
            )
            self._steer(cmd.beta, v_des, HeadingSource.ONSHORE_GIMBAL)

        elif action is CarrierAction.HEAD_ALONG_BEARING:
            if self.onboard_theta is None:
                self.last_thruster = ThrusterCommand()
                return
            beta = wrap_angle(self.yaw_est - self.onboard_theta)
            rng_est = self._target_range_est() or math.inf
            v_des = tun.approach_speed_mps if rng_est > 260.0 else tun.circle_speed_mps
            self._steer(beta, v_des, HeadingSource.ONBOARD_GIMBAL)

        elif action is CarrierAction.CIRCLE_TARGET:
            self._execute_circle(t)

        elif action is CarrierAction.FOLLOW_STAGING_PATH:
            self._execute_staging(t)

        elif action is CarrierAction.LATERAL_DOCK:
            # A restarted approach owns the boat again until it is back
            # on station; the mission layer only sees the staging flag.
            if self.staging_reached:
                self._execute_lateral(t)
            else:
                self._execute_staging(t)

        elif action is CarrierAction.STATION_KEEP:
            self.last_thruster = ThrusterCommand()
            self.vectored_mode = False
            self._beta_cmd = math.nan
            self._beta_source = "none"

        elif action is CarrierAction.REVERSE_CLEAR:
            self._execute_reverse(t)

        elif action is CarrierAction.HEAD_HOME:
            home = np.array([sc.home.x_m, sc.home.y_m])
            pos = (
                self.shore_fix.carrier_pos
                if self.shore_fix is not None and t - self.shore_fix.t < 10.0
                else self.pos_dr
            )
            cmd = heading_to_target(self.yaw_est, pos, home, HeadingSource.ONSHORE_GIMBAL)
            self._steer(cmd.beta, sc.carrier.cruise_speed_mps, HeadingSource.ONSHORE_GIMBAL)

    def _execute_circle(self, t: float) -> None:
        tun = self.tuning
        if self.track.center_dr is None:
            # No track yet: keep closing along the last camera bearing.
            beta = self.yaw_est if self.onboard_theta is None else wrap_angle(
                self.yaw_est - self.onboard_theta
            )
            self._steer(beta, tun.circle_speed_mps, HeadingSource.LIDAR)
            return
        if self.circle_entered_t is None:
            self.circle_entered_t = t
        rel = self.track.center_dr - self.pos_dr
        bearing = math.atan2(rel[1], rel[0])
        rng = float(np.linalg.norm(rel))
        if self.circle_dir == 0.0:
            ccw = wrap_angle(self.yaw_est - (bearing - 0.5 * math.pi))
            cw = wrap_angle(self.yaw_est - (bearing + 0.5 * math.pi))
            self.circle_dir = 1.0 if abs(ccw) <= abs(cw) else -1.0
        corr = max(
            min(tun.circle_gain_rad_per_m * (rng - tun.circle_radius_m), 0.6), -0.6
        )
        beta = wrap_angle(
            bearing - self.circle_dir * 0.5 * math.pi + self.circle_dir * corr
        )
        self._steer(beta, tun.circle_speed_mps, HeadingSource.LIDAR)
        if not self.track.identified and t - self.circle_entered_t > tun.circle_timeout_s:
            self.outcome = "failure:identification"
            self._emit("identification_failed", t)
            self._stop = True

    def _staging_from_track(self) -> Optional[Pose2]:
        """Dock-face staging pose in the dead-reckoned inertial frame.

        The face (which long side) and the travel direction along the hull
        are committed on first call; recomputing them per fit makes the
        goal flip sides with track jitter and the boat orbits forever.
        """
        if self.track.center_dr is None or not self.track.identified:
            return None
        center = self.track.center_dr
        axis = self.track.heading_dr
        u = np.array([math.cos(axis), math.sin(axis)])
        n = np.array([-u[1], u[0]])
        rel = self.pos_dr - center
        if self.dock_face_sign == 0.0:
            self.dock_face_sign = 1.0 if float(rel @ n) >= 0.0 else -1.0
        out = self.dock_face_sign * n
        face = center + 0.5 * self.track.width_m * out
        stage_pos = face + out * self.tuning.staging_standoff_m
        if self.stage_dir == 0.0:
            h1 = math.atan2(u[1], u[0])
            self.stage_dir = (
                1.0
                if abs(wrap_angle(h1 - self.yaw_est))
                <= abs(wrap_angle(h1 + math.pi - self.yaw_est))
                else -1.0
            )
        heading = math.atan2(self.stage_dir * u[1], self.stage_dir * u[0])
        self.stage_out_dr = out
        return Pose2(float(stage_pos[0]), float(stage_pos[1]), heading)

    def _execute_staging(self, t: float) -> None:
        """Two-leg run-in: a planned path to a point well clear of the hull,
        then a slow straight leg down the standoff lane.

        Planning straight to the staging point lets the path's turn-out
        loops (radius ~6x speed) clip the hull at an 18 m standoff, so the
        planner only ever targets the pre-stage point.
        """
        tun = self.tuning
        pose = self._staging_from_track()
        if pose is None:
            self._steer(self.yaw_est, tun.stage_speed_mps, HeadingSource.LIDAR)
            return
        self.staging_pose = pose
        err = math.hypot(pose.x - self.pos_dr[0], pose.y - self.pos_dr[1])
        yaw_err = abs(wrap_angle(pose.theta - self.yaw_est))
        if err < tun.staging_pos_tol_m and yaw_err < tun.staging_yaw_tol_rad:
            self.staging_reached = True
            self.last_thruster = ThrusterCommand()
            self.vectored_mode = False
            return
        if self.staging_leg == "prestage":
            u = np.array([math.cos(pose.theta), math.sin(pose.theta)])
            out = self.stage_out_dr
            pre = Pose2(
                pose.x
                + out[0] * (tun.prestage_out_m - tun.staging_standoff_m)
                - u[0] * tun.prestage_back_m,
                pose.y
                + out[1] * (tun.prestage_out_m - tun.staging_standoff_m)
                - u[1] * tun.prestage_back_m,
                pose.theta,
            )
            pre_err = math.hypot(pre.x - self.pos_dr[0], pre.y - self.pos_dr[1])
            if pre_err < tun.prestage_pos_tol_m:
                self.staging_leg = "final"
                self.staging_path = None
            else:
                goal_moved = self.staging_goal is not None and (
                    math.hypot(
                        pre.x - self.staging_goal.x, pre.y - self.staging_goal.y
                    )
                    > 6.0
                )
                follower_stuck = (
                    self.staging_path is not None
                    and self.staging_path.done
                    and pre_err > 4.0
                )
                if (
                    self.staging_path is None or goal_moved or follower_stuck
                ) and t - self.staging_planned_t > tun.replan_period_s:
                    start = Pose2(
                        float(self.pos_dr[0]), float(self.pos_dr[1]), self.yaw_est
                    )
                    speed = max(
                        abs(float(self.imu.velocity_body[0])), tun.stage_speed_mps
                    )
                    radii = (
                        min_turn_radius(speed),
                        min_turn_radius(tun.stage_speed_mps),
                        min_turn_radius(tun.final_speed_mps),
                    )
                    try:
                        path = plan_dubins(start, pre, radii)
                        self.staging_path = PathFollower(path)
                        self.staging_goal = pre
                        self.staging_planned_t = t
                    except (InfeasiblePathError, ValueError):
                        self.staging_path = None
                if self.staging_path is not None and not self.staging_path.done:
                    beta = self.staging_path.desired_heading(self.pos_dr)
                    v = tun.stage_speed_mps if pre_err > 10.0 else tun.final_speed_mps
                    self._steer(beta, v, HeadingSource.LIDAR)
                else:
                    cmd = heading_to_target(
                        self.yaw_est,
                        self.pos_dr,
                        np.array([pre.x, pre.y]),
                        HeadingSource.LIDAR,
                    )
                    self._steer(cmd.beta, tun.final_speed_mps, HeadingSource.LIDAR)
                return
        # Final leg: run straight at the staging point and swing onto the
        # lane heading over the last few metres.
        if err > 8.0:
            cmd = heading_to_target(
                self.yaw_est, self.pos_dr, np.array([pose.x, pose.y]), HeadingSource.LIDAR
            )
            beta = cmd.beta
        else:
            beta = pose.theta
        self._steer(beta, tun.final_speed_mps, HeadingSource.LIDAR)

    def _face_metrics(self) -> Optional[tuple[float, float, float]]:
        """(lateral gap, carrier-minus-face along offset, relative yaw).

        Relative yaw is the carrier heading minus the face heading, i.e.
        minus the apparent slope of the face line in the deck frame.  All
        quantities come from a whole-cluster rectangle fit: extracting an
        edge band of points instead collapses onto a corner while the
        boat is turning and starves at oblique viewing angles.
        """
        pts = self.track.points_dc
        if pts is None or len(pts) < 6:
            return None
        try:
            fit = fit_rectangle(pts)
        except DegenerateFitError:
            return None
        h = _long_axis_direction(pts, fit) % math.pi
        if h > 0.5 * math.pi:
            h -= math.pi  # face slope in the deck frame, (-pi/2, pi/2]
        u = np.array([math.cos(h), math.sin(h)])
        if abs(u[0]) < 0.2:
            return None  # hull lies athwart; no usable lateral geometry
        n = np.array([-u[1], u[0]])  # n[1] > 0: positive offsets to port
        c_n = float(fit.center @ n)
        side = 1.0 if c_n >= 0.0 else -1.0
        if self.dock_side == 0.0:
            self.dock_side = side
        # Near-face position across the hull axis, robust to which part
        # of the outline the scan actually caught.
        pn = pts @ n
        if side > 0:
            face_n = float(np.percentile(pn, 8.0))
        else:
            face_n = float(np.percentile(pn, 92.0))
        p0 = fit.center + (face_n - c_n) * n  # near-face centre
        s0 = -float(p0[0]) / float(u[0])
        y0 = float(p0[1]) + s0 * float(u[1])
        w_half = 0.5 * self.scenario.carrier.width_m
        lateral = y0 - side * w_half
        half_len = 0.5 * (
            self.track.length_m if self.track.identified else fit.length_m
        )
        along = min(max(-float(p0[0]), -half_len), half_len)
        rel_yaw = -h
        return lateral, along, rel_yaw

    def _execute_lateral(self, t: float) -> None:
        fresh = t - self.track.last_seen_t <= self.tuning.track_stale_s
        metrics = self._face_metrics() if fresh else None
        if metrics is not None and abs(metrics[0]) > self.tuning.lateral_abort_m:
            metrics = None  # nowhere near the face any more
        if metrics is None:
            # Never steer on stale geometry; hold, and if the face stays
            # gone drop back and fly the approach legs again.
            self.dock_metrics = None
            self.last_thruster = ThrusterCommand()
            self.vectored_mode = False
            if self.lateral_blind_t is None:
                self.lateral_blind_t = t
            elif t - self.lateral_blind_t > self.tuning.lateral_blind_max_s:
                self.staging_reached = False
                self.staging_leg = "prestage"
                self.staging_path = None
                self.staging_goal = None
                self.lateral_blind_t = None
                self._emit("lateral_approach_restarted", t)
            return
        self.lateral_blind_t = None
        self.dock_metrics = metrics
        lateral, along, rel_yaw = metrics
        cmd = lateral_dock_controller(
            lateral,
            along,
            rel_yaw,
            float(self.imu.velocity_body[1]),
            self.imu.yaw_rate_rad_s,
            float(self.imu.velocity_body[0]),
            self.hydro,
        )
        if cmd.realign or cmd.thruster is None:
            # Rotate in place back under the alignment gate.
            beta = wrap_angle(self.yaw_est - rel_yaw)
            self._steer(beta, 0.0, HeadingSource.LIDAR)
            return
        self.last_thruster = cmd.thruster
        self.vectored_mode = True
        self._beta_cmd = self.yaw_est
        self._beta_source = HeadingSource.LIDAR.value

    def _execute_reverse(self, t: float) -> None:
        side = self.dock_side if self.dock_side != 0.0 else 1.0
        v_des = -side * 0.45
        sway = float(self.imu.velocity_body[1]) if self.imu else 0.0
        dy = float(self.hydro.drag[1, 1])
        fy = dy * v_des + 600.0 * (v_des - sway)
        mz = -1500.0 * (self.imu.yaw_rate_rad_s if self.imu else 0.0)
        self.last_thruster = allocate_vectored(Wrench(0.0, fy, mz), self.hydro)
        self.vectored_mode = True
        self._beta_source = HeadingSource.LIDAR.value
        pts = self.track.points_dc
        if pts is not None and len(pts) >= 3:
            dist = float(np.percentile(np.linalg.norm(pts, axis=1), 5.0))
            self.clearance_m = dist - 0.5 * self.scenario.carrier.width_m

    # ------------------------------------------------------------------
    # Deck operations
    # ------------------------------------------------------------------
    def _objects_to_deck_frame(self, t: float) -> None:
        """Freeze deck-object truth into the deck frame at dock time."""
        rot_t = rotation_from_yaw(self.target_rect.yaw)[:2, :2]
        rot_c = rotation_from_yaw(-self.carrier.yaw)[:2, :2]
        deck_z = self.scenario.target.height_m - 1.0  # above the carrier deck plane
        for obj in self.objects:
            inertial = self.target_rect.center + rot_t @ obj.deck_xy
            dc = rot_c @ (inertial - self.carrier.position)
            obj.pos_dc = np.array([dc[0], dc[1], deck_z])

    def _run_deck_scan(self, t: float) -> None:
        base = self.manipulator.base_offset
        catalog = [
            (o.spec_id, o.pos_dc, o.mass_kg, o.length_m, o.width_m)
            for o in self.objects
        ]
        samples: dict[int, list[np.ndarray]] = {o.spec_id: [] for o in self.objects}
        for _ in range(self.tuning.deck_scan_repeats):
            for est in scan_for_objects(self.manipulator, catalog, self.rng["scan"]):
                samples[est.object_id].append(est.position)
        for obj in self.objects:
            fixes = samples[obj.spec_id]
            if not fixes:
                continue
            pos_ma = robust_position_filter(np.array(fixes))
            self.object_estimates[obj.spec_id] = pos_ma + base
            if obj.mass_kg <= UavParams().payload_max_kg:
                self.pending_small.append(obj.spec_id)
            else:
                self.pending_large.append(obj.spec_id)
        self.scan_done = True
        self._emit(
            "deck_scan_complete",
            t,
            {
                "objects": len(self.object_estimates),
                "small": len(self.pending_small),
                "large": len(self.pending_large),
            },
        )

    def _target_deck_search(self) -> np.ndarray:
        """Spiral waypoints over the docked vessel's deck, deck frame (n, 2).

        The fitted hull dimensions run slightly small (single-face scans
        underestimate the beam), so the search rectangle is padded rather
        than inset; the camera footprint absorbs the overhang.
        """
        length = self.track.length_m + 0.5
        width = self.track.width_m + 1.0
        local = spiral_coverage(length, width, self.tuning.search_spacing_m)
        c, s = math.cos(self.dock_heading_dc), math.sin(self.dock_heading_dc)
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + self.dock_center_dc[None, :]

    def _task_small(self, t: float) -> None:
        idle = [u for u in self.uavs if not u.airborne and u.plan is None]
        if not idle or not self.pending_small:
            return
        unit = idle[0]
        obj_id = min(
            self.pending_small,
            key=lambda i: float(
                np.linalg.norm(self.object_estimates[i][:2] - unit.pad_dc[:2])
            ),
        )
        unit.cmd_outbox = TakeoffCommand(
            search_waypoints=self._target_deck_search(),
            search_alt_m=self.tuning.search_alt_m,
            object_id=obj_id,
        )
        unit.cmd_last_sent_t = -math.inf
        unit.assigned_object = obj_id
        unit.plan = UavMissionPlan()
        unit.controller.reset()
        unit.start_ekf(t)
        self.small_task = (unit.index, obj_id)
        self._emit("uav_tasked", t, {"uav": unit.index, "object": obj_id})

    def _task_drag(self, t: float) -> None:
        idle = [u for u in self.uavs if not u.airborne and u.plan is None]
        if len(idle) < 2 or not self.pending_large:
            return
        obj_id = self.pending_large[0]
        obj = next(o for o in self.objects if o.spec_id == obj_id)
        est = self.object_estimates[obj_id]
        fit = RectangleFit(
            center=est[:2].copy(),
            length_m=obj.length_m,
            width_m=obj.width_m,
            heading_rad=self.dock_heading_dc,
            residual=0.0,
        )
        pair = (idle[0], idle[1])
        plans, _ = cooperative_drag_plan(
            fit,
            self.manipulator.base_offset[:2],
            self.manipulator.reach_radius_m,
            [u.pad_dc for u in pair],
            drag_alt_m=self.tuning.drag_alt_m + float(est[2]),
        )
        self.pending_large.remove(obj_id)
        if any(len(p) == 0 for p in plans):
            # Already inside the manipulator disc; nothing to move.
            obj.status = "secured"
            self.objects_delivered += 1
            self._emit("object_secured", t, {"object": obj_id})
            return
        for u in pair:
            u.airborne = True
            u.controller.reset()
        self.drag_task = _DragTask((pair[0].index, pair[1].index), obj_id, plans)
        self._emit(
            "drag_task_started",
            t,
            {"uavs": [pair[0].index, pair[1].index], "object": obj_id},
        )

    def _deck_ops_step(self, directives, t: float) -> None:
        if directives.run_deck_scan and not self.scan_done:
            self._run_deck_scan(t)
        if directives.task_drag and self.drag_task is None:
            self._task_drag(t)
        if directives.task_uav_small and self.small_task is None:
            self._task_small(t)

    # ------------------------------------------------------------------
    # UAV stepping
    # ------------------------------------------------------------------
    def _deliver_commands(self, t: float) -> None:
        for idx, cmd in self.wifi.poll(t):
            self.uavs[idx].pending_cmd = cmd
        for unit in self.uavs:
            if unit.cmd_outbox is None:
                continue
            if unit.plan is not None and unit.plan.mode is not UavMode.IDLE:
                unit.cmd_outbox = None  # takeoff acknowledged
                continue
            if t - unit.cmd_last_sent_t >= self.tuning.command_resend_s:
                self.wifi.send(
                    (unit.index, unit.cmd_outbox), t,
                    np.zeros(2), unit.truth.position[:2],
                )
                unit.cmd_last_sent_t = t

    def _pad_z(self, pad_dc: np.ndarray) -> float:
        return float(-pad_dc[0] * self.carrier.pitch + pad_dc[1] * self.carrier.roll)

    def _wind_dc(self) -> np.ndarray:
        c, s = math.cos(-self.carrier.yaw), math.sin(-self.carrier.yaw)
        we, wn = self.tuning.wind_east_mps, self.tuning.wind_north_mps
        return np.array([c * we - s * wn, s * we + c * wn, 0.0])

    def _step_machine_uav(self, unit: _UavUnit, t: float) -> None:
        plan = unit.plan
        pad = unit.pad_dc.copy()
        pad[2] = self._pad_z(unit.pad_dc)
        qr = qr_observe(unit.truth.position, pad, self.qr_cfg, unit.rng_qr, t)

        detection = None
        object_rel = None
        obj = None
        if unit.assigned_object is not None:
            obj = next(o for o in self.objects if o.spec_id == unit.assigned_object)
        if obj is not None and obj.status == "target_deck":
            rel = obj.pos_dc - unit.truth.position
            horiz = float(np.hypot(rel[0], rel[1]))
            alt = float(unit.truth.position[2] - obj.pos_dc[2])
            if horiz <= self.tuning.vision_range_m and (
                0.0 < alt <= self.tuning.vision_alt_max_m
            ):
                noisy = rel + 0.03 * unit.rng_qr.standard_normal(3)
                object_rel = noisy
                if horiz <= self.tuning.detection_range_m:
                    detection = (obj.spec_id, unit.est_position() + noisy)

        grasp_result = unit.pending_grasp
        unit.pending_grasp = None
        alt_above_pad = float(unit.truth.position[2] - pad[2])
        touched = (
            plan.mode is UavMode.PRECISION_LAND
            and alt_above_pad <= self.uav_cfg.touchdown_alt_m
        )
        obs = UavObservations(
            qr=qr,
            object_rel=object_rel,
            detection=detection,
            grasp_result=grasp_result,
            touched_down=touched,
            ekf_diverged=unit.ekf.diverged if unit.ekf else False,
            command=unit.pending_cmd,
        )
        unit.pending_cmd = None
        was_mode = plan.mode
        setpoint = uav_mission_step(
            plan, unit.est_position(), unit.est_velocity(), obs, t, self.uav_cfg
        )
        if plan.mode is not UavMode.IDLE and not unit.airborne:
            unit.airborne = True

        # Physically resolve a grasp while the machine sits in GRASP.
        if (
            plan.mode is UavMode.GRASP
            and obj is not None
            and obj.status == "target_deck"
            and t - plan.mode_entered_t >= self.uav_cfg.grasp_settle_s
            and t - unit.last_grasp_t >= self.tuning.grasp_retry_period_s
        ):
            hover_err = float(
                np.hypot(
                    unit.truth.position[0] - obj.pos_dc[0],
                    unit.truth.position[1] - obj.pos_dc[1],
                )
            )
            success = bool(
                self.rng["grasp"].random() < grasp_success_probability(hover_err)
            )
            unit.last_grasp_t = t
            unit.pending_grasp = GraspResult(success, obj.spec_id)
            self._emit(
                "grasp_attempt",
                t,
                {
                    "uav": unit.index,
                    "object": obj.spec_id,
                    "hover_error_m": round(hover_err, 3),
                    "success": success,
                },
            )
            if success:
                obj.status = "carried"
                obj.carried_by = unit.index
                unit.truth.carrying = obj.spec_id

        if plan.mode is UavMode.ASCEND and was_mode is UavMode.GRASP:
            if obj is not None and obj.status == "target_deck":
                obj.status = "abandoned"
                if obj.spec_id in self.pending_small:
                    self.pending_small.remove(obj.spec_id)
                self._emit("object_abandoned", t, {"object": obj.spec_id})

        if touched and plan.mode is UavMode.LANDED and was_mode is not UavMode.LANDED:
            self._resolve_touchdown(unit, pad, t)
            return
        self._fly(unit, setpoint, t)

    def _resolve_touchdown(self, unit: _UavUnit, pad: np.ndarray, t: float) -> None:
        error = float(
            np.hypot(
                unit.truth.position[0] - unit.pad_dc[0],
                unit.truth.position[1] - unit.pad_dc[1],
            )
        )
        self.landing_errors.append(error)
        self._emit(
            "touchdown", t, {"uav": unit.index, "lateral_error_m": round(error, 4)}
        )
        unit.truth.position = np.array(
            [unit.truth.position[0], unit.truth.position[1], float(pad[2])]
        )
        unit.truth.velocity = np.zeros(3)
        unit.airborne = False
        if unit.truth.carrying is not None:
            obj = next(o for o in self.objects if o.spec_id == unit.truth.carrying)
            obj.status = "delivered"
            obj.carried_by = None
            obj.pos_dc = unit.truth.position.copy()
            self.objects_delivered += 1
            self.small_delivered += 1
            if obj.spec_id in self.pending_small:
                self.pending_small.remove(obj.spec_id)
            unit.truth.carrying = None
            self._emit("object_delivered", t, {"object": obj.spec_id, "uav": unit.index})
        if self.small_task is not None and self.small_task[0] == unit.index:
            obj_id = self.small_task[1]
            if obj_id in self.pending_small:
                # Came home without it after running out of attempts.
                self.pending_small.remove(obj_id)
            self.small_task = None
        unit.plan = None
        unit.assigned_object = None
        unit.ekf = None

    def _fly(self, unit: _UavUnit, setpoint: np.ndarray, t: float) -> None:
        if not unit.airborne:
            return
        before = unit.truth.velocity.copy()
        unit.truth = step_uav(
            unit.truth, unit.controller, setpoint, self._wind_dc(), DT_S, unit.params
        )
        unit.accel_dc = (unit.truth.velocity - before) / DT_S

    def _step_drag(self, t: float) -> None:
        task = self.drag_task
        if task is None:
            return
        a, b = (self.uavs[i] for i in task.uav_idx)
        obj = next(o for o in self.objects if o.spec_id == task.object_id)
        plans = task.plans
        hover_alt = float(plans[0][0, 2]) + 1.5

        def _both_near(targets, tol, vertical=False):
            for unit, tgt in zip((a, b), targets):
                if vertical:
                    d = abs(float(unit.truth.position[2]) - float(tgt[2]))
                else:
                    d = float(np.hypot(*(unit.truth.position[:2] - tgt[:2])))
                if d > tol:
                    return False
            return True

        targets = None
        if task.stage == "lift":
            targets = [np.array([u.pad_dc[0], u.pad_dc[1], hover_alt]) for u in (a, b)]
            if all(u.truth.position[2] >= hover_alt - 0.3 for u in (a, b)):
                task.stage = "to_grip"
        elif task.stage == "to_grip":
            targets = [np.array([p[0, 0], p[0, 1], hover_alt]) for p in plans]
            if _both_near(targets, 0.5):
                task.stage = "descend"
        elif task.stage == "descend":
            targets = [p[0] for p in plans]
            if _both_near(targets, 0.2, vertical=True):
                task.stage = "drag"
                obj.status = "carried"
                self._emit("drag_lift", t, {"object": task.object_id})
        elif task.stage == "drag":
            targets = [p[task.wp] for p in plans]
            if _both_near(targets, 0.4):
                if task.wp + 1 < len(plans[0]):
                    task.wp += 1
                    targets = [p[task.wp] for p in plans]
                else:
                    task.stage = "return"
                    obj.status = "secured"
                    centroid = 0.5 * (plans[0][-1, :2] + plans[1][-1, :2])
                    obj.pos_dc = np.array([centroid[0], centroid[1], 0.0])
                    self.objects_delivered += 1
                    self._emit("object_secured", t, {"object": task.object_id})
                    task.land_plans = [
                        UavMissionPlan(
                            mode=UavMode.RETURN_TRANSIT,
                            pad_position=unit.pad_dc.copy(),
                            p1=unit.pad_dc + np.array([0.0, 0.0, 3.0]),
                            search_waypoints=unit.pad_dc[None, :2].copy(),
                        )
                        for unit in (a, b)
                    ]
                    targets = None
        else:  # return: standard camera landing via the mode machine
            done = True
            for unit, plan in zip((a, b), task.land_plans):
                if not unit.airborne:
                    continue
                done = False
                pad = unit.pad_dc.copy()
                pad[2] = self._pad_z(unit.pad_dc)
                qr = qr_observe(unit.truth.position, pad, self.qr_cfg, unit.rng_qr, t)
                touched = (
                    plan.mode is UavMode.PRECISION_LAND
                    and float(unit.truth.position[2] - pad[2])
                    <= self.uav_cfg.touchdown_alt_m
                )
                obs = UavObservations(qr=qr, touched_down=touched)
                was = plan.mode
                sp = uav_mission_step(
                    plan, unit.truth.position.copy(), unit.truth.velocity.copy(),
                    obs, t, self.uav_cfg,
                )
                if touched and plan.mode is UavMode.LANDED and was is not UavMode.LANDED:
                    self._resolve_touchdown(unit, pad, t)
                    continue
                self._fly(unit, sp, t)
            if done:
                self.drag_task = None
                self._emit("drag_task_complete", t, {"object": task.object_id})
            return

        if obj.status == "carried" and task.stage == "drag":
            centroid = 0.5 * (a.truth.position[:2] + b.truth.position[:2])
            obj.pos_dc = np.array([centroid[0], centroid[1], float(plans[0][0, 2]) - 0.4])
        if targets is not None:
            for unit, tgt in zip((a, b), targets):
                self._fly(unit, np.asarray(tgt, float), t)

    def _uav_mission_steps(self, t: float) -> None:
        drag_ids = set(self.drag_task.uav_idx) if self.drag_task is not None else set()
        for unit in self.uavs:
            if unit.index in drag_ids:
                continue
            if unit.plan is not None:
                self._step_machine_uav(unit, t)
        self._step_drag(t)

    # ------------------------------------------------------------------
    # Landing-only mode
    # ------------------------------------------------------------------
    def _landing_mode_step(self, t: float) -> None:
        cycles = self.scenario.mission.landing_cycles
        if self.landing_uav >= len(self.uavs):
            if not self.complete:
                self.complete = True
                self._emit("mission_complete", t, {"cycles": cycles * len(self.uavs)})
            return
        unit = self.uavs[self.landing_uav]
        if unit.plan is None:
            if t < self.landing_pause_until:
                return
            unit.plan = UavMissionPlan()
            unit.controller.reset()
            unit.start_ekf(t)
            unit.cmd_outbox = TakeoffCommand(
                search_waypoints=unit.pad_dc[None, :2].copy(),
                search_alt_m=self.tuning.landing_cycle_alt_m,
                return_only=True,
            )
            unit.cmd_last_sent_t = -math.inf
            self._emit(
                "landing_cycle_start",
                t,
                {"uav": unit.index, "cycle": self.landing_cycle + 1},
            )
        self._step_machine_uav(unit, t)
        if unit.plan is None:  # touchdown resolved inside the machine step
            self.landing_cycle += 1
            self.landing_pause_until = t + 1.0
            if self.landing_cycle >= cycles:
                self.landing_cycle = 0
                self.landing_uav += 1

    # ------------------------------------------------------------------
    # Dynamics
    # ------------------------------------------------------------------
    def _carrier_dynamics(self, t: float) -> None:
        roll, pitch = self.waves.roll_pitch(t)
        if self.dock_offset is not None:
            # Latched alongside: ride with the target.
            rel, dyaw = self.dock_offset
            rot = rotation_from_yaw(self.target_rect.yaw)[:2, :2]
            self.carrier.position = self.target_rect.center + rot @ rel
            self.carrier.yaw = wrap_angle(self.target_rect.yaw + dyaw)
            c, s = math.cos(-self.carrier.yaw), math.sin(-self.carrier.yaw)
            vd = self.target_drift
            self.carrier.velocity = np.array(
                [c * vd[0] - s * vd[1], s * vd[0] + c * vd[1], 0.0]
            )
        elif self.landing_mode:
            self.carrier.velocity = np.zeros(3)  # moored
        else:
            if self.vectored_mode:
                wrench = actuation_vectored(self.last_thruster, self.hydro)
            else:
                wrench = actuation_simplified(self.last_thruster, self.hydro)
            self.carrier = step_dynamics(
                self.carrier, wrench, self.hydro, DT_S, self.waves.wrench(t)
            )
        self.carrier.roll = roll
        self.carrier.pitch = pitch
        self.carrier_rect.center = self.carrier.position.copy()
        self.carrier_rect.yaw = self.carrier.yaw

    def _drift_vessels(self) -> None:
        self.target_rect.center = self.target_rect.center + self.target_drift * DT_S
        for rect, v in zip(self.distractor_rects, self.distractor_drifts):
            rect.center = rect.center + v * DT_S

    # ------------------------------------------------------------------
    # Logging
    # ------------------------------------------------------------------
    def _log_state(self, t: float) -> None:
        if self.out_dir is None or self.tick % LOG_EVERY_TICKS != 0:
            return
        c = self.carrier
        self.log_carrier.append(
            f"{t!r},{float(c.position[0])!r},{float(c.position[1])!r},{float(c.yaw)!r},"
            f"{float(c.velocity[0])!r},{float(c.velocity[1])!r},{float(c.velocity[2])!r},"
            f"{float(c.roll)!r},{float(c.pitch)!r},{phase_index(self.controller.phase)},"
            f"{self._beta_source},{float(self._beta_cmd)!r}"
        )
        self.log_dvl.append(
            f"{t!r},{float(self.pos_dr[0])!r},{float(self.pos_dr[1])!r},"
            f"{float(self.yaw_est)!r}"
        )
        for unit in self.uavs:
            if unit.plan is None and not unit.airborne:
                continue
            p, v = unit.truth.position, unit.truth.velocity
            mode = unit.plan.mode.value if unit.plan is not None else "drag"
            self.log_uav[unit.index].append(
                f"{t!r},{mode},{float(p[0])!r},{float(p[1])!r},{float(p[2])!r},"
                f"{float(v[0])!r},{float(v[1])!r},{float(v[2])!r}"
            )

    def _write_outputs(self, report: RunReport) -> None:
        if self.out_dir is None:
            return
        os.makedirs(self.out_dir, exist_ok=True)

        def _dump(name: str, header: str, rows: list[str]) -> None:
            with open(os.path.join(self.out_dir, name), "w", encoding="utf-8") as fh:
                fh.write(header + "\n")
                if rows:
                    fh.write("\n".join(rows))
                    fh.write("\n")

        _dump(
            "carrier.csv",
            "t,x,y,yaw,surge,sway,yaw_rate,roll,pitch,phase,heading_source,beta_cmd",
            self.log_carrier,
        )
        _dump("dvl_path.csv", "t,x,y,yaw", self.log_dvl)
        _dump("lidar_target.csv", "t,x_dc,y_dc,n_points", self.log_lidar)
        _dump("fits.csv", "t,length,width,heading,residual", self.log_fits)
        for unit in self.uavs:
            _dump(
                f"uav_{unit.index}.csv",
                "t,mode,x,y,z,vx,vy,vz",
                self.log_uav[unit.index],
            )
        with open(os.path.join(self.out_dir, "events.jsonl"), "w", encoding="utf-8") as fh:
            if self.events:
                fh.write("\n".join(self.events))
                fh.write("\n")
        with open(os.path.join(self.out_dir, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(dataclasses.asdict(report), fh, sort_keys=True, indent=2)
            fh.write("\n")

    # ------------------------------------------------------------------
    # Main loop
    # ------------------------------------------------------------------
    def _controller_events(self, directives, t: float) -> None:
        for name, payload in directives.events:
            self._emit(name, t, payload)
            if name != "phase_transition":
                continue
            idx = payload["index"]
            if idx == 3 and self.final_target_error_m is None:
                ft = self.shore.filters["target"]
                if ft is not None:
                    err = float(
                        np.linalg.norm(ft.state.mean[:2] - self.target_rect.center)
                    )
                    self.final_target_error_m = err
                    self._emit("offshore_estimate_scored", t, {"error_m": round(err, 2)})
            if idx == 5 and self.docking_time_s is None:
                self.docking_time_s = t
                rot = rotation_from_yaw(-self.target_rect.yaw)[:2, :2]
                rel = rot @ (self.carrier.position - self.target_rect.center)
                self.dock_offset = (
                    rel,
                    wrap_angle(self.carrier.yaw - self.target_rect.yaw),
                )
                # Latched alongside nothing moves in the deck frame, so the
                # vessel geometry is frozen here rather than reprojected
                # later through a drifting dead-reckoned pose.  The fitted
                # centre is biased toward the near face at contact range
                # (the lidar only sees the carrier-facing side), so the
                # centre is rebuilt from the docking geometry: half a hull
                # width out on the docked side, keeping the fitted
                # along-axis position.
                if self.track.center_dr is not None:
                    h = (self.track.heading_dr - self.yaw_est) % math.pi
                    u = np.array([math.cos(h), math.sin(h)])
                    n = np.array([-u[1], u[0]])
                    side = self.dock_side if self.dock_side != 0.0 else 1.0
                    if n[1] * side < 0.0:
                        n = -n
                    lat = (
                        0.5 * self.scenario.carrier.width_m
                        + 0.5 * self.track.width_m
                        + 0.3
                    )
                    p = self._to_dc(self.track.center_dr)
                    self.dock_center_dc = float(p @ u) * u + lat * n
                    self.dock_heading_dc = h
                self._objects_to_deck_frame(t)
            if payload.get("trigger") == "source_loss_regression":
                self.staging_path = None
                self.staging_goal = None
                self.staging_reached = False
                self.staging_leg = "prestage"
                self.stage_out_dr = None
                self.lateral_blind_t = None
                self.dock_face_sign = 0.0
                self.stage_dir = 0.0
                self.circle_entered_t = None
                self.circle_dir = 0.0
            if self.stop_after_phase is not None and idx > self.stop_after_phase:
                self._stop = True

    def _tick_full(self, t: float) -> None:
        self._sense_carrier(t)
        self._shore_step(t)
        self._onboard_camera_step(t)
        self._lidar_step(t)
        self._uav_sensors_step(t)

        view = self._make_view(t)
        directives = self.controller.step(view)
        self._controller_events(directives, t)
        self._last_action = directives.action
        if directives.complete and not self.complete:
            self.complete = True
            self._stop = True
        if (
            self.dock_offset is not None
            and self.controller.phase is MissionPhase.DOCKED_OPERATIONS
            and directives.action
            in (CarrierAction.REVERSE_CLEAR, CarrierAction.HEAD_HOME)
        ):
            self.dock_offset = None  # hook stowed, free to maneuver

        self._deck_ops_step(directives, t)
        self._execute_carrier(directives.action, t)
        self._deliver_commands(t)
        self._uav_mission_steps(t)
        self._carrier_dynamics(t)
        self._drift_vessels()

    def _tick_landing_only(self, t: float) -> None:
        self._sense_carrier(t)
        self._uav_sensors_step(t)
        self._deliver_commands(t)
        self._landing_mode_step(t)
        self._carrier_dynamics(t)
        if self.complete:
            self._stop = True

    def run(self) -> RunReport:
        wall0 = time.perf_counter()
        self._emit(
            "run_start", 0.0, {"scenario": self.scenario.name, "seed": self.seed}
        )
        n_ticks = int(round(self.max_sim_s / DT_S))
        for k in range(n_ticks):
            self.tick = k
            t = k * DT_S
            self.t = t
            self._log_state(t)
            if self.landing_mode:
                self._tick_landing_only(t)
            else:
                self._tick_full(t)
            if self._stop:
                break
        t_end = self.t

        if self.outcome is None:
            if self.complete or (self.stop_after_phase is not None and self._stop):
                self.outcome = "success"
            else:
                self.outcome = "timeout"
                self._emit("mission_timeout", t_end)
        success = self.outcome == "success"

        phase_durations: dict[str, float] = {}
        log = self.controller.phase_log
        for (t0, phase, _), nxt in zip(log, log[1:] + [(t_end, None, "")]):
            phase_durations[phase.value] = round(
                phase_durations.get(phase.value, 0.0) + (nxt[0] - t0), 2
            )
        uavs_recovered = not any(u.airborne for u in self.uavs)
        self._emit(
            "run_end",
            t_end,
            {
                "outcome": self.outcome,
                "delivered": self.objects_delivered,
                "datalink_dropped": self.datalink.n_dropped,
                "wifi_dropped": self.wifi.n_dropped,
            },
        )
        report = RunReport(
            scenario=self.scenario.name,
            seed=self.seed,
            outcome=self.outcome,
            success=success,
            duration_s=round(t_end, 2),
            final_phase=self.controller.phase.value,
            phase_index_sequence=[phase_index(p) for _, p, _ in log],
            phase_durations=phase_durations,
            n_regressions=self.controller.n_regressions,
            docked=self.docking_time_s is not None,
            docking_time_s=self.docking_time_s,
            final_target_error_m=self.final_target_error_m,
            objects_delivered=self.objects_delivered,
            small_objects_delivered=self.small_delivered,
            landing_errors_m=[round(e, 4) for e in self.landing_errors],
            uavs_recovered=uavs_recovered,
            wall_time_s=round(time.perf_counter() - wall0, 3),
            out_dir=self.out_dir,
        )
        self._write_outputs(report)
        return report


def run_scenario(
    scenario: Scenario,
    seed: Optional[int] = None,
    out_dir: Optional[str] = None,
    max_sim_s: float = 2400.0,
    stop_after_phase: Optional[int] = None,
) -> RunReport:
    """Build a world and run it to completion."""
    world = SimWorld(
        scenario,
        seed=seed,
        out_dir=out_dir,
        max_sim_s=max_sim_s,
        stop_after_phase=stop_after_phase,
    )
    return world.run()


def _run_one(args) -> RunReport:
    scenario, seed, out_dir, max_sim_s, stop_after_phase = args
    return run_scenario(scenario, seed, out_dir, max_sim_s, stop_after_phase)


def run_batch(
    scenario: Scenario,
    seeds: list[int],
    jobs: int = 1,
    out_root: Optional[str] = None,
    max_sim_s: float = 2400.0,
    stop_after_phase: Optional[int] = None,
) -> tuple[list[RunReport], dict]:
    """Run many seeds; aggregates depend only on the sorted report set."""
    tasks = []
    for seed in seeds:
        out_dir = os.path.join(out_root, f"seed_{seed}") if out_root else None
        tasks.append((scenario, int(seed), out_dir, max_sim_s, stop_after_phase))
    if jobs > 1 and len(tasks) > 1:
        with multiprocessing.Pool(processes=jobs) as pool:
            reports = pool.map(_run_one, tasks)
    else:
        reports = [_run_one(task) for task in tasks]
    reports = sorted(reports, key=lambda r: r.seed)
    return reports, aggregate_reports(reports)


def aggregate_reports(reports: list[RunReport]) -> dict:
    """Order- and parallelism-independent batch summary."""
    ordered = sorted(reports, key=lambda r: r.seed)
    n = len(ordered)
    landing = [e for r in ordered for e in r.landing_errors_m]
    agg = {
        "n_runs": n,
        "n_success": sum(1 for r in ordered if r.success),
        "success_rate": round(sum(1 for r in ordered if r.success) / max(n, 1), 4),
        "n_docked": sum(1 for r in ordered if r.docked),
        "mean_duration_s": round(sum(r.duration_s for r in ordered) / max(n, 1), 2),
        "objects_delivered_total": sum(r.objects_delivered for r in ordered),
        "n_regressions_total": sum(r.n_regressions for r in ordered),
        "n_landings": len(landing),
    }
    if landing:
        arr = np.asarray(landing)
        agg["landing_error_median_m"] = round(float(np.median(arr)), 4)
        agg["landing_error_p90_m"] = round(float(np.percentile(arr, 90.0)), 4)
    errs = [r.final_target_error_m for r in ordered if r.final_target_error_m is not None]
    if errs:
        agg["offshore_error_median_m"] = round(float(np.median(errs)), 2)
        agg["offshore_error_max_m"] = round(float(max(errs)), 2)
    return agg


def simulate_landing_descents(
    n_descents: int,
    sea_state: int,
    seed: int,
    wind_mps: tuple[float, float] = (0.8, 0.5),
) -> np.ndarray:
    """Standalone precision-landing trials on a rolling deck.

    Each descent starts the drone a few meters over the pad with a lateral
    offset, runs the full acquire/descend machine against camera fixes of
    the moving pad, and records the touchdown lateral error. Returns the
    error array (one entry per descent; aborted descents score inf).
    """
    ss = np.random.SeedSequence(seed).spawn(n_descents + 1)
    waves = WaveField(sea_state, np.random.default_rng(ss[0]))
    pad_dc = np.array([1.5, 1.0, 0.0])
    cfg = MissionConfig()
    qr_cfg = QrConfig()
    wind = np.array([wind_mps[0], wind_mps[1], 0.0])
    errors = np.full(n_descents, np.inf)
    for i in range(n_descents):
        rng = np.random.default_rng(ss[i + 1])
        start = pad_dc + np.array(
            [rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(5.0, 7.0)]
        )
        state = UavState(start.copy())
        ctrl = PositionController()
        plan = UavMissionPlan(
            mode=UavMode.QR_ACQUIRE,
            pad_position=start.copy(),
            p1=start.copy(),
            search_waypoints=pad_dc[None, :2].copy(),
        )
        t0 = float(rng.uniform(0.0, 50.0))  # random phase of the deck motion
        for k in range(int(60.0 / DT_S)):
            t = t0 + k * DT_S
            roll, pitch = waves.roll_pitch(t)
            pad = pad_dc.copy()
            pad[2] = float(-pad_dc[0] * pitch + pad_dc[1] * roll)
            qr = qr_observe(state.position, pad, qr_cfg, rng, t)
            touched = (
                plan.mode is UavMode.PRECISION_LAND
                and float(state.position[2] - pad[2]) <= cfg.touchdown_alt_m
            )
            obs = UavObservations(qr=qr, touched_down=touched)
            sp = uav_mission_step(
                plan, state.position.copy(), state.velocity.copy(), obs, t, cfg
            )
            if plan.mode is UavMode.LANDED:
                errors[i] = float(np.hypot(*(state.position[:2] - pad_dc[:2])))
                break
            if plan.mode is UavMode.ABORT:
                break
            state = step_uav(state, ctrl, sp, wind, DT_S)
    return errors
