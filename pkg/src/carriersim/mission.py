"""Mission phases, docking hook, communication links, mission controller.

The approach runs through five phases: preparation (shore camera
acquires carrier and target), shore-guided transit, onboard-camera
approach, LiDAR survey and lateral docking, and docked deck operations.
Each phase names the heading source steering the carrier. Losing that
source for longer than the loss budget regresses the mission exactly one
phase; regaining it re-advances through the normal forward conditions.

MissionController.step is a pure decision layer: it consumes a condensed
MissionView of estimator and vehicle status and emits directives. The
simulation layer translates directives into thruster and drone commands.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .guidance import HeadingSource


class MissionPhase(Enum):
    PREPARATION = "preparation"
    SHORE_GUIDED_TRANSIT = "shore_guided_transit"
    ONBOARD_GUIDED_APPROACH = "onboard_guided_approach"
    MEASURE_AND_DOCK = "measure_and_dock"
    DOCKED_OPERATIONS = "docked_operations"


_PHASE_ORDER = list(MissionPhase)


def phase_index(phase: MissionPhase) -> int:
    """1-based position in the nominal forward sequence."""
    return _PHASE_ORDER.index(phase) + 1


# Heading source that steers the carrier in each phase.
PHASE_HEADING_SOURCE = {
    MissionPhase.PREPARATION: HeadingSource.NONE,
    MissionPhase.SHORE_GUIDED_TRANSIT: HeadingSource.ONSHORE_GIMBAL,
    MissionPhase.ONBOARD_GUIDED_APPROACH: HeadingSource.ONBOARD_GIMBAL,
    MissionPhase.MEASURE_AND_DOCK: HeadingSource.LIDAR,
    MissionPhase.DOCKED_OPERATIONS: HeadingSource.NONE,
}


class HookState(Enum):
    STOWED = "stowed"
    RELEASED = "released"
    LATCHED = "latched"


@dataclass
class DockingHook:
    state: HookState = HookState.STOWED
    contact_since: Optional[float] = None


def docking_trigger(
    hook: DockingHook, contact: bool, t: float, sustain_s: float = 2.0
) -> DockingHook:
    """Advance the passive hook: touch releases it, sustained contact latches.

    Contact interruptions while released restart the latch timer; a
    latched hook stays latched until explicitly stowed.
    """
    if hook.state is HookState.STOWED:
        if contact:
            hook.state = HookState.RELEASED
            hook.contact_since = t
    elif hook.state is HookState.RELEASED:
        if not contact:
            hook.contact_since = None
        else:
            if hook.contact_since is None:
                hook.contact_since = t
            elif t - hook.contact_since >= sustain_s:
                hook.state = HookState.LATCHED
    return hook


def stow_hook(hook: DockingHook) -> DockingHook:
    hook.state = HookState.STOWED
    hook.contact_since = None
    return hook


@dataclass
class CommLink:
    name: str
    latency_s: float = 0.1
    drop_rate: float = 0.0
    max_range_m: float = math.inf


class CommChannel:
    """FIFO message channel with latency, random drops and a range gate."""

    def __init__(self, link: CommLink, rng: np.random.Generator):
        self.link = link
        self.rng = rng
        self._queue: list = []
        self._seq = 0
        self.n_sent = 0
        self.n_dropped = 0

    def send(
        self,
        message: object,
        t: float,
        sender_pos: np.ndarray | None = None,
        receiver_pos: np.ndarray | None = None,
    ) -> bool:
        """Queue a message; returns False when dropped or out of range."""
        self.n_sent += 1
        if sender_pos is not None and receiver_pos is not None:
            d = float(
                np.linalg.norm(
                    np.asarray(sender_pos, float).reshape(-1)[:2]
                    - np.asarray(receiver_pos, float).reshape(-1)[:2]
                )
            )
            if d > self.link.max_range_m:
                self.n_dropped += 1
                return False
        if self.link.drop_rate > 0.0 and self.rng.random() < self.link.drop_rate:
            self.n_dropped += 1
            return False
        heapq.heappush(self._queue, (t + self.link.latency_s, self._seq, message))
        self._seq += 1
        return True

    def poll(self, t: float) -> list:
        """Messages due by time t, in send order."""
        out = []
        while self._queue and self._queue[0][0] <= t:
            out.append(heapq.heappop(self._queue)[2])
        return out


class DockingStage(Enum):
    CIRCLE = "circle"
    STAGE = "stage"
    LATERAL = "lateral"


class RecoveryStage(Enum):
    DECK_WORK = "deck_work"
    DETACH = "detach"
    TRANSIT_HOME = "transit_home"
    DONE = "done"


class CarrierAction(Enum):
    HOLD = "hold"
    HEAD_TO_TARGET = "head_to_target"  # shore fixes, line of sight
    HEAD_ALONG_BEARING = "head_along_bearing"  # onboard gimbal azimuth
    CIRCLE_TARGET = "circle_target"  # relative survey circle
    FOLLOW_STAGING_PATH = "follow_staging_path"
    LATERAL_DOCK = "lateral_dock"
    STATION_KEEP = "station_keep"
    REVERSE_CLEAR = "reverse_clear"
    HEAD_HOME = "head_home"


@dataclass
class MissionView:
    """Condensed world status the controller decides on."""

    t: float
    shore_fix_age_s: float = math.inf
    onboard_lock_streak: int = 0
    onboard_bearing_age_s: float = math.inf
    lidar_fit_streak: int = 0
    lidar_fit_age_s: float = math.inf
    target_range_m: Optional[float] = None
    target_identified: bool = False
    staging_reached: bool = False
    contact: bool = False
    alongside_ok: bool = False
    scan_done: bool = False
    small_objects_pending: int = 0
    large_objects_pending: int = 0
    uav_task_active: bool = False
    drag_task_active: bool = False
    any_uav_airborne: bool = False
    home_distance_m: Optional[float] = None
    clearance_m: Optional[float] = None


@dataclass
class MissionDirectives:
    phase: MissionPhase
    action: CarrierAction
    heading_source: HeadingSource
    hook_state: HookState
    task_uav_small: bool = False
    task_drag: bool = False
    run_deck_scan: bool = False
    complete: bool = False
    events: list = field(default_factory=list)


SOURCE_LOSS_BUDGET_S = 30.0


class MissionController:
    """Single source of truth for the mission phase and its transitions."""

    def __init__(
        self,
        onboard_lock_streak_needed: int = 8,
        lidar_fit_streak_needed: int = 3,
        home_arrival_m: float = 40.0,
        detach_clearance_m: float = 6.0,
        return_home: bool = True,
    ):
        self.phase = MissionPhase.PREPARATION
        self.phase_entered_t = 0.0
        self.hook = DockingHook()
        self.docking_stage = DockingStage.CIRCLE
        self.recovery_stage = RecoveryStage.DECK_WORK
        self.onboard_lock_streak_needed = onboard_lock_streak_needed
        self.lidar_fit_streak_needed = lidar_fit_streak_needed
        self.home_arrival_m = home_arrival_m
        self.detach_clearance_m = detach_clearance_m
        self.return_home = return_home
        self.n_regressions = 0
        self.phase_log: list[tuple[float, MissionPhase, str]] = [
            (0.0, MissionPhase.PREPARATION, "start")
        ]

    def _enter(self, phase: MissionPhase, t: float, trigger: str, events: list) -> None:
        self.phase = phase
        self.phase_entered_t = t
        self.phase_log.append((t, phase, trigger))
        events.append(
            (
                "phase_transition",
                {"phase": phase.value, "index": phase_index(phase), "trigger": trigger},
            )
        )

    def _regress(self, t: float, events: list) -> None:
        idx = _PHASE_ORDER.index(self.phase)
        if idx == 0:
            return
        self.n_regressions += 1
        events.append(
            ("guidance_source_lost", {"phase": self.phase.value, "budget_s": SOURCE_LOSS_BUDGET_S})
        )
        self._enter(_PHASE_ORDER[idx - 1], t, "source_loss_regression", events)
        if self.phase is MissionPhase.ONBOARD_GUIDED_APPROACH:
            # Coming back from the docking phase restarts the survey.
            self.docking_stage = DockingStage.CIRCLE

    def step(self, view: MissionView) -> MissionDirectives:
        events: list = []
        t = view.t
        phase = self.phase

        if phase is MissionPhase.PREPARATION:
            action = CarrierAction.HOLD
            if view.shore_fix_age_s < 5.0:
                self._enter(
                    MissionPhase.SHORE_GUIDED_TRANSIT, t, "shore_tracking_acquired", events
                )
                action = CarrierAction.HEAD_TO_TARGET

        elif phase is MissionPhase.SHORE_GUIDED_TRANSIT:
            action = CarrierAction.HEAD_TO_TARGET
            if view.shore_fix_age_s > SOURCE_LOSS_BUDGET_S:
                self._regress(t, events)
                action = CarrierAction.HOLD
            elif view.onboard_lock_streak >= self.onboard_lock_streak_needed:
                self._enter(
                    MissionPhase.ONBOARD_GUIDED_APPROACH, t, "onboard_camera_lock", events
                )
                action = CarrierAction.HEAD_ALONG_BEARING

        elif phase is MissionPhase.ONBOARD_GUIDED_APPROACH:
            action = CarrierAction.HEAD_ALONG_BEARING
            if view.onboard_bearing_age_s > SOURCE_LOSS_BUDGET_S:
                self._regress(t, events)
                action = CarrierAction.HEAD_TO_TARGET
            elif (
                view.lidar_fit_streak >= self.lidar_fit_streak_needed
                and view.target_range_m is not None
                and view.target_range_m <= 200.0
            ):
                self.docking_stage = DockingStage.CIRCLE
                self._enter(MissionPhase.MEASURE_AND_DOCK, t, "lidar_fit_confirmed", events)
                action = CarrierAction.CIRCLE_TARGET

        elif phase is MissionPhase.MEASURE_AND_DOCK:
            if view.lidar_fit_age_s > SOURCE_LOSS_BUDGET_S:
                self._regress(t, events)
                action = CarrierAction.HEAD_ALONG_BEARING
            else:
                if self.docking_stage is DockingStage.CIRCLE:
                    action = CarrierAction.CIRCLE_TARGET
                    if view.target_identified:
                        self.docking_stage = DockingStage.STAGE
                        events.append(("target_identified", {}))
                        action = CarrierAction.FOLLOW_STAGING_PATH
                elif self.docking_stage is DockingStage.STAGE:
                    action = CarrierAction.FOLLOW_STAGING_PATH
                    if view.staging_reached:
                        self.docking_stage = DockingStage.LATERAL
                        events.append(("lateral_approach_started", {}))
                        action = CarrierAction.LATERAL_DOCK
                else:
                    action = CarrierAction.LATERAL_DOCK

                prev = self.hook.state
                docking_trigger(self.hook, view.contact, t)
                if self.hook.state is not prev:
                    events.append(("hook_state", {"state": self.hook.state.value}))
                if self.hook.state is HookState.LATCHED and view.alongside_ok:
                    self.recovery_stage = RecoveryStage.DECK_WORK
                    self._enter(
                        MissionPhase.DOCKED_OPERATIONS, t, "latched_alongside", events
                    )
                    action = CarrierAction.STATION_KEEP

        else:  # DOCKED_OPERATIONS
            action = CarrierAction.STATION_KEEP
            directives = MissionDirectives(
                self.phase,
                action,
                PHASE_HEADING_SOURCE[self.phase],
                self.hook.state,
                events=events,
            )
            if self.recovery_stage is RecoveryStage.DECK_WORK:
                if not view.scan_done:
                    directives.run_deck_scan = True
                elif view.drag_task_active or view.uav_task_active:
                    pass  # wait for the active task to finish
                elif view.large_objects_pending > 0:
                    directives.task_drag = True
                elif view.small_objects_pending > 0:
                    directives.task_uav_small = True
                elif view.any_uav_airborne:
                    pass  # wait for stragglers to land
                else:
                    if not self.return_home:
                        directives.complete = True
                        events.append(("mission_complete", {"return": False}))
                    else:
                        stow_hook(self.hook)
                        directives.hook_state = self.hook.state
                        events.append(("hook_state", {"state": self.hook.state.value}))
                        events.append(("recovery_departure", {}))
                        self.recovery_stage = RecoveryStage.DETACH
                        directives.action = CarrierAction.REVERSE_CLEAR
            elif self.recovery_stage is RecoveryStage.DETACH:
                if view.any_uav_airborne:
                    raise RuntimeError("recovery refused: a drone is still airborne")
                directives.action = CarrierAction.REVERSE_CLEAR
                if view.clearance_m is not None and view.clearance_m >= self.detach_clearance_m:
                    self.recovery_stage = RecoveryStage.TRANSIT_HOME
                    directives.action = CarrierAction.HEAD_HOME
                    events.append(("return_transit_started", {}))
            elif self.recovery_stage is RecoveryStage.TRANSIT_HOME:
                directives.action = CarrierAction.HEAD_HOME
                if (
                    view.home_distance_m is not None
                    and view.home_distance_m <= self.home_arrival_m
                ):
                    self.recovery_stage = RecoveryStage.DONE
                    directives.action = CarrierAction.HOLD
                    directives.complete = True
                    events.append(("mission_complete", {"return": True}))
            else:
                directives.action = CarrierAction.HOLD
                directives.complete = True
            directives.heading_source = (
                HeadingSource.ONSHORE_GIMBAL
                if directives.action is CarrierAction.HEAD_HOME
                else PHASE_HEADING_SOURCE[self.phase]
            )
            return directives

        return MissionDirectives(
            self.phase,
            action,
            PHASE_HEADING_SOURCE[self.phase],
            self.hook.state,
            events=events,
        )
