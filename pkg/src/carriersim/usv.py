"""Planar rigid-body model of the carrier USV.

State is (x, y, yaw) in the ENU inertial frame plus body-frame velocity
nu = (surge, sway, yaw rate) in FLU. The velocity dynamics are

    M @ nu_dot + D @ nu = tau

with M symmetric positive definite (inertia plus added mass) and D a
diagonal linear drag. Roll and pitch are not part of the rigid-body state;
they are kinematic wave outputs carried alongside for sensor models.

Two thruster layouts are supported: a fixed twin-screw stern pair
(differential thrust only) and the same pair on steerable mounts that can
vector thrust for lateral docking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ActuationModeError(ValueError):
    """Raised when a command is incompatible with the active thruster mode."""


@dataclass
class HydroParams:
    """Hull, drag and thruster constants. Defaults describe a 7 m catamaran."""

    inertia: np.ndarray = None  # M, 3x3 SPD [kg, kg, kg m^2]
    drag: np.ndarray = None  # diag(D_x, D_y, D_z) [N s/m, N s/m, N m s/rad]
    lever_arm_m: float = 1.6  # thruster offset from centerline
    thrust_max_n: float = 400.0  # per thruster
    steer_max_rad: float = math.radians(60.0)  # vectored mount travel

    def __post_init__(self) -> None:
        if self.inertia is None:
            self.inertia = np.diag([800.0, 900.0, 700.0])
        if self.drag is None:
            self.drag = np.diag([120.0, 250.0, 180.0])
        self.inertia = np.asarray(self.inertia, dtype=float).reshape(3, 3)
        self.drag = np.asarray(self.drag, dtype=float).reshape(3, 3)
        if not np.allclose(self.inertia, self.inertia.T, atol=1e-9):
            raise ValueError("inertia matrix must be symmetric")
        eigvals = np.linalg.eigvalsh(self.inertia)
        if eigvals.min() <= 0.0:
            raise ValueError("inertia matrix must be positive definite")
        if np.any(np.diag(self.drag) <= 0.0) or np.any(
            self.drag != np.diag(np.diag(self.drag))
        ):
            raise ValueError("drag must be diagonal with positive entries")
        if self.lever_arm_m <= 0.0 or self.thrust_max_n <= 0.0:
            raise ValueError("lever arm and thrust limit must be positive")
        self._inertia_inv = np.linalg.inv(self.inertia)

    @property
    def inertia_inv(self) -> np.ndarray:
        return self._inertia_inv


@dataclass
class UsvState:
    """Carrier pose and body velocity. roll/pitch are wave kinematics."""

    position: np.ndarray = None  # (2,) ENU [m]
    yaw: float = 0.0  # [rad]
    velocity: np.ndarray = None  # (3,) surge, sway, yaw rate
    roll: float = 0.0  # [rad]
    pitch: float = 0.0  # [rad]

    def __post_init__(self) -> None:
        self.position = (
            np.zeros(2) if self.position is None else np.asarray(self.position, float).reshape(2)
        )
        self.velocity = (
            np.zeros(3) if self.velocity is None else np.asarray(self.velocity, float).reshape(3)
        )

    def copy(self) -> "UsvState":
        return UsvState(
            self.position.copy(), self.yaw, self.velocity.copy(), self.roll, self.pitch
        )

    def kinetic_energy(self, params: HydroParams) -> float:
        return 0.5 * float(self.velocity @ params.inertia @ self.velocity)


@dataclass
class ThrusterCommand:
    """Port/starboard thrusts and mount steer angles (zero when fixed)."""

    thrust_stbd_n: float = 0.0  # T1, positive moment about +z when ahead
    thrust_port_n: float = 0.0  # T2
    steer_stbd_rad: float = 0.0
    steer_port_rad: float = 0.0


@dataclass
class Wrench:
    """Body-frame generalized force (surge, sway, yaw moment)."""

    fx: float = 0.0  # [N]
    fy: float = 0.0  # [N]
    mz: float = 0.0  # [N m]
    saturated: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([self.fx, self.fy, self.mz])


def actuation_simplified(cmd: ThrusterCommand, params: HydroParams) -> Wrench:
    """Differential-thrust wrench for the fixed stern pair.

    Valid only while the mounts are locked ahead; a nonzero steer angle is
    a mode violation, not something to silently ignore.
    """
    if cmd.steer_stbd_rad != 0.0 or cmd.steer_port_rad != 0.0:
        raise ActuationModeError("steer angles must be zero in simplified mode")
    t1, t2, sat = _clamp_thrusts(cmd.thrust_stbd_n, cmd.thrust_port_n, params)
    return Wrench(
        fx=t1 + t2,
        fy=0.0,
        mz=params.lever_arm_m * t1 - params.lever_arm_m * t2,
        saturated=sat,
    )


def actuation_vectored(cmd: ThrusterCommand, params: HydroParams) -> Wrench:
    """Wrench for steerable mounts; clamps commands to actuator limits."""
    t1, t2, sat = _clamp_thrusts(cmd.thrust_stbd_n, cmd.thrust_port_n, params)
    lim = params.steer_max_rad
    a1 = min(max(cmd.steer_stbd_rad, -lim), lim)
    a2 = min(max(cmd.steer_port_rad, -lim), lim)
    if a1 != cmd.steer_stbd_rad or a2 != cmd.steer_port_rad:
        sat = True
    c1, s1 = math.cos(a1), math.sin(a1)
    c2, s2 = math.cos(a2), math.sin(a2)
    return Wrench(
        fx=t1 * c1 + t2 * c2,
        fy=t1 * s1 + t2 * s2,
        mz=params.lever_arm_m * (t1 * c1) - params.lever_arm_m * (t2 * c2),
        saturated=sat,
    )


def _clamp_thrusts(t1: float, t2: float, params: HydroParams) -> tuple[float, float, bool]:
    lim = params.thrust_max_n
    c1 = min(max(t1, -lim), lim)
    c2 = min(max(t2, -lim), lim)
    return c1, c2, (c1 != t1 or c2 != t2)


def allocate_vectored(wrench: Wrench, params: HydroParams) -> ThrusterCommand:
    """Invert the vectored actuation map for a desired body wrench.

    Longitudinal components come from the moment/surge split; the sway
    demand is shared equally between the two mounts.  Reverse demands
    fold into negative thrust at a small steer angle: the mounts cannot
    travel anywhere near pi, and clamping a near-pi steer angle would
    silently turn a braking command into an ahead command.
    """
    half_fy = 0.5 * wrench.fy
    c1 = 0.5 * (wrench.fx + wrench.mz / params.lever_arm_m)
    c2 = 0.5 * (wrench.fx - wrench.mz / params.lever_arm_m)

    def fold(c: float) -> tuple[float, float]:
        t = math.hypot(c, half_fy)
        if t <= 1e-12:
            return 0.0, 0.0
        a = math.atan2(half_fy, c)
        if abs(a) > 0.5 * math.pi:
            return -t, a - math.copysign(math.pi, a)
        return t, a

    t1, a1 = fold(c1)
    t2, a2 = fold(c2)
    return ThrusterCommand(t1, t2, a1, a2)


def step_dynamics(
    state: UsvState,
    wrench: Wrench,
    params: HydroParams,
    dt: float,
    disturbance: Wrench | None = None,
) -> UsvState:
    """Advance pose and velocity one step with classical RK4.

    dt must be positive and at most 0.5 s; the drag-dominated velocity
    modes stay well inside the RK4 stability region there.
    """
    if not 0.0 < dt <= 0.5:
        raise ValueError(f"dt must lie in (0, 0.5], got {dt}")
    tau = wrench.as_array()
    if disturbance is not None:
        tau = tau + disturbance.as_array()
    minv = params.inertia_inv
    drag = params.drag

    def deriv(x: float, y: float, yaw: float, nu: np.ndarray):
        c, s = math.cos(yaw), math.sin(yaw)
        dx = c * nu[0] - s * nu[1]
        dy = s * nu[0] + c * nu[1]
        dnu = minv @ (tau - drag @ nu)
        return dx, dy, nu[2], dnu

    x0, y0 = float(state.position[0]), float(state.position[1])
    yaw0 = state.yaw
    nu0 = state.velocity

    k1 = deriv(x0, y0, yaw0, nu0)
    k2 = deriv(
        x0 + 0.5 * dt * k1[0], y0 + 0.5 * dt * k1[1], yaw0 + 0.5 * dt * k1[2],
        nu0 + 0.5 * dt * k1[3],
    )
    k3 = deriv(
        x0 + 0.5 * dt * k2[0], y0 + 0.5 * dt * k2[1], yaw0 + 0.5 * dt * k2[2],
        nu0 + 0.5 * dt * k2[3],
    )
    k4 = deriv(x0 + dt * k3[0], y0 + dt * k3[1], yaw0 + dt * k3[2], nu0 + dt * k3[3])

    sixth = dt / 6.0
    x = x0 + sixth * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    y = y0 + sixth * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    yaw = yaw0 + sixth * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    nu = nu0 + sixth * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])

    out = state.copy()
    out.position = np.array([x, y])
    out.yaw = yaw
    out.velocity = nu
    return out


# Sea-state scaling for the wave model. Index is the sea-state code; values
# scale the level-3 reference amplitudes (1.25 m significant wave height).
_SEA_SCALE = (0.0, 0.25, 0.55, 1.0)


@dataclass
class WaveField:
    """Sum-of-sinusoids wave disturbance, frozen at construction.

    Evaluating at a time t is a pure function, so replaying a run with
    the same seed reproduces the disturbance history exactly.
    """

    sea_state: int
    rng: np.random.Generator = field(repr=False, default=None)
    n_components: int = 4

    def __post_init__(self) -> None:
        if not 0 <= self.sea_state <= 3:
            raise ValueError("sea_state must be 0..3")
        if self.rng is None:
            self.rng = np.random.default_rng(0)
        scale = _SEA_SCALE[self.sea_state]
        n = self.n_components
        # Wave component frequencies around a 6 s modal period.
        self._omega = self.rng.uniform(0.6, 1.6, size=n)
        self._phase = self.rng.uniform(0.0, 2.0 * math.pi, size=(5, n))
        amp = scale * self.rng.uniform(0.5, 1.0, size=(5, n)) / n
        # Rows: surge force, sway force, yaw moment, roll, pitch.
        self._amp = amp * np.array([[220.0], [300.0], [160.0], [math.radians(8.0)], [math.radians(5.0)]])

    def wrench(self, t: float) -> Wrench:
        ph = self._omega * t
        fx = float(np.sum(self._amp[0] * np.sin(ph + self._phase[0])))
        fy = float(np.sum(self._amp[1] * np.sin(ph + self._phase[1])))
        mz = float(np.sum(self._amp[2] * np.sin(ph + self._phase[2])))
        return Wrench(fx, fy, mz)

    def roll_pitch(self, t: float) -> tuple[float, float]:
        ph = self._omega * t
        roll = float(np.sum(self._amp[3] * np.sin(ph + self._phase[3])))
        pitch = float(np.sum(self._amp[4] * np.sin(ph + self._phase[4])))
        return roll, pitch
