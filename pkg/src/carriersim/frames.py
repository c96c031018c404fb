"""Coordinate frames and rigid transforms.

Conventions used across the simulator:

* inertial frame: ENU (x east, y north, z up), origin on the sea surface
* body frames: FLU (x forward, y left, z up)
* Euler angles: intrinsic Z-Y-X (yaw, then pitch, then roll)
* angles in radians, normalized to (-pi, pi]

The sea surface is the plane z = 0; every vessel frame origin sits on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

# Frobenius drift beyond which a rotation matrix is re-orthonormalized.
ORTHONORMALITY_TOL = 1e-9


class FrameKind(Enum):
    INERTIAL = "inertial"
    TARGET_VESSEL = "target_vessel"
    ONSHORE_GIMBAL = "onshore_gimbal"
    DRONE_CARRIER = "drone_carrier"
    UAV = "uav"
    OBJECT = "object"
    MANIPULATOR = "manipulator"


# Kinds that exist at most once per world; UAV and OBJECT carry an index.
_INDEXED_KINDS = (FrameKind.UAV, FrameKind.OBJECT)


@dataclass(frozen=True)
class FrameId:
    """Identity of a coordinate frame, e.g. FrameId(FrameKind.UAV, 2)."""

    kind: FrameKind
    index: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind in _INDEXED_KINDS:
            if self.index is None or self.index < 0:
                raise ValueError(f"{self.kind.value} frame needs a nonnegative index")
        elif self.index is not None:
            raise ValueError(f"{self.kind.value} frame takes no index")

    def __str__(self) -> str:
        if self.index is None:
            return self.kind.value
        return f"{self.kind.value}[{self.index}]"


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


def rotation_from_yaw(yaw: float) -> np.ndarray:
    """Rotation about +z by yaw, mapping body FLU axes into ENU."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_zyx(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Intrinsic Z-Y-X Euler rotation: R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


@dataclass
class Pose3:
    """Position plus Z-Y-X Euler attitude of a body frame."""

    position: np.ndarray  # (3,) [m]
    yaw: float = 0.0  # [rad]
    pitch: float = 0.0  # [rad]
    roll: float = 0.0  # [rad]

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.yaw = wrap_angle(float(self.yaw))
        self.pitch = wrap_angle(float(self.pitch))
        self.roll = wrap_angle(float(self.roll))


def _orthonormality_drift(rotation: np.ndarray) -> float:
    return float(np.linalg.norm(rotation @ rotation.T - np.eye(3)))


def _polar_orthonormalize(rotation: np.ndarray) -> np.ndarray:
    # Nearest rotation in the Frobenius sense (polar factor via SVD).
    u, _, vt = np.linalg.svd(rotation)
    r = u @ vt
    if np.linalg.det(r) < 0.0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


@dataclass
class Transform:
    """Rigid transform p_to = rotation @ p_from + translation."""

    rotation: np.ndarray  # (3, 3), proper orthonormal
    translation: np.ndarray  # (3,) [m]

    def __post_init__(self) -> None:
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=float).reshape(3)
        drift = _orthonormality_drift(self.rotation)
        if drift > ORTHONORMALITY_TOL:
            if drift > 1e-3:
                raise ValueError(f"matrix is not a rotation (drift {drift:.3e})")
            self.rotation = _polar_orthonormalize(self.rotation)
        if np.linalg.det(self.rotation) < 0.0:
            raise ValueError("rotation matrix has negative determinant")

    @staticmethod
    def identity() -> "Transform":
        return Transform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_pose(pose: Pose3) -> "Transform":
        """Body-to-parent transform for a body at the given pose."""
        return Transform(rotation_zyx(pose.yaw, pose.pitch, pose.roll), pose.position)

    @staticmethod
    def from_yaw(yaw: float, translation: np.ndarray | None = None) -> "Transform":
        t = np.zeros(3) if translation is None else translation
        return Transform(rotation_from_yaw(yaw), t)

    def apply(self, point: np.ndarray) -> np.ndarray:
        """Map a point (3,) or an array of points (n, 3)."""
        p = np.asarray(point, dtype=float)
        if p.ndim == 1:
            return self.rotation @ p + self.translation
        return p @ self.rotation.T + self.translation

    def compose(self, other: "Transform") -> "Transform":
        """self o other: apply `other` first, then `self`."""
        return Transform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "Transform":
        rt = self.rotation.T
        return Transform(rt, -(rt @ self.translation))


class FrameRegistryError(KeyError):
    pass


@dataclass
class FrameRegistry:
    """Holds frame-to-inertial transforms and resolves arbitrary pairs."""

    _transforms: dict = field(default_factory=dict)

    def register(self, frame: FrameId, to_inertial: Transform) -> None:
        if frame in self._transforms:
            raise FrameRegistryError(f"frame {frame} already registered")
        self._transforms[frame] = to_inertial

    def update(self, frame: FrameId, to_inertial: Transform) -> None:
        if frame not in self._transforms:
            raise FrameRegistryError(f"frame {frame} not registered")
        self._transforms[frame] = to_inertial

    def to_inertial(self, frame: FrameId) -> Transform:
        if frame.kind is FrameKind.INERTIAL:
            return Transform.identity()
        try:
            return self._transforms[frame]
        except KeyError:
            raise FrameRegistryError(f"frame {frame} not registered") from None

    def resolve(self, src: FrameId, dst: FrameId) -> Transform:
        """Transform taking coordinates in `src` to coordinates in `dst`."""
        return self.to_inertial(dst).inverse().compose(self.to_inertial(src))
