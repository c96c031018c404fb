"""Sensor models: gimbal bearing cameras, scanning LiDAR, UWB, QR, IMU/DVL.

Every observation function is a pure map from (ground truth, config, rng)
to a measurement, so a fixed seed replays the exact measurement stream.

Gimbal convention: the camera base frame has +y along the mount yaw
(boresight at zero pan) and +x to its right. Azimuth theta is measured
from +y toward +x; depression phi is measured down from the horizontal,
so phi = pi/2 is nadir. A target on the flat sea at depression phi and
camera height h sits at ground range h / tan(phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import OrientedRect
from .frames import wrap_angle


class HorizonGateError(ValueError):
    """Depression angle too shallow for a usable flat-sea projection."""


class GimbalGeometryError(ValueError):
    """Degenerate viewing geometry (target at the camera nadir)."""


@dataclass
class GimbalCamera:
    """A stabilized pan-tilt camera at a fixed mount with known height."""

    position: np.ndarray = None  # (2,) mount ground position, ENU [m]
    height_m: float = 40.0  # optical center above the sea plane
    yaw: float = 0.0  # mount boresight azimuth [rad]
    detection_range_m: float = 3000.0
    angle_sigma_rad: float = math.radians(0.5)
    phi_min_rad: float = math.radians(0.5)  # horizon gate
    false_negative_rate: float = 0.02
    rate_hz: float = 10.0

    def __post_init__(self) -> None:
        self.position = (
            np.zeros(2) if self.position is None else np.asarray(self.position, float).reshape(2)
        )
        if self.height_m <= 0.0:
            raise ValueError("camera height must be positive")
        if self.phi_min_rad <= 0.0:
            raise ValueError("phi_min must be positive")


@dataclass
class GimbalMeasurement:
    theta_rad: float  # azimuth from boresight, positive to the right
    phi_rad: float  # depression below horizontal, (phi_min, pi/2]
    t: float
    label: str  # which tracked object produced the return


def gimbal_project(meas: GimbalMeasurement, camera: GimbalCamera) -> np.ndarray:
    """Flat-sea projection of a bearing pair into the camera base frame.

    Returns the target point (x, y, 0) with the camera ground position as
    origin. Shallow depressions blow up the lever arm, so anything at or
    below the configured gate is rejected instead of projected.
    """
    if meas.phi_rad <= camera.phi_min_rad:
        raise HorizonGateError(
            f"depression {meas.phi_rad:.5f} rad at or below gate {camera.phi_min_rad:.5f}"
        )
    if meas.phi_rad > 0.5 * math.pi:
        raise ValueError("depression beyond nadir")
    rho = camera.height_m / math.tan(meas.phi_rad)
    return np.array([rho * math.sin(meas.theta_rad), rho * math.cos(meas.theta_rad), 0.0])


def gimbal_base_to_inertial(point_gc: np.ndarray, camera: GimbalCamera) -> np.ndarray:
    """Map a camera-base-frame sea-plane point to ENU coordinates (2,)."""
    x, y = float(point_gc[0]), float(point_gc[1])
    cy, sy = math.cos(camera.yaw), math.sin(camera.yaw)
    east = camera.position[0] + x * sy + y * cy
    north = camera.position[1] - x * cy + y * sy
    return np.array([east, north])


def gimbal_observe(
    camera: GimbalCamera,
    target_pos: np.ndarray,
    t: float,
    rng: np.random.Generator,
    label: str,
) -> Optional[GimbalMeasurement]:
    """Observe a sea-surface target; None when gated or not detected."""
    rel = np.asarray(target_pos, dtype=float).reshape(-1)[:2] - camera.position
    rho = float(np.hypot(rel[0], rel[1]))
    if rho < 1e-9:
        raise GimbalGeometryError("target at camera nadir, bearing undefined")
    if rho > camera.detection_range_m:
        return None
    if camera.false_negative_rate > 0.0 and rng.random() < camera.false_negative_rate:
        return None
    bearing = math.atan2(rel[1], rel[0])
    theta = wrap_angle(camera.yaw - bearing)
    phi = math.atan2(camera.height_m, rho)
    if camera.angle_sigma_rad > 0.0:
        theta = wrap_angle(theta + camera.angle_sigma_rad * rng.standard_normal())
        phi = min(phi + camera.angle_sigma_rad * rng.standard_normal(), 0.5 * math.pi)
    if phi <= camera.phi_min_rad:
        return None
    return GimbalMeasurement(theta, phi, t, label)


@dataclass
class LidarConfig:
    max_range_m: float = 200.0
    angular_resolution_rad: float = math.radians(0.5)
    range_sigma_m: float = 0.03
    dropout_rate: float = 0.02
    mount_height_m: float = 1.5
    rate_hz: float = 5.0


@dataclass
class PointCloud:
    points: np.ndarray  # (n, 3) sensor base frame, x forward
    intensities: np.ndarray  # (n,)
    t: float = 0.0


def lidar_scan(
    sensor_xy: np.ndarray,
    sensor_yaw: float,
    hulls: list[OrientedRect],
    cfg: LidarConfig,
    rng: np.random.Generator,
    t: float = 0.0,
) -> PointCloud:
    """Single-line horizontal scan against hull footprints.

    Casts one beam per angular step over the full circle and keeps the
    nearest hull intersection within range. Output points are expressed
    in the sensor base frame (x forward along sensor_yaw) with z at the
    mount height. Hulls lower than the mount height are invisible.

    Args:
        sensor_xy: scanner ground position in ENU (2,).
        sensor_yaw: scanner heading in ENU [rad].
        hulls: candidate hull footprints with freeboard heights.
        cfg: ranging and noise parameters.
        rng: per-sensor random stream.

    Returns:
        PointCloud with per-point intensity falling off with range.
    """
    origin = np.asarray(sensor_xy, dtype=float).reshape(2)
    n_beams = max(4, int(round(2.0 * math.pi / cfg.angular_resolution_rad)))
    angles = sensor_yaw + np.arange(n_beams) * (2.0 * math.pi / n_beams)
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    best_t = np.full(n_beams, np.inf)

    for hull in hulls:
        if hull.height_m < cfg.mount_height_m:
            continue
        # Quick reject: hull entirely beyond range.
        if float(np.linalg.norm(hull.center - origin)) - 0.5 * math.hypot(
            hull.length_m, hull.width_m
        ) > cfg.max_range_m:
            continue
        for a, b in hull.edges():
            e = b - a
            ao = a - origin
            denom = dirs[:, 0] * e[1] - dirs[:, 1] * e[0]
            ok = np.abs(denom) > 1e-12
            with np.errstate(divide="ignore", invalid="ignore"):
                t_ray = (ao[0] * e[1] - ao[1] * e[0]) / denom
                u = (ao[0] * dirs[:, 1] - ao[1] * dirs[:, 0]) / denom
            hit = ok & (t_ray > 1e-6) & (u >= 0.0) & (u <= 1.0) & (t_ray < best_t)
            best_t[hit] = t_ray[hit]

    mask = best_t <= cfg.max_range_m
    if cfg.dropout_rate > 0.0:
        mask &= rng.random(n_beams) >= cfg.dropout_rate
    ranges = best_t[mask]
    if cfg.range_sigma_m > 0.0:
        ranges = ranges + cfg.range_sigma_m * rng.standard_normal(ranges.shape)
    hit_angles = angles[mask] - sensor_yaw
    points = np.column_stack(
        [
            ranges * np.cos(hit_angles),
            ranges * np.sin(hit_angles),
            np.full(ranges.shape, cfg.mount_height_m),
        ]
    )
    intensities = 1.0 / (1.0 + ranges)
    return PointCloud(points, intensities, t)


class UwbGeometryError(ValueError):
    pass


def default_uwb_anchors() -> np.ndarray:
    """Deck anchor layout (6, 3): corners plus two elevated midside masts.

    Positions are in the carrier body frame (x forward). Staggered heights
    give the vertical spread that trilateration needs above the deck.
    """
    return np.array(
        [
            [3.0, 2.0, 0.9],
            [3.0, -2.0, 1.7],
            [-3.0, -2.0, 1.3],
            [-3.0, 2.0, 2.1],
            [0.0, 2.0, 3.3],
            [0.0, -2.0, 2.7],
        ]
    )


@dataclass
class UwbConfig:
    anchors: np.ndarray = field(default_factory=default_uwb_anchors)  # (n, 3) body frame
    range_sigma_m: float = 0.10
    dropout_rate: float = 0.05
    service_radius_m: float = 100.0
    rate_hz: float = 10.0

    def __post_init__(self) -> None:
        self.anchors = np.asarray(self.anchors, dtype=float).reshape(-1, 3)
        if len(self.anchors) < 4:
            raise ValueError("UWB network needs at least 4 anchors")


def uwb_ranges(
    tag_pos: np.ndarray, cfg: UwbConfig, rng: np.random.Generator
) -> list[tuple[int, float]]:
    """Anchor index / range pairs for a tag in the carrier body frame.

    Empty outside the service hemisphere over the deck.
    """
    p = np.asarray(tag_pos, dtype=float).reshape(3)
    if float(np.linalg.norm(p)) > cfg.service_radius_m or p[2] < -0.5:
        return []
    out: list[tuple[int, float]] = []
    for i, anchor in enumerate(cfg.anchors):
        if cfg.dropout_rate > 0.0 and rng.random() < cfg.dropout_rate:
            continue
        r = float(np.linalg.norm(p - anchor))
        if cfg.range_sigma_m > 0.0:
            r += cfg.range_sigma_m * float(rng.standard_normal())
        out.append((i, max(r, 0.0)))
    return out


@dataclass
class QrConfig:
    """Downward camera observing the nested landing pattern."""

    coarse_alt_m: float = 8.0  # outer pattern resolvable below this altitude
    coarse_sigma_m: float = 0.10
    fine_alt_m: float = 2.0  # inner pattern takes over below this altitude
    fine_sigma_m: float = 0.02
    fov_half_angle_rad: float = math.radians(35.0)
    min_capture_radius_m: float = 0.3  # inner pattern still fills the view up close
    rate_hz: float = 20.0


@dataclass
class QrObservation:
    offset: np.ndarray  # (3,) pad center relative to the camera, body-carried axes
    band: str  # "coarse" | "fine"
    valid: bool
    t: float = 0.0


def qr_observe(
    uav_pos: np.ndarray,
    pad_pos: np.ndarray,
    cfg: QrConfig,
    rng: np.random.Generator,
    t: float = 0.0,
) -> QrObservation:
    """Relative pad fix from the landing camera, or an invalid placeholder."""
    u = np.asarray(uav_pos, dtype=float).reshape(3)
    p = np.asarray(pad_pos, dtype=float).reshape(3)
    rel = p - u
    alt = u[2] - p[2]
    horiz = float(np.hypot(rel[0], rel[1]))
    if alt <= 0.0 or alt > cfg.coarse_alt_m:
        return QrObservation(np.zeros(3), "coarse", False, t)
    capture = max(alt * math.tan(cfg.fov_half_angle_rad), cfg.min_capture_radius_m)
    if horiz > capture:
        return QrObservation(np.zeros(3), "coarse", False, t)
    band = "fine" if alt <= cfg.fine_alt_m else "coarse"
    sigma = cfg.fine_sigma_m if band == "fine" else cfg.coarse_sigma_m
    noisy = rel.copy()
    noisy[:2] += sigma * rng.standard_normal(2)
    noisy[2] += 0.5 * sigma * float(rng.standard_normal())
    return QrObservation(noisy, band, True, t)


@dataclass
class ImuDvlConfig:
    yaw_sigma_rad: float = math.radians(0.4)
    yaw_drift_rate_rad_s: float = 0.0  # slow heading bias accumulation
    gyro_sigma_rad_s: float = math.radians(0.1)
    dvl_sigma_mps: float = 0.03


@dataclass
class ImuDvlReading:
    yaw_rad: float
    yaw_rate_rad_s: float
    velocity_body: np.ndarray  # (2,) surge, sway [m/s]
    t: float


def proprioceptive_observe(
    yaw: float,
    yaw_rate: float,
    velocity_body: np.ndarray,
    t: float,
    cfg: ImuDvlConfig,
    rng: np.random.Generator,
) -> ImuDvlReading:
    """IMU heading plus DVL water-track velocity with additive noise."""
    yaw_meas = wrap_angle(
        yaw + cfg.yaw_drift_rate_rad_s * t + cfg.yaw_sigma_rad * float(rng.standard_normal())
    )
    rate_meas = yaw_rate + cfg.gyro_sigma_rad_s * float(rng.standard_normal())
    vel = np.asarray(velocity_body, dtype=float).reshape(-1)[:2].copy()
    vel += cfg.dvl_sigma_mps * rng.standard_normal(2)
    return ImuDvlReading(yaw_meas, rate_meas, vel, t)
