"""State estimators: bearing-only target EKF, UWB trilateration, UAV EKF.

All filters keep covariance symmetric with Joseph-form measurement
updates. Angle innovations are wrapped before use. Gates count rejected
measurements instead of raising, so a glitchy sensor degrades gracefully.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .frames import wrap_angle
from .sensors import GimbalCamera, GimbalMeasurement


class InsufficientAnchorsError(ValueError):
    pass


class AnchorGeometryError(ValueError):
    pass


def _check_covariance(cov: np.ndarray, name: str = "covariance") -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T, atol=1e-8):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(cov).min() < -1e-9:
        raise ValueError(f"{name} must be positive semidefinite")
    return 0.5 * (cov + cov.T)


@dataclass
class EstimatorState:
    mean: np.ndarray
    cov: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=float).reshape(-1)
        self.cov = _check_covariance(np.asarray(self.cov, dtype=float))
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise ValueError("covariance shape does not match state size")


def nees(mean: np.ndarray, cov: np.ndarray, truth: np.ndarray) -> float:
    """Normalized estimation error squared against ground truth."""
    e = np.asarray(truth, float).reshape(-1) - np.asarray(mean, float).reshape(-1)
    return float(e @ np.linalg.solve(cov, e))


class TargetBearingFilter:
    """Constant-velocity EKF over gimbal bearing pairs.

    State is [x, y, vx, vy] of a sea-surface object in ENU. The camera
    measures azimuth relative to its mount yaw and depression below the
    horizontal; both enter one update. A Mahalanobis gate rejects
    innovations outside gate_sigma, counting them in n_rejected.
    """

    def __init__(
        self,
        state: EstimatorState,
        accel_psd: float = 0.05,  # white-accel intensity [m^2/s^3]
        gate_sigma: float = 3.0,
    ):
        if state.mean.size != 4:
            raise ValueError("state must be [x, y, vx, vy]")
        self.state = state
        self.accel_psd = accel_psd
        self.gate_sigma = gate_sigma
        self.n_rejected = 0
        self.n_accepted = 0

    def predict(self, t: float) -> None:
        dt = t - self.state.t
        if dt < 0.0:
            raise ValueError("prediction time precedes filter time")
        if dt == 0.0:
            return
        f = np.eye(4)
        f[0, 2] = f[1, 3] = dt
        q = self.accel_psd
        dt2, dt3 = dt * dt, dt * dt * dt
        qm = np.array(
            [
                [q * dt3 / 3.0, 0.0, q * dt2 / 2.0, 0.0],
                [0.0, q * dt3 / 3.0, 0.0, q * dt2 / 2.0],
                [q * dt2 / 2.0, 0.0, q * dt, 0.0],
                [0.0, q * dt2 / 2.0, 0.0, q * dt],
            ]
        )
        self.state.mean = f @ self.state.mean
        self.state.cov = f @ self.state.cov @ f.T + qm
        self.state.t = t

    def update(self, meas: GimbalMeasurement, camera: GimbalCamera) -> bool:
        """Fuse one bearing pair; returns False when the gate rejects it."""
        self.predict(meas.t)
        x = self.state.mean
        rel = x[:2] - camera.position
        rho2 = float(rel @ rel)
        rho = math.sqrt(rho2)
        if rho < 1e-6:
            return False
        h = camera.height_m
        theta_pred = wrap_angle(camera.yaw - math.atan2(rel[1], rel[0]))
        phi_pred = math.atan2(h, rho)
        slant2 = rho2 + h * h
        jac = np.array(
            [
                [rel[1] / rho2, -rel[0] / rho2, 0.0, 0.0],
                [-h * rel[0] / (rho * slant2), -h * rel[1] / (rho * slant2), 0.0, 0.0],
            ]
        )
        innov = np.array(
            [wrap_angle(meas.theta_rad - theta_pred), meas.phi_rad - phi_pred]
        )
        r = np.eye(2) * camera.angle_sigma_rad**2
        s = jac @ self.state.cov @ jac.T + r
        d2 = float(innov @ np.linalg.solve(s, innov))
        if d2 > self.gate_sigma**2:
            self.n_rejected += 1
            return False
        gain = self.state.cov @ jac.T @ np.linalg.inv(s)
        self.state.mean = self.state.mean + gain @ innov
        ikh = np.eye(4) - gain @ jac
        cov = ikh @ self.state.cov @ ikh.T + gain @ r @ gain.T
        self.state.cov = 0.5 * (cov + cov.T)
        self.n_accepted += 1
        return True


@dataclass
class TrilaterationFix:
    position: np.ndarray  # (3,) same frame as the anchors
    residual_rms_m: float


def trilaterate(
    anchors: np.ndarray,
    ranges: np.ndarray,
    max_iterations: int = 10,
) -> TrilaterationFix:
    """Position from anchor ranges: linearized seed plus Gauss-Newton.

    The seed subtracts the first range equation from the rest, leaving a
    linear system in the unknown position. Gauss-Newton then refines on
    the true range residuals, which is exact for noise-free inputs and a
    maximum-likelihood fit for i.i.d. Gaussian range noise.
    """
    anchors = np.asarray(anchors, dtype=float).reshape(-1, 3)
    ranges = np.asarray(ranges, dtype=float).reshape(-1)
    if len(anchors) != len(ranges):
        raise ValueError("anchor and range counts differ")
    if len(anchors) < 4:
        raise InsufficientAnchorsError(f"need at least 4 ranges, got {len(anchors)}")
    a0 = anchors[0]
    amat = 2.0 * (anchors[1:] - a0)
    sq = np.sum(anchors * anchors, axis=1)
    bvec = (sq[1:] - sq[0]) - (ranges[1:] ** 2 - ranges[0] ** 2)
    sv = np.linalg.svd(amat, compute_uv=False)
    if sv[-1] < 1e-8 * sv[0] or sv[-1] == 0.0:
        raise AnchorGeometryError("anchor geometry is degenerate (coplanar or collinear)")
    pos, *_ = np.linalg.lstsq(amat, bvec, rcond=None)

    for _ in range(max_iterations):
        diff = pos - anchors
        dist = np.linalg.norm(diff, axis=1)
        dist = np.maximum(dist, 1e-12)
        resid = dist - ranges
        jac = diff / dist[:, None]
        jtj = jac.T @ jac
        try:
            step = np.linalg.solve(jtj, -(jac.T @ resid))
        except np.linalg.LinAlgError as exc:
            raise AnchorGeometryError("normal equations singular") from exc
        pos = pos + step
        if float(np.linalg.norm(step)) < 1e-12:
            break
    resid = np.linalg.norm(pos - anchors, axis=1) - ranges
    return TrilaterationFix(pos, float(np.sqrt(np.mean(resid**2))))


_DRDPSI = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


class UavEkf:
    """IMU-driven EKF for one UAV in the carrier body frame.

    State: position (3), velocity (3), and a slowly varying yaw bias that
    absorbs magnetometer/mount misalignment. Acceleration arrives in the
    UAV body frame together with the IMU yaw; position fixes come from
    UWB trilateration. The yaw bias is observable because a biased yaw
    rotates integrated acceleration away from the UWB track.
    """

    def __init__(
        self,
        state: EstimatorState,
        accel_sigma: float = 0.4,  # [m/s^2]
        bias_walk_sigma: float = 0.002,  # [rad/sqrt(s)]
        divergence_trace_m2: float = 100.0,
    ):
        if state.mean.size != 7:
            raise ValueError("state must be [p(3), v(3), yaw_bias]")
        self.state = state
        self.accel_sigma = accel_sigma
        self.bias_walk_sigma = bias_walk_sigma
        self.divergence_trace_m2 = divergence_trace_m2

    @property
    def diverged(self) -> bool:
        return float(np.trace(self.state.cov[:3, :3])) > self.divergence_trace_m2

    def predict(self, accel_body: np.ndarray, yaw_imu: float, t: float) -> None:
        dt = t - self.state.t
        if dt < 0.0:
            raise ValueError("prediction time precedes filter time")
        if dt == 0.0:
            return
        a_body = np.asarray(accel_body, dtype=float).reshape(3)
        x = self.state.mean
        yaw_eff = yaw_imu - x[6]
        c, s = math.cos(yaw_eff), math.sin(yaw_eff)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        a_world = rot @ a_body
        # d a_world / d bias: the rotation angle enters as (yaw - bias).
        g = -(_DRDPSI @ rot) @ a_body

        mean = x.copy()
        mean[:3] += x[3:6] * dt + 0.5 * a_world * dt * dt
        mean[3:6] += a_world * dt
        f = np.eye(7)
        f[0:3, 3:6] = np.eye(3) * dt
        f[0:3, 6] = 0.5 * g * dt * dt
        f[3:6, 6] = g * dt
        qa = self.accel_sigma**2
        q = np.zeros((7, 7))
        q[0:3, 0:3] = np.eye(3) * (qa * dt**3 / 3.0)
        q[0:3, 3:6] = q[3:6, 0:3] = np.eye(3) * (qa * dt**2 / 2.0)
        q[3:6, 3:6] = np.eye(3) * (qa * dt)
        q[6, 6] = self.bias_walk_sigma**2 * dt
        self.state.mean = mean
        cov = f @ self.state.cov @ f.T + q
        self.state.cov = 0.5 * (cov + cov.T)
        self.state.t = t

    def update_position(self, fix: np.ndarray, sigma_m: float) -> None:
        z = np.asarray(fix, dtype=float).reshape(3)
        jac = np.zeros((3, 7))
        jac[:, :3] = np.eye(3)
        r = np.eye(3) * sigma_m**2
        s = jac @ self.state.cov @ jac.T + r
        gain = self.state.cov @ jac.T @ np.linalg.inv(s)
        self.state.mean = self.state.mean + gain @ (z - self.state.mean[:3])
        ikh = np.eye(7) - gain @ jac
        cov = ikh @ self.state.cov @ ikh.T + gain @ r @ gain.T
        self.state.cov = 0.5 * (cov + cov.T)


def robust_position_filter(points: np.ndarray, k: float = 3.0) -> np.ndarray:
    """Outlier-resistant location estimate for a batch of position fixes.

    Distances are measured from the component-wise median; fixes beyond
    k times the median absolute deviation of those distances are dropped
    and the survivors averaged. Falls back to the median itself when the
    cut removes everything.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("no position fixes to filter")
    med = np.median(pts, axis=0)
    dist = np.linalg.norm(pts - med, axis=1)
    mad = float(np.median(dist))
    keep = dist <= k * mad
    if not np.any(keep):
        return med
    return pts[keep].mean(axis=0)


@dataclass
class VelocityEstimate:
    velocity: np.ndarray  # (3,) [m/s]
    cov: np.ndarray  # (3, 3) velocity marginal
    t: float


def estimate_velocity(
    times: np.ndarray,
    positions: np.ndarray,
    pos_sigma_m: float = 0.05,
    accel_psd: float = 0.01,
) -> VelocityEstimate:
    """Velocity from a timed position sequence via a constant-velocity KF.

    Runs an independent [position, velocity] filter per axis, initialized
    from the first two samples so noise-free linear motion is recovered
    exactly. Timestamps may be irregular but must strictly increase.
    """
    t = np.asarray(times, dtype=float).reshape(-1)
    p = np.asarray(positions, dtype=float).reshape(-1, 3)
    if len(t) != len(p):
        raise ValueError("time and position counts differ")
    if len(t) < 2:
        raise ValueError("need at least two samples")
    if np.any(np.diff(t) <= 0.0):
        raise ValueError("timestamps must strictly increase")

    dt0 = t[1] - t[0]
    mean = np.zeros((3, 2))
    mean[:, 0] = p[1]
    mean[:, 1] = (p[1] - p[0]) / dt0
    r = pos_sigma_m**2
    var_p = r
    var_v = 2.0 * r / dt0**2
    cov = np.zeros((3, 2, 2))
    cov[:] = np.array([[var_p, r / dt0], [r / dt0, var_v]])

    for i in range(2, len(t)):
        dt = t[i] - t[i - 1]
        f = np.array([[1.0, dt], [0.0, 1.0]])
        q = accel_psd * np.array(
            [[dt**3 / 3.0, dt**2 / 2.0], [dt**2 / 2.0, dt]]
        )
        for ax in range(3):
            m = f @ mean[ax]
            c = f @ cov[ax] @ f.T + q
            s = c[0, 0] + r
            gain = c[:, 0] / s
            innov = p[i, ax] - m[0]
            mean[ax] = m + gain * innov
            ikh = np.eye(2) - np.outer(gain, [1.0, 0.0])
            cov[ax] = ikh @ c @ ikh.T + np.outer(gain, gain) * r

    vel = mean[:, 1].copy()
    vcov = np.diag(cov[:, 1, 1])
    return VelocityEstimate(vel, vcov, float(t[-1]))
