"""LiDAR point-cloud processing: clustering, rectangle and L-shape fits.

Scans are projected to the sea plane before clustering; hull extraction
is purely 2-D. Headings of symmetric shapes are only observable modulo
90 degrees, so every fit reports its heading folded into [0, pi/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .sensors import PointCloud


class DegenerateFitError(ValueError):
    pass


@dataclass
class Cluster:
    indices: np.ndarray  # (m,) into the source cloud
    points: np.ndarray  # (m, 2) sea-plane projection
    centroid: np.ndarray  # (2,)


@dataclass
class RectangleFit:
    center: np.ndarray  # (2,)
    length_m: float  # >= width_m
    width_m: float
    heading_rad: float  # long-axis heading folded into [0, pi/2)
    residual: float  # mean squared edge distance


@dataclass
class LShapeHeading:
    heading_rad: float  # folded into [0, pi/2)
    confident: bool  # False when only one leg was visible
    corner: np.ndarray  # (2,) intersection of the two fitted lines


def cluster_points(
    cloud: PointCloud, eps_m: float = 2.0, min_points: int = 8
) -> list[Cluster]:
    """Euclidean clusters by region growing over an eps neighborhood.

    Clusters smaller than min_points are dropped as spray or noise.
    Output is ordered by first member index, so cluster identity is
    stable for a given cloud.
    """
    pts = np.asarray(cloud.points, dtype=float)
    if pts.size == 0:
        return []
    xy = pts[:, :2]
    n = len(xy)
    pairs = cKDTree(xy).query_pairs(eps_m, output_type="ndarray")
    if len(pairs):
        graph = coo_matrix(
            (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)
        )
        _, labels = connected_components(graph, directed=False)
    else:
        labels = np.arange(n)

    # A stable argsort keeps member indices ascending inside each group,
    # so group[0] is the first member and orders the output.
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    groups = np.split(order, bounds)
    groups.sort(key=lambda g: int(g[0]))

    clusters = []
    for idx in groups:
        if len(idx) < min_points:
            continue
        members = xy[idx]
        clusters.append(Cluster(idx, members, members.mean(axis=0)))
    return clusters


def _edge_distance_cost(xy: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Mean squared distance to the nearest bounding-rectangle edge.

    Vectorized over candidate headings: for each angle the points are
    projected on the rotated axes and measured against the four edges of
    the axis-aligned bounding box in that basis.
    """
    c = np.cos(angles)[:, None]
    s = np.sin(angles)[:, None]
    u = c * xy[:, 0][None, :] + s * xy[:, 1][None, :]
    v = -s * xy[:, 0][None, :] + c * xy[:, 1][None, :]
    umin = u.min(axis=1, keepdims=True)
    umax = u.max(axis=1, keepdims=True)
    vmin = v.min(axis=1, keepdims=True)
    vmax = v.max(axis=1, keepdims=True)
    du = np.minimum(u - umin, umax - u)
    dv = np.minimum(v - vmin, vmax - v)
    d = np.minimum(du, dv)
    # Corner-only clouds zero the edge cost over a band of headings; a
    # vanishing area term breaks those ties toward the tightest box.
    area = (umax - umin) * (vmax - vmin)
    return np.mean(d * d, axis=1) + 1e-12 * area[:, 0]


def _edge_positions(u: np.ndarray, v: np.ndarray) -> tuple[float, float, float, float]:
    """Least-squares edge coordinates for an axis-aligned box in (u, v).

    Raw extrema are biased outward by measurement noise (the extreme of n
    noisy face points overshoots by roughly sigma * sqrt(2 ln n)), so each
    box edge is re-estimated as the mean coordinate of the points nearest
    to it, which is the squared-error-minimizing edge position for that
    assignment. Edges backed by too few points (an occluded face seen only
    edge-on) keep the raw extremum.
    """
    raw = [float(u.min()), float(u.max()), float(v.min()), float(v.max())]
    refined = list(raw)
    coords = (u, u, v, v)
    n = len(u)
    face_min = max(8, int(round(0.05 * n)))
    supports = [np.zeros(n, dtype=bool)] * 4
    for _ in range(8):
        dists = np.stack(
            [
                np.abs(u - refined[0]),
                np.abs(u - refined[1]),
                np.abs(v - refined[2]),
                np.abs(v - refined[3]),
            ]
        )
        nearest = np.argmin(dists, axis=0)
        prev = list(refined)
        supports = [nearest == edge for edge in range(4)]
        for edge in range(4):
            if int(supports[edge].sum()) >= 3:
                refined[edge] = float(coords[edge][supports[edge]].mean())
            else:
                refined[edge] = raw[edge]
        if max(abs(a - b) for a, b in zip(refined, prev)) < 1e-9:
            break

    # Edges backed by a whole visible face keep the support mean, which is
    # unbiased. An occluded face is pinned only by the corner points of the
    # adjacent face, where the raw extremum rides the noise tail; averaging
    # the few outermost points tempers that tail without the inward bias a
    # fixed shrink would add.
    for edge in range(4):
        if int(supports[edge].sum()) < face_min and n >= 6:
            c = coords[edge]
            take = np.sort(c)[-3:] if edge in (1, 3) else np.sort(c)[:3]
            refined[edge] = float(take.mean())
    umin, umax = min(refined[0], refined[1]), max(refined[0], refined[1])
    vmin, vmax = min(refined[2], refined[3]), max(refined[2], refined[3])
    return umin, umax, vmin, vmax


def fit_rectangle(
    points: np.ndarray,
    coarse_step_rad: float = math.radians(0.5),
    refine_tol_rad: float = math.radians(0.01),
) -> RectangleFit:
    """Best-fit rectangle by search over heading.

    Scores each candidate heading by the mean squared distance from the
    points to the nearest edge of the heading-aligned bounding box, then
    golden-section refines around the coarse minimum. Heading is only
    defined modulo 90 degrees for a rectangle outline.
    """
    xy = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(xy) < 4:
        raise DegenerateFitError("too few points for a rectangle fit")
    centered = xy - xy.mean(axis=0)
    svals = np.linalg.svd(centered, compute_uv=False)
    if svals[1] < 1e-9 * max(svals[0], 1.0):
        raise DegenerateFitError("points are collinear")

    n_steps = max(2, int(round(0.5 * math.pi / coarse_step_rad)))
    angles = np.arange(n_steps) * (0.5 * math.pi / n_steps)
    costs = _edge_distance_cost(xy, angles)
    best = int(np.argmin(costs))
    step = 0.5 * math.pi / n_steps
    lo, hi = angles[best] - step, angles[best] + step

    # Golden-section refinement on the scalar cost.
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c_pt = b - invphi * (b - a)
    d_pt = a + invphi * (b - a)
    fc = float(_edge_distance_cost(xy, np.array([c_pt]))[0])
    fd = float(_edge_distance_cost(xy, np.array([d_pt]))[0])
    while (b - a) > refine_tol_rad:
        if fc < fd:
            b, d_pt, fd = d_pt, c_pt, fc
            c_pt = b - invphi * (b - a)
            fc = float(_edge_distance_cost(xy, np.array([c_pt]))[0])
        else:
            a, c_pt, fc = c_pt, d_pt, fd
            d_pt = a + invphi * (b - a)
            fd = float(_edge_distance_cost(xy, np.array([d_pt]))[0])
    alpha = 0.5 * (a + b)

    ca, sa = math.cos(alpha), math.sin(alpha)
    u = xy @ np.array([ca, sa])
    v = xy @ np.array([-sa, ca])
    umin, umax, vmin, vmax = _edge_positions(u, v)
    center_uv = np.array([0.5 * (umin + umax), 0.5 * (vmin + vmax)])
    center = np.array(
        [
            center_uv[0] * ca - center_uv[1] * sa,
            center_uv[0] * sa + center_uv[1] * ca,
        ]
    )
    ext_u, ext_v = umax - umin, vmax - vmin
    residual = float(_edge_distance_cost(xy, np.array([alpha]))[0])
    if ext_u >= ext_v:
        length, width, heading = ext_u, ext_v, alpha
    else:
        length, width, heading = ext_v, ext_u, alpha + 0.5 * math.pi
    heading = heading % (0.5 * math.pi)
    return RectangleFit(center, length, width, heading, residual)


def _two_line_cost(xy: np.ndarray, alpha: float) -> tuple[float, np.ndarray, np.ndarray, float, float]:
    """Fit two perpendicular lines at heading alpha by alternating assignment.

    Line 1 runs along the alpha axis (constant v), line 2 along the
    perpendicular (constant u). Returns cost and the assignment masks.
    """
    ca, sa = math.cos(alpha), math.sin(alpha)
    u = xy @ np.array([ca, sa])
    v = xy @ np.array([-sa, ca])
    c1 = float(np.median(v))
    c2 = float(np.median(u))
    mask1 = np.abs(v - c1) <= np.abs(u - c2)
    for _ in range(3):
        if mask1.all() or (~mask1).all():
            break
        c1 = float(np.mean(v[mask1]))
        c2 = float(np.mean(u[~mask1]))
        new_mask = np.abs(v - c1) <= np.abs(u - c2)
        if np.array_equal(new_mask, mask1):
            break
        mask1 = new_mask
    r1 = v - c1
    r2 = u - c2
    cost = float(np.sum(np.where(mask1, r1 * r1, r2 * r2))) / len(xy)
    return cost, mask1, np.array([c1, c2]), float(np.ptp(u[mask1])) if mask1.any() else 0.0, float(np.ptp(v[~mask1])) if (~mask1).any() else 0.0


def fit_lshape_heading(
    points: np.ndarray,
    coarse_step_rad: float = math.radians(0.5),
    min_leg_points: int = 5,
    min_leg_extent_m: float = 0.5,
) -> LShapeHeading:
    """Heading from a corner scan modeled as two perpendicular lines.

    When the perpendicular leg is missing (single visible face) the fit
    falls back to the principal axis of the points and flags itself as
    low confidence.
    """
    raw = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(raw) < 4:
        raise DegenerateFitError("too few points for an L-shape fit")
    centroid = raw.mean(axis=0)
    xy = raw - centroid

    n_steps = max(2, int(round(0.5 * math.pi / coarse_step_rad)))
    best_alpha, best_cost = 0.0, math.inf
    for i in range(n_steps):
        alpha = i * (0.5 * math.pi / n_steps)
        cost, *_ = _two_line_cost(xy, alpha)
        if cost < best_cost:
            best_cost, best_alpha = cost, alpha

    # Local parabolic refinement around the best coarse sample.
    step = 0.5 * math.pi / n_steps
    for _ in range(12):
        step *= 0.5
        for cand in (best_alpha - step, best_alpha + step):
            cost, *_ = _two_line_cost(xy, cand)
            if cost < best_cost:
                best_cost, best_alpha = cost, cand

    cost, mask1, offsets, extent1, extent2 = _two_line_cost(xy, best_alpha)
    n1, n2 = int(mask1.sum()), int((~mask1).sum())
    leg_ok = (
        min(n1, n2) >= min_leg_points
        and min(extent1, extent2) >= min_leg_extent_m
    )
    if not leg_ok:
        u, _, _ = np.linalg.svd(xy.T @ xy)
        axis = u[:, 0]
        heading = math.atan2(axis[1], axis[0]) % (0.5 * math.pi)
        return LShapeHeading(heading, False, centroid.copy())

    ca, sa = math.cos(best_alpha), math.sin(best_alpha)
    corner = offsets[1] * np.array([ca, sa]) + offsets[0] * np.array([-sa, ca])
    return LShapeHeading(best_alpha % (0.5 * math.pi), True, corner + centroid)


def identify_target(
    fits: list[RectangleFit],
    expected_length_m: float,
    expected_width_m: float,
    prior_position: np.ndarray,
    dim_tolerance: float = 0.25,
) -> RectangleFit | None:
    """Pick the fit matching the expected hull dimensions.

    Candidates must match both extents within the relative tolerance;
    ties are broken by distance to the prior position estimate. Returns
    None when nothing qualifies, so the caller keeps searching.
    """
    prior = np.asarray(prior_position, dtype=float).reshape(2)
    best, best_d = None, math.inf
    for fit in fits:
        if abs(fit.length_m - expected_length_m) > dim_tolerance * expected_length_m:
            continue
        if abs(fit.width_m - expected_width_m) > dim_tolerance * expected_width_m:
            continue
        d = float(np.linalg.norm(fit.center - prior))
        if d < best_d:
            best, best_d = fit, d
    return best
