"""Planar oriented rectangles used for hull footprints and decks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class OrientedRect:
    """Rectangle footprint on the sea plane; yaw is the long-axis heading."""

    center: np.ndarray  # (2,) [m]
    length_m: float  # extent along the heading axis
    width_m: float
    yaw: float = 0.0  # [rad]
    height_m: float = 2.0  # hull freeboard, used by the ray caster

    def __post_init__(self) -> None:
        self.center = np.asarray(self.center, dtype=float).reshape(2)
        if self.length_m <= 0.0 or self.width_m <= 0.0:
            raise ValueError("rectangle extents must be positive")

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([c, s]), np.array([-s, c])

    def corners(self) -> np.ndarray:
        """Corner points (4, 2), counterclockwise."""
        u, v = self.axes()
        hl, hw = 0.5 * self.length_m, 0.5 * self.width_m
        return np.array(
            [
                self.center + hl * u + hw * v,
                self.center - hl * u + hw * v,
                self.center - hl * u - hw * v,
                self.center + hl * u - hw * v,
            ]
        )

    def edges(self) -> list[tuple[np.ndarray, np.ndarray]]:
        c = self.corners()
        return [(c[i], c[(i + 1) % 4]) for i in range(4)]

    def contains(self, point: np.ndarray, margin: float = 0.0) -> bool:
        u, v = self.axes()
        d = np.asarray(point, dtype=float) - self.center
        return (
            abs(float(d @ u)) <= 0.5 * self.length_m + margin
            and abs(float(d @ v)) <= 0.5 * self.width_m + margin
        )

    def boundary_distance(self, point: np.ndarray) -> float:
        """Distance from a point to the rectangle outline (0 on the outline)."""
        u, v = self.axes()
        d = np.asarray(point, dtype=float) - self.center
        pu, pv = abs(float(d @ u)), abs(float(d @ v))
        hl, hw = 0.5 * self.length_m, 0.5 * self.width_m
        if pu <= hl and pv <= hw:
            return min(hl - pu, hw - pv)
        dx, dy = max(pu - hl, 0.0), max(pv - hw, 0.0)
        return math.hypot(dx, dy)
