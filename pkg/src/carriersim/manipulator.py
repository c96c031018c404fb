"""Deck manipulator: object survey, frame conversion, grasp checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .frames import Transform


@dataclass
class ManipulatorModel:
    base_offset: np.ndarray = None  # arm base in the carrier frame (3,)
    reach_radius_m: float = 3.0
    camera_range_m: float = 10.0
    payload_max_kg: float = 10.0
    scan_sigma_m: float = 0.1

    def __post_init__(self) -> None:
        self.base_offset = (
            np.array([2.0, 0.0, 1.0])
            if self.base_offset is None
            else np.asarray(self.base_offset, float).reshape(3)
        )


def classify_object(mass_kg: float, uav_payload_kg: float = 5.0) -> str:
    """Objects a single drone can lift are small; the rest are large."""
    return "small" if mass_kg <= uav_payload_kg else "large"


@dataclass
class ObjectEstimate:
    object_id: int
    position: np.ndarray  # (3,) in the manipulator base frame
    mass_kg: float
    length_m: float
    width_m: float
    classification: str

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        expected = classify_object(self.mass_kg)
        if self.classification not in ("small", "large"):
            raise ValueError(f"unknown classification {self.classification!r}")


def scan_for_objects(
    model: ManipulatorModel,
    objects: list[tuple[int, np.ndarray, float, float, float]],
    rng: np.random.Generator,
    uav_payload_kg: float = 5.0,
) -> list[ObjectEstimate]:
    """Survey with the arm camera; returns estimates in the arm base frame.

    objects are (id, position in carrier frame, mass, length, width)
    truths; anything beyond camera range is not seen.
    """
    out: list[ObjectEstimate] = []
    for obj_id, pos, mass, length, width in objects:
        p = np.asarray(pos, dtype=float).reshape(3) - model.base_offset
        if float(np.linalg.norm(p)) > model.camera_range_m:
            continue
        noisy = p + model.scan_sigma_m * rng.standard_normal(3)
        out.append(
            ObjectEstimate(
                obj_id, noisy, mass, length, width, classify_object(mass, uav_payload_kg)
            )
        )
    return out


def object_to_carrier_frame(
    position_ma: np.ndarray, arm_to_carrier: Transform
) -> np.ndarray:
    """Full rigid transform of an arm-frame point into the carrier frame."""
    return arm_to_carrier.apply(np.asarray(position_ma, dtype=float).reshape(3))


class GraspOutcome(Enum):
    GRASPED = "grasped"
    OUT_OF_REACH = "out_of_reach"
    OVER_PAYLOAD = "over_payload"


def attempt_grasp(
    model: ManipulatorModel, position_carrier: np.ndarray, mass_kg: float
) -> GraspOutcome:
    """Kinematic grasp check against reach and payload limits."""
    rel = np.asarray(position_carrier, dtype=float).reshape(3) - model.base_offset
    if float(np.linalg.norm(rel)) > model.reach_radius_m:
        return GraspOutcome.OUT_OF_REACH
    if mass_kg > model.payload_max_kg:
        return GraspOutcome.OVER_PAYLOAD
    return GraspOutcome.GRASPED
