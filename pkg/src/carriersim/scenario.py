"""Scenario definition, validation, and YAML round-trip.

Scenarios are plain nested key/value documents. Numeric keys carry their
unit in the name (x_m, drift_speed_mps, yaw_rad) so a file is readable
without the schema at hand. Unknown keys anywhere are an error: silent
typos in a field trial configuration are worse than a hard failure.
"""

import dataclasses
import math
import os
import typing
from dataclasses import dataclass, field
from importlib import resources

import yaml


class ScenarioError(ValueError):
    pass


@dataclass
class AreaSpec:
    x_min_m: float
    x_max_m: float
    y_min_m: float
    y_max_m: float


@dataclass
class CarrierSpec:
    start_x_m: float
    start_y_m: float
    start_yaw_rad: float
    length_m: float = 7.0
    width_m: float = 4.0
    cruise_speed_mps: float = 4.5


@dataclass
class CameraSpec:
    x_m: float
    y_m: float
    height_m: float = 40.0
    yaw_rad: float = 0.0


@dataclass
class HomeSpec:
    x_m: float = 0.0
    y_m: float = 0.0


@dataclass
class TargetSpec:
    x_m: float
    y_m: float
    yaw_rad: float
    length_m: float
    width_m: float
    height_m: float = 2.5
    drift_speed_mps: float = 0.0
    drift_heading_rad: float = 0.0
    prior_x_m: float = 0.0
    prior_y_m: float = 0.0
    dim_tolerance: float = 0.25


@dataclass
class DistractorSpec:
    x_m: float
    y_m: float
    yaw_rad: float
    length_m: float
    width_m: float
    height_m: float = 2.5
    drift_speed_mps: float = 0.0
    drift_heading_rad: float = 0.0


@dataclass
class ObjectSpec:
    id: int
    mass_kg: float
    deck_x_m: float  # position in the target-vessel frame
    deck_y_m: float
    length_m: float = 0.3
    width_m: float = 0.2


@dataclass
class MissionSpec:
    mode: str = "full"  # "full" | "landing_only"
    landing_cycles: int = 3
    return_home: bool = True


@dataclass
class OverridesSpec:
    """Optional tuning knobs; None keeps the built-in default."""

    gimbal_angle_sigma_rad: typing.Optional[float] = None
    onboard_phi_min_rad: typing.Optional[float] = None
    lidar_range_sigma_m: typing.Optional[float] = None
    uwb_range_sigma_m: typing.Optional[float] = None
    imu_yaw_sigma_rad: typing.Optional[float] = None
    imu_yaw_drift_rate_rad_s: typing.Optional[float] = None
    wind_east_mps: typing.Optional[float] = None
    wind_north_mps: typing.Optional[float] = None
    search_spacing_m: typing.Optional[float] = None


@dataclass
class Scenario:
    name: str
    sea_state: int
    master_seed: int
    area: AreaSpec
    carrier: CarrierSpec
    onshore_camera: CameraSpec
    target: TargetSpec
    home: HomeSpec = field(default_factory=HomeSpec)
    mission: MissionSpec = field(default_factory=MissionSpec)
    distractors: typing.List[DistractorSpec] = field(default_factory=list)
    objects: typing.List[ObjectSpec] = field(default_factory=list)
    uav_count: int = 2
    overrides: OverridesSpec = field(default_factory=OverridesSpec)


MAX_PRIOR_ERROR_M = 50.0
TARGET_SIZE_FACTOR = 2.0


def _convert(hint, value, path: str):
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if value is None:
            return None
        return _convert(args[0], value, path)
    if origin in (list, typing.List):
        if not isinstance(value, list):
            raise ScenarioError(f"{path}: expected a list")
        (item_type,) = typing.get_args(hint)
        return [_convert(item_type, v, f"{path}[{i}]") for i, v in enumerate(value)]
    if dataclasses.is_dataclass(hint):
        return _build(hint, value, path)
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"{path}: expected an integer, got {value!r}")
        return value
    if hint is bool:
        if not isinstance(value, bool):
            raise ScenarioError(f"{path}: expected true/false, got {value!r}")
        return value
    if hint is str:
        if not isinstance(value, str):
            raise ScenarioError(f"{path}: expected a string, got {value!r}")
        return value
    raise ScenarioError(f"{path}: unsupported field type {hint}")


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: expected a mapping")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ScenarioError(f"{path}: unknown key(s) {unknown}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        key_path = f"{path}.{f.name}"
        if f.name in data:
            kwargs[f.name] = _convert(hints[f.name], data[f.name], key_path)
        elif (
            f.default is dataclasses.MISSING
            and f.default_factory is dataclasses.MISSING
        ):
            raise ScenarioError(f"{key_path}: missing required key")
    return cls(**kwargs)


def validate_scenario(s: Scenario) -> None:
    a = s.area
    if a.x_min_m >= a.x_max_m or a.y_min_m >= a.y_max_m:
        raise ScenarioError("area: bounds are empty or inverted")
    if not 0 <= s.sea_state <= 3:
        raise ScenarioError(f"sea_state: {s.sea_state} outside 0..3")
    t = s.target
    if not (a.x_min_m <= t.x_m <= a.x_max_m and a.y_min_m <= t.y_m <= a.y_max_m):
        raise ScenarioError("target: position outside the operation area")
    if t.length_m > TARGET_SIZE_FACTOR * s.carrier.length_m or (
        t.width_m > TARGET_SIZE_FACTOR * s.carrier.width_m
    ):
        raise ScenarioError(
            "target: dimensions exceed twice the carrier size, docking is not modeled"
        )
    if t.length_m < t.width_m:
        raise ScenarioError("target: length_m must be >= width_m")
    prior_err = math.hypot(t.prior_x_m - t.x_m, t.prior_y_m - t.y_m)
    if prior_err > MAX_PRIOR_ERROR_M:
        raise ScenarioError(
            f"target: prior position error {prior_err:.1f} m exceeds "
            f"{MAX_PRIOR_ERROR_M:.0f} m"
        )
    ids = [o.id for o in s.objects]
    if len(ids) != len(set(ids)):
        raise ScenarioError("objects: duplicate id")
    for i, o in enumerate(s.objects):
        if o.mass_kg <= 0.0:
            raise ScenarioError(f"objects[{i}]: mass must be positive")
        if abs(o.deck_x_m) > 0.5 * t.length_m or abs(o.deck_y_m) > 0.5 * t.width_m:
            raise ScenarioError(f"objects[{i}]: deck position outside the target deck")
    if s.uav_count < 1:
        raise ScenarioError("uav_count: need at least one drone")
    if s.mission.mode not in ("full", "landing_only"):
        raise ScenarioError(f"mission.mode: unknown mode {s.mission.mode!r}")
    if s.mission.landing_cycles < 1:
        raise ScenarioError("mission.landing_cycles: must be positive")


def load_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario: not parseable ({exc})") from exc
    if not isinstance(data, dict):
        raise ScenarioError("scenario: top level must be a mapping")
    s = _build(Scenario, data, "scenario")
    validate_scenario(s)
    return s


def load_scenario_file(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read())


def serialize_scenario(s: Scenario) -> str:
    """Stable YAML form; load_scenario(serialize_scenario(s)) == s."""
    return yaml.safe_dump(dataclasses.asdict(s), sort_keys=False)


_BUILTIN_FILES = {
    "mbzirc-field": "mbzirc_field.yaml",
    "calm-dock": "calm_dock.yaml",
    "landing-stress": "landing_stress.yaml",
}


def builtin_scenario_names() -> list[str]:
    return sorted(_BUILTIN_FILES)


def builtin_scenario(name: str) -> Scenario:
    if name not in _BUILTIN_FILES:
        raise ScenarioError(
            f"unknown builtin scenario {name!r}; available: {builtin_scenario_names()}"
        )
    text = (
        resources.files("carriersim.data").joinpath(_BUILTIN_FILES[name]).read_text()
    )
    return load_scenario(text)


def builtin_scenarios() -> dict:
    return {name: builtin_scenario(name) for name in _BUILTIN_FILES}


def resolve_scenario(spec: str) -> Scenario:
    """Builtin name or path to a scenario file."""
    if spec in _BUILTIN_FILES:
        return builtin_scenario(spec)
    if not os.path.exists(spec):
        raise ScenarioError(
            f"unknown scenario {spec!r}: not a builtin "
            f"({', '.join(builtin_scenario_names())}) and no such file"
        )
    return load_scenario_file(spec)
