"""
JSON configuration schema of the simulator.

Every section is a dataclass; field metadata carries the unit shown in error
messages and the range check applied while parsing. Named calibrations under
``calibrations/`` are merged below the user's values.
"""
import dataclasses
from dataclasses import dataclass, field
import json
import math
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union, get_type_hints

from vvchip.exceptions.chip_exception import (
    ArtifactIOError,
    ConfigError,
    InvalidSweepExpression,
)
from vvchip.parsing.sweep_parser import (
    parse_energies,
    parse_polarizations,
    parse_values,
)

CALIBRATION_DIR = Path(__file__).parent / "calibrations"
WORKERS_ENV = "VVCHIP_WORKERS"


def _positive(value) -> bool:
    return value > 0


def _non_negative(value) -> bool:
    return value >= 0


def _any(value) -> bool:
    return True


CHECK_TEXT = {
    _positive: "a positive value",
    _non_negative: "a non-negative value",
}


def setting(default, unit: Optional[str] = None, check=_any, choices=None):
    """
    Dataclass field with a unit, a range check and optional allowed values
    """
    metadata = {"unit": unit, "check": check, "choices": choices}
    if isinstance(default, (list, dict)):
        return field(default_factory=lambda: type(default)(default), metadata=metadata)
    return field(default=default, metadata=metadata)


@dataclass
class GridConfig:
    step_um: float = setting(0.2, "um", _positive)
    x_half_um: float = setting(25.0, "um", _positive)
    y_half_um: float = setting(12.0, "um", _positive)


@dataclass
class TrackConfig:
    widths_um: Tuple[float, float] = setting((2.7, 2.7), "um", _positive)
    peak_delta_eps: float = setting(1.0e-2, None, _positive)


@dataclass
class RingConfig:
    radius_um: float = setting(3.5, "um", _positive)
    widths_um: Tuple[float, float] = setting((1.75, 3.5), "um", _positive)
    peak_delta_eps: float = setting(1.0e-2, None, _positive)
    n_tracks: int = setting(12, None, choices=(12, 13))
    center_scan: bool = setting(False)
    scale_widths: bool = setting(True)


@dataclass
class CouplerConfig:
    spacing_um: float = setting(15.0, "um", _positive)


@dataclass
class PlanConfig:
    length_mm: float = setting(10.0, "mm", _positive)
    coupling_mm: float = setting(4.0, "mm", _non_negative)
    lead_in_mm: Optional[float] = setting(None, "mm", _non_negative)
    ramp_mm: float = setting(0.0, "mm", _non_negative)
    butt_coupling: bool = setting(False)
    method: str = setting("expm", choices=("expm", "rk4"))


@dataclass
class WriteConfig:
    energy_nJ: float = setting(200.0, "nJ", _positive)
    speed_mps: float = setting(0.02, "m/s", _positive)
    rep_rate_hz: float = setting(1e6, "Hz", _positive)
    waist_um: float = setting(1.0, "um", _positive)
    eta: float = setting(5.66e-21, "m^2/J", _positive)
    xi_radpm: float = setting(0.0, "rad/m")
    xi_max_radpm: float = setting(0.0, "rad/m", _non_negative)


@dataclass
class TensorConfig:
    d_eps_x: float = setting(0.0)
    d_eps_y: float = setting(0.0)
    d_eps_z: float = setting(0.0)
    theta_rad: float = setting(0.0, "rad")


@dataclass
class BirefringenceConfig:
    a: TensorConfig = field(default_factory=TensorConfig)
    b: TensorConfig = field(default_factory=TensorConfig)
    axis_mode: str = setting("fixed", choices=("fixed", "radial"))
    frame_theta_rad: float = setting(0.0, "rad")


@dataclass
class ModesConfig:
    model: str = setting("analytic", choices=("analytic", "solved"))
    tol: float = setting(1e-10, None, _positive)
    maxiter: int = setting(10000, None, _positive)
    residual_tol: float = setting(1e-8, None, _positive)


@dataclass
class ScenarioConfig:
    order: int = setting(1, None, choices=(1, 2))
    input: str = setting("H")
    energies: str = setting("0 nJ")
    array_dE_nJ: float = setting(1.465, "nJ", _non_negative)
    polarizations: str = setting("RCP LCP H V D A")
    selectivity: float = setting(30.0, None, _non_negative)
    target_phase_rad: float = setting(math.pi / 2, "rad")
    calibrate: bool = setting(True)
    radii_um: str = setting("2:6:17")
    match_radius_um: Optional[float] = setting(None, "um", _positive)
    psi_count: int = setting(12, None, _positive)


@dataclass
class ReferenceConfig:
    kind: str = setting("curved", choices=("curved", "tilted"))
    waist_um: float = setting(6.0, "um", _positive)
    curvature_m: float = setting(2e-5, "m", _positive)
    tilt_rad: Tuple[float, float] = setting((0.05, 0.0), "rad")
    delta_rad: float = setting(0.0, "rad")
    amplitude: float = setting(1.0, None, _non_negative)
    analyzer: str = setting("D")


@dataclass
class Config:
    calibration: str = setting("default")
    wavelength_nm: float = setting(780.0, "nm", _positive)
    n_s: float = setting(1.4537, None, _positive)
    grid: GridConfig = field(default_factory=GridConfig)
    single: TrackConfig = field(default_factory=TrackConfig)
    ring: RingConfig = field(default_factory=RingConfig)
    coupler: CouplerConfig = field(default_factory=CouplerConfig)
    plan: PlanConfig = field(default_factory=PlanConfig)
    write: WriteConfig = field(default_factory=WriteConfig)
    birefringence: BirefringenceConfig = field(default_factory=BirefringenceConfig)
    modes: ModesConfig = field(default_factory=ModesConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    seed: int = setting(0, None, _non_negative)
    out_dir: str = setting("runs")
    workers: Optional[int] = setting(None, None, _positive)

    @classmethod
    def defaults(cls) -> "Config":
        return cls()

    @property
    def worker_count(self) -> int:
        if self.workers is not None:
            return self.workers
        value = os.environ.get(WORKERS_ENV)
        if value is None:
            return 1
        try:
            workers = int(value)
        except ValueError:
            raise ConfigError(WORKERS_ENV, f"expected an integer, got {value!r}")
        if workers <= 0:
            raise ConfigError(WORKERS_ENV, f"expected a positive count, got {workers}")
        return workers


def _unwrap_optional(hint) -> Tuple[Any, bool]:
    if getattr(hint, "__origin__", None) is Union:
        arguments = [item for item in hint.__args__ if item is not type(None)]
        return arguments[0], True
    return hint, False


def _convert_scalar(hint, value, path: str, unit: Optional[str]):
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true or false, got {value!r}", unit)
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}", unit)
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}", unit)
        if not math.isfinite(value):
            raise ConfigError(path, f"expected a finite number, got {value!r}", unit)
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}", unit)
        return value
    raise ConfigError(path, f"unsupported field type {hint}")


def _convert(hint, value, path: str, metadata: Dict[str, Any]):
    unit = metadata.get("unit")
    hint, optional = _unwrap_optional(hint)
    if value is None:
        if optional:
            return None
        raise ConfigError(path, "a value is required", unit)
    if dataclasses.is_dataclass(hint):
        return build_section(hint, value, path)
    if getattr(hint, "__origin__", None) in (tuple, Tuple):
        arguments = hint.__args__
        if not isinstance(value, (list, tuple)) or len(value) != len(arguments):
            expected = f"expected a list of {len(arguments)} numbers, got {value!r}"
            raise ConfigError(path, expected, unit)
        converted = tuple(
            _convert(argument, item, f"{path}[{index}]", metadata)
            for index, (argument, item) in enumerate(zip(arguments, value))
        )
        return converted
    converted = _convert_scalar(hint, value, path, unit)
    check = metadata.get("check", _any)
    if not isinstance(converted, (bool, str)) and not check(converted):
        expected = CHECK_TEXT.get(check, "a valid value")
        unit_text = f" in {unit}" if unit else ""
        raise ConfigError(path, f"expected {expected}{unit_text}, got {value!r}", unit)
    choices = metadata.get("choices")
    if choices is not None and converted not in choices:
        raise ConfigError(path, f"expected one of {list(choices)}, got {value!r}", unit)
    return converted


def build_section(cls, data, path: str = ""):
    """
    Build a dataclass section from a dict, rejecting unknown keys
    """
    label = path or "<root>"
    if not isinstance(data, dict):
        raise ConfigError(label, f"expected an object, got {type(data).__name__}")
    hints = get_type_hints(cls)
    known = {item.name: item for item in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(label, f"unknown keys {unknown}")
    values = {}
    for name, item in known.items():
        if name not in data:
            continue
        child_path = f"{path}.{name}" if path else name
        metadata = dict(item.metadata)
        values[name] = _convert(hints[name], data[name], child_path, metadata)
    return cls(**values)


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def calibration_names():
    return sorted(path.stem for path in CALIBRATION_DIR.glob("*.json"))


def load_calibration(name: str) -> Dict[str, Any]:
    path = CALIBRATION_DIR / f"{name}.json"
    if not path.is_file():
        raise ConfigError(
            "calibration",
            f"unknown calibration {name!r}, expected one of {calibration_names()}",
        )
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def config_from_dict(data: Dict[str, Any]) -> Config:
    """
    Validated Config from a parsed JSON document: defaults, then the named
    calibration, then the document itself
    """
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    name = data.get("calibration", Config.calibration)
    if not isinstance(name, str):
        raise ConfigError("calibration", f"expected a calibration name, got {name!r}")
    merged = _merge(load_calibration(name), data)
    merged["calibration"] = name
    config = build_section(Config, merged)
    _check_cross_fields(config)
    return config


def _check_grid(config: Config):
    # the grid is centered on the ring; tracks keep a 3 pixel margin to its edge
    grid = config.grid
    margin = 3 * grid.step_um
    single_reach = 2 * max(config.single.widths_um) + margin
    ring_reach = config.ring.radius_um + 2 * max(config.ring.widths_um) + margin
    if config.coupler.spacing_um + single_reach > grid.x_half_um:
        raise ConfigError(
            "grid.x_half_um",
            f"must hold the single waveguide at {config.coupler.spacing_um} um "
            f"from the ring, at least {config.coupler.spacing_um + single_reach:.2f}",
            "um",
        )
    if ring_reach > grid.x_half_um:
        raise ConfigError(
            "grid.x_half_um", f"must hold the ring, at least {ring_reach:.2f}", "um"
        )
    if max(ring_reach, single_reach) > grid.y_half_um:
        raise ConfigError(
            "grid.y_half_um",
            f"must hold both waveguides, at least {max(ring_reach, single_reach):.2f}",
            "um",
        )


def _check_cross_fields(config: Config):
    _check_grid(config)
    plan = config.plan
    if plan.coupling_mm > plan.length_mm:
        raise ConfigError("plan.coupling_mm", "must not exceed plan.length_mm", "mm")
    lead_in = plan.lead_in_mm
    if lead_in is not None and lead_in + plan.coupling_mm > plan.length_mm:
        raise ConfigError(
            "plan.lead_in_mm",
            "lead-in plus coupling length exceed plan.length_mm",
            "mm",
        )
    if 2 * plan.ramp_mm > plan.coupling_mm:
        raise ConfigError(
            "plan.ramp_mm", "two ramps must fit the coupling length", "mm"
        )
    expressions = (
        ("scenario.input", parse_polarizations, config.scenario.input),
        ("scenario.polarizations", parse_polarizations, config.scenario.polarizations),
        ("scenario.energies", parse_energies, config.scenario.energies),
        ("scenario.radii_um", parse_values, config.scenario.radii_um),
    )
    for path, parse, text in expressions:
        try:
            parse(text)
        except InvalidSweepExpression as error:
            raise ConfigError(path, str(error))


def parse_config(path: Union[str, Path, None]) -> Config:
    """
    Read and validate a JSON config file; None gives the defaults

    :param path: config file path
    :return: validated Config
    """
    if path is None:
        return config_from_dict({})
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as error:
        raise ArtifactIOError(str(path), error.strerror or str(error))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise ConfigError(
            "<root>", f"not valid JSON ({error.msg} at line {error.lineno})"
        )
    return config_from_dict(data)


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(item) for item in value]
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_plain(item) for item in value]
    return value


def config_to_dict(config: Config) -> Dict[str, Any]:
    return _plain(dataclasses.asdict(config))


def serialize(config: Config) -> str:
    return json.dumps(config_to_dict(config), indent=2, sort_keys=True)
