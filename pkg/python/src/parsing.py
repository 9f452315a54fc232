"""Scenario config files: TOML in, validated ScenarioConfig out, and back again."""

from dataclasses import asdict, dataclass, field, fields, replace
from difflib import get_close_matches
from enum import Enum
from typing import Any, Callable, Dict, Optional, Tuple
import logging
import math
import re
import sys

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

try:
    from .carpets import GridSpec
    from .config import (
        DEFAULT_OUTPUT_DIR,
        INTEGRATOR_ATOL,
        INTEGRATOR_METHOD,
        INTEGRATOR_METHODS,
        INTEGRATOR_RTOL,
        NODE_ABORT_LIMIT,
        TRAJECTORY_DENSITY_FLOOR,
        Sampling,
        Scenario,
    )
    from .errors import DomainError, ParseError, ValidationError
    from .trajectories import EnsembleSpec, IntegratorConfig, uniform_times
    from .wavemodel import PhysicalConstants
except ImportError:
    from src.carpets import GridSpec
    from src.config import (
        DEFAULT_OUTPUT_DIR,
        INTEGRATOR_ATOL,
        INTEGRATOR_METHOD,
        INTEGRATOR_METHODS,
        INTEGRATOR_RTOL,
        NODE_ABORT_LIMIT,
        TRAJECTORY_DENSITY_FLOOR,
        Sampling,
        Scenario,
    )
    from src.errors import DomainError, ParseError, ValidationError
    from src.trajectories import EnsembleSpec, IntegratorConfig, uniform_times
    from src.wavemodel import PhysicalConstants

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Schemas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Field:
    kind: str  # "float", "int", "str", "float_list", "int_list"
    default: Any = None
    check: Optional[Callable[[Any], bool]] = None
    rule: str = ""


def _positive(v) -> bool:
    return v > 0


def _nonnegative(v) -> bool:
    return v >= 0


def _unit(v) -> bool:
    return 0 < v <= 1


def _all_positive(vs) -> bool:
    return len(vs) > 0 and all(v > 0 for v in vs)


def _increasing_positive(vs) -> bool:
    return _all_positive(vs) and all(b > a for a, b in zip(vs, vs[1:]))


POSITIVE = "must be > 0"

MODEL_SCHEMAS: Dict[Scenario, Dict[str, Field]] = {
    Scenario.TWO_SLIT: {
        "d": Field("float", 1.0, _positive, POSITIVE),
        "sigma0": Field("float", 0.1, _positive, POSITIVE),
    },
    Scenario.SINGLE_PACKET: {
        "x0": Field("float", 0.0),
        "v": Field("float", 0.0),
        "sigma0": Field("float", 1.0, _positive, POSITIVE),
    },
    Scenario.COUNTER_PROPAGATING: {
        "d": Field("float", 1.0, _positive, POSITIVE),
        "sigma_left": Field("float", 0.05, _positive, POSITIVE),
        "sigma_right": Field("float", 0.05, _positive, POSITIVE),
        "weight_left": Field("float", 0.5, _unit, "must lie in (0, 1]"),
        "weight_right": Field("float", 0.5, _unit, "must lie in (0, 1]"),
        # absent means the critical speed for the narrower packet
        "v": Field("float", None, _positive, POSITIVE),
    },
    Scenario.HARMONIC_TWO_LEVEL: {
        "omega": Field("float", 1.0, _positive, POSITIVE),
        "levels": Field("int_list", [0, 3], lambda vs: len(vs) > 0 and min(vs) >= 0, "must be indices >= 0"),
        "weights": Field("float_list", [0.5, 0.5], _all_positive, "must be positive probabilities"),
    },
    Scenario.TALBOT: {
        "d": Field("float", 1.0, _positive, POSITIVE),
        "sigma0": Field("float", 0.1, _positive, POSITIVE),
        "nmax": Field("int", None, _nonnegative, "must be >= 0"),
    },
    Scenario.NSLIT_LADDER: {
        "d": Field("float", 1.0, _positive, POSITIVE),
        "sigma0": Field("float", 0.1, _positive, POSITIVE),
        "n_slits": Field("int", 51, _positive, POSITIVE),
        "compare_slits": Field("int_list", [3, 11, 51], _increasing_positive, "must be increasing and > 0"),
        "orders": Field("int", 3, _positive, POSITIVE),
        "nx": Field("int", 4001, lambda v: v >= 3, "must be >= 3"),
    },
    Scenario.BOX_DIFFRACTION: {
        "d": Field("float", 1.0, _positive, POSITIVE),
        "sigma0": Field("float", 0.1, _positive, POSITIVE),
        "n_terms": Field("int", None, _positive, POSITIVE),
    },
    Scenario.FRACTAL: {
        "L": Field("float", 1.0, _positive, POSITIVE),
        "w": Field("float", 0.25, _positive, POSITIVE),
        "k_values": Field("int_list", [16, 32, 64, 128, 256, 512, 1024, 2048, 4096],
                          _increasing_positive, "must be increasing and > 0"),
        "time_fraction": Field("float", 1.0 / math.sqrt(2.0), _nonnegative, "must be >= 0"),
        "n_values": Field("int_list", [4, 8, 16, 32, 64], _increasing_positive, "must be increasing and > 0"),
        "x0_fraction": Field("float", 0.3, lambda v: 0 < v < 1, "must lie in (0, 1)"),
        "span_fraction": Field("float", 1.0, _positive, POSITIVE),
    },
    Scenario.TOYMODEL: {
        "sigma0": Field("float", 1.0, _positive, POSITIVE),
        "distance": Field("float", 10.0, _positive, POSITIVE),
        "speed_ratios": Field("float_list", [0.5, 2.0, 10.0, 44.0], _all_positive, "must be > 0"),
        "tau_max": Field("float", 4.0, _positive, POSITIVE),
        "nt": Field("int", 201, lambda v: v >= 2, "must be >= 2"),
    },
}

GRID_KEYS = ("x_min", "x_max", "nx", "t_min", "t_max", "nt")
ENSEMBLE_KEYS = ("n_traj", "sampling", "support", "transport_n_traj")
INTEGRATOR_KEYS = ("rtol", "atol", "max_step", "density_floor", "method", "t_start", "t_end", "n_save")
TOP_KEYS = ("scenario", "seed", "output_dir", "constants", "model", "grid", "ensemble", "integrator", "checks")


@dataclass(frozen=True)
class IntegratorSettings:
    """Integrator tolerances plus an evenly spaced save grid.

    t_end = None lets the scenario pick its natural end time.
    """

    rtol: float = INTEGRATOR_RTOL
    atol: float = INTEGRATOR_ATOL
    max_step: float = math.inf
    density_floor: float = TRAJECTORY_DENSITY_FLOOR
    method: str = INTEGRATOR_METHOD
    t_start: float = 0.0
    t_end: Optional[float] = None
    n_save: int = 201

    def build(self, default_end: float) -> IntegratorConfig:
        t_end = self.t_end if self.t_end is not None else default_end
        return IntegratorConfig(
            uniform_times(t_end, self.n_save, self.t_start),
            self.rtol, self.atol, self.max_step, self.density_floor, self.method,
        )


@dataclass(frozen=True)
class CheckSettings:
    abort_limit: float = NODE_ABORT_LIMIT
    identity_tolerance: float = 1e-9
    recurrence_tolerance: float = 1e-8
    transport_tolerance: float = 0.03
    plateau_min: float = 0.6
    dimension_low: float = 1.4
    dimension_high: float = 1.6
    r_squared_min: float = 0.98
    exchange_velocity_tolerance: float = 0.05
    exchange_spread_tolerance: float = 0.10


@dataclass(frozen=True)
class EnsembleSettings:
    n_traj: int = 200
    sampling: Sampling = Sampling.DENSITY_WEIGHTED
    support: Optional[Tuple[float, float]] = None
    # size of the extra density-weighted ensemble for the transport check (0 = off)
    transport_n_traj: int = 0

    def build(self, seed: int) -> EnsembleSpec:
        return EnsembleSpec(self.n_traj, self.sampling, self.support, seed)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: Scenario
    seed: int = 0
    output_dir: str = DEFAULT_OUTPUT_DIR
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    model: Dict[str, Any] = field(default_factory=dict)
    grid: Optional[GridSpec] = None
    ensemble: EnsembleSettings = field(default_factory=EnsembleSettings)
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    checks: CheckSettings = field(default_factory=CheckSettings)

    @property
    def ensemble_spec(self) -> EnsembleSpec:
        return self.ensemble.build(self.seed)

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None) -> "ScenarioConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if output_dir is not None:
            changes["output_dir"] = output_dir
        return replace(self, **changes) if changes else self


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _line_of(text: str, key: str) -> Optional[int]:
    pattern = re.compile(rf"^\s*(\[\s*)?{re.escape(key)}\s*(=|\])")
    for num, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return num
    return None


class _Validator:
    def __init__(self, text: str):
        self.text = text

    def fail(self, message: str, key: str, suggestion: Optional[str] = None) -> ValidationError:
        return ValidationError(message, key=key, line=_line_of(self.text, key.split(".")[-1]), suggestion=suggestion)

    def reject_unknown(self, table: Dict[str, Any], allowed, where: str) -> None:
        for key in table:
            if key not in allowed:
                close = get_close_matches(key, list(allowed), n=1, cutoff=0.5)
                raise self.fail(f"unknown key in {where}", key, close[0] if close else None)

    def coerce(self, key: str, value: Any, kind: str) -> Any:
        def _number(v):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise self.fail(f"expected a number, got {v!r}", key)
            return float(v)

        def _integer(v):
            if isinstance(v, bool) or not isinstance(v, int):
                raise self.fail(f"expected an integer, got {v!r}", key)
            return v

        if kind == "float":
            return _number(value)
        if kind == "int":
            return _integer(value)
        if kind == "str":
            if not isinstance(value, str):
                raise self.fail(f"expected a string, got {value!r}", key)
            return value
        if not isinstance(value, list):
            raise self.fail(f"expected a list, got {value!r}", key)
        if kind == "float_list":
            return [_number(v) for v in value]
        return [_integer(v) for v in value]

    def table(self, doc: Dict[str, Any], name: str) -> Dict[str, Any]:
        value = doc.get(name, {})
        if not isinstance(value, dict):
            raise self.fail(f"'{name}' must be a table", name)
        return value


def _parse_model(v: _Validator, scenario: Scenario, table: Dict[str, Any]) -> Dict[str, Any]:
    schema = MODEL_SCHEMAS[scenario]
    v.reject_unknown(table, schema, f"[model] for scenario '{scenario.value}'")
    model = {}
    for key, spec in schema.items():
        if key not in table:
            if spec.default is not None:
                model[key] = list(spec.default) if isinstance(spec.default, list) else spec.default
            continue
        value = v.coerce(key, table[key], spec.kind)
        if spec.check is not None and not spec.check(value):
            raise v.fail(f"{key} {spec.rule}, got {value!r}", key)
        model[key] = value

    if scenario == Scenario.HARMONIC_TWO_LEVEL and len(model["levels"]) != len(model["weights"]):
        raise v.fail("levels and weights must have the same length", "weights")
    if scenario == Scenario.FRACTAL and model["w"] > model["L"]:
        raise v.fail("square width w must not exceed the well length L", "w")
    return model


def _parse_numbers(v: _Validator, table: Dict[str, Any], kinds: Dict[str, str]) -> Dict[str, Any]:
    return {k: v.coerce(k, table[k], kinds[k]) for k in table}


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario config.

    Args:
        text: TOML document

    Returns:
        ScenarioConfig with defaults filled in

    Raises:
        ParseError: if text is not valid TOML
        ValidationError: for unknown keys or values outside their domain

    Examples:
        scenario = "two_slit"   ->   ScenarioConfig(scenario=Scenario.TWO_SLIT, ...)
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ParseError(f"invalid TOML: {e}", line=int(match.group(1)) if match else None) from e

    v = _Validator(text)
    v.reject_unknown(doc, TOP_KEYS, "config")

    if "scenario" not in doc:
        raise ValidationError("missing required key", key="scenario")
    try:
        scenario = Scenario(doc["scenario"])
    except ValueError:
        names = [s.value for s in Scenario]
        close = get_close_matches(str(doc["scenario"]), names, n=1, cutoff=0.5)
        raise v.fail(f"unknown scenario {doc['scenario']!r}", "scenario", close[0] if close else None) from None

    seed = v.coerce("seed", doc.get("seed", 0), "int")
    output_dir = v.coerce("output_dir", doc.get("output_dir", DEFAULT_OUTPUT_DIR), "str")

    constants_table = v.table(doc, "constants")
    v.reject_unknown(constants_table, ("hbar", "mass"), "[constants]")
    constants_values = _parse_numbers(v, constants_table, {"hbar": "float", "mass": "float"})
    try:
        constants = PhysicalConstants(**constants_values)
    except DomainError as e:
        key = "hbar" if "hbar" in str(e) else "mass"
        raise v.fail(str(e), key) from None

    model = _parse_model(v, scenario, v.table(doc, "model"))

    grid = None
    grid_table = v.table(doc, "grid")
    if grid_table:
        v.reject_unknown(grid_table, GRID_KEYS, "[grid]")
        missing = [k for k in GRID_KEYS if k not in grid_table]
        if missing:
            raise v.fail(f"[grid] needs all of {', '.join(GRID_KEYS)}", missing[0])
        g = _parse_numbers(v, grid_table, {"x_min": "float", "x_max": "float", "nx": "int",
                                           "t_min": "float", "t_max": "float", "nt": "int"})
        try:
            grid = GridSpec((g["x_min"], g["x_max"]), g["nx"], (g["t_min"], g["t_max"]), g["nt"])
        except DomainError as e:
            raise v.fail(str(e), "grid") from None

    ens_table = v.table(doc, "ensemble")
    v.reject_unknown(ens_table, ENSEMBLE_KEYS, "[ensemble]")
    ens_values: Dict[str, Any] = {}
    for key in ("n_traj", "transport_n_traj"):
        if key in ens_table:
            ens_values[key] = v.coerce(key, ens_table[key], "int")
    if ens_values.get("transport_n_traj", 0) < 0:
        raise v.fail("transport_n_traj must be >= 0", "transport_n_traj")
    if "sampling" in ens_table:
        try:
            ens_values["sampling"] = Sampling(v.coerce("sampling", ens_table["sampling"], "str"))
        except ValueError:
            names = [s.value for s in Sampling]
            close = get_close_matches(str(ens_table["sampling"]), names, n=1, cutoff=0.5)
            raise v.fail(f"unknown sampling {ens_table['sampling']!r}", "sampling", close[0] if close else None) from None
    if "support" in ens_table:
        support = v.coerce("support", ens_table["support"], "float_list")
        if len(support) != 2:
            raise v.fail("support must be [xmin, xmax]", "support")
        ens_values["support"] = (support[0], support[1])
    ensemble = EnsembleSettings(**ens_values)
    try:
        ensemble.build(seed)
    except DomainError as e:
        key = "support" if "support" in str(e) else "n_traj"
        raise v.fail(str(e), key) from None

    int_table = v.table(doc, "integrator")
    v.reject_unknown(int_table, INTEGRATOR_KEYS, "[integrator]")
    int_kinds = {k: "float" for k in INTEGRATOR_KEYS}
    int_kinds.update({"method": "str", "n_save": "int"})
    integrator = IntegratorSettings(**_parse_numbers(v, int_table, int_kinds))
    for key in ("rtol", "atol", "max_step", "density_floor"):
        if not getattr(integrator, key) > 0:
            raise v.fail(f"{key} must be > 0", key)
    if integrator.method not in INTEGRATOR_METHODS:
        close = get_close_matches(integrator.method, list(INTEGRATOR_METHODS), n=1, cutoff=0.5)
        raise v.fail(f"unknown integrator method {integrator.method!r}", "method", close[0] if close else None)
    if integrator.n_save < 1:
        raise v.fail("n_save must be >= 1", "n_save")
    if integrator.t_end is not None and integrator.t_end <= integrator.t_start and integrator.n_save > 1:
        raise v.fail("t_end must be greater than t_start", "t_end")

    checks_table = v.table(doc, "checks")
    check_names = [f.name for f in fields(CheckSettings)]
    v.reject_unknown(checks_table, check_names, "[checks]")
    checks = CheckSettings(**_parse_numbers(v, checks_table, {k: "float" for k in check_names}))

    cfg = ScenarioConfig(
        scenario=scenario,
        seed=seed,
        output_dir=output_dir,
        constants=constants,
        model=model,
        grid=grid,
        ensemble=ensemble,
        integrator=integrator,
        checks=checks,
    )
    logger.debug(f"Parsed {scenario.value} config (seed={seed})")
    return cfg


def load_config(path: str) -> ScenarioConfig:
    logger.info(f"Loading config from {path}")
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _toml_value(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_toml_value(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    return value


def config_to_dict(cfg: ScenarioConfig) -> Dict[str, Any]:
    """Plain dict form of a config (None values omitted), as written by format_config."""
    doc: Dict[str, Any] = {
        "scenario": cfg.scenario.value,
        "seed": cfg.seed,
        "output_dir": cfg.output_dir,
        "constants": {"hbar": cfg.constants.hbar, "mass": cfg.constants.mass},
        "model": {k: _toml_value(v) for k, v in cfg.model.items() if v is not None},
    }
    if cfg.grid is not None:
        doc["grid"] = {
            "x_min": cfg.grid.x_range[0], "x_max": cfg.grid.x_range[1], "nx": cfg.grid.nx,
            "t_min": cfg.grid.t_range[0], "t_max": cfg.grid.t_range[1], "nt": cfg.grid.nt,
        }
    doc["ensemble"] = {k: _toml_value(v) for k, v in asdict(cfg.ensemble).items() if v is not None}
    doc["integrator"] = {k: v for k, v in asdict(cfg.integrator).items() if v is not None}
    doc["checks"] = asdict(cfg.checks)
    return doc


def format_config(cfg: ScenarioConfig) -> str:
    """TOML text that parse_config turns back into an equal config."""
    return tomli_w.dumps(config_to_dict(cfg))
