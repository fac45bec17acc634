"""Experiment documents: parsing, validation and construction of the objects they name."""
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import yaml

from src.config import CORPUS_DIR
from src.data.symbolic import (
    CoordinatePartition,
    MeasureOracle,
    Site,
    SymbolicSystem,
    diagonal_system,
    full_shift,
    product_system,
    resolution,
    translation_system,
    trivial_system,
)
from src.lattice.semigroup import RegularSystem, from_document
from src.utils.config import Config
from src.utils.errors import ConfigError, EntropyError

log = logging.getLogger(__name__)

COMMANDS = ("metric", "topo", "cover", "bowen", "pesin", "local", "verify", "plot-data")
PROVENANCE = ("literature", "derived", "trivial")


@dataclass(frozen=True)
class Expectation:
    value: float
    tol: float = 0.0
    relative: bool = False
    provenance: str = "derived"

    def allows(self, observed: float) -> bool:
        slack = self.tol * abs(self.value) if self.relative else self.tol
        return abs(observed - self.value) <= slack


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    command: str
    system: Dict[str, Any]
    measure: Optional[Dict[str, Any]] = None
    regular: Optional[Dict[str, Any]] = None
    partition: Optional[List[Any]] = None
    n_max: int = 100
    epsilon_grid: Tuple[float, ...] = (0.3, 0.15, 0.06)
    lambda_tol: Optional[float] = None
    seed: Optional[int] = None
    budgets: Dict[str, int] = field(default_factory=dict)
    output: Optional[Path] = None
    fmt: str = "csv"
    units: str = "nats"
    params: Dict[str, Any] = field(default_factory=dict)
    expect: Dict[str, Expectation] = field(default_factory=dict)

    def with_overrides(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return validate(replace(self, **changes))


def _require(doc: Dict[str, Any], key: str, path: str):
    if key not in doc or doc[key] is None:
        raise ConfigError(f"{path}{key}", "is required")
    return doc[key]


def _as_int(value, path: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    try:
        number = int(value)
    except ValueError:
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if minimum is not None and number < minimum:
        raise ConfigError(path, f"must be at least {minimum}, got {number}")
    return number


def parse_epsilon_grid(values: Sequence, path: str) -> Tuple[float, ...]:
    if not values:
        raise ConfigError(path, "needs at least one epsilon")
    grid = []
    for i, value in enumerate(values):
        try:
            eps = float(value)
            resolution(eps)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}[{i}]", str(exc))
        grid.append(eps)
    return tuple(grid)


def _expectations(doc: Dict[str, Any]) -> Dict[str, Expectation]:
    expect = {}
    for name, spec in (doc or {}).items():
        path = f"expect.{name}"
        if not isinstance(spec, dict):
            spec = {"value": spec}
        provenance = spec.get("provenance", "derived")
        if provenance not in PROVENANCE:
            raise ConfigError(f"{path}.provenance", f"must be one of {PROVENANCE}")
        try:
            expect[name] = Expectation(float(_require(spec, "value", f"{path}.")), float(spec.get("tol", 0.0)),
                                       bool(spec.get("relative", False)), provenance)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(path, str(exc))
    return expect


def parse_experiment(doc: Dict[str, Any], source: str = "<document>") -> ExperimentConfig:
    """Turn a YAML document into a validated ExperimentConfig"""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", f"{source} is not a mapping")
    command = doc.get("command", "metric")
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}; expected one of {COMMANDS}")
    config = Config()
    defaults = config.epsilon_grid if command != "local" else config.local_settings["epsilon_grid"]
    output = doc.get("output")
    experiment = ExperimentConfig(
        name=str(doc.get("name", Path(source).stem)),
        command=command,
        system=dict(_require(doc, "system", "")),
        measure=dict(doc["measure"]) if doc.get("measure") is not None else None,
        regular=dict(doc["regular"]) if doc.get("regular") is not None else None,
        partition=list(doc["partition"]) if doc.get("partition") is not None else None,
        n_max=_as_int(doc.get("n_max", config.get("sequences", "default_n_max")), "n_max", 1),
        epsilon_grid=parse_epsilon_grid(doc.get("epsilon_grid", defaults), "epsilon_grid"),
        lambda_tol=float(doc["lambda_tol"]) if doc.get("lambda_tol") is not None else None,
        seed=_as_int(doc["seed"], "seed", 0) if doc.get("seed") is not None else None,
        budgets={k: _as_int(v, f"budgets.{k}", 1) for k, v in (doc.get("budgets") or {}).items()},
        output=Path(output) if output else None,
        fmt=str(doc.get("format", "csv")),
        units=str(doc.get("units", "nats")),
        params=dict(doc.get("params") or {}),
        expect=_expectations(doc.get("expect")),
    )
    return validate(experiment)


def validate(experiment: ExperimentConfig) -> ExperimentConfig:
    """Build every referenced object once so that errors surface with their field path"""
    if experiment.fmt not in ("csv", "json"):
        raise ConfigError("format", f"must be csv or json, got {experiment.fmt!r}")
    if experiment.units not in ("nats", "bits"):
        raise ConfigError("units", f"must be nats or bits, got {experiment.units!r}")
    unknown = set(experiment.budgets) - set(Config().get("budgets"))
    if unknown:
        raise ConfigError(f"budgets.{sorted(unknown)[0]}", "unknown budget")
    if experiment.command == "local" and experiment.seed is None:
        raise ConfigError("seed", "required for sampling experiments")
    system, measure = build_system(experiment)
    regular = build_regular(experiment, system)
    if experiment.command not in ("bowen", "pesin", "local") and experiment.n_max > regular.n_max:
        raise ConfigError("n_max", f"{experiment.n_max} exceeds the regular system's n_max {regular.n_max}")
    build_partition(experiment, system)
    return experiment


def _single_system(spec: Dict[str, Any], path: str) -> SymbolicSystem:
    kind = spec.get("kind", "full_shift")
    try:
        r = _as_int(spec.get("r", 2), f"{path}.r", 1)
        if kind == "full_shift":
            return full_shift(r, _as_int(spec.get("d", 1), f"{path}.d", 1))
        if kind == "diagonal":
            return diagonal_system(r, _as_int(spec.get("k", 1), f"{path}.k", 1))
        if kind == "trivial":
            return trivial_system(r, _as_int(spec.get("k", 1), f"{path}.k", 1),
                                  _as_int(spec.get("d", 1), f"{path}.d", 1))
        if kind == "translation":
            return translation_system(r, _as_int(spec.get("d", 1), f"{path}.d", 1),
                                      _require(spec, "displacements", f"{path}."), name=spec.get("name", "translation"))
    except EntropyError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc))
    raise ConfigError(f"{path}.kind", f"unknown system kind {kind!r}")


def _single_measure(spec: Optional[Dict[str, Any]], system: SymbolicSystem, path: str) -> MeasureOracle:
    if spec is None:
        spec = {"kind": "uniform"}
    kind = spec.get("kind", "bernoulli")
    try:
        if kind == "uniform":
            measure = MeasureOracle.bernoulli(*[
                [f"1/{layer.alphabet_size}"] * layer.alphabet_size for layer in system.layers
            ])
        elif kind == "bernoulli":
            vectors = spec.get("vectors") or [_require(spec, "p", f"{path}.")]
            measure = MeasureOracle.bernoulli(*vectors)
        elif kind == "markov":
            measure = MeasureOracle.markov(_require(spec, "matrix", f"{path}."), spec.get("stationary"))
        else:
            raise ConfigError(f"{path}.kind", f"unknown measure kind {kind!r}")
        measure.check_system(system)
    except ConfigError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        field_name = "p" if kind == "bernoulli" and "p" in spec else kind
        raise ConfigError(f"{path}.{field_name}" if kind != "uniform" else path, str(exc))
    return measure


def build_system(experiment: ExperimentConfig) -> Tuple[SymbolicSystem, MeasureOracle]:
    spec = experiment.system
    if spec.get("kind") == "product":
        factors = _require(spec, "factors", "system.")
        measures = (experiment.measure or {}).get("factors") or [None] * len(factors)
        if len(factors) != 2 or len(measures) != 2:
            raise ConfigError("system.factors", "products take exactly two factors")
        built = [_single_system(f, f"system.factors[{i}]") for i, f in enumerate(factors)]
        oracles = [_single_measure(m, s, f"measure.factors[{i}]") for i, (m, s) in enumerate(zip(measures, built))]
        try:
            return product_system(built[0], built[1], oracles[0], oracles[1])
        except EntropyError as exc:
            raise ConfigError("measure", str(exc))
    system = _single_system(spec, "system")
    return system, _single_measure(experiment.measure, system, "measure")


def build_regular(experiment: ExperimentConfig, system: SymbolicSystem) -> RegularSystem:
    doc = experiment.regular or {"kind": "standard", "k": system.k, "n_max": experiment.n_max}
    try:
        regular = from_document(doc)
    except (KeyError, TypeError) as exc:
        raise ConfigError("regular", f"missing or malformed field {exc}")
    except EntropyError as exc:
        raise ConfigError("regular", str(exc))
    if regular.k != system.k:
        raise ConfigError("regular.k", f"system has {system.k} generators, regular system lives in Z_+^{regular.k}")
    return regular


def _site(entry: Any, path: str) -> Site:
    if isinstance(entry, dict):
        point = _require(entry, "point", f"{path}.")
        point = (point,) if isinstance(point, int) else tuple(point)
        return Site(_as_int(entry.get("layer", 0), f"{path}.layer", 0), tuple(int(c) for c in point))
    if isinstance(entry, int):
        return Site(0, (entry,))
    if isinstance(entry, (list, tuple)):
        return Site(0, tuple(int(c) for c in entry))
    raise ConfigError(path, f"cannot read a site from {entry!r}")


def build_partition(experiment: ExperimentConfig, system: SymbolicSystem) -> CoordinatePartition:
    role = "cover" if experiment.command == "cover" else "partition"
    if not experiment.partition:
        return CoordinatePartition.origin(system, role)
    sites = tuple(_site(e, f"partition[{i}]") for i, e in enumerate(experiment.partition))
    for i, site in enumerate(sites):
        if site.layer >= len(system.layers) or len(site.point) != system.layers[site.layer].dim:
            raise ConfigError(f"partition[{i}]", f"{site} does not fit the system's layers")
        if any(c < 0 for c in site.point):
            raise ConfigError(f"partition[{i}]", "coordinates must be non-negative")
    return CoordinatePartition(sites, role)


def resolve_path(name: Union[str, Path]) -> Path:
    """A path on disk, or the name of a shipped corpus document"""
    path = Path(name)
    if path.exists():
        return path
    shipped = CORPUS_DIR / path.with_suffix(".yaml").name
    if shipped.exists():
        return shipped
    raise ConfigError("config", f"no experiment document at {name}")


def load_experiment(name: Union[str, Path]) -> ExperimentConfig:
    path = resolve_path(name)
    with open(path, "r") as f:
        try:
            doc = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ConfigError("<root>", f"{path} is not valid YAML: {exc}")
    log.debug("loaded experiment %s", path)
    return parse_experiment(doc, str(path))


def list_corpus() -> List[str]:
    return sorted(p.stem for p in CORPUS_DIR.glob("*.yaml"))


def apply_budgets(experiment: ExperimentConfig):
    config = Config()
    for key, value in experiment.budgets.items():
        config.override("budgets", key, value)
    if experiment.lambda_tol is not None:
        if not math.isfinite(experiment.lambda_tol) or experiment.lambda_tol <= 0:
            raise ConfigError("lambda_tol", "must be a positive number")
        config.override("dimensional", "lambda_tol", experiment.lambda_tol)
