"""Pointwise local entropies from dynamic-ball measures and their integrals.

The measure of the (n, eps) dynamic ball around x is the cylinder measure of x
restricted to W(n, eps). Liminf and limsup in n are read off a trailing window of
the origin-corrected sequence (a_n - a_0)/n with a_n = -log mu(D_n(x, eps)),
which has the same limits as a_n/n.
"""
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.data.symbolic import (
    CoordinatePartition,
    MeasureOracle,
    Site,
    SymbolicSystem,
    cylinder_measure,
    log_cylinder_measure,
    sample_point,
)
from src.lattice.semigroup import RegularSystem
from src.models.topological_entropy import ball_window
from src.utils.cache import memoize
from src.utils.config import Config
from src.utils.errors import EntropyError, WindowError

log = logging.getLogger(__name__)

Point = Mapping[Site, int]


def _restricted(x: Point, window: Sequence[Site]) -> Dict[Site, int]:
    missing = [s for s in window if s not in x]
    if missing:
        raise WindowError(len(window), len(missing))
    return {s: x[s] for s in window}


def ball_measure(measure: MeasureOracle, system: SymbolicSystem, regular: RegularSystem, x: Point,
                 n: int, epsilon: float):
    """mu(D_n(x, eps)) = mu of the cylinder fixing x on W(n, eps)"""
    window = ball_window(system, regular, n, epsilon)
    return cylinder_measure(measure, window, _restricted(x, window))


def log_ball_measure(measure: MeasureOracle, system: SymbolicSystem, regular: RegularSystem, x: Point,
                     n: int, epsilon: float) -> float:
    window = ball_window(system, regular, n, epsilon)
    return log_cylinder_measure(measure, window, _restricted(x, window))


@memoize
def window_increments(system: SymbolicSystem, regular: RegularSystem, epsilon: float,
                      n_max: int) -> Optional[Tuple[Tuple[Site, ...], ...]]:
    """Sites added to W(n, eps) at each n = 0..n_max, or None when the windows are not nested"""
    seen = set()
    increments = []
    for n in range(n_max + 1):
        window = set(ball_window(system, regular, n, epsilon))
        if not seen <= window:
            return None
        increments.append(tuple(sorted(window - seen)))
        seen = window
    return tuple(increments)


def _neg_log_ball_sequence(measure: MeasureOracle, system: SymbolicSystem, regular: RegularSystem,
                           x: Point, n_max: int, epsilon: float) -> np.ndarray:
    """a_n = -log mu(D_n(x, eps)) for n = 0..n_max"""
    increments = window_increments(system, regular, epsilon, n_max) if measure.kind == "bernoulli" else None
    if increments is None:
        return np.array([
            -log_ball_measure(measure, system, regular, x, n, epsilon) for n in range(n_max + 1)
        ])
    steps = []
    for new in increments:
        _restricted(x, new)
        steps.append(-log_cylinder_measure(measure, new, x) if new else 0.0)
    return np.array(list(itertools.accumulate(steps)))


@dataclass(frozen=True)
class LocalEntropyRecord:
    """Per-epsilon local entropy traces of one point.

    `values` are the raw rates -(1/n) log mu(D_n(x, eps)). `lower` and `upper`
    are the min and max over the tail of the origin-corrected rates
    (a_n - a_0)/n with a_n = -log mu(D_n(x, eps)), so they drop the fixed cost
    of the initial ball and need not lie between the tail `values`.
    """

    epsilons: Tuple[float, ...]
    # values[i][n - 1] = -(1/n) log mu(D_n(x, epsilons[i]))
    values: Tuple[Tuple[float, ...], ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    @property
    def n_max(self) -> int:
        return len(self.values[0])

    @property
    def lower_local(self) -> float:
        """Estimate at the smallest epsilon"""
        return self.lower[int(np.argmin(self.epsilons))]

    @property
    def upper_local(self) -> float:
        return self.upper[int(np.argmin(self.epsilons))]


def local_entropy_record(measure: MeasureOracle, system: SymbolicSystem, regular: RegularSystem, x: Point,
                         n_max: int, epsilon_grid: Sequence[float]) -> LocalEntropyRecord:
    if n_max < 1:
        raise EntropyError(f"n_max must be positive, got {n_max}")
    tail = max(1, math.ceil(n_max * Config().tail_fraction))
    ns = np.arange(1, n_max + 1)
    values, lower, upper = [], [], []
    for epsilon in epsilon_grid:
        a = _neg_log_ball_sequence(measure, system, regular, x, n_max, epsilon)
        values.append(tuple(float(v) for v in a[1:] / ns))
        corrected = (a[1:] - a[0]) / ns
        lower.append(float(corrected[-tail:].min()))
        upper.append(float(corrected[-tail:].max()))
    return LocalEntropyRecord(tuple(float(e) for e in epsilon_grid), tuple(values), tuple(lower), tuple(upper))


def frequency_oracle(measure: MeasureOracle, word: Point) -> float:
    """Empirical -(1/|w|) log mu(w) from symbol (or transition) counts of the word"""
    sites = sorted(word)
    if not sites:
        raise EntropyError("empty word")
    if measure.kind == "bernoulli":
        total = 0.0
        for layer, group in itertools.groupby(sites, key=lambda s: s.layer):
            symbols = np.array([word[s] for s in group])
            p = measure.vector_for(layer)
            counts = np.bincount(symbols, minlength=len(p))
            total += math.fsum(-c * math.log(p[a]) for a, c in enumerate(counts) if c)
        return total / len(sites)

    symbols = [word[s] for s in sites]
    positions = [s.point[0] for s in sites]
    if positions != list(range(positions[0], positions[0] + len(positions))):
        return -log_cylinder_measure(measure, sites, word) / len(sites)
    P = np.asarray(measure.matrix)
    transitions = np.zeros_like(P)
    for a, b in zip(symbols, symbols[1:]):
        transitions[a, b] += 1
    logs = np.where(transitions > 0, np.log(np.where(P > 0, P, 1.0)), 0.0)
    total = -math.log(measure.stationary[symbols[0]]) - float((transitions * logs).sum())
    return total / len(sites)


@dataclass(frozen=True)
class MeasureSummary:
    values: Tuple[float, ...]
    upper_values: Tuple[float, ...]
    integral: float
    standard_error: float
    ess_sup: float
    quantile: float
    quantile_value: float
    upper_mean: float
    seed: int
    records: Tuple[LocalEntropyRecord, ...] = ()


def essential_sup_estimate(summary: MeasureSummary, quantile: Optional[float] = None) -> float:
    """Sample maximum, or an upper sample quantile; a lower estimate of the essential supremum"""
    if not summary.values:
        raise EntropyError("empty sample")
    if quantile is None:
        return max(summary.values)
    return float(np.quantile(np.array(summary.values), quantile))


def sample_window(system: SymbolicSystem, regular: RegularSystem, n_max: int,
                  epsilon_grid: Sequence[float]) -> Tuple[Site, ...]:
    """W(n_max, smallest eps): every window the records read"""
    return ball_window(system, regular, n_max, min(epsilon_grid))


def integrate_local_entropy(measure: MeasureOracle, system: SymbolicSystem, regular: RegularSystem,
                            sample_size: int, n_max: int, epsilon_grid: Sequence[float], seed: int,
                            quantile: Optional[float] = None) -> MeasureSummary:
    """Monte Carlo mean of pointwise lower local entropies over mu-sampled points"""
    if sample_size < 1:
        raise EntropyError(f"sample size must be positive, got {sample_size}")
    quantile = Config().local_settings.get("quantile", 0.95) if quantile is None else quantile
    sites = sample_window(system, regular, n_max, epsilon_grid)
    seeds = np.random.SeedSequence(seed).spawn(sample_size)
    points = [sample_point(measure, sites, s) for s in seeds]
    log.info("sampled %d points on %d sites (seed %d)", sample_size, len(sites), seed)

    with ThreadPoolExecutor(max_workers=Config().workers) as executor:
        records = list(executor.map(
            lambda x: local_entropy_record(measure, system, regular, x, n_max, epsilon_grid), points
        ))

    values = np.array([r.lower_local for r in records])
    upper_values = np.array([r.upper_local for r in records])
    se = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    summary = MeasureSummary(
        values=tuple(float(v) for v in values),
        upper_values=tuple(float(v) for v in upper_values),
        integral=float(values.mean()),
        standard_error=se,
        ess_sup=float(values.max()),
        quantile=quantile,
        quantile_value=float(np.quantile(values, quantile)),
        upper_mean=float(upper_values.mean()),
        seed=seed,
        records=tuple(records),
    )
    return summary


@dataclass(frozen=True)
class LocalSuiteSettings:
    sample_size: int = 200
    n_max: int = 200
    epsilon_grid: Tuple[float, ...] = (0.3, 0.15, 0.1)
    seed: int = 0
    tol: float = 0.02
    metric_n_max: int = 100
    pesin_N: int = 1
    pesin_epsilon: float = 0.3

    @classmethod
    def from_config(cls, **overrides) -> "LocalSuiteSettings":
        config = Config()
        local = config.local_settings
        values = {
            "sample_size": int(local.get("sample_size", 200)),
            "n_max": int(local.get("n_max", 200)),
            "epsilon_grid": tuple(float(e) for e in local.get("epsilon_grid", (0.3, 0.15, 0.1))),
            "seed": config.seed,
        }
        values.update(overrides)
        return cls(**values)


@dataclass(frozen=True)
class LocalInequalityReport:
    local_integral: float
    ess_sup: float
    metric: float
    pesin: float
    topological: float
    tol: float
    summary: MeasureSummary

    @property
    def margins(self) -> Dict[str, float]:
        return {
            "local_below_metric": self.metric + self.tol - self.local_integral,
            "ess_sup_below_pesin": self.pesin + self.tol - self.ess_sup,
            "pesin_below_topological": self.topological + 2 * self.tol - (self.pesin + self.tol),
            "metric_below_topological": self.topological + self.tol - self.metric,
        }

    @property
    def passed(self) -> bool:
        return all(m >= 0 for m in self.margins.values())


def inequality_suite_local(system: SymbolicSystem, measure: MeasureOracle, regular: RegularSystem,
                           settings: Optional[LocalSuiteSettings] = None,
                           partition: Optional[CoordinatePartition] = None) -> LocalInequalityReport:
    """Local integral <= metric entropy <= topological entropy, and ess sup <= Pesin exponent <= topological"""
    from src.models.dimensional_entropy import pesin_exponent
    from src.models.metric_entropy import receptive_metric_sequence
    from src.models.topological_entropy import separated_entropy_sequence

    settings = settings or LocalSuiteSettings.from_config()
    partition = partition or CoordinatePartition.origin(system)
    summary = integrate_local_entropy(measure, system, regular, settings.sample_size, settings.n_max,
                                      settings.epsilon_grid, settings.seed)
    metric_n_max = min(settings.metric_n_max, regular.n_max)
    metric = receptive_metric_sequence(system, measure, partition, regular, metric_n_max).estimate
    pesin = pesin_exponent(system, regular, settings.pesin_N, settings.pesin_epsilon).lambda_star
    topological = separated_entropy_sequence(system, regular, settings.pesin_epsilon, metric_n_max).estimate

    report = LocalInequalityReport(summary.integral, summary.ess_sup, metric, pesin, topological,
                                   settings.tol, summary)
    for name, margin in report.margins.items():
        if margin < 0:
            log.error("local inequality %s violated by %.6f on %s", name, -margin, system.name)
    return report
