"""Dimension-style entropies from cover weights and their critical exponents.

A cover element E of order n contributes e^(-lambda n). The Bowen construction
covers the space by window cylinders ordered against a partition; the Pesin
construction covers it by dynamic balls, which are cylinders on W(n, eps). At a
fixed scale "outer measure zero" is read as "some admissible cover has weight
below 1", and the critical exponent is found by bisection on lambda.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

from src.data.symbolic import (
    CoordinatePartition,
    Site,
    SymbolicSystem,
    displacement_set,
    join_over,
    resolution,
    translate_sites,
)
from src.lattice.semigroup import RegularSystem
from src.utils.cache import memoize
from src.utils.config import Config
from src.utils.errors import EntropyError, HorizonError, NonMonotoneWeightError

log = logging.getLogger(__name__)

# relative slack when comparing weights that should be ordered
_ROUNDING = 1e-12


def _safe_exp(x: float) -> float:
    if x == -math.inf:
        return 0.0
    if x > 709.0:
        return math.inf
    return math.exp(x)


def _logsumexp(values: Sequence[float]) -> float:
    finite = [v for v in values if v != -math.inf]
    if not finite:
        return -math.inf
    top = max(finite)
    if top == math.inf:
        return math.inf
    return top + math.log(math.fsum(math.exp(v - top) for v in finite))


@dataclass(frozen=True)
class OrderResult:
    order: int
    saturated: bool = False
    infinite: bool = False


@dataclass(frozen=True)
class CoverElement:
    order: int
    count: int = 1
    saturated: bool = False
    infinite: bool = False
    window: Tuple[Site, ...] = ()

    def log_weight(self, lam: float) -> float:
        if self.count == 0:
            return -math.inf
        if self.infinite:
            return -math.inf if lam > 0 else math.log(self.count)
        return math.log(self.count) - lam * self.order


@dataclass(frozen=True)
class CoverCandidate:
    elements: Tuple[CoverElement, ...]

    @classmethod
    def from_orders(cls, orders: Sequence[int]) -> "CoverCandidate":
        return cls(tuple(CoverElement(int(n)) for n in orders))

    @property
    def size(self) -> int:
        return sum(e.count for e in self.elements)

    @property
    def saturated(self) -> bool:
        return any(e.saturated for e in self.elements)

    @property
    def min_order(self) -> float:
        return min(math.inf if e.infinite else e.order for e in self.elements)


def log_cover_weight(candidate: CoverCandidate, lam: float) -> float:
    if lam < 0:
        raise EntropyError(f"lambda must be non-negative, got {lam}")
    return _logsumexp([e.log_weight(lam) for e in candidate.elements])


def cover_weight(candidate: CoverCandidate, lam: float) -> float:
    """sum of count * e^(-lambda n) over the elements, compensated"""
    if lam < 0:
        raise EntropyError(f"lambda must be non-negative, got {lam}")
    if all(e.count.bit_length() < 1000 and not e.infinite for e in candidate.elements):
        return math.fsum(e.count * _safe_exp(-lam * e.order) for e in candidate.elements)
    return _safe_exp(log_cover_weight(candidate, lam))


def _iter_displacements(system: SymbolicSystem, regular: RegularSystem, stop: int) -> Iterator[Tuple[int, tuple, bool]]:
    """(n, D_n, stable) for n = 0..stop; `stable` certifies D_m = D_n for every m >= n.

    Standard systems are continued past n_max by D_{n+1} = D_n + D_1, and a
    standard sumset that repeats once repeats forever.
    """
    standard = regular.kind == "standard"
    step = displacement_set(system, regular, 1) if standard else None
    previous = None
    current = None
    for n in range(stop + 1):
        if n <= regular.n_max:
            current = displacement_set(system, regular, n)
        elif standard:
            current = tuple(sorted({
                tuple(tuple(a + b for a, b in zip(u, v)) for u, v in zip(d, s))
                for d in current for s in step
            }))
        else:
            return
        stable = system.is_trivial or (standard and previous is not None and current == previous)
        yield n, current, stable
        previous = current


def _stable_from(system: SymbolicSystem, regular: RegularSystem, limit: int) -> Optional[int]:
    if system.is_trivial:
        return 0
    for n, _, stable in _iter_displacements(system, regular, limit + 1):
        if stable:
            return n - 1
    return None


def order_of_set(system: SymbolicSystem, regular: RegularSystem, partition: CoordinatePartition,
                 window: Sequence[Site], n_cap: Optional[int] = None) -> OrderResult:
    """Largest n <= n_cap with S + delta(g) inside the window for every g in N_n.

    Order 0 covers windows missing S. When the property still holds at the cap
    the result is flagged saturated, and infinite if the displacement sets have
    stopped growing.
    """
    n_cap = Config().order_cap if n_cap is None else n_cap
    window = set(window)
    if not set(partition.coords) <= window:
        return OrderResult(0)
    limit = n_cap if regular.kind == "standard" else min(n_cap, regular.n_max)
    best = 0
    for n in range(limit + 1):
        if set(join_over(partition, regular, n, system).coords) <= window:
            best = n
        elif regular.nested:
            break
    if best < limit:
        return OrderResult(best)
    stable = _stable_from(system, regular, limit)
    infinite = stable is not None and stable <= limit
    if not infinite:
        log.warning("order reached the cap %d on %d window sites", limit, len(window))
    return OrderResult(best, saturated=True, infinite=infinite)


def _single_line(system: SymbolicSystem) -> bool:
    return len(system.layers) == 1 and system.layers[0].dim == 1


@memoize
def window_orders(system: SymbolicSystem, regular: RegularSystem, partition: CoordinatePartition,
                  n_cap: int, max_window: int) -> Tuple[Tuple[float, OrderResult], ...]:
    """(log #cylinders on window(l), order of window(l)) for l = 0, 1, ... until the order saturates"""
    rows = []
    for ell in range(max_window + 1):
        window = system.window(ell)
        order = order_of_set(system, regular, partition, window, n_cap)
        rows.append((system.log_cells(window), order))
        if order.saturated:
            break
    return tuple(rows)


def _direct_log_weight(order: OrderResult, lam: float, N: int) -> float:
    if order.order < N and not order.infinite:
        return math.inf
    if order.infinite:
        return -math.inf if lam > 0 else 0.0
    return -lam * order.order


def uniform_cover(system: SymbolicSystem, regular: RegularSystem, partition: CoordinatePartition,
                  ell: int, n_cap: Optional[int] = None) -> CoverCandidate:
    """All cylinders on window(l), each with the window's order"""
    window = system.window(ell)
    order = order_of_set(system, regular, partition, window, n_cap)
    element = CoverElement(order.order, system.cell_count(window), order.saturated, order.infinite, tuple(window))
    return CoverCandidate((element,))


def bowen_log_weight(system: SymbolicSystem, regular: RegularSystem, partition: CoordinatePartition,
                     lam: float, N: int, n_cap: Optional[int] = None) -> Tuple[float, bool]:
    """(log of the least cover weight, saturated flag) over window-cylinder covers with orders >= N.

    On a single one-dimensional layer the minimum runs over all prefix-tree covers:
    C(l) = min(direct(l), log r + C(l + 1)). Elsewhere only uniform depths are tried.
    """
    if lam < 0:
        raise EntropyError(f"lambda must be non-negative, got {lam}")
    if N < 1:
        raise EntropyError(f"minimum order must be at least 1, got {N}")
    config = Config()
    n_cap = config.order_cap if n_cap is None else n_cap
    rows = window_orders(system, regular, partition, n_cap, config.bowen_max_window)
    if not any(o.order >= N or o.infinite for _, o in rows):
        raise HorizonError(f"no window up to {len(rows) - 1} reaches order {N}")
    saturated = any(o.saturated and not o.infinite for _, o in rows)

    if _single_line(system):
        log_r = math.log(system.layers[0].alphabet_size)
        best = _direct_log_weight(rows[-1][1], lam, N)
        for _, order in reversed(rows[:-1]):
            best = min(_direct_log_weight(order, lam, N), log_r + best)
        return log_r + best, saturated

    best = min(log_count + _direct_log_weight(order, lam, N) for log_count, order in rows)
    return best, saturated


def bowen_min_weight(system: SymbolicSystem, regular: RegularSystem, partition: CoordinatePartition,
                     lam: float, N: int, n_cap: Optional[int] = None) -> float:
    return _safe_exp(bowen_log_weight(system, regular, partition, lam, N, n_cap)[0])


@memoize
def ball_log_counts(system: SymbolicSystem, regular: RegularSystem, epsilon: float, N: int,
                    horizon: int) -> Tuple[Tuple[Tuple[int, float], ...], bool]:
    """((n, log #cylinders on W(n, eps)) for N <= n <= horizon, stabilized flag)"""
    ball = system.ball(resolution(epsilon))
    rows = []
    stabilized = False
    for n, shifts, stable in _iter_displacements(system, regular, horizon):
        if n < N and not stable:
            continue
        rows.append((max(n, N), system.log_cells(translate_sites(system, ball, shifts))))
        if stable:
            stabilized = True
            break
    if not rows:
        raise HorizonError(f"regular system ends at n={regular.n_max} before the minimum order {N}")
    return tuple(rows), stabilized


def pesin_log_weight(system: SymbolicSystem, regular: RegularSystem, lam: float, N: int, epsilon: float,
                     horizon: Optional[int] = None) -> float:
    """log of the least weight of a cover by dynamic balls D_n(x, eps) with n >= N.

    Balls of one order are the cylinders on W(n, eps), so the least weight is
    min over n of #cylinders(W(n)) * e^(-lambda n).
    """
    if lam < 0:
        raise EntropyError(f"lambda must be non-negative, got {lam}")
    horizon = Config().pesin_horizon if horizon is None else horizon
    if horizon < N:
        raise HorizonError(f"horizon {horizon} below the minimum order {N}")
    rows, stabilized = ball_log_counts(system, regular, epsilon, N, horizon)
    if stabilized and lam > 0:
        return -math.inf
    return min(log_count - lam * n for n, log_count in rows)


def pesin_min_weight(system: SymbolicSystem, regular: RegularSystem, lam: float, N: int, epsilon: float,
                     horizon: Optional[int] = None) -> float:
    return _safe_exp(pesin_log_weight(system, regular, lam, N, epsilon, horizon))


@dataclass(frozen=True)
class CriticalExponentResult:
    lambda_star: float
    weight_below: float
    weight_above: float
    tol: float
    construction: str = ""
    N: int = 0
    epsilon: Optional[float] = None
    saturated: bool = False
    upper_bound: bool = False


def critical_exponent(weight_at: Callable[[float], float], lambda_hi_start: Optional[float] = None,
                      tol: Optional[float] = None) -> CriticalExponentResult:
    """Bisect for the lambda where a non-increasing weight crosses 1"""
    config = Config()
    hi = config.lambda_hi_start if lambda_hi_start is None else lambda_hi_start
    tol = config.lambda_tol if tol is None else tol

    at_zero = weight_at(0.0)
    if at_zero < 1.0:
        return CriticalExponentResult(0.0, at_zero, at_zero, tol)
    right_of_zero = weight_at(math.nextafter(0.0, 1.0))
    if right_of_zero < 1.0:
        return CriticalExponentResult(0.0, at_zero, right_of_zero, tol)

    def checked(lam: float, upper: float) -> float:
        value = weight_at(lam)
        if value > upper * (1 + _ROUNDING):
            raise NonMonotoneWeightError(f"weight increases to {value} at lambda={lam}")
        return value

    lo, w_lo = 0.0, at_zero
    w_hi = checked(hi, w_lo)
    while w_hi >= 1.0:
        lo, w_lo = hi, w_hi
        hi *= 2
        if hi > 1e6:
            raise NonMonotoneWeightError("weight never drops below 1")
        w_hi = checked(hi, w_lo)

    while hi - lo > tol:
        mid = (lo + hi) / 2
        w_mid = checked(mid, w_lo)
        if w_mid < w_hi * (1 - _ROUNDING):
            raise NonMonotoneWeightError(f"weight {w_mid} at lambda={mid} below the right bracket {w_hi}")
        if w_mid >= 1.0:
            lo, w_lo = mid, w_mid
        else:
            hi, w_hi = mid, w_mid
    return CriticalExponentResult((lo + hi) / 2, w_lo, w_hi, tol)


def bowen_exponent(system: SymbolicSystem, regular: RegularSystem, partition: Optional[CoordinatePartition] = None,
                   N: int = 1, n_cap: Optional[int] = None, tol: Optional[float] = None) -> CriticalExponentResult:
    partition = partition or CoordinatePartition.origin(system)
    _, saturated = bowen_log_weight(system, regular, partition, 0.0, N, n_cap)
    result = critical_exponent(
        lambda lam: bowen_min_weight(system, regular, partition, lam, N, n_cap), tol=tol
    )
    return replace(result, construction="bowen", N=N, saturated=saturated,
                   upper_bound=not _single_line(system))


def pesin_exponent(system: SymbolicSystem, regular: RegularSystem, N: int, epsilon: float,
                   horizon: Optional[int] = None, tol: Optional[float] = None) -> CriticalExponentResult:
    result = critical_exponent(
        lambda lam: pesin_min_weight(system, regular, lam, N, epsilon, horizon), tol=tol
    )
    return replace(result, construction="pesin", N=N, epsilon=epsilon)


def bowen_scale_table(system: SymbolicSystem, regular: RegularSystem, partition: Optional[CoordinatePartition],
                      N_values: Sequence[int], n_cap: Optional[int] = None) -> List[CriticalExponentResult]:
    with ThreadPoolExecutor(max_workers=Config().workers) as executor:
        return list(executor.map(lambda N: bowen_exponent(system, regular, partition, N, n_cap), N_values))


def pesin_scale_table(system: SymbolicSystem, regular: RegularSystem, scales: Sequence[Tuple[int, float]],
                      horizon: Optional[int] = None) -> List[CriticalExponentResult]:
    with ThreadPoolExecutor(max_workers=Config().workers) as executor:
        return list(executor.map(lambda s: pesin_exponent(system, regular, s[0], s[1], horizon), scales))


@dataclass(frozen=True)
class Scales:
    bowen_N: int = 1
    pesin_N: int = 1
    epsilon: float = 0.3
    n_max: int = 64


@dataclass(frozen=True)
class ComparisonReport:
    bowen: CriticalExponentResult
    pesin: CriticalExponentResult
    topological: float
    tol: float
    exact_instance: bool

    @property
    def b_minus_h(self) -> float:
        return self.bowen.lambda_star - self.topological

    @property
    def b_minus_c(self) -> float:
        return self.bowen.lambda_star - self.pesin.lambda_star

    @property
    def passed(self) -> bool:
        if self.b_minus_h > self.tol:
            return False
        if self.exact_instance:
            return abs(self.b_minus_c) <= self.tol and abs(self.b_minus_h) <= self.tol
        return True


def b_c_h_comparison(system: SymbolicSystem, regular: RegularSystem, scales: Optional[Scales] = None,
                     tol: float = 0.02, partition: Optional[CoordinatePartition] = None) -> ComparisonReport:
    """Bowen and Pesin critical exponents against the count-based topological estimate"""
    from src.models.topological_entropy import separated_entropy_sequence

    scales = scales or Scales()
    bowen = bowen_exponent(system, regular, partition, scales.bowen_N)
    pesin = pesin_exponent(system, regular, scales.pesin_N, scales.epsilon)
    n_max = min(scales.n_max, regular.n_max)
    topological = separated_entropy_sequence(system, regular, scales.epsilon, n_max).estimate
    report = ComparisonReport(bowen, pesin, topological, tol, exact_instance=regular.kind == "standard")
    log.info("b=%.6f c=%.6f h=%.6f on %s", bowen.lambda_star, pesin.lambda_star, topological, system.name)
    return report
