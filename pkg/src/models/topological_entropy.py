"""Separated, spanning and subcover counts with the receptive topological entropies they define.

Every dynamic ball of the dyadic metric is the cylinder on the window
W(n, eps) = union over g in N_n of (delta(g) + Ball_t(eps)), so on a full shift the
counts have closed forms. The brute-force oracles rebuild them on a finite
approximation through the maximum-clique and set-cover kernels.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.data.symbolic import (
    CoordinatePartition,
    FiniteApproximation,
    Site,
    SymbolicSystem,
    displacement_set,
    grid_epsilon,
    join_over,
    resolution,
    translate_sites,
)
from src.lattice.semigroup import RegularSystem
from src.models.metric_entropy import EntropySample, EntropySequence, NORMALIZATIONS
from src.models.solvers import max_clique, min_set_cover
from src.utils.cache import memoize
from src.utils.config import Config
from src.utils.errors import DomainError, EntropyError, IndexOverflowError
from src.utils.exact_log import ZERO, ExactLog

log = logging.getLogger(__name__)

METHODS = ("closed_form", "exact_bruteforce", "greedy_bound")

PointCover = Sequence[Iterable[int]]


@dataclass(frozen=True)
class CountRecord:
    n: int
    epsilon: float
    quantity: str
    count: int
    method: str
    bound_direction: Optional[str] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise EntropyError(f"unknown count method {self.method!r}")
        if (self.method == "greedy_bound") != (self.bound_direction is not None):
            raise EntropyError("greedy counts, and only those, carry a bound direction")

    @property
    def exact(self) -> bool:
        return self.method != "greedy_bound"


@memoize
def ball_window(system: SymbolicSystem, regular: RegularSystem, n: int, epsilon: float) -> Tuple[Site, ...]:
    """W(n, eps): the sites on which a point fixes its (n, eps) dynamic ball"""
    t = resolution(epsilon)
    return translate_sites(system, system.ball(t), displacement_set(system, regular, n))


def _require_full_shift(system):
    if not isinstance(system, SymbolicSystem):
        raise EntropyError("closed-form counts apply to full shifts; use the brute-force oracle")


def window_log_count(system: SymbolicSystem, sites: Iterable[Site]) -> ExactLog:
    """log of the number of cylinders on `sites`, exactly"""
    per_layer = {}
    for s in sites:
        per_layer[s.layer] = per_layer.get(s.layer, 0) + 1
    total = ZERO
    for layer, count in per_layer.items():
        total = total + ExactLog.log_int(system.layers[layer].alphabet_size) * count
    return total


def separated_max_closed_form(system: SymbolicSystem, regular: RegularSystem, n: int, epsilon: float) -> CountRecord:
    """s_n(eps) = r^|W(n, eps)|"""
    _require_full_shift(system)
    window = ball_window(system, regular, n, epsilon)
    return CountRecord(n, epsilon, "separated", system.cell_count(window), "closed_form")


@memoize
def separation_matrix(fa: FiniteApproximation, regular: RegularSystem, n: int, epsilon: float) -> np.ndarray:
    """Boolean P x P matrix: some g in N_n gives d(gx, gy) > eps"""
    t = resolution(epsilon)
    shifts = displacement_set(fa.system, regular, n)
    fa.check_domain(shifts, t)
    separated = np.zeros((fa.size, fa.size), dtype=bool)
    for shift in shifts:
        # d(gx, gy) = 2^-level > eps exactly when level <= t
        separated |= fa.first_difference(shift, depth=t) <= t
    return separated


def _row_masks(matrix: np.ndarray) -> List[int]:
    return [
        int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")
        for row in matrix
    ]


def separated_max_bruteforce(fa: FiniteApproximation, regular: RegularSystem, n: int, epsilon: float) -> CountRecord:
    """Maximum (n, eps)-separated subset of the approximation's points, as a maximum clique"""
    graph = separation_matrix(fa, regular, n, epsilon)
    result = max_clique(_row_masks(graph))
    log.info("separated n=%d eps=%s: %d points, clique %d (%s)",
             n, epsilon, fa.size, result.size, "exact" if result.exact else "greedy")
    if result.exact:
        return CountRecord(n, epsilon, "separated", result.size, "exact_bruteforce")
    return CountRecord(n, epsilon, "separated", result.size, "greedy_bound", "lower")


def spanning_min(fa: FiniteApproximation, regular: RegularSystem, n: int, epsilon: float) -> CountRecord:
    """Fewest dynamic balls centred at approximation points covering all of them"""
    graph = separation_matrix(fa, regular, n, epsilon)
    balls = _row_masks(~graph)
    result = min_set_cover(balls, (1 << fa.size) - 1)
    if result.exact:
        return CountRecord(n, epsilon, "spanning", result.size, "exact_bruteforce")
    return CountRecord(n, epsilon, "spanning", result.size, "greedy_bound", "upper")


def cover_cells(fa: FiniteApproximation, cover: Union[CoordinatePartition, PointCover]) -> List[int]:
    """Cells of a cover as point bitmasks; cylinder covers split points by their pattern on S"""
    if isinstance(cover, CoordinatePartition):
        missing = [s for s in cover.coords if s not in fa.column]
        if missing:
            raise DomainError(max(s.norm for s in missing), fa.L)
        columns = [fa.column[s] for s in cover.coords]
        _, ids = np.unique(fa.patterns[:, columns], axis=0, return_inverse=True)
        ids = ids.reshape(-1)
        return _row_masks(ids[None, :] == np.arange(ids.max() + 1)[:, None])
    return [sum(1 << int(i) for i in cell) for cell in cover]


def minimal_subcover(cover: Union[CoordinatePartition, PointCover], fa: Optional[FiniteApproximation] = None,
                     system: Optional[SymbolicSystem] = None, n: int = 0) -> CountRecord:
    """N(C): closed form r^|S| for cylinder covers of a full shift, set cover on an approximation"""
    if fa is None:
        if system is None or not isinstance(cover, CoordinatePartition):
            raise EntropyError("closed-form subcover counts need a system and a cylinder cover")
        return CountRecord(n, math.nan, "subcover", system.cell_count(cover.coords), "closed_form")
    cells = cover_cells(fa, cover)
    result = min_set_cover(cells, (1 << fa.size) - 1)
    if result.exact:
        return CountRecord(n, math.nan, "subcover", result.size, "exact_bruteforce")
    return CountRecord(n, math.nan, "subcover", result.size, "greedy_bound", "upper")


def minimal_subcover_count(cover: Union[CoordinatePartition, PointCover], fa: Optional[FiniteApproximation] = None,
                           system: Optional[SymbolicSystem] = None) -> int:
    return minimal_subcover(cover, fa, system).count


def join_covers(first: PointCover, second: PointCover) -> List[frozenset]:
    """Non-empty pairwise intersections"""
    cells = {frozenset(a) & frozenset(b) for a in first for b in second}
    return sorted((c for c in cells if c), key=lambda c: sorted(c))


def _count_sequence(system: SymbolicSystem, regular: RegularSystem, n_max: int, normalization: str,
                    quantity: str, sites_at) -> EntropySequence:
    if n_max > regular.n_max:
        raise IndexOverflowError(n_max, regular.n_max)
    if normalization not in NORMALIZATIONS:
        raise EntropyError(f"unknown normalization {normalization!r}")
    samples = []
    for n in range(1, n_max + 1):
        sites = sites_at(n)
        exact = window_log_count(system, sites)
        raw = float(exact)
        normalizer = n if normalization == "receptive" else regular.size(n)
        samples.append(EntropySample(n, raw, raw / normalizer, normalizer, len(sites), exact))
    return EntropySequence(normalization, tuple(samples), label=system.name, quantity=quantity,
                           system_hash=system.fingerprint, tail_fraction=Config().tail_fraction)


def open_cover_entropy_sequence(system: SymbolicSystem, cover: CoordinatePartition, regular: RegularSystem,
                                n_max: int, normalization: str = "receptive") -> EntropySequence:
    """(1/n) log N(A^n) with log N = sum over coords of log r"""
    _require_full_shift(system)
    return _count_sequence(system, regular, n_max, normalization, "open_cover",
                           lambda n: join_over(cover, regular, n, system).coords)


def separated_entropy_sequence(system: SymbolicSystem, regular: RegularSystem, epsilon: float, n_max: int,
                               normalization: str = "receptive") -> EntropySequence:
    """(1/n) log s_n(eps) from the closed form; classical normalization divides by |N_n|"""
    _require_full_shift(system)
    return _count_sequence(system, regular, n_max, normalization, "separated",
                           lambda n: ball_window(system, regular, n, epsilon))


@dataclass(frozen=True)
class LebesgueNumber:
    value: float
    admissible: float
    provenance: str


def admissible_epsilon(delta: float) -> float:
    """Largest grid value 3 * 2^(-t-2) strictly below delta"""
    if delta <= 0:
        raise EntropyError(f"Lebesgue number must be positive, got {delta}")
    t = 0
    while grid_epsilon(t) >= delta:
        t += 1
    return grid_epsilon(t)


def cylinder_lebesgue_number(cover: CoordinatePartition) -> LebesgueNumber:
    delta = 2.0 ** -cover.max_norm
    return LebesgueNumber(delta, admissible_epsilon(delta), "analytic")


def lebesgue_number(fa: FiniteApproximation, cover: Union[CoordinatePartition, PointCover]) -> LebesgueNumber:
    """min over points of the largest radius whose open ball fits in some cell, on the approximation"""
    cells = cover_cells(fa, cover)
    zero_shift = tuple((0,) * layer.dim for layer in fa.system.layers)
    level = fa.first_difference(zero_shift, depth=fa.L).astype(np.int32)
    members = np.array(
        [[mask >> i & 1 for i in range(fa.size)] for mask in cells], dtype=bool
    )
    if not members.any(axis=0).all():
        raise EntropyError("cover does not cover the approximation")

    radius = np.zeros(fa.size)
    for inside in members:
        outside = ~inside
        if not outside.any():
            reach = np.full(fa.size, np.inf)
        else:
            reach = np.power(2.0, -level[:, outside].max(axis=1).astype(float))
        radius = np.where(inside, np.maximum(radius, reach), radius)
    delta = float(radius.min())
    if math.isinf(delta):
        delta = 1.0
    return LebesgueNumber(delta, admissible_epsilon(delta), "finite")


@dataclass(frozen=True)
class Violation:
    family: str
    n: int
    epsilon: float
    lhs: int
    rhs: int
    detail: str = ""


@dataclass
class InequalityReport:
    records: List[CountRecord] = field(default_factory=list)
    violations: List[Violation] = field(default_factory=list)
    skipped: List[Tuple[int, float, str]] = field(default_factory=list)
    lebesgue: List[LebesgueNumber] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _grid_cell(fa: FiniteApproximation, regular: RegularSystem, covers: Sequence[CoordinatePartition],
               lebesgue: Sequence[LebesgueNumber], n: int, epsilon: float):
    records, violations = [], []
    try:
        s = separated_max_bruteforce(fa, regular, n, epsilon)
        r = spanning_min(fa, regular, n, epsilon)
        r_half = spanning_min(fa, regular, n, epsilon / 2)
    except DomainError as exc:
        return records, violations, str(exc)
    records.extend([s, r, r_half])

    if s.exact and r.exact and r.count > s.count:
        violations.append(Violation("spanning_below_separated", n, epsilon, r.count, s.count))
    if s.exact and r_half.exact and s.count > r_half.count:
        violations.append(Violation("separated_below_half_spanning", n, epsilon, s.count, r_half.count))

    for cover, delta in zip(covers, lebesgue):
        try:
            joined = minimal_subcover(join_over(cover, regular, n, fa.system), fa, n=n)
            r_delta = spanning_min(fa, regular, n, delta.admissible / 2)
        except DomainError as exc:
            log.info("skipping cover check at n=%d: %s", n, exc)
            continue
        records.extend([joined, r_delta])
        if joined.exact and r_delta.exact and joined.count > r_delta.count:
            violations.append(Violation("subcover_below_lebesgue_spanning", n, delta.admissible / 2,
                                        joined.count, r_delta.count, f"cover={cover.coords}"))

    fine = CoordinatePartition.on_ball(fa.system, resolution(epsilon))
    try:
        ball_cover = minimal_subcover(join_over(fine, regular, n, fa.system), fa, n=n)
    except DomainError as exc:
        return records, violations, str(exc)
    records.append(ball_cover)
    if s.exact and ball_cover.exact and s.count > ball_cover.count:
        violations.append(Violation("separated_below_fine_subcover", n, epsilon, s.count, ball_cover.count))
    return records, violations, None


def count_inequality_suite(fa: FiniteApproximation, regular: RegularSystem, covers: Sequence[CoordinatePartition],
                           epsilon_grid: Sequence[float], n_range: Iterable[int]) -> InequalityReport:
    """Check r_n <= s_n <= r_n(eps/2), N(A^n) <= r_n(delta/2) and s_n <= N(gamma^n) on exact records"""
    lebesgue = [lebesgue_number(fa, cover) for cover in covers]
    cells = [(n, eps) for n in n_range for eps in epsilon_grid]
    with ThreadPoolExecutor(max_workers=Config().workers) as executor:
        outcomes = list(executor.map(
            lambda cell: _grid_cell(fa, regular, covers, lebesgue, *cell), cells
        ))

    report = InequalityReport(lebesgue=lebesgue)
    for (n, eps), (records, violations, skipped) in zip(cells, outcomes):
        report.records.extend(records)
        report.violations.extend(violations)
        if skipped:
            report.skipped.append((n, eps, skipped))
    for violation in report.violations:
        log.error("count inequality violated: %s", violation)
    log.info("count suite on %s: %d records, %d violations, %d skipped cells",
             fa.system.name, len(report.records), len(report.violations), len(report.skipped))
    return report
