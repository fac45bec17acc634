"""Full shifts over Z_+^d with translation actions, measure oracles and truncations.

A system is a stack of layers; each layer is a full shift on Z_+^{d_c} with its own
alphabet. A site is a ``(layer, point)`` pair. The metric is
``d(x, y) = 2^-m`` where ``m`` is the least sup-norm of a site where ``x`` and ``y``
differ, so every dynamic ball is a cylinder. Each generator of Z_+^k translates
every layer by a fixed non-negative vector.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import joblib
import numpy as np

from src.lattice.semigroup import LatticeElement, RegularSystem
from src.utils.cache import memoize
from src.utils.config import Config
from src.utils.errors import (
    BudgetExceededError,
    DomainError,
    DyadicEpsilonError,
    EntropyError,
    IndexOverflowError,
    MeasureError,
)

log = logging.getLogger(__name__)

Probability = Union[Fraction, float]
Vector = Tuple[int, ...]


class Site(NamedTuple):
    layer: int
    point: Vector

    @property
    def norm(self) -> int:
        return max(self.point)


Word = Mapping[Site, int]


@dataclass(frozen=True)
class Layer:
    alphabet_size: int
    dim: int


@dataclass(frozen=True)
class SymbolicSystem:
    layers: Tuple[Layer, ...]
    # displacements[generator][layer] is the translation vector of that layer
    displacements: Tuple[Tuple[Vector, ...], ...]
    name: str = "system"

    def __post_init__(self):
        if not self.layers:
            raise EntropyError("a system needs at least one layer")
        if not self.displacements:
            raise EntropyError("a system needs at least one generator")
        for layer in self.layers:
            if layer.alphabet_size < 1 or layer.dim < 1:
                raise EntropyError(f"invalid layer {layer}")
        for vectors in self.displacements:
            if len(vectors) != len(self.layers):
                raise EntropyError("every generator needs one displacement per layer")
            for vector, layer in zip(vectors, self.layers):
                if len(vector) != layer.dim or any(c < 0 for c in vector):
                    raise EntropyError(f"bad displacement {vector} for {layer}")

    def __hash__(self):
        return hash(self.fingerprint)

    @cached_property
    def fingerprint(self) -> str:
        return joblib.hash((self.layers, self.displacements))

    @property
    def k(self) -> int:
        return len(self.displacements)

    @property
    def lattice_dim(self) -> int:
        return sum(layer.dim for layer in self.layers)

    @property
    def alphabet_size(self) -> int:
        sizes = {layer.alphabet_size for layer in self.layers}
        if len(sizes) != 1:
            raise EntropyError(f"{self.name} mixes alphabet sizes {sorted(sizes)}")
        return sizes.pop()

    @property
    def is_trivial(self) -> bool:
        return all(c == 0 for vectors in self.displacements for v in vectors for c in v)

    def displacement(self, g: LatticeElement) -> Tuple[Vector, ...]:
        """delta(g) = sum_i g_i * displacement_i, per layer"""
        if len(g) != self.k:
            raise EntropyError(f"element {g} does not live in Z_+^{self.k}")
        return tuple(
            tuple(
                sum(g_i * self.displacements[i][c][axis] for i, g_i in enumerate(g))
                for axis in range(layer.dim)
            )
            for c, layer in enumerate(self.layers)
        )

    def translate(self, site: Site, shift: Tuple[Vector, ...]) -> Site:
        offset = shift[site.layer]
        return Site(site.layer, tuple(a + b for a, b in zip(site.point, offset)))

    def ball(self, t: int) -> Tuple[Site, ...]:
        """All sites of sup-norm at most t"""
        return tuple(sorted(
            Site(c, point)
            for c, layer in enumerate(self.layers)
            for point in itertools.product(range(t + 1), repeat=layer.dim)
        ))

    def window(self, L: int) -> Tuple[Site, ...]:
        return self.ball(L)

    def log_cells(self, sites: Iterable[Site]) -> float:
        """log of the number of cylinders on the given sites"""
        return sum(math.log(self.layers[s.layer].alphabet_size) for s in sites)

    def cell_count(self, sites: Iterable[Site]) -> int:
        return math.prod(self.layers[s.layer].alphabet_size for s in sites)

    def single_map(self, g: LatticeElement) -> "SymbolicSystem":
        """The Z_+-action generated by one element g"""
        return SymbolicSystem(self.layers, (self.displacement(g),), name=f"{self.name}[{g}]")


def full_shift(r: int, d: int = 1) -> SymbolicSystem:
    """Shift field on Z_+^d with the d unit translations"""
    units = tuple(
        (tuple(1 if axis == i else 0 for axis in range(d)),) for i in range(d)
    )
    return SymbolicSystem((Layer(r, d),), units, name=f"full_{r}_shift_d{d}")


def diagonal_system(r: int, k: int) -> SymbolicSystem:
    """k generators all acting as the same one-sided shift"""
    return SymbolicSystem((Layer(r, 1),), tuple(((1,),) for _ in range(k)), name=f"diagonal_{r}_k{k}")


def trivial_system(r: int, k: int, d: int = 1) -> SymbolicSystem:
    zeros = tuple(((0,) * d,) for _ in range(k))
    return SymbolicSystem((Layer(r, d),), zeros, name=f"trivial_{r}_k{k}")


def translation_system(r: int, d: int, displacements: Sequence[Sequence[int]], name: str = "translation") -> SymbolicSystem:
    return SymbolicSystem(
        (Layer(r, d),), tuple((tuple(int(c) for c in v),) for v in displacements), name=name
    )


@dataclass(frozen=True)
class CoordinatePartition:
    coords: Tuple[Site, ...]
    role: str = "partition"

    def __post_init__(self):
        if not self.coords:
            raise EntropyError("a coordinate partition needs at least one site")
        if self.role not in ("partition", "cover"):
            raise EntropyError(f"unknown role {self.role!r}")
        object.__setattr__(self, "coords", tuple(sorted(set(self.coords))))

    @classmethod
    def at(cls, *points: Union[int, Sequence[int]], layer: int = 0, role: str = "partition") -> "CoordinatePartition":
        """Sites in one layer; integers are read as 1-dimensional points"""
        return cls(
            tuple(Site(layer, (p,) if isinstance(p, int) else tuple(p)) for p in points), role
        )

    @classmethod
    def origin(cls, system: SymbolicSystem, role: str = "partition") -> "CoordinatePartition":
        """The origin site of every layer"""
        return cls(
            tuple(Site(c, (0,) * layer.dim) for c, layer in enumerate(system.layers)), role
        )

    @classmethod
    def on_ball(cls, system: SymbolicSystem, t: int) -> "CoordinatePartition":
        """Cylinders on Ball_t; every cell has diameter at most 2^-(t+1)"""
        return cls(system.ball(t), "cover")

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def max_norm(self) -> int:
        return max(site.norm for site in self.coords)


def pullback(partition: CoordinatePartition, g: LatticeElement, system: SymbolicSystem) -> CoordinatePartition:
    """g^-1 A: the cylinder partition on S + delta(g)"""
    shift = system.displacement(g)
    return CoordinatePartition(
        tuple(system.translate(s, shift) for s in partition.coords), partition.role
    )


def displacement_set(system: SymbolicSystem, regular: RegularSystem, n: int) -> Tuple[Tuple[Vector, ...], ...]:
    """Distinct displacements delta(N_n), sorted.

    Beyond n_max a standard system is continued by the sumset recursion
    D_{n+1} = D_n + D_1, which is how N_{n+1} = N_n + N_1 is generated.
    """
    if n <= regular.n_max:
        return _displacements_within(system, regular, n)
    if regular.kind != "standard":
        raise IndexOverflowError(n, regular.n_max)
    return _standard_displacements(system, regular, n)


@memoize
def _displacements_within(system: SymbolicSystem, regular: RegularSystem, n: int):
    return tuple(sorted({system.displacement(g) for g in regular[n]}))


@memoize
def _standard_displacements(system: SymbolicSystem, regular: RegularSystem, n: int):
    step = _displacements_within(system, regular, 1)
    current = set(_displacements_within(system, regular, regular.n_max))
    for _ in range(regular.n_max, n):
        current = {
            tuple(tuple(a + b for a, b in zip(u, v)) for u, v in zip(d, s))
            for d in current
            for s in step
        }
    return tuple(sorted(current))


def translate_sites(system: SymbolicSystem, sites: Iterable[Site], shifts: Iterable[Tuple[Vector, ...]]) -> Tuple[Site, ...]:
    sites = tuple(sites)
    return tuple(sorted({system.translate(s, shift) for shift in shifts for s in sites}))


def join_over(partition: CoordinatePartition, regular: RegularSystem, n: int, system: SymbolicSystem) -> CoordinatePartition:
    """A^n = join of g^-1 A over g in N_n: coords are the union of translates"""
    shifts = displacement_set(system, regular, n)
    return CoordinatePartition(translate_sites(system, partition.coords, shifts), partition.role)


def resolution(epsilon: float) -> int:
    """t(eps) = max{t >= 0 : 2^-t > eps}; dyadic eps is rejected"""
    epsilon = float(epsilon)
    if not 0.0 < epsilon < 1.0:
        raise EntropyError(f"epsilon must lie in (0, 1), got {epsilon}")
    if math.frexp(epsilon)[0] == 0.5:
        raise DyadicEpsilonError(epsilon)
    t = 0
    while 2.0 ** -(t + 1) > epsilon:
        t += 1
    return t


def grid_epsilon(t: int) -> float:
    """The non-dyadic grid value 3 * 2^(-t-2), strictly between 2^-(t+1) and 2^-t"""
    return 3.0 * 2.0 ** (-t - 2)


def _as_probability(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value))


@dataclass(frozen=True)
class MeasureOracle:
    kind: str
    vectors: Tuple[Tuple[Fraction, ...], ...] = ()
    matrix: Optional[Tuple[Tuple[float, ...], ...]] = None
    stationary: Optional[Tuple[float, ...]] = None

    @classmethod
    def bernoulli(cls, p: Sequence, *more: Sequence) -> "MeasureOracle":
        """Product measure; extra vectors give distinct laws to further layers"""
        vectors = tuple(tuple(_as_probability(v) for v in vec) for vec in (p,) + more)
        for i, vec in enumerate(vectors):
            if any(v < 0 for v in vec):
                raise MeasureError(f"p[{i}] has a negative entry: {[str(v) for v in vec]}")
            if sum(vec) != 1:
                raise MeasureError(f"p[{i}] sums to {sum(vec)}, not 1")
        return cls("bernoulli", vectors)

    @classmethod
    def markov(cls, matrix: Sequence[Sequence[float]], stationary: Optional[Sequence[float]] = None) -> "MeasureOracle":
        P = np.asarray(matrix, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise MeasureError(f"transition matrix must be square, got shape {P.shape}")
        if (P < 0).any() or not np.allclose(P.sum(axis=1), 1.0, atol=1e-12):
            raise MeasureError("transition matrix must be row-stochastic")
        if stationary is None:
            values, vectors = np.linalg.eig(P.T)
            pi = np.real(vectors[:, np.argmin(np.abs(values - 1.0))])
            pi = pi / pi.sum()
        else:
            pi = np.asarray(stationary, dtype=float)
        if abs(pi.sum() - 1.0) > 1e-12 or not np.allclose(pi @ P, pi, atol=1e-12):
            raise MeasureError("stationary vector must satisfy pi P = pi and sum to 1")
        return cls("markov", (), tuple(map(tuple, P.tolist())), tuple(pi.tolist()))

    @property
    def alphabet_size(self) -> int:
        if self.kind == "markov":
            return len(self.stationary)
        return len(self.vectors[0])

    def vector_for(self, layer: int) -> Tuple[Fraction, ...]:
        if self.kind != "bernoulli":
            raise MeasureError("per-layer vectors exist only for Bernoulli measures")
        return self.vectors[layer] if len(self.vectors) > 1 else self.vectors[0]

    def check_system(self, system: SymbolicSystem):
        if self.kind == "markov":
            if len(system.layers) != 1 or system.layers[0].dim != 1:
                raise MeasureError("Markov measures are supported on one-dimensional single-layer shifts only")
            if system.layers[0].alphabet_size != self.alphabet_size:
                raise MeasureError("alphabet mismatch between system and measure")
            return
        if len(self.vectors) not in (1, len(system.layers)):
            raise MeasureError(f"{len(self.vectors)} probability vectors for {len(system.layers)} layers")
        for c, layer in enumerate(system.layers):
            if len(self.vector_for(c)) != layer.alphabet_size:
                raise MeasureError(f"layer {c}: vector length differs from alphabet size {layer.alphabet_size}")


@lru_cache(maxsize=4096)
def _matrix_power(matrix: Tuple[Tuple[float, ...], ...], gap: int) -> np.ndarray:
    return np.linalg.matrix_power(np.asarray(matrix, dtype=float), gap)


def _aligned(sites: Sequence[Site], word) -> List[int]:
    if isinstance(word, Mapping):
        return [int(word[s]) for s in sites]
    word = list(word)
    if len(word) != len(sites):
        raise EntropyError(f"word of length {len(word)} for {len(sites)} sites")
    return [int(w) for w in word]


def _markov_positions(sites: Sequence[Site]) -> List[int]:
    if any(s.layer != 0 or len(s.point) != 1 for s in sites):
        raise MeasureError("Markov measures are defined on one-dimensional single-layer sites only")
    return [s.point[0] for s in sites]


def cylinder_measure(measure: MeasureOracle, sites: Iterable[Site], word) -> Probability:
    """mu of the cylinder fixing `word` on `sites` (a mapping or a sequence in sorted-site order)"""
    sites = tuple(sorted(sites))
    symbols = _aligned(sites, word)
    if measure.kind == "bernoulli":
        value = Fraction(1)
        for site, symbol in zip(sites, symbols):
            value *= measure.vector_for(site.layer)[symbol]
        return value

    positions = _markov_positions(sites)
    if not positions:
        return 1.0
    value = measure.stationary[symbols[0]]
    for j in range(1, len(positions)):
        step = _matrix_power(measure.matrix, positions[j] - positions[j - 1])
        value *= step[symbols[j - 1], symbols[j]]
    return float(value)


def log_cylinder_measure(measure: MeasureOracle, sites: Iterable[Site], word) -> float:
    """Natural log of the cylinder measure, summed term by term"""
    sites = tuple(sorted(sites))
    symbols = _aligned(sites, word)
    if measure.kind == "bernoulli":
        logs = _log_vectors(measure)
        return math.fsum(logs[min(s.layer, len(logs) - 1)][w] for s, w in zip(sites, symbols))

    positions = _markov_positions(sites)
    terms = [math.log(measure.stationary[symbols[0]])] if positions else []
    for j in range(1, len(positions)):
        step = _matrix_power(measure.matrix, positions[j] - positions[j - 1])
        terms.append(math.log(step[symbols[j - 1], symbols[j]]))
    return math.fsum(terms)


@lru_cache(maxsize=256)
def _log_vectors(measure: MeasureOracle) -> Tuple[Tuple[float, ...], ...]:
    return tuple(
        tuple(math.log(p) if p > 0 else -math.inf for p in vec) for vec in measure.vectors
    )


def sample_point(measure: MeasureOracle, sites: Iterable[Site], seed) -> Dict[Site, int]:
    """Draw a word on `sites` distributed exactly as the cylinder measures"""
    sites = tuple(sorted(sites))
    rng = np.random.default_rng(seed)
    if measure.kind == "bernoulli":
        word: Dict[Site, int] = {}
        for layer in sorted({s.layer for s in sites}):
            layer_sites = [s for s in sites if s.layer == layer]
            p = np.array([float(v) for v in measure.vector_for(layer)])
            draws = rng.choice(len(p), size=len(layer_sites), p=p)
            word.update(zip(layer_sites, (int(d) for d in draws)))
        return word

    positions = _markov_positions(sites)
    symbols = [int(rng.choice(measure.alphabet_size, p=np.array(measure.stationary)))]
    for j in range(1, len(positions)):
        row = _matrix_power(measure.matrix, positions[j] - positions[j - 1])[symbols[-1]]
        symbols.append(int(rng.choice(measure.alphabet_size, p=row / row.sum())))
    return dict(zip(sites, symbols))


def permute_alphabet(measure: MeasureOracle, permutation: Sequence[int]) -> MeasureOracle:
    """Push the measure forward along the symbol bijection a -> permutation[a]"""
    perm = list(permutation)
    if sorted(perm) != list(range(measure.alphabet_size)):
        raise MeasureError(f"{perm} is not a permutation of the alphabet")
    if measure.kind == "bernoulli":
        permuted = []
        for vec in measure.vectors:
            new = [Fraction(0)] * len(vec)
            for a, p in enumerate(vec):
                new[perm[a]] = p
            permuted.append(tuple(new))
        return MeasureOracle("bernoulli", tuple(permuted))
    P = np.asarray(measure.matrix)
    Q = np.zeros_like(P)
    pi = np.zeros(len(perm))
    for a in range(len(perm)):
        pi[perm[a]] = measure.stationary[a]
        for b in range(len(perm)):
            Q[perm[a], perm[b]] = P[a, b]
    return MeasureOracle("markov", (), tuple(map(tuple, Q.tolist())), tuple(pi.tolist()))


def product_system(first: SymbolicSystem, second: SymbolicSystem,
                   first_measure: MeasureOracle, second_measure: MeasureOracle) -> Tuple[SymbolicSystem, MeasureOracle]:
    """X_1 x X_2 with the product measure; generators act on their own factor"""
    if first_measure.kind != "bernoulli" or second_measure.kind != "bernoulli":
        raise MeasureError("products are supported for Bernoulli factors only")
    first_measure.check_system(first)
    second_measure.check_system(second)
    zeros_first = tuple((0,) * layer.dim for layer in first.layers)
    zeros_second = tuple((0,) * layer.dim for layer in second.layers)
    displacements = (
        tuple(vectors + zeros_second for vectors in first.displacements)
        + tuple(zeros_first + vectors for vectors in second.displacements)
    )
    system = SymbolicSystem(first.layers + second.layers, displacements,
                            name=f"{first.name}x{second.name}")
    vectors = (
        tuple(first_measure.vector_for(c) for c in range(len(first.layers)))
        + tuple(second_measure.vector_for(c) for c in range(len(second.layers)))
    )
    return system, MeasureOracle("bernoulli", vectors)


def shift_partition(partition: CoordinatePartition, layer_offset: int) -> CoordinatePartition:
    """Re-index a factor's partition into the product's layer numbering"""
    return CoordinatePartition(
        tuple(Site(s.layer + layer_offset, s.point) for s in partition.coords), partition.role
    )


@dataclass(frozen=True, eq=False)
class FiniteApproximation:
    system: SymbolicSystem
    L: int
    sites: Tuple[Site, ...]
    patterns: np.ndarray = field(repr=False)

    @cached_property
    def fingerprint(self) -> str:
        return joblib.hash((self.system.fingerprint, self.L, self.patterns))

    @cached_property
    def column(self) -> Dict[Site, int]:
        return {s: i for i, s in enumerate(self.sites)}

    @property
    def size(self) -> int:
        return int(self.patterns.shape[0])

    def distance(self, i: int, j: int) -> float:
        """Induced metric: 2^-m for the least norm m of a differing site inside the window"""
        differ = self.patterns[i] != self.patterns[j]
        if not differ.any():
            return 0.0
        return 2.0 ** -min(self.sites[c].norm for c in np.flatnonzero(differ))

    def required_length(self, shifts: Iterable[Tuple[Vector, ...]], t: int) -> int:
        """Smallest L keeping shift + Ball_t inside the window for every shift"""
        return max(max(max(v) if v else 0 for v in shift) for shift in shifts) + t

    def check_domain(self, shifts: Sequence[Tuple[Vector, ...]], t: int):
        required = self.required_length(shifts, t)
        if required > self.L:
            raise DomainError(required, self.L)

    def level_classes(self, shift: Tuple[Vector, ...], level: int) -> np.ndarray:
        """Class id per point of the pattern read on the translated sites of norm `level`"""
        columns = [
            self.column[self.system.translate(s, shift)]
            for s in self.system.ball(level)
            if s.norm == level
        ]
        _, inverse = np.unique(self.patterns[:, columns], axis=0, return_inverse=True)
        return inverse.reshape(-1)

    def first_difference(self, shift: Tuple[Vector, ...], depth: int) -> np.ndarray:
        """Pairwise least differing level of the translated points, depth + 1 if none up to depth.

        The translated metric is then 2^-level, exact for levels <= depth.
        """
        first = np.full((self.size, self.size), depth + 1, dtype=np.int16)
        for level in range(depth + 1):
            ids = self.level_classes(shift, level)
            differ = ids[:, None] != ids[None, :]
            first[differ & (first > depth)] = level
        return first

    def export_table(self):
        from src.utils.data_transformations import point_table
        return point_table(self)


@memoize
def truncate(system: SymbolicSystem, L: int) -> FiniteApproximation:
    """Enumerate every pattern on [0, L]^d in every layer"""
    if L < 0:
        raise EntropyError(f"window length must be non-negative, got {L}")
    sites = system.window(L)
    radices = [system.layers[s.layer].alphabet_size for s in sites]
    count = math.prod(radices)
    budget = Config().enumeration_budget
    if count > budget:
        raise BudgetExceededError(f"truncation of {system.name} at L={L}", count, budget)

    index = np.arange(count, dtype=np.int64)
    patterns = np.empty((count, len(sites)), dtype=np.uint8)
    place = 1
    for c in range(len(sites) - 1, -1, -1):
        patterns[:, c] = (index // place) % radices[c]
        place *= radices[c]
    log.info("truncated %s at L=%d: %d points on %d sites", system.name, L, count, len(sites))
    return FiniteApproximation(system, L, sites, patterns)


def single_point_approximation(system: SymbolicSystem, L: int, pattern: Optional[Sequence[int]] = None) -> FiniteApproximation:
    """A one-point compact set inside the window"""
    sites = system.window(L)
    row = np.zeros((1, len(sites)), dtype=np.uint8)
    if pattern is not None:
        row[0, :] = np.asarray(pattern, dtype=np.uint8)
    return FiniteApproximation(system, L, sites, row)
