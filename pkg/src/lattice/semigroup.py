"""Regular systems in the monoid Z_+^k.

A regular system is a sequence (N_n) of finite subsets with the identity in N_0 and
N_i + N_j contained in N_{i+j}. Systems are stored extensionally up to ``n_max``;
every set is a lexicographically sorted tuple of lattice elements.
"""
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import joblib

from src.utils.config import Config
from src.utils.errors import EntropyError, IndexOverflowError, RegularityError

log = logging.getLogger(__name__)

LatticeElement = Tuple[int, ...]

KINDS = ("standard", "even", "scaled", "restricted", "dilated", "product", "custom")


def zero(k: int) -> LatticeElement:
    return (0,) * k


def add(g: LatticeElement, h: LatticeElement) -> LatticeElement:
    return tuple(a + b for a, b in zip(g, h))


@dataclass(frozen=True)
class RegularSystem:
    k: int
    sets: Tuple[Tuple[LatticeElement, ...], ...]
    kind: str
    nested: bool
    params: Tuple[Tuple[str, Any], ...] = field(default=())

    def __hash__(self):
        return hash(self.fingerprint)

    @cached_property
    def fingerprint(self) -> str:
        """Content hash; parametric kinds hash their document, custom kinds their sets"""
        if self.kind == "custom" or any(
            isinstance(v, RegularSystem) and v.kind == "custom" for v in self._bases()
        ):
            return joblib.hash((self.kind, self.k, self.sets))
        return joblib.hash(to_document(self))

    def _bases(self) -> List["RegularSystem"]:
        found = []
        for _, value in self.params:
            for item in value if isinstance(value, tuple) else (value,):
                if isinstance(item, RegularSystem):
                    found.append(item)
                    found.extend(item._bases())
        return found

    @property
    def n_max(self) -> int:
        return len(self.sets) - 1

    @property
    def parameters(self) -> Dict[str, Any]:
        return dict(self.params)

    def __getitem__(self, n: int) -> Tuple[LatticeElement, ...]:
        if n < 0 or n > self.n_max:
            raise IndexOverflowError(n, self.n_max)
        return self.sets[n]

    def size(self, n: int) -> int:
        return len(self[n])

    def contains_identity(self) -> bool:
        return zero(self.k) in set(self.sets[0])

    def describe(self) -> str:
        extra = ", ".join(
            f"{key}={value}" for key, value in self.params if not isinstance(value, RegularSystem)
        )
        return f"{self.kind}(k={self.k}, n_max={self.n_max}{', ' + extra if extra else ''})"


@dataclass(frozen=True)
class RegularityReport:
    valid: bool
    witness: Optional[Tuple[int, int, LatticeElement]] = None
    reason: str = "ok"


@dataclass(frozen=True)
class FolnerProfile:
    generator: LatticeElement
    defects: Tuple[Fraction, ...]
    compatible: bool


def _is_nested(sets: Sequence[Sequence[LatticeElement]]) -> bool:
    return all(set(a) <= set(b) for a, b in zip(sets, sets[1:]))


def _sorted_set(elements: Iterable[Union[int, Sequence[int]]]) -> Tuple[LatticeElement, ...]:
    """Bare integers are read as elements of Z_+"""
    return tuple(sorted({(int(g),) if isinstance(g, int) else tuple(int(c) for c in g) for g in elements}))


def regularity_work(system: RegularSystem) -> int:
    """Number of sums verify_regular enumerates"""
    return sum(
        len(system.sets[i]) * len(system.sets[j])
        for i in range(system.n_max + 1)
        for j in range(system.n_max + 1 - i)
    )


def _checked(system: RegularSystem) -> RegularSystem:
    """Verify regularity when the pair enumeration is affordable"""
    work = regularity_work(system)
    if work <= Config().enumeration_budget:
        report = verify_regular(system)
        if not report.valid:
            raise RegularityError(f"{system.describe()} is not regular: {report.reason}")
    else:
        log.debug("skipping regularity enumeration for %s (%d sums)", system.describe(), work)
    return system


def standard_system(k: int, n_max: int) -> RegularSystem:
    """N_n = [0, n]^k"""
    if k < 1 or n_max < 1:
        raise EntropyError(f"standard system needs k >= 1 and n_max >= 1, got k={k}, n_max={n_max}")
    sets = tuple(
        tuple(itertools.product(range(n + 1), repeat=k)) for n in range(n_max + 1)
    )
    return _checked(RegularSystem(k=k, sets=sets, kind="standard", nested=True))


def even_system(n_max: int) -> RegularSystem:
    """N_n = {0, 2, ..., 2n} in Z_+, regular but not Folner"""
    if n_max < 1:
        raise EntropyError(f"even system needs n_max >= 1, got {n_max}")
    sets = tuple(tuple((2 * i,) for i in range(n + 1)) for n in range(n_max + 1))
    return _checked(RegularSystem(k=1, sets=sets, kind="even", nested=True))


def custom_system(sets: Sequence[Iterable[Sequence[int]]], k: Optional[int] = None) -> RegularSystem:
    """Build a system from explicit element lists; regularity is not enforced here."""
    normalized = tuple(_sorted_set(s) for s in sets)
    if not normalized or any(not s for s in normalized):
        raise EntropyError("custom system needs at least one set and no empty sets")
    dims = {len(g) for s in normalized for g in s}
    if k is None:
        if len(dims) != 1:
            raise EntropyError(f"mixed element lengths {sorted(dims)}")
        k = dims.pop()
    elif dims != {k}:
        raise EntropyError(f"elements must have length {k}")
    if any(c < 0 for s in normalized for g in s for c in g):
        raise EntropyError("lattice elements must be non-negative")
    return RegularSystem(k=k, sets=normalized, kind="custom", nested=_is_nested(normalized))


def verify_regular(system: RegularSystem) -> RegularityReport:
    """Check e in N_0 and N_i + N_j within N_{i+j} for all i + j <= n_max.

    Pairs with a positive first index are scanned first (i, then j, then the
    offending sum g in lexicographic order); the N_0 + N_0 pair is checked last.
    """
    if not system.contains_identity():
        return RegularityReport(False, None, "identity missing from N_0")

    members = [set(s) for s in system.sets]
    pairs = [
        (i, j)
        for i in range(1, system.n_max + 1)
        for j in range(0, system.n_max - i + 1)
    ]
    pairs.append((0, 0))
    for i, j in pairs:
        target = members[i + j]
        sums = sorted({add(g, h) for g in system.sets[i] for h in system.sets[j]})
        for g in sums:
            if g not in target:
                return RegularityReport(
                    False, (i, j, g), f"N_{i} + N_{j} contains {g} outside N_{i + j}"
                )
    return RegularityReport(True)


def folner_defect(system: RegularSystem, g: LatticeElement, n: int) -> Fraction:
    """|N_n symmetric-difference (g + N_n)| / |N_n|, exactly"""
    base = set(system[n])
    shifted = {add(g, h) for h in base}
    return Fraction(len(base ^ shifted), len(base))


def folner_profile(system: RegularSystem, g: LatticeElement) -> FolnerProfile:
    defects = tuple(folner_defect(system, g, n) for n in range(system.n_max + 1))
    non_increasing = all(a >= b for a, b in zip(defects, defects[1:]))
    compatible = non_increasing and (defects[-1] == 0 or defects[-1] < defects[0])
    return FolnerProfile(generator=tuple(g), defects=defects, compatible=compatible)


def growth_constant(system: RegularSystem) -> Fraction:
    """min |N_n| / n^2 over 1 <= n <= n_max"""
    return min(Fraction(system.size(n), n * n) for n in range(1, system.n_max + 1))


def scaled_system(system: RegularSystem, p: int, n_max: Optional[int] = None) -> RegularSystem:
    """N'_n = N_{pn}"""
    if p < 1:
        raise EntropyError(f"scale factor must be positive, got {p}")
    if n_max is None:
        n_max = system.n_max // p
    if p * n_max > system.n_max:
        raise IndexOverflowError(p * n_max, system.n_max)
    if p == 1 and n_max == system.n_max:
        return system
    sets = tuple(system.sets[p * n] for n in range(n_max + 1))
    return RegularSystem(
        k=system.k, sets=sets, kind="scaled", nested=_is_nested(sets),
        params=(("p", p), ("base", system)),
    )


def restricted_system(system: RegularSystem, moduli: Sequence[int]) -> RegularSystem:
    """M_n = N_n intersected with p_1 Z_+ x ... x p_k Z_+, in ambient coordinates"""
    moduli = tuple(int(m) for m in moduli)
    if len(moduli) != system.k or any(m < 1 for m in moduli):
        raise EntropyError(f"need {system.k} moduli >= 1, got {moduli}")
    if all(m == 1 for m in moduli):
        return system
    sets = tuple(
        tuple(g for g in s if all(c % m == 0 for c, m in zip(g, moduli)))
        for s in system.sets
    )
    return RegularSystem(
        k=system.k, sets=sets, kind="restricted", nested=_is_nested(sets),
        params=(("moduli", moduli), ("base", system)),
    )


def dilated_system(system: RegularSystem, p: int) -> RegularSystem:
    """pN_n = {p g : g in N_n}"""
    if p < 1:
        raise EntropyError(f"dilation factor must be positive, got {p}")
    if p == 1:
        return system
    sets = tuple(tuple(tuple(p * c for c in g) for g in s) for s in system.sets)
    return RegularSystem(
        k=system.k, sets=sets, kind="dilated", nested=system.nested,
        params=(("p", p), ("base", system)),
    )


def product_regular_system(first: RegularSystem, second: RegularSystem) -> RegularSystem:
    """N_n = N^1_n x N^2_n in Z_+^(k1+k2)"""
    n_max = min(first.n_max, second.n_max)
    if first.kind == "standard" and second.kind == "standard":
        return standard_system(first.k + second.k, n_max)
    sets = tuple(
        tuple(g + h for g, h in itertools.product(first.sets[n], second.sets[n]))
        for n in range(n_max + 1)
    )
    return RegularSystem(
        k=first.k + second.k, sets=sets, kind="product", nested=_is_nested(sets),
        params=(("factors", (first, second)),),
    )


def to_document(system: RegularSystem) -> Dict[str, Any]:
    """Plain-data form suitable for YAML"""
    doc: Dict[str, Any] = {"kind": system.kind, "n_max": system.n_max}
    params = system.parameters
    if system.kind == "standard":
        doc["k"] = system.k
    elif system.kind in ("scaled", "dilated"):
        doc["p"] = params["p"]
        doc["base"] = to_document(params["base"])
    elif system.kind == "restricted":
        doc["moduli"] = list(params["moduli"])
        doc["base"] = to_document(params["base"])
    elif system.kind == "product":
        doc["factors"] = [to_document(f) for f in params["factors"]]
    elif system.kind == "custom":
        doc["k"] = system.k
        doc["sets"] = [[list(g) for g in s] for s in system.sets]
    return doc


def from_document(doc: Dict[str, Any]) -> RegularSystem:
    kind = doc.get("kind")
    if kind == "standard":
        return standard_system(int(doc["k"]), int(doc["n_max"]))
    if kind == "even":
        return even_system(int(doc["n_max"]))
    if kind == "scaled":
        return scaled_system(from_document(doc["base"]), int(doc["p"]), int(doc["n_max"]))
    if kind == "restricted":
        return restricted_system(from_document(doc["base"]), doc["moduli"])
    if kind == "dilated":
        return dilated_system(from_document(doc["base"]), int(doc["p"]))
    if kind == "product":
        first, second = (from_document(f) for f in doc["factors"])
        return product_regular_system(first, second)
    if kind == "custom":
        return custom_system(doc["sets"], int(doc["k"]))
    raise EntropyError(f"unknown regular system kind {kind!r}; expected one of {KINDS}")


def unit_generators(k: int) -> List[LatticeElement]:
    return [tuple(1 if i == j else 0 for i in range(k)) for j in range(k)]
