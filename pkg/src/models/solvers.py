"""Exact branch-and-bound kernels on bitset graphs and set systems.

Vertices and universe elements are small integers; a set of them is a Python int
used as a bitmask. Both searches keep an explicit stack, carry a node budget and
fall back to the best bound found so far (flagged inexact) when it runs out.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from src.utils.config import Config
from src.utils.errors import EntropyError

log = logging.getLogger(__name__)


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def _members(mask: int) -> List[int]:
    found = []
    while mask:
        low = mask & -mask
        found.append(low.bit_length() - 1)
        mask ^= low
    return found


@dataclass
class CliqueResult:
    clique: List[int]
    exact: bool
    nodes: int

    @property
    def size(self) -> int:
        return len(self.clique)


@dataclass
class CoverResult:
    chosen: List[int]
    exact: bool
    nodes: int

    @property
    def size(self) -> int:
        return len(self.chosen)


def _greedy_clique(adjacency: Sequence[int], order: Sequence[int], starts: int = 16) -> List[int]:
    best: List[int] = []
    for start in order[:starts]:
        clique = [start]
        candidates = adjacency[start]
        for v in order:
            if candidates >> v & 1:
                clique.append(v)
                candidates &= adjacency[v]
        if len(clique) > len(best):
            best = clique
    return best


def _color_classes(candidates: int, adjacency: Sequence[int]) -> List[Tuple[int, int]]:
    """Greedy sequential colouring; (vertex, colour) pairs in ascending colour"""
    colored = []
    color = 0
    uncolored = candidates
    while uncolored:
        color += 1
        available = uncolored
        while available:
            low = available & -available
            v = low.bit_length() - 1
            available &= ~low & ~adjacency[v]
            uncolored &= ~low
            colored.append((v, color))
    return colored


def max_clique(adjacency: Sequence[int], vertex_budget: Optional[int] = None,
               node_budget: Optional[int] = None) -> CliqueResult:
    """Maximum clique of the graph whose vertex v has neighbour mask adjacency[v].

    Vertices are searched in descending degree order with a colouring bound;
    beyond `vertex_budget` vertices only the greedy lower bound is returned.
    """
    config = Config()
    vertex_budget = config.clique_budget if vertex_budget is None else vertex_budget
    node_budget = config.clique_node_budget if node_budget is None else node_budget
    n = len(adjacency)
    if n == 0:
        return CliqueResult([], True, 0)

    order = sorted(range(n), key=lambda v: (-_popcount(adjacency[v]), v))
    position = {v: i for i, v in enumerate(order)}
    ranked = [0] * n
    for v, mask in enumerate(adjacency):
        ranked[position[v]] = sum(1 << position[u] for u in _members(mask) if u != v)

    best = _greedy_clique(ranked, list(range(n)))
    if n > vertex_budget:
        log.warning("clique on %d vertices exceeds budget %d; greedy lower bound %d",
                    n, vertex_budget, len(best))
        return CliqueResult(sorted(order[v] for v in best), False, 0)

    nodes = 0
    exact = True
    stack: List[Tuple[List[int], int, int]] = [([], (1 << n) - 1, n)]
    while stack:
        clique, candidates, bound = stack.pop()
        if bound <= len(best):
            continue
        nodes += 1
        if nodes > node_budget:
            exact = False
            log.warning("clique search stopped after %d nodes; lower bound %d", node_budget, len(best))
            break
        children = []
        for v, color in reversed(_color_classes(candidates, ranked)):
            if len(clique) + color <= len(best):
                break
            extended = clique + [v]
            remaining = candidates & ranked[v]
            if remaining == 0:
                if len(extended) > len(best):
                    best = extended
            else:
                children.append((extended, remaining, len(clique) + color))
            candidates &= ~(1 << v)
        stack.extend(reversed(children))

    log.debug("max clique %d on %d vertices after %d nodes", len(best), n, nodes)
    return CliqueResult(sorted(order[v] for v in best), exact, nodes)


def greedy_set_cover(sets: Sequence[int], universe: int) -> List[int]:
    """ln-factor greedy cover; ties go to the lowest set index"""
    chosen = []
    uncovered = universe
    while uncovered:
        gains = [_popcount(s & uncovered) for s in sets]
        i = max(range(len(sets)), key=lambda j: (gains[j], -j))
        if gains[i] == 0:
            raise EntropyError("sets do not cover the universe")
        chosen.append(i)
        uncovered &= ~sets[i]
    return chosen


def min_set_cover(sets: Sequence[int], universe: int, node_budget: Optional[int] = None) -> CoverResult:
    """Minimum number of sets whose union contains `universe`.

    Branches on the lowest uncovered element; the bound is the chosen count plus
    the uncovered count divided by the largest remaining gain.
    """
    node_budget = Config().set_cover_node_budget if node_budget is None else node_budget
    if universe == 0:
        return CoverResult([], True, 0)

    first_index: Dict[int, int] = {}
    for i, s in enumerate(sets):
        if s & universe:
            first_index.setdefault(s & universe, i)
    distinct = list(first_index)
    covered = 0
    for s in distinct:
        covered |= s
    if covered != universe:
        raise EntropyError("sets do not cover the universe")

    containing: Dict[int, List[int]] = {}
    for j, s in enumerate(distinct):
        for e in _members(s):
            containing.setdefault(e, []).append(j)

    best = greedy_set_cover(distinct, universe)
    nodes = 0
    exact = True
    stack: List[Tuple[Tuple[int, ...], int]] = [((), universe)]
    while stack:
        chosen, uncovered = stack.pop()
        if uncovered == 0:
            if len(chosen) < len(best):
                best = list(chosen)
            continue
        nodes += 1
        if nodes > node_budget:
            exact = False
            log.warning("set cover search stopped after %d nodes; upper bound %d", node_budget, len(best))
            break
        widest = max(_popcount(s & uncovered) for s in distinct)
        if len(chosen) + math.ceil(_popcount(uncovered) / widest) >= len(best):
            continue
        element = (uncovered & -uncovered).bit_length() - 1
        options = sorted(containing[element], key=lambda j: (_popcount(distinct[j] & uncovered), -j))
        for j in options:
            stack.append((chosen + (j,), uncovered & ~distinct[j]))

    chosen = sorted(first_index[distinct[j]] for j in best)
    return CoverResult(chosen, exact, nodes)
