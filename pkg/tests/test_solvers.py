import itertools
import random

import networkx as nx
import pytest

from src.models.solvers import greedy_set_cover, max_clique, min_set_cover
from src.utils.errors import EntropyError


def masks(graph):
    return [sum(1 << u for u in graph[v]) for v in range(graph.number_of_nodes())]


def brute_force_cover(sets, universe):
    for size in range(len(sets) + 1):
        for combo in itertools.combinations(range(len(sets)), size):
            union = 0
            for i in combo:
                union |= sets[i]
            if union & universe == universe:
                return size
    raise AssertionError("no cover")


@pytest.mark.parametrize("seed", range(12))
def test_max_clique_matches_networkx(seed):
    graph = nx.gnp_random_graph(22, 0.5, seed=seed)
    result = max_clique(masks(graph))
    expected, _ = nx.max_weight_clique(graph, weight=None)
    assert result.exact
    assert result.size == len(expected)
    for u, v in itertools.combinations(result.clique, 2):
        assert graph.has_edge(u, v)


def test_clique_edge_cases():
    assert max_clique([]).size == 0
    assert max_clique([0, 0, 0]).size == 1
    complete = nx.complete_graph(9)
    assert max_clique(masks(complete)).clique == list(range(9))


def test_clique_vertex_budget_falls_back_to_greedy():
    graph = nx.gnp_random_graph(30, 0.4, seed=3)
    result = max_clique(masks(graph), vertex_budget=10)
    assert not result.exact
    assert result.nodes == 0
    for u, v in itertools.combinations(result.clique, 2):
        assert graph.has_edge(u, v)


def test_clique_node_budget_keeps_a_lower_bound():
    graph = nx.gnp_random_graph(40, 0.6, seed=5)
    result = max_clique(masks(graph), node_budget=1)
    expected, _ = nx.max_weight_clique(graph, weight=None)
    assert 1 <= result.size <= len(expected)


@pytest.mark.parametrize("seed", range(8))
def test_min_set_cover_matches_brute_force(seed):
    rng = random.Random(seed)
    universe = (1 << 10) - 1
    sets = [rng.getrandbits(10) for _ in range(9)]
    sets.append(universe & ~(sets[0] | sets[1]))  # guarantees a cover
    result = min_set_cover(sets, universe)
    assert result.exact
    assert result.size == brute_force_cover(sets, universe)
    union = 0
    for i in result.chosen:
        union |= sets[i]
    assert union & universe == universe


def test_duplicate_sets_report_the_first_index():
    result = min_set_cover([0b011, 0b011, 0b100], 0b111)
    assert result.chosen == [0, 2]


def test_uncoverable_universe():
    with pytest.raises(EntropyError):
        min_set_cover([0b001, 0b010], 0b111)
    with pytest.raises(EntropyError):
        greedy_set_cover([0b001], 0b011)


def test_empty_universe():
    assert min_set_cover([0b1], 0).size == 0


def test_set_cover_node_budget_is_an_upper_bound():
    universe = (1 << 12) - 1
    sets = [1 << i | 1 << ((i + 1) % 12) | 1 << ((i + 5) % 12) for i in range(12)]
    result = min_set_cover(sets, universe, node_budget=1)
    assert result.nodes <= 2
    assert result.size >= brute_force_cover(sets, universe)
