import math
import numpy as np
import pytest
from pydantic import ValidationError

from relaycov.domain.model import NavGraph
from relaycov.domain.relay import Chain, ChainValidationError, mlmc_tree, chain_cost
from relaycov.tests.graph_helpers import (
    make_graph, edge_cost_from, symmetric_costs, random_instance, brute_force_label
)


def unit_line(n: int) -> NavGraph:
    return make_graph([(float(i), 0.0) for i in range(n)], [(i, i + 1) for i in range(n - 1)])


def test_single_node_tree():
    g = make_graph([(0.0, 0.0)], [])
    tree = mlmc_tree(g, 0, lambda n, m: 1.0)
    assert tree.depth == (0,)
    assert tree.modified_cost == (0.0,)
    assert tree.chain_to(0) == Chain(nodes=(0,))


def test_line_unit_costs():
    g = unit_line(3)
    tree = mlmc_tree(g, 0, lambda n, m: 1.0)
    assert tree.label(2) == (2.0, 2)
    assert tree.chain_to(2).nodes == (0, 1, 2)


def test_diamond_prefers_cost_over_hops(diamond: NavGraph, diamond_costs):
    tree = mlmc_tree(diamond, 0, edge_cost_from(diamond_costs))
    assert tree.chain_to(3).nodes == (0, 1, 3)
    assert tree.label(3) == (3.0, 2)


def test_alpha_raises_every_edge(diamond: NavGraph, diamond_costs):
    tree = mlmc_tree(diamond, 0, edge_cost_from(diamond_costs), alpha=3.0)
    # 1 + 2 + 2 * 3 against 5 + 3
    assert tree.chain_to(3).nodes == (0, 3)
    assert tree.label(3) == (8.0, 1)


def test_equal_cost_fewer_hops():
    g = make_graph([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], [(0, 1), (1, 2), (0, 2)])
    costs = symmetric_costs([(0, 1, 1.0), (1, 2, 1.0), (0, 2, 2.0)])
    tree = mlmc_tree(g, 0, edge_cost_from(costs))
    assert tree.label(2) == (2.0, 1)
    assert tree.parent[2] == 0


def test_equal_labels_lower_parent():
    g = make_graph([(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (2.0, 0.0)], [(0, 2), (0, 1), (2, 3), (1, 3)])
    tree = mlmc_tree(g, 0, lambda n, m: 1.0)
    assert tree.parent[3] == 1


def test_unreachable_nodes_marked():
    g = make_graph([(0.0, 0.0), (1.0, 0.0), (5.0, 5.0)], [(0, 1)])
    tree = mlmc_tree(g, 0, lambda n, m: 1.0)
    assert not tree.is_reachable(2)
    assert tree.parent[2] is None
    assert math.isinf(tree.modified_cost[2])
    assert tree.chain_to(2) is None


def test_infinite_cost_edges_ignored(diamond: NavGraph, diamond_costs):
    costs = dict(diamond_costs)
    costs[(1, 3)] = math.inf
    tree = mlmc_tree(diamond, 0, edge_cost_from(costs))
    assert tree.chain_to(3).nodes == (0, 3)


def test_tree_consistency_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        g, costs = random_instance(rng, connected=False)
        alpha = float(rng.uniform(0, 3))
        tree = mlmc_tree(g, g.base_node, edge_cost_from(costs), alpha)
        assert tree.depth[g.base_node] == 0 and tree.modified_cost[g.base_node] == 0
        for n in range(g.node_count):
            p = tree.parent[n]
            if n == g.base_node or not tree.is_reachable(n):
                continue
            assert tree.depth[n] == tree.depth[p] + 1
            assert tree.modified_cost[n] == pytest.approx(tree.modified_cost[p] + costs[(p, n)] + alpha)


def test_labels_match_brute_force():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        g, costs = random_instance(rng, connected=bool(rng.random() < 0.8))
        tree = mlmc_tree(g, g.base_node, edge_cost_from(costs))
        for n in range(g.node_count):
            expected = brute_force_label(g, n, costs)
            if expected is None:
                assert not tree.is_reachable(n)
            else:
                assert tree.label(n) == expected


# Tests for chains and their cost
def test_chain_rejects_repeats():
    with pytest.raises(ValidationError):
        Chain(nodes=(0, 1, 0))


def test_chain_rejects_empty():
    with pytest.raises(ValidationError):
        Chain(nodes=())


def test_chain_cost_single_node(diamond: NavGraph, diamond_costs):
    assert chain_cost(diamond, Chain(nodes=(0,)), edge_cost_from(diamond_costs)) == 0


def test_chain_cost_sums_edges():
    g = unit_line(3)
    costs = symmetric_costs([(0, 1, 2.0), (1, 2, 3.0)])
    assert chain_cost(g, Chain(nodes=(0, 1, 2)), edge_cost_from(costs)) == 5.0


def test_chain_cost_missing_edge():
    g = unit_line(3)
    with pytest.raises(ChainValidationError):
        chain_cost(g, Chain(nodes=(0, 2)), lambda n, m: 1.0)


def test_chain_parts():
    chain = Chain(nodes=(0, 4, 7, 9))
    assert chain.length == 3
    assert (chain.base, chain.target) == (0, 9)
    assert chain.interior == (4, 7)
    assert list(chain.pairs()) == [(0, 4), (4, 7), (7, 9)]
