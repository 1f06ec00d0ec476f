import copy
import itertools
import pytest
from pytest import approx
from pydantic import ValidationError

from relaycov.domain.model import (
    NavGraph, Position, Rectangle, GraphValidationError, build_grid_graph, comm_reachable, comm_cost,
    clutter_fraction
)
from relaycov.domain.scenario import build_navgraph


def line_graph(length: float, d_comm_max: float, obstacles=()) -> NavGraph:
    return build_grid_graph(length, 5.0, 5.0, Position(x=0.0, y=0.0), obstacles, d_comm_max, 10.0)


@pytest.mark.parametrize("width,height,d_comm_max,nodes,edges", [
    (70.0, 70.0, 7.5, 196, None),
    (5.0, 5.0, 5.0, 1, 0),
    (10.0, 5.0, 5.0, 2, 2),
])
def test_lattice_size(width, height, d_comm_max, nodes, edges):
    g = build_grid_graph(width, height, 5.0, Position(x=0.0, y=0.0), (), d_comm_max, 10.0)
    assert g.node_count == nodes
    assert g.base_node == 0
    if edges is not None:
        assert len(g.edges) == edges


def test_lattice_row_major():
    g = build_grid_graph(15.0, 10.0, 5.0, Position(x=0.0, y=0.0), (), 5.0, 10.0)
    assert (g.cols, g.rows) == (3, 2)
    assert g.position(4) == Position(x=7.5, y=7.5)


def test_eight_neighbourhood_from_range():
    g = build_grid_graph(15.0, 15.0, 5.0, Position(x=0.0, y=0.0), (), 7.5, 10.0)
    # centre of a 3x3 lattice reaches every other node
    assert g.neighbors[4] == (0, 1, 2, 3, 5, 6, 7, 8)
    four = build_grid_graph(15.0, 15.0, 5.0, Position(x=0.0, y=0.0), (), 5.0, 10.0)
    assert four.neighbors[4] == (1, 3, 5, 7)


def test_base_nearest_node():
    g = build_grid_graph(20.0, 20.0, 5.0, Position(x=19.0, y=1.0), (), 5.0, 10.0)
    assert g.base_node == 3


def test_spacing_larger_than_map():
    with pytest.raises(GraphValidationError):
        build_grid_graph(4.0, 10.0, 5.0, Position(x=0.0, y=0.0), (), 5.0, 10.0)


def test_base_inside_obstacle():
    with pytest.raises(GraphValidationError):
        build_grid_graph(20.0, 20.0, 5.0, Position(x=2.0, y=2.0),
                         [Rectangle(x_min=0.0, y_min=0.0, x_max=4.0, y_max=4.0)], 5.0, 10.0)


def test_rectangle_corners_out_of_order():
    with pytest.raises(ValidationError):
        Rectangle(x_min=5.0, y_min=0.0, x_max=1.0, y_max=4.0)


def test_edges_must_be_symmetric(tiny_graph: NavGraph):
    d = {f.name: getattr(tiny_graph, f.name) for f in tiny_graph.__dataclass_fields__.values()}
    d["edges"] = frozenset({(0, 1)})
    with pytest.raises(ValidationError):
        NavGraph(**d)


def test_edges_must_avoid_obstacle_nodes(corridor_graph: NavGraph):
    d = {f.name: getattr(corridor_graph, f.name) for f in corridor_graph.__dataclass_fields__.values()}
    d["edges"] = corridor_graph.edges | {(13, 14), (14, 13)}
    with pytest.raises(ValidationError):
        NavGraph(**d)


# Tests for communication reachability
def test_reachable_self(tiny_graph: NavGraph):
    assert comm_reachable(tiny_graph, 2, 2)


def test_reachable_inclusive_boundary():
    g = line_graph(15.0, 10.0)
    assert g.distance(0, 2) == approx(10.0)
    assert comm_reachable(g, 0, 2)
    assert g.has_edge(0, 2)


def test_obstacle_across_segment_prunes_edge():
    g = line_graph(15.0, 5.0, [Rectangle(x_min=4.0, y_min=0.0, x_max=6.0, y_max=5.0)])
    assert not g.obstacle_nodes
    assert not comm_reachable(g, 0, 1)
    assert not g.has_edge(0, 1)
    assert g.has_edge(1, 2)


def test_touching_obstacle_boundary_does_not_prune():
    g = line_graph(15.0, 5.0, [Rectangle(x_min=4.0, y_min=2.5, x_max=6.0, y_max=5.0)])
    assert comm_reachable(g, 0, 1)
    assert g.has_edge(0, 1)


def test_corridor_obstacle_nodes(corridor_graph: NavGraph):
    assert corridor_graph.obstacle_nodes == frozenset({14, 15, 20, 21, 26, 27})
    assert set(corridor_graph.coverage_nodes).isdisjoint(corridor_graph.obstacle_nodes)
    assert len(corridor_graph.coverage_nodes) == 30


def test_edge_symmetry(corridor_graph: NavGraph):
    for src, dst in corridor_graph.edges:
        assert (dst, src) in corridor_graph.edges


def test_reachability_consistency(corridor_graph: NavGraph):
    free = [n for n in range(corridor_graph.node_count) if n not in corridor_graph.obstacle_nodes]
    for n, m in itertools.permutations(free, 2):
        within = corridor_graph.distance(n, m) <= corridor_graph.d_comm_max + 1e-9
        if not within:
            assert not corridor_graph.has_edge(n, m)
            continue
        assert corridor_graph.has_edge(n, m) == comm_reachable(corridor_graph, n, m)
        if not corridor_graph.has_edge(n, m):
            a, b = corridor_graph.position(n), corridor_graph.position(m)
            assert any(r.crossed_by(a, b) for r in corridor_graph.obstacles)


# Tests for communication cost
def test_comm_cost_self_is_zero(tiny_graph: NavGraph):
    assert comm_cost(tiny_graph, 0, 0) == 0


def test_comm_cost_half_range():
    g = line_graph(15.0, 10.0)
    assert comm_cost(g, 0, 1) == approx(5.0)


def test_comm_cost_saturates():
    g = line_graph(25.0, 10.0)
    assert comm_cost(g, 0, 2) == approx(10.0)
    assert comm_cost(g, 0, 4) == approx(10.0)


def test_comm_cost_symmetric_non_negative(corridor_graph: NavGraph):
    for n, m in itertools.combinations(range(corridor_graph.node_count), 2):
        c = comm_cost(corridor_graph, n, m)
        assert c >= 0
        assert c == comm_cost(corridor_graph, m, n)


def test_comm_cost_monotone_in_distance():
    g = line_graph(50.0, 20.0)
    costs = [comm_cost(g, 0, m) for m in range(1, g.node_count)]
    assert costs == sorted(costs)


def test_clutter_penalty_near_obstacle(corridor_graph: NavGraph):
    # column 1 runs alongside the obstacle block, 3.5 m away
    assert clutter_fraction(corridor_graph, 13, 19) == approx(1.0)
    assert clutter_fraction(corridor_graph, 0, 1) == 0.0
    assert comm_cost(corridor_graph, 13, 19) == approx(5.0 + corridor_graph.obstacle_weight)


def test_default_penalty_parameters(corridor_graph: NavGraph):
    assert corridor_graph.obstacle_weight == approx(2.0)
    assert corridor_graph.clutter_radius == approx(5.0)


# Tests for graph hashing
def test_graph_hashable(tiny_graph: NavGraph):
    assert hash(tiny_graph)


def test_graph_hash_same(corridor_graph: NavGraph):
    other = copy.deepcopy(corridor_graph)
    assert hash(other) == hash(corridor_graph)
    assert other.get_id() == corridor_graph.get_id()


def test_graph_build_deterministic(corridor, corridor_graph: NavGraph):
    again = build_navgraph(corridor)
    assert again == corridor_graph
    assert again.comm_cost_table == corridor_graph.comm_cost_table


def test_graph_hash_obstacle_changes_id():
    plain = line_graph(15.0, 5.0)
    blocked = line_graph(15.0, 5.0, [Rectangle(x_min=4.0, y_min=0.0, x_max=6.0, y_max=5.0)])
    assert plain.get_id() != blocked.get_id()


def test_node_at(corridor_graph: NavGraph):
    assert corridor_graph.node_at(Position(x=13.0, y=8.0)) == 8
    assert corridor_graph.node_at(Position(x=0.0, y=0.0)) == 0
