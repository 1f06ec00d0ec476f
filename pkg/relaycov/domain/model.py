from typing import Dict, FrozenSet, Iterable, Optional, Tuple
from functools import cached_property
from hashlib import md5
import logging
import math

import networkx as nx
import numpy as np
from pydantic import validator, root_validator
from pydantic.dataclasses import dataclass

logger = logging.getLogger(__name__)

NodeId = int
EdgeKey = Tuple[NodeId, NodeId]

# Distances within this tolerance of d_comm_max are still reachable.
DISTANCE_TOLERANCE = 1e-9
SEGMENT_SAMPLES = 11


class GraphValidationError(Exception):
    def __init__(self, message):
        super().__init__(message)
        self.message = message


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    @validator('x', 'y')
    def coordinate_non_negative(cls, v):
        if v < 0:
            raise ValueError("Coordinates must be non-negative: {}".format(v))
        return v

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Rectangle:
    """ Axis-aligned obstacle footprint. """
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @root_validator()
    def corners_ordered(cls, values):
        if any(k not in values for k in ("x_min", "y_min", "x_max", "y_max")):
            return values
        if values["x_min"] > values["x_max"] or values["y_min"] > values["y_max"]:
            raise ValueError("Rectangle corners out of order: {}".format(values))
        return values

    def contains(self, p: Position) -> bool:
        return self.x_min <= p.x <= self.x_max and self.y_min <= p.y <= self.y_max

    def distances(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        dx = np.maximum(np.maximum(self.x_min - xs, 0.0), xs - self.x_max)
        dy = np.maximum(np.maximum(self.y_min - ys, 0.0), ys - self.y_max)
        return np.hypot(dx, dy)

    def crossed_by(self, a: Position, b: Position) -> bool:
        """ True if the segment a-b passes through the open interior.
        Grazing an edge or a corner does not count. """
        dx, dy = b.x - a.x, b.y - a.y
        if dx == 0 and dy == 0:
            return False

        t0, t1 = 0.0, 1.0
        for p, q in ((-dx, a.x - self.x_min), (dx, self.x_max - a.x),
                     (-dy, a.y - self.y_min), (dy, self.y_max - a.y)):
            if p == 0:
                if q < 0:
                    return False
                continue
            t = q / p
            if p < 0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
            if t0 > t1:
                return False

        if t1 - t0 <= DISTANCE_TOLERANCE:
            return False
        tm = (t0 + t1) / 2
        mx, my = a.x + tm * dx, a.y + tm * dy
        return self.x_min < mx < self.x_max and self.y_min < my < self.y_max


@dataclass(frozen=True)
class NavGraph:
    positions: Tuple[Position, ...]
    edges: FrozenSet[Tuple[int, int]]
    base_node: int
    obstacle_nodes: FrozenSet[int]
    obstacles: Tuple[Rectangle, ...]
    spacing: float
    cols: int
    rows: int
    d_comm_max: float
    c_comm_max: float
    obstacle_weight: float
    clutter_radius: float

    @validator('edges')
    def edges_must_refer_to_nodes(cls, v, values):
        if "positions" not in values:
            return v
        n = len(values["positions"])
        for src, dst in v:
            if not (0 <= src < n and 0 <= dst < n):
                raise ValueError("Edge refers to unknown node: {}".format((src, dst)))
            if src == dst:
                raise ValueError("Self loops are not allowed: {}".format((src, dst)))
            if (dst, src) not in v:
                raise ValueError("Edge inserted in one direction only: {}".format((src, dst)))
        return v

    @root_validator(skip_on_failure=True)
    def obstacles_isolated(cls, values):
        obstacle_nodes = values["obstacle_nodes"]
        if values["base_node"] in obstacle_nodes:
            raise ValueError("Base node is an obstacle node.")
        if not 0 <= values["base_node"] < len(values["positions"]):
            raise ValueError("Base node not in graph: {}".format(values["base_node"]))
        positions = values["positions"]
        for src, dst in values["edges"]:
            if src in obstacle_nodes or dst in obstacle_nodes:
                raise ValueError("Edge incident to an obstacle node: {}".format((src, dst)))
            if positions[src].distance_to(positions[dst]) > values["d_comm_max"] + DISTANCE_TOLERANCE:
                raise ValueError("Edge longer than d_comm_max: {}".format((src, dst)))
            if any(r.crossed_by(positions[src], positions[dst]) for r in values["obstacles"]):
                raise ValueError("Edge crosses an obstacle: {}".format((src, dst)))
        return values

    def __hash__(self):
        return hash(self.get_id())

    @cached_property
    def _id(self) -> str:
        message = "{}|{}|{}|{}|{}|{}".format(self.cols, self.rows, self.spacing, self.base_node,
                                             self.d_comm_max, self.c_comm_max)
        message += "|{}|{}".format(self.obstacle_weight, self.clutter_radius)
        for r in self.obstacles:
            message += "|{},{},{},{}".format(r.x_min, r.y_min, r.x_max, r.y_max)
        for src, dst in sorted(self.edges):
            message += "|{}>{}".format(src, dst)
        return md5(message.encode('utf-8')).hexdigest()

    def get_id(self) -> str:
        return self._id

    @property
    def node_count(self) -> int:
        return len(self.positions)

    @cached_property
    def neighbors(self) -> Tuple[Tuple[int, ...], ...]:
        adjacency = [[] for _ in range(self.node_count)]
        for src, dst in self.edges:
            adjacency[src].append(dst)
        return tuple(tuple(sorted(adj)) for adj in adjacency)

    @cached_property
    def sorted_edges(self) -> Tuple[EdgeKey, ...]:
        return tuple(sorted(self.edges))

    @cached_property
    def digraph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.node_count))
        graph.add_edges_from(self.sorted_edges)
        return graph

    @cached_property
    def reachable_nodes(self) -> FrozenSet[int]:
        return frozenset(nx.descendants(self.digraph, self.base_node)) | {self.base_node}

    @cached_property
    def coverage_nodes(self) -> Tuple[int, ...]:
        """ Nodes that a coverage run must visit: reachable from the base and free of obstacles. """
        return tuple(sorted(self.reachable_nodes - self.obstacle_nodes))

    @cached_property
    def hop_distances(self) -> Dict[int, int]:
        return dict(nx.single_source_shortest_path_length(self.digraph, self.base_node))

    @cached_property
    def comm_cost_table(self) -> Dict[EdgeKey, float]:
        return {e: comm_cost(self, e[0], e[1]) for e in self.sorted_edges}

    def position(self, n: int) -> Position:
        return self.positions[n]

    def distance(self, n: int, m: int) -> float:
        return self.positions[n].distance_to(self.positions[m])

    def has_edge(self, n: int, m: int) -> bool:
        return (n, m) in self.edges

    def node_at(self, p: Position) -> int:
        """ The lattice node nearest to p, lowest id on ties. """
        xs = np.array([q.x for q in self.positions])
        ys = np.array([q.y for q in self.positions])
        return int(np.argmin(np.hypot(xs - p.x, ys - p.y)))


def comm_reachable(g: NavGraph, n: int, m: int) -> bool:
    a, b = g.positions[n], g.positions[m]
    if a.distance_to(b) > g.d_comm_max + DISTANCE_TOLERANCE:
        return False
    return not any(r.crossed_by(a, b) for r in g.obstacles)


def clutter_fraction(g: NavGraph, n: int, m: int) -> float:
    if not g.obstacles:
        return 0.0
    # canonical direction keeps the sampled point set identical both ways
    n, m = min(n, m), max(n, m)
    a, b = g.positions[n], g.positions[m]
    ts = np.linspace(0.0, 1.0, SEGMENT_SAMPLES) if n != m else np.zeros(1)
    xs = a.x + ts * (b.x - a.x)
    ys = a.y + ts * (b.y - a.y)
    nearest = np.min(np.stack([r.distances(xs, ys) for r in g.obstacles]), axis=0)
    return float(np.mean(nearest <= g.clutter_radius))


def comm_cost(g: NavGraph, n: int, m: int) -> float:
    d = g.distance(n, m)
    cost = g.c_comm_max * min(d / g.d_comm_max, 1.0)
    return cost + g.obstacle_weight * clutter_fraction(g, n, m)


def _lattice_offsets(spacing: float, d_comm_max: float):
    reach = int(math.floor(d_comm_max / spacing + DISTANCE_TOLERANCE))
    for dj in range(-reach, reach + 1):
        for di in range(-reach, reach + 1):
            if (di, dj) == (0, 0):
                continue
            if math.hypot(di, dj) * spacing <= d_comm_max + DISTANCE_TOLERANCE:
                yield di, dj


def build_grid_graph(width: float, height: float, spacing: float, base: Position,
                     obstacles: Iterable[Rectangle], d_comm_max: float, c_comm_max: float,
                     obstacle_weight: Optional[float] = None,
                     clutter_radius: Optional[float] = None) -> NavGraph:
    if width <= 0 or height <= 0 or spacing <= 0:
        raise GraphValidationError("Map extent and spacing must be positive.")
    if spacing > width or spacing > height:
        raise GraphValidationError("Spacing {} larger than map extent {}x{}.".format(spacing, width, height))
    if not (base.x <= width and base.y <= height):
        raise GraphValidationError("Base {} outside the map.".format(base))
    if d_comm_max <= 0 or c_comm_max <= 0:
        raise GraphValidationError("d_comm_max and c_comm_max must be positive.")

    obstacles = tuple(obstacles)
    if any(r.contains(base) for r in obstacles):
        raise GraphValidationError("Base {} lies inside an obstacle.".format(base))

    cols = int(math.floor(width / spacing + DISTANCE_TOLERANCE))
    rows = int(math.floor(height / spacing + DISTANCE_TOLERANCE))
    positions = tuple(Position(x=(i + 0.5) * spacing, y=(j + 0.5) * spacing)
                      for j in range(rows) for i in range(cols))
    obstacle_nodes = frozenset(idx for idx, p in enumerate(positions)
                               if any(r.contains(p) for r in obstacles))

    xs = np.array([p.x for p in positions])
    ys = np.array([p.y for p in positions])
    base_node = int(np.argmin(np.hypot(xs - base.x, ys - base.y)))
    if base_node in obstacle_nodes:
        raise GraphValidationError("Base node {} lies inside an obstacle.".format(base_node))

    offsets = list(_lattice_offsets(spacing, d_comm_max))
    edges = set()
    pruned = 0
    for j in range(rows):
        for i in range(cols):
            src = j * cols + i
            if src in obstacle_nodes:
                continue
            for di, dj in offsets:
                ni, nj = i + di, j + dj
                if not (0 <= ni < cols and 0 <= nj < rows):
                    continue
                dst = nj * cols + ni
                if dst < src or dst in obstacle_nodes:
                    continue
                if any(r.crossed_by(positions[src], positions[dst]) for r in obstacles):
                    pruned += 1
                    continue
                edges.add((src, dst))
                edges.add((dst, src))

    logger.debug("built %dx%d lattice: %d nodes, %d obstacle nodes, %d directed edges, %d pairs pruned",
                 cols, rows, len(positions), len(obstacle_nodes), len(edges), pruned)

    return NavGraph(
        positions=positions,
        edges=frozenset(edges),
        base_node=base_node,
        obstacle_nodes=obstacle_nodes,
        obstacles=obstacles,
        spacing=spacing,
        cols=cols,
        rows=rows,
        d_comm_max=d_comm_max,
        c_comm_max=c_comm_max,
        obstacle_weight=0.2 * c_comm_max if obstacle_weight is None else obstacle_weight,
        clutter_radius=spacing if clutter_radius is None else clutter_radius,
    )
