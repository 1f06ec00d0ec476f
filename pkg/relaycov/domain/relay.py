from typing import Callable, Dict, FrozenSet, List, Optional, Tuple, Union
from dataclasses import dataclass as std_dataclass, field
from enum import Enum
from heapq import heappush, heappop
import logging
import math

from pydantic import validator
from pydantic.dataclasses import dataclass

from relaycov.domain.model import NavGraph, EdgeKey

logger = logging.getLogger(__name__)

EdgeCost = Callable[[int, int], float]

# Absolute tolerance on cost comparisons; hop counts compare exactly.
COST_TOLERANCE = 1e-9


class ChainValidationError(Exception):
    def __init__(self, message):
        super().__init__(message)
        self.message = message


@dataclass(frozen=True)
class Chain:
    """ Ordered positions from the base station (first) to the master (last). """
    nodes: Tuple[int, ...]

    @validator('nodes')
    def simple_and_non_empty(cls, v):
        if len(v) == 0:
            raise ValueError("A chain holds at least the base node.")
        if len(set(v)) != len(v):
            raise ValueError("Chain revisits a node: {}".format(v))
        return v

    @property
    def length(self) -> int:
        return len(self.nodes) - 1

    @property
    def base(self) -> int:
        return self.nodes[0]

    @property
    def target(self) -> int:
        return self.nodes[-1]

    @property
    def interior(self) -> Tuple[int, ...]:
        return self.nodes[1:-1]

    def pairs(self):
        return zip(self.nodes[:-1], self.nodes[1:])


@std_dataclass(frozen=True)
class MlmcTree:
    root: int
    parent: Tuple[Optional[int], ...]
    depth: Tuple[Optional[int], ...]
    modified_cost: Tuple[float, ...]

    def is_reachable(self, n: int) -> bool:
        return self.depth[n] is not None

    def label(self, n: int) -> Tuple[float, Optional[int]]:
        return self.modified_cost[n], self.depth[n]

    def chain_to(self, target: int) -> Optional[Chain]:
        if not self.is_reachable(target):
            return None
        nodes = [target]
        while nodes[-1] != self.root:
            nodes.append(self.parent[nodes[-1]])
        return Chain(nodes=tuple(reversed(nodes)))


@std_dataclass
class DualAscentState:
    alpha: float = 0.0
    improving_edges: FrozenSet[EdgeKey] = frozenset()
    edge_epsilons: Dict[EdgeKey, float] = field(default_factory=dict)
    epsilon: Optional[float] = None
    iterations: int = 0
    alpha_history: List[float] = field(default_factory=list)
    depth_history: List[Tuple[Optional[int], ...]] = field(default_factory=list)


class FailureReason(str, Enum):
    UNREACHABLE = "unreachable"
    NO_IMPROVING_EDGE = "no_improving_edge"
    ITERATION_CAP = "iteration_cap"


@std_dataclass(frozen=True)
class ChainSolution:
    chain: Chain
    state: DualAscentState


@std_dataclass(frozen=True)
class ChainFailure:
    reason: FailureReason
    state: DualAscentState


DualAscentResult = Union[ChainSolution, ChainFailure]


def _improves(cost: float, depth: int, parent: int,
              cur_cost: float, cur_depth: Optional[int], cur_parent: Optional[int]) -> bool:
    if cur_depth is None:
        return True
    if cost < cur_cost - COST_TOLERANCE:
        return True
    if cost > cur_cost + COST_TOLERANCE:
        return False
    if depth != cur_depth:
        return depth < cur_depth
    return cur_parent is not None and parent < cur_parent


def mlmc_tree(g: NavGraph, root: int, edge_cost: EdgeCost, alpha: float = 0.0) -> MlmcTree:
    """ Tree of minimum-length minimum-cost chains from root.

    Labels are (cost, hops) with cost taking priority; every edge cost is
    raised by alpha. Nodes are re-expanded whenever their label improves, so
    the returned labels hold for every edge, not only tree edges. Edges whose
    cost is infinite are treated as absent.
    """
    n = g.node_count
    cost = [math.inf] * n
    depth: List[Optional[int]] = [None] * n
    parent: List[Optional[int]] = [None] * n
    cost[root] = 0.0
    depth[root] = 0

    heap = [(0.0, 0, root)]
    while heap:
        c, q, u = heappop(heap)
        if c != cost[u] or q != depth[u]:
            continue
        for v in g.neighbors[u]:
            if v == root:
                continue
            w = edge_cost(u, v)
            if math.isinf(w):
                continue
            cand = c + w + alpha
            if _improves(cand, q + 1, u, cost[v], depth[v], parent[v]):
                cost[v], depth[v], parent[v] = cand, q + 1, u
                heappush(heap, (cand, q + 1, v))

    return MlmcTree(root=root, parent=tuple(parent), depth=tuple(depth), modified_cost=tuple(cost))


def improving_edges(g: NavGraph, tree: MlmcTree, edge_cost: EdgeCost, alpha: float) -> Dict[EdgeKey, float]:
    """ Edges (n, n') with q_n' > q_n + 1, mapped to the alpha increase that
    makes each of them enter the tree. """
    result = {}
    for u, v in g.sorted_edges:
        if not (tree.is_reachable(u) and tree.is_reachable(v)):
            continue
        slack = tree.depth[v] - (tree.depth[u] + 1)
        if slack <= 0:
            continue
        w = edge_cost(u, v)
        if math.isinf(w):
            continue
        result[(u, v)] = ((tree.modified_cost[u] + w + alpha) - tree.modified_cost[v]) / slack
    return result


def dual_ascent_chain(g: NavGraph, target: int, n_uav: int, edge_cost: EdgeCost,
                      alpha_0: float = 0.0, max_iterations: Optional[int] = None) -> DualAscentResult:
    """ Cheapest chain from the base to target holding at most n_uav + 1 nodes. """
    if n_uav < 1:
        raise ValueError("n_uav must be at least 1, got {}".format(n_uav))
    if max_iterations is None:
        max_iterations = 10 * g.node_count

    state = DualAscentState(alpha=alpha_0)
    for _ in range(max_iterations):
        tree = mlmc_tree(g, g.base_node, edge_cost, state.alpha)
        state.iterations += 1
        state.alpha_history.append(state.alpha)
        state.depth_history.append(tree.depth)

        if not tree.is_reachable(target):
            return ChainFailure(reason=FailureReason.UNREACHABLE, state=state)

        chain = tree.chain_to(target)
        if len(chain.nodes) <= n_uav + 1:
            return ChainSolution(chain=chain, state=state)

        epsilons = improving_edges(g, tree, edge_cost, state.alpha)
        state.improving_edges = frozenset(epsilons)
        state.edge_epsilons = epsilons
        if not epsilons:
            return ChainFailure(reason=FailureReason.NO_IMPROVING_EDGE, state=state)

        state.epsilon = max(min(epsilons.values()), COST_TOLERANCE)
        state.alpha += state.epsilon
        logger.debug("target %d: chain of %d nodes exceeds %d, alpha -> %.6f (|S| = %d)",
                     target, len(chain.nodes), n_uav + 1, state.alpha, len(epsilons))

    logger.warning("dual ascent hit the iteration cap (%d) for target %d", max_iterations, target)
    return ChainFailure(reason=FailureReason.ITERATION_CAP, state=state)


def chain_cost(g: NavGraph, chain: Chain, edge_cost: EdgeCost) -> float:
    total = 0.0
    for src, dst in chain.pairs():
        if not g.has_edge(src, dst):
            raise ChainValidationError("Chain uses a missing edge: {}".format((src, dst)))
        total += edge_cost(src, dst)
    return total
