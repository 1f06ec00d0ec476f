from typing import Deque, List, Optional, Union
from collections import deque
import logging
import math

import numpy as np

from relaycov.domain.model import NavGraph
from relaycov.domain.relay import EdgeCost

logger = logging.getLogger(__name__)


class CoverageError(Exception):
    def __init__(self, message):
        super().__init__(message)
        self.message = message


class VisitCounts:
    """ Per-node visit tallies.

    With window == 0 counts are cumulative. With window W > 0 the counts are
    the sum of the last W round buckets, the open one included; start_round()
    opens a new bucket and evicts the oldest.
    """

    def __init__(self, node_count: int, window: int = 0):
        if window < 0:
            raise CoverageError("Window must be non-negative: {}".format(window))
        self.window = window
        self._counts = np.zeros(node_count, dtype=np.int64)
        self._history: Optional[Deque[np.ndarray]] = None
        if window > 0:
            self._history = deque([np.zeros(node_count, dtype=np.int64)])

    @classmethod
    def from_counts(cls, counts, window: int = 0) -> "VisitCounts":
        vc = cls(len(counts), window)
        vc._counts[:] = counts
        if vc._history is not None:
            vc._history[-1][:] = counts
        return vc

    @property
    def node_count(self) -> int:
        return len(self._counts)

    @property
    def counts(self) -> np.ndarray:
        view = self._counts.view()
        view.flags.writeable = False
        return view

    def count(self, n: int) -> int:
        return int(self._counts[n])

    def total(self) -> int:
        return int(self._counts.sum())

    def increment(self, n: int, amount: int = 1):
        self._counts[n] += amount
        if self._history is not None:
            self._history[-1][n] += amount

    def start_round(self):
        if self._history is None:
            return
        self._history.append(np.zeros(self.node_count, dtype=np.int64))
        while len(self._history) > self.window:
            self._counts -= self._history.popleft()

    def snapshot(self) -> "VisitCounts":
        clone = VisitCounts(self.node_count, self.window)
        clone._counts = self._counts.copy()
        if self._history is not None:
            clone._history = deque(bucket.copy() for bucket in self._history)
        return clone

    def merge_max(self, other: "VisitCounts"):
        """ Element-wise max with another tally; the difference lands in the open bucket. """
        if other.node_count != self.node_count:
            raise CoverageError("Cannot merge counts over different graphs.")
        gain = np.maximum(other._counts - self._counts, 0)
        self._counts += gain
        if self._history is not None:
            self._history[-1] += gain


def record_visit(vc: VisitCounts, n: int) -> VisitCounts:
    vc.increment(n)
    return vc


def _as_generator(rng: Union[int, np.random.Generator]) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def rank_neighbors(g: NavGraph, current: int, vc: VisitCounts,
                   rng: Union[int, np.random.Generator]) -> List[int]:
    """ Neighbours of current, least visited first; equal counts in seeded random order. """
    nbrs = g.neighbors[current]
    if not nbrs:
        raise CoverageError("Node {} has no outgoing edge.".format(current))
    keys = _as_generator(rng).random(len(nbrs))
    order = sorted(range(len(nbrs)), key=lambda i: (vc.count(nbrs[i]), keys[i]))
    return [nbrs[i] for i in order]


def node_count_step(g: NavGraph, current: int, vc: VisitCounts,
                    rng: Union[int, np.random.Generator]) -> int:
    return rank_neighbors(g, current, vc, rng)[0]


def coverage_cost(vc: VisitCounts, n: int, m: int, beta: float) -> float:
    # count(n, n') = count(n')
    return beta * vc.count(m)


def total_cost(g: NavGraph, vc: VisitCounts, n: int, m: int, beta: float) -> float:
    if not g.has_edge(n, m):
        raise CoverageError("Not an edge: {}".format((n, m)))
    return g.comm_cost_table[(n, m)] + coverage_cost(vc, n, m, beta)


def comm_edge_cost(g: NavGraph, max_distance: Optional[float] = None) -> EdgeCost:
    table = g.comm_cost_table

    if max_distance is None:
        return lambda n, m: table[(n, m)]

    def restricted(n, m):
        if g.distance(n, m) > max_distance:
            return math.inf
        return table[(n, m)]
    return restricted


def hybrid_edge_cost(g: NavGraph, vc: VisitCounts, beta: float,
                     max_distance: Optional[float] = None) -> EdgeCost:
    """ c_tot over a frozen copy of the current counts, for the chain solver.
    Links longer than max_distance cost infinity. """
    table = g.comm_cost_table
    counts = vc.counts.tolist()

    if max_distance is None:
        return lambda n, m: table[(n, m)] + beta * counts[m]

    def restricted(n, m):
        if g.distance(n, m) > max_distance:
            return math.inf
        return table[(n, m)] + beta * counts[m]
    return restricted
