from typing import Iterable, Optional, Tuple

import numpy as np

from relaycov.domain.model import NavGraph
from relaycov.domain.coverage import VisitCounts
from relaycov.domain.metrics.records import RoundRecord


def iterations_to_k_coverage(records: Iterable[RoundRecord], g: NavGraph, k: int) -> Optional[int]:
    """ First round after which every coverage node has been occupied at least k times. """
    if k < 1:
        raise ValueError("k must be at least 1, got {}".format(k))
    goal = np.array(g.coverage_nodes, dtype=np.int64)
    tally = np.zeros(g.node_count, dtype=np.int64)
    for record in records:
        for node in record.occupied:
            tally[node] += 1
        if np.all(tally[goal] >= k):
            return record.round
    return None


def visit_stats(vc: VisitCounts, g: NavGraph) -> Tuple[int, int, float]:
    counts = vc.counts[list(g.coverage_nodes)]
    return int(counts.min()), int(counts.max()), float(counts.mean())


def peak_nodes(vc: VisitCounts, g: NavGraph) -> Tuple[int, ...]:
    nodes = np.array(g.coverage_nodes, dtype=np.int64)
    counts = vc.counts[nodes]
    return tuple(int(n) for n in nodes[counts == counts.max()])


def visit_grid(vc: VisitCounts, g: NavGraph) -> np.ndarray:
    # row j holds the nodes with y = (j + 0.5) * spacing
    return np.array(vc.counts).reshape(g.rows, g.cols)
