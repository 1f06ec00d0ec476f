from typing import Iterable, Optional, Tuple

import numpy as np

from relaycov.domain.metrics.records import RoundRecord

GAP_TOLERANCE = 1e-9


def comm_stats(records: Iterable[RoundRecord]) -> Tuple[Optional[float], Optional[float], Optional[float]]:
    """ (min, max, mean) chain communication cost, one sample per round.
    Stall rounds count with the chain they kept; halted rounds are skipped. """
    costs = np.array([r.comm_cost for r in records if not r.halted], dtype=float)
    if costs.size == 0:
        return None, None, None
    return float(costs.min()), float(costs.max()), float(costs.mean())


def relative_gap(record: RoundRecord) -> Optional[float]:
    if record.optimal_total_cost is None:
        return None
    excess = max(record.total_cost - record.optimal_total_cost, 0.0)
    if excess <= GAP_TOLERANCE:
        return 0.0
    if record.optimal_total_cost <= GAP_TOLERANCE:
        return float("inf")
    return excess / record.optimal_total_cost


def gap_stats(records: Iterable[RoundRecord]) -> Tuple[int, Optional[float]]:
    """ Number of audited rounds whose chain was costlier than the exact optimum,
    and the mean relative gap over all audited rounds. """
    gaps = [g for g in (relative_gap(r) for r in records) if g is not None]
    if not gaps:
        return 0, None
    return sum(1 for g in gaps if g > 0), float(np.mean(gaps))
