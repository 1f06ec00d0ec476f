from typing import List

from relaycov.domain.model import NavGraph
from relaycov.domain.coverage import VisitCounts
from relaycov.domain.metrics.records import RoundRecord, ExperimentSummary
from relaycov.domain.metrics.coverage import iterations_to_k_coverage, visit_stats, peak_nodes
from relaycov.domain.metrics.communication import comm_stats, gap_stats


def summarize(records: List[RoundRecord], vc: VisitCounts, g: NavGraph,
              beta: float, seed: int, k: int) -> ExperimentSummary:
    iterations = iterations_to_k_coverage(records, g, k)
    visit_min, visit_max, visit_mean = visit_stats(vc, g)
    comm_min, comm_max, comm_mean = comm_stats(records)
    gap_rounds, mean_gap = gap_stats(records)
    return ExperimentSummary(
        beta=beta,
        seed=seed,
        k=k,
        iterations_to_k=iterations,
        rounds_run=len(records),
        visit_min=visit_min,
        visit_max=visit_max,
        visit_mean=visit_mean,
        comm_cost_min=comm_min,
        comm_cost_max=comm_max,
        comm_cost_mean=comm_mean,
        total_visits=vc.total(),
        stall_rounds=sum(1 for r in records if r.stalled),
        peak_nodes=peak_nodes(vc, g),
        covered=iterations is not None,
        gap_rounds=gap_rounds,
        mean_gap=mean_gap,
    )
