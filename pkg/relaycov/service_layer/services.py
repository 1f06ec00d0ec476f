from typing import List, Optional, Tuple
from dataclasses import dataclass
from multiprocessing import Pool
from pathlib import Path
import logging

import numpy as np
import pandas as pd

from relaycov.domain.model import NavGraph
from relaycov.domain.scenario import (
    ScenarioConfig, build_navgraph, layout_key, layout_seed_for, targets_for, event_script,
    round_settings, master_policy
)
from relaycov.domain.simulation import Simulation
from relaycov.domain.metrics.records import RoundRecord, ExperimentSummary
from relaycov.domain.metrics.summary import summarize
from relaycov.domain.metrics.coverage import visit_grid
from relaycov.adapters.repository import AbstractRepository, LRUCacheRepository
from relaycov.adapters.json import dump_records_json, dump_summary_json
from relaycov.adapters.csv_export import (
    run_directory, write_visit_grid, write_rounds, write_summary, write_runs, write_comparison
)

logger = logging.getLogger(__name__)

# one cache per process; pool workers each get their own
_GRAPH_CACHE = LRUCacheRepository(capacity=16)

COMPARISON_COLUMNS = ["iterations_to_k", "visit_max", "visit_mean", "comm_cost_mean", "comm_cost_max"]


@dataclass
class RunResult:
    summary: ExperimentSummary
    records: List[RoundRecord]
    grid: np.ndarray


def get_navgraph(config: ScenarioConfig, seed: int, repo: Optional[AbstractRepository] = None) -> NavGraph:
    repo = _GRAPH_CACHE if repo is None else repo
    layout_seed = layout_seed_for(config, seed)
    return repo.get_or_build(layout_key(config, layout_seed), lambda: build_navgraph(config, layout_seed))


def build_simulation(config: ScenarioConfig, g: NavGraph, beta: float, seed: int) -> Simulation:
    return Simulation(
        g,
        fleet_size=config.fleet_size,
        beta=beta,
        seed=seed,
        targets=targets_for(config, g),
        window=config.window,
        events=event_script(config, g),
        policy=master_policy(config, g),
        settings=round_settings(config),
    )


def run_single(config: ScenarioConfig, beta: float, seed: int,
               repo: Optional[AbstractRepository] = None) -> RunResult:
    g = get_navgraph(config, seed, repo)
    sim = build_simulation(config, g, beta, seed)
    records = sim.run(config.k, config.max_rounds)
    summary = summarize(records, sim.vc, g, beta, seed, config.k)
    return RunResult(summary=summary, records=records, grid=visit_grid(sim.vc, g))


def _run_job(job: Tuple[ScenarioConfig, float, int]) -> RunResult:
    config, beta, seed = job
    return run_single(config, beta, seed)


def compare_betas(summaries: List[ExperimentSummary]) -> pd.DataFrame:
    """ Per-beta medians across seeds. A run that never reached k-coverage
    counts as infinitely many iterations. """
    frame = pd.DataFrame([s.as_row() for s in summaries])
    frame["iterations_to_k"] = frame["iterations_to_k"].astype(float).fillna(np.inf)
    frame[COMPARISON_COLUMNS] = frame[COMPARISON_COLUMNS].astype(float)
    grouped = frame.groupby("beta", sort=True)
    comparison = grouped[COMPARISON_COLUMNS].median()
    comparison["runs"] = grouped.size()
    comparison["covered_runs"] = grouped["covered"].sum().astype(int)
    return comparison


def write_run_artifacts(result: RunResult, out_dir: Path):
    run_dir = run_directory(out_dir, result.summary.beta, result.summary.seed)
    run_dir.mkdir(parents=True, exist_ok=True)
    write_visit_grid(result.grid, run_dir / "visits.csv")
    write_rounds(result.records, run_dir / "rounds.csv")
    write_summary(result.summary, run_dir / "summary.txt")
    (run_dir / "records.json").write_text(dump_records_json(result.records))
    (run_dir / "summary.json").write_text(dump_summary_json(result.summary))


def run_experiment(config: ScenarioConfig, out_dir: Optional[Path] = None, workers: int = 1,
                   repo: Optional[AbstractRepository] = None) -> List[ExperimentSummary]:
    jobs = [(config, beta, seed) for beta in config.betas for seed in config.seeds]
    logger.info("running %d simulations (%d betas x %d seeds) on %d worker(s)",
                len(jobs), len(config.betas), len(config.seeds), workers)

    if workers > 1 and len(jobs) > 1:
        with Pool(processes=min(workers, len(jobs))) as pool:
            results = pool.map(_run_job, jobs)
    else:
        results = [run_single(c, beta, seed, repo) for c, beta, seed in jobs]

    summaries = [r.summary for r in results]
    for s in summaries:
        logger.info("beta=%s seed=%s: iterations_to_k=%s visit_max=%d comm_mean=%s",
                    s.beta, s.seed, s.iterations_to_k, s.visit_max, s.comm_cost_mean)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for result in results:
            write_run_artifacts(result, out_dir)
        write_runs(summaries, out_dir / "runs.csv")
        write_comparison(compare_betas(summaries), out_dir / "comparison.csv")
    return summaries
