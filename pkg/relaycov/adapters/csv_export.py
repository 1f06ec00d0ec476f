from typing import Iterable, List
from pathlib import Path

import numpy as np
import pandas as pd

from relaycov.domain.metrics.records import RoundRecord, ExperimentSummary

FLOAT_FORMAT = "%.6f"


def run_directory(out_dir: Path, beta: float, seed: int) -> Path:
    return Path(out_dir) / "beta={}".format(beta) / "seed={}".format(seed)


def write_visit_grid(grid: np.ndarray, path: Path):
    """ One CSV row per lattice row (y ascending), one column per lattice column. """
    frame = pd.DataFrame(grid, columns=[str(i) for i in range(grid.shape[1])])
    frame.to_csv(path, index_label="row")


def rounds_frame(records: Iterable[RoundRecord]) -> pd.DataFrame:
    rows = [{
        "round": r.round,
        "chain_length": r.chain_length,
        "comm_cost": r.comm_cost,
        "total_cost": r.total_cost,
        "master": r.master,
        "chain": " ".join(str(n) for n in r.chain),
        "events": ";".join(r.events),
        "optimal_total_cost": r.optimal_total_cost,
    } for r in records]
    return pd.DataFrame(rows, columns=["round", "chain_length", "comm_cost", "total_cost", "master",
                                       "chain", "events", "optimal_total_cost"])


def write_rounds(records: Iterable[RoundRecord], path: Path):
    rounds_frame(records).to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_summary(summary: ExperimentSummary, path: Path):
    lines = ["{} = {}".format(key, value) for key, value in summary.as_row().items()]
    Path(path).write_text("\n".join(lines) + "\n")


def runs_frame(summaries: List[ExperimentSummary]) -> pd.DataFrame:
    frame = pd.DataFrame([s.as_row() for s in summaries])
    return frame.sort_values(["beta", "seed"], kind="mergesort").reset_index(drop=True)


def write_runs(summaries: List[ExperimentSummary], path: Path):
    runs_frame(summaries).to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_comparison(comparison: pd.DataFrame, path: Path):
    comparison.to_csv(path, float_format=FLOAT_FORMAT)
