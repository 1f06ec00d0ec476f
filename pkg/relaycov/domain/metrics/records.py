from typing import Iterable, Optional, Tuple
import dataclasses

from pydantic import validator
from pydantic.dataclasses import dataclass


@dataclass(frozen=True)
class RoundRecord:
    """ What one interleaved round produced.

    chain is empty only for the terminal record of a halted run. occupied
    holds one node per connected UAV, ordered by UAV id.
    """
    round: int
    chain: Tuple[int, ...]
    comm_cost: float
    total_cost: float
    occupied: Tuple[int, ...]
    events: Tuple[str, ...] = ()
    master: Optional[int] = None
    optimal_total_cost: Optional[float] = None

    @validator('round')
    def round_positive(cls, v):
        if v < 1:
            raise ValueError("Rounds are numbered from 1: {}".format(v))
        return v

    @property
    def chain_length(self) -> int:
        return max(len(self.chain) - 1, 0)

    @property
    def stalled(self) -> bool:
        return "stall" in self.events

    @property
    def halted(self) -> bool:
        return len(self.chain) == 0

    def with_events(self, tags: Iterable[str]) -> "RoundRecord":
        return dataclasses.replace(self, events=tuple(tags) + self.events)


@dataclass(frozen=True)
class ExperimentSummary:
    beta: float
    seed: int
    k: int
    iterations_to_k: Optional[int]
    rounds_run: int
    visit_min: int
    visit_max: int
    visit_mean: float
    comm_cost_min: Optional[float]
    comm_cost_max: Optional[float]
    comm_cost_mean: Optional[float]
    total_visits: int
    stall_rounds: int
    peak_nodes: Tuple[int, ...]
    covered: bool
    gap_rounds: int = 0
    mean_gap: Optional[float] = None

    def as_row(self) -> dict:
        row = dataclasses.asdict(self)
        row["peak_nodes"] = " ".join(str(n) for n in self.peak_nodes)
        return row
