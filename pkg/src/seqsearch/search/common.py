from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..core import ScoredHypothesis, SeqSearchError
from ..cost import CostMeter


class EnumerationLimitError(SeqSearchError, RuntimeError):
    pass


class NoSelectableChildError(SeqSearchError, RuntimeError):
    """Every child of the root is excluded by the depth floor (BATS stops)."""


@dataclass(frozen=True)
class SearchBudget:
    """k iterations per step, depth cap d_max, exploration weight C.

    ``max_iterations`` optionally caps the total number of iterations.
    """

    iterations_per_step: int
    max_depth: int
    exploration_c: float = 1.0
    max_iterations: int | None = None

    def __post_init__(self):
        if self.iterations_per_step < 1:
            raise ValueError("iterations_per_step must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not (self.exploration_c >= 0 and math.isfinite(self.exploration_c)):
            raise ValueError("exploration_c must be finite and >= 0")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    d_min: int
    best_score: float
    nodes: int
    cost_units: float

    def tsv(self) -> str:
        return f"{self.iteration}\t{self.d_min}\t{self.best_score!r}\t{self.nodes}\t{self.cost_units!r}"


@dataclass
class DecodeResult:
    best: ScoredHypothesis
    nodes_expanded: int
    cost_units: float
    units_raw: float
    meter: CostMeter
    trace: list[TraceRow] = field(default_factory=list)
    iterations: int = 0
    stopped_early: bool = False
    candidates: list[ScoredHypothesis] | None = None


def write_trace(rows, fh) -> None:
    fh.write("iter\td_min\tbest_score\tnodes\tcost_units\n")
    for row in rows:
        fh.write(row.tsv() + "\n")
