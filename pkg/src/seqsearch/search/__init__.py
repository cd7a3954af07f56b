"""Decoders: greedy, beam, rerank, exhaustive, ATS and BATS."""

from .ats import (
    SearchState,
    ats_decode,
    ats_iteration,
    bats_decode,
    check_invariants,
    init_search,
    uct_select_child,
    uct_value,
)
from .common import DecodeResult, EnumerationLimitError, NoSelectableChildError, SearchBudget, TraceRow
from .decoders import beam_search, count_sequences, exhaustive_decode, greedy_decode, rerank_decode
from .kernels import BACKEND as KERNEL_BACKEND

__all__ = [
    "DecodeResult",
    "EnumerationLimitError",
    "KERNEL_BACKEND",
    "NoSelectableChildError",
    "SearchBudget",
    "SearchState",
    "TraceRow",
    "ats_decode",
    "ats_iteration",
    "bats_decode",
    "beam_search",
    "check_invariants",
    "count_sequences",
    "exhaustive_decode",
    "greedy_decode",
    "init_search",
    "rerank_decode",
    "uct_select_child",
    "uct_value",
]
