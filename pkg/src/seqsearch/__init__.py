"""Model-agnostic sequence decoding: adaptive tree search, beam search and friends."""

from .core import EOS, ScoredHypothesis, Sequence, Vocabulary, decode_text, encode
from .cost import CostMeter

__version__ = "0.1.0"
