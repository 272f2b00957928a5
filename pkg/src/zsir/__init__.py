"""Zero-shot IR benchmarking toolkit: lexical, learned-sparse and dense
retrieval over precomputed representations, trec_eval-style evaluation,
radar charts and a small self-service leaderboard."""

from zsir.errors import DataError, ValidationError

__version__ = "0.1.0"

__all__ = ["DataError", "ValidationError", "__version__"]
