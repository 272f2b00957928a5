from zsir.leaderboard.protocol import (
    Journal,
    LeaderboardEntry,
    RateDecision,
    Submission,
    ValidationReport,
    board,
    check_rate_limit,
    rebuild_board,
    score_submission,
    validate_submission,
)

__all__ = [
    "Journal", "LeaderboardEntry", "RateDecision", "Submission", "ValidationReport", "board",
    "check_rate_limit", "rebuild_board", "score_submission", "validate_submission",
]
