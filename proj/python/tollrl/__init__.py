"""Managed-lane toll pricing simulator and policy-gradient trainer."""

from ._tollrl import (
    Env,
    EpisodeStats,
    __version__,
    gae,
    load_policy_sizes,
    reward_to_go,
    run,
)

__all__ = ["Env", "EpisodeStats", "__version__", "gae", "load_policy_sizes", "reward_to_go", "run"]
