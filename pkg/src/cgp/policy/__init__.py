"""Closed-loop policy execution: CGP and its diffusion-policy baselines."""
from .baseline import BASELINE_KINDS, action_windows, train_baseline
from .bundle import (
    KINDS,
    SOURCES,
    ActStep,
    PolicyBundle,
    baseline_act,
    cgp_act,
)
from .rollout import ExpertPolicy, RolloutTrace, run_rollout

__all__ = [
    "ActStep", "BASELINE_KINDS", "ExpertPolicy", "KINDS", "PolicyBundle",
    "RolloutTrace", "SOURCES", "action_windows", "baseline_act", "cgp_act",
    "run_rollout", "train_baseline",
]
