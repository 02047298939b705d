"""Conditional diffusion over coupled state and tactile-latent futures."""
from .condition import ConditionEncoder
from .data import WindowSet, coupled_windows
from .model import (
    X0_CLIP,
    DiffusionConfig,
    TrajectoryDiffusion,
    ddim_core,
    ddim_steps,
)
from .schedule import SCHEDULE_KINDS, NoiseSchedule, make_schedule, q_sample
from .store import load_diffusion, save_diffusion
from .trajectory import (
    MIN_HALF_RANGE,
    CoupledTrajectory,
    TrajectoryNormalizer,
    split_trajectory,
)
from .train import (
    DiffusionTrainLog,
    denoise_train_step,
    eps_loss,
    fit_diffusion,
    split_episodes,
    train_diffusion,
)
from .unet import FiLMResBlock, TemporalUNet, sinusoidal_embedding

__all__ = [
    "ConditionEncoder", "CoupledTrajectory", "DiffusionConfig",
    "DiffusionTrainLog", "FiLMResBlock", "MIN_HALF_RANGE", "NoiseSchedule",
    "SCHEDULE_KINDS", "TemporalUNet", "TrajectoryDiffusion",
    "TrajectoryNormalizer", "WindowSet", "X0_CLIP", "coupled_windows",
    "ddim_core", "ddim_steps", "denoise_train_step", "eps_loss",
    "fit_diffusion", "load_diffusion", "make_schedule", "q_sample",
    "save_diffusion", "sinusoidal_embedding", "split_episodes",
    "split_trajectory", "train_diffusion",
]
