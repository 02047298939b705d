"""Contact-grounded mapping from (state, tactile) to controller targets."""
from .bench import (
    MLP_WIDTHS,
    RESNET_WIDTHS,
    BenchResults,
    benchmark_hand_config,
    cell_config,
    format_benchmark_table,
)
from .grasp_data import OBJECT_MENU, grasp_hold_episode, make_grasp_dataset
from .press_data import make_press_dataset, press_hold_episode
from .model import (
    MappingConfig,
    MappingModel,
    MappingSample,
    MappingStats,
    episode_samples,
)
from .store import load_mapping, save_mapping
from .train import MappingTrainLog, mapping_metrics, train_mapping

__all__ = [
    "BenchResults", "MLP_WIDTHS", "MappingConfig", "MappingModel",
    "MappingSample", "MappingStats", "MappingTrainLog", "OBJECT_MENU",
    "RESNET_WIDTHS", "benchmark_hand_config", "cell_config",
    "episode_samples", "format_benchmark_table", "grasp_hold_episode",
    "load_mapping", "make_grasp_dataset", "make_press_dataset",
    "mapping_metrics", "press_hold_episode", "save_mapping", "train_mapping",
]
