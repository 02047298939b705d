"""Hand-configuration prediction benchmark over the grasp-hold dataset.

Every (inputs x encoder x mode) cell is trained per seed with its own
episode split, and validation MAE is reported in joint-angle radians with
palm errors listed separately.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ENCODERS, INPUTS, MODES, MappingConfig
from .train import train_mapping

RESNET_WIDTHS = (12, 24, 32)
# flat widths chosen so both encoders land within a few percent of the
# same trainable parameter count
MLP_WIDTHS = (120, 72)


def cell_config(mode: str, inputs: str, encoder: str, seed: int) -> MappingConfig:
    widths = RESNET_WIDTHS if encoder == "resnet1d" else MLP_WIDTHS
    return MappingConfig(mode=mode, inputs=inputs, tactile_encoder=encoder,
                         encoder_widths=widths, seed=seed)


@dataclass
class BenchResults:
    records: list = field(default_factory=list)   # one dict per cell per seed
    seeds: tuple = ()

    def cell_values(self, mode: str, inputs: str, encoder: str,
                    metric: str = "joint_mae") -> np.ndarray:
        vals = [r[metric] for r in self.records
                if r["mode"] == mode and r["inputs"] == inputs
                and r["encoder"] == encoder]
        return np.asarray(vals)

    def best_cell(self, seed: int, metric: str = "joint_mae") -> tuple:
        rows = [r for r in self.records if r["seed"] == seed]
        best = min(rows, key=lambda r: r[metric])
        return best["mode"], best["inputs"], best["encoder"]


def benchmark_hand_config(episodes, seeds, epochs: int = 30,
                          batch_size: int = 128, lr: float = 2e-3,
                          progress=None) -> BenchResults:
    """Train all 12 cells per seed; returns per-run records for aggregation."""
    results = BenchResults(seeds=tuple(seeds))
    for seed in seeds:
        for mode in MODES:
            for inputs in INPUTS:
                for encoder in ENCODERS:
                    cfg = cell_config(mode, inputs, encoder, seed)
                    model, log = train_mapping(
                        episodes, cfg, epochs=epochs,
                        batch_size=batch_size, lr=lr)
                    rec = {
                        "mode": mode, "inputs": inputs, "encoder": encoder,
                        "seed": seed, "config": cfg.to_dict(),
                        "joint_mae": log.joint_mae, "palm_mae": log.palm_mae,
                        "angle_mae": log.angle_mae,
                        "val_loss": min(log.val_loss),
                        "best_epoch": log.best_epoch,
                        "n_params": model.param_count(),
                        "seconds": log.seconds,
                    }
                    results.records.append(rec)
                    if progress is not None:
                        progress(rec)
    return results


def format_benchmark_table(results: BenchResults) -> str:
    """Fixed-width summary: joint MAE (rad) and palm MAE (m), mean +/- std."""
    lines = [
        f"hand-configuration prediction, seeds={list(results.seeds)}",
        f"{'mode':<9} {'inputs':<14} {'encoder':<9} "
        f"{'joint MAE [rad]':<22} {'palm MAE [m]':<22}",
    ]
    for mode in MODES:
        for inputs in INPUTS:
            for encoder in ENCODERS:
                j = results.cell_values(mode, inputs, encoder, "joint_mae")
                p = results.cell_values(mode, inputs, encoder, "palm_mae")
                if not j.size:
                    continue
                lines.append(
                    f"{mode:<9} {inputs:<14} {encoder:<9} "
                    f"{j.mean():.5f} +/- {j.std():.5f}    "
                    f"{p.mean():.5f} +/- {p.std():.5f}")
    return "\n".join(lines)
