from .model import (
    CodecConfig,
    TactileCodec,
    TactileLatent,
    clamp_log_variance,
    sample_latent,
    vae_loss,
)
from .metrics import tactile_metrics
from .store import load_codec, save_codec
from .train import CodecTrainLog, tactile_force_scale, train_codec

__all__ = [
    "CodecConfig", "CodecTrainLog", "TactileCodec", "TactileLatent",
    "clamp_log_variance", "load_codec", "sample_latent", "save_codec",
    "tactile_force_scale", "tactile_metrics", "train_codec", "vae_loss",
]
