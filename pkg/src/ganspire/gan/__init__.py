from .nets import GeneratorConfig, build_networks, lr_for_resolution
from .checkpoint import Checkpoint
from .model import GanModel, from_uint8, to_uint8
from .fid import FeatureEmbedder, compute_fid, frechet_distance, gaussian_stats
from .train import TrainingDiverged, run_stopping_rule, should_stop, train

__all__ = [
    "GeneratorConfig",
    "build_networks",
    "lr_for_resolution",
    "Checkpoint",
    "GanModel",
    "from_uint8",
    "to_uint8",
    "FeatureEmbedder",
    "compute_fid",
    "frechet_distance",
    "gaussian_stats",
    "TrainingDiverged",
    "run_stopping_rule",
    "should_stop",
    "train",
]
