from .losses import discriminator_loss, generator_loss, wasserstein_estimate
from .model import (
    GanModel,
    Network,
    build_conv_architecture,
    build_mlp_architecture,
    condition_inputs,
    generate,
    labels_from_classes,
)
from .train import TrainConfig, TrainTrace, TraceRow, train
from .checkpoint import load_checkpoint, read_container, save_checkpoint, write_container

__all__ = [
    "discriminator_loss",
    "generator_loss",
    "wasserstein_estimate",
    "GanModel",
    "Network",
    "build_conv_architecture",
    "build_mlp_architecture",
    "condition_inputs",
    "generate",
    "labels_from_classes",
    "TrainConfig",
    "TrainTrace",
    "TraceRow",
    "train",
    "load_checkpoint",
    "read_container",
    "save_checkpoint",
    "write_container",
]
