"""
Training, evaluation, comparison studies, checkpoints, plots and the CLI.
"""

from trajreason.harness.ablation import AblationTable, compare_backbones, run_ablation, run_map_utilization
from trajreason.harness.checkpoint import Checkpoint, load_checkpoint, restore_backbone, save_checkpoint
from trajreason.harness.config import MODALITIES, TrainConfig, load_config, save_config
from trajreason.harness.evaluate import evaluate, evaluate_scenes
from trajreason.harness.factory import build_backbone, build_predictor, load_dataset
from trajreason.harness.loss import trajectory_loss
from trajreason.harness.plots import render_ablation_plot, render_scene_plot
from trajreason.harness.train import train, train_on_scenes

__all__ = [
    "TrainConfig",
    "MODALITIES",
    "load_config",
    "save_config",
    "build_backbone",
    "build_predictor",
    "load_dataset",
    "trajectory_loss",
    "train",
    "train_on_scenes",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "restore_backbone",
    "evaluate",
    "evaluate_scenes",
    "AblationTable",
    "run_ablation",
    "compare_backbones",
    "run_map_utilization",
    "render_scene_plot",
    "render_ablation_plot",
]
