"""Training, evaluation, transfer and checkpointing."""

from ntnbeam.learn.buffer import ReplayBuffer, Transition
from ntnbeam.learn.checkpoint import load_checkpoint, save_checkpoint
from ntnbeam.learn.config import SystemConfig, TrainConfig, desk_config
from ntnbeam.learn.env import Episode
from ntnbeam.learn.evaluate import EvalResult, evaluate, evaluate_baseline, evaluate_checkpoint
from ntnbeam.learn.loss import actor_loss, surrogate_reward
from ntnbeam.learn.train import TrainResult, regenerate_batch, train
from ntnbeam.learn.transfer import posterior, transfer_layers

__all__ = [
    "ReplayBuffer", "Transition", "load_checkpoint", "save_checkpoint", "SystemConfig", "TrainConfig",
    "desk_config", "Episode", "EvalResult", "evaluate", "evaluate_baseline", "evaluate_checkpoint",
    "actor_loss", "surrogate_reward", "TrainResult", "regenerate_batch", "train", "posterior",
    "transfer_layers",
]
