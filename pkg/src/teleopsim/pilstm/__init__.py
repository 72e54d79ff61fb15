"""Physics-informed LSTM predictor: network, losses, training, inference.

Everything here is plain NumPy in double precision. The network is small
enough that hand-rolled BPTT beats pulling in an autodiff framework, and
the gradient check in the test suite keeps the derivation honest.
"""

from .network import NetworkTopology, ModelParams, LstmLayerParams, init_params, forward, backward, clip_global_norm
from .scaling import Scaler
from .losses import data_loss, physics_loss, total_loss, dde_forcing, batch_loss_and_grad
from .training import TrainConfig, TrainingLog, Adam, train
from .checkpoint import save_checkpoint, load_checkpoint
from .online import OnlinePredictor

__all__ = [
    "NetworkTopology", "ModelParams", "LstmLayerParams", "init_params",
    "forward", "backward", "clip_global_norm",
    "Scaler", "data_loss", "physics_loss", "total_loss", "dde_forcing",
    "batch_loss_and_grad", "TrainConfig", "TrainingLog", "Adam", "train",
    "save_checkpoint", "load_checkpoint", "OnlinePredictor",
]
