"""AdaAct: activation-variance preconditioned training on a small numpy stack."""

from .data import Dataset, load_cifar_binary, load_idx, minibatches, neighboring_dataset, synthetic_blobs
from .nn import Network, backward, forward, init_network
from .optim import DEFAULTS, AdaActState, Hyperparams, Optimizer, adaact_step, cosine_lr, make_optimizer
from .training import TrainingRun

__version__ = "0.1.0"

__all__ = [
    "Dataset", "load_idx", "load_cifar_binary", "synthetic_blobs", "minibatches",
    "neighboring_dataset", "Network", "init_network", "forward", "backward", "Hyperparams",
    "DEFAULTS", "AdaActState", "adaact_step", "cosine_lr", "Optimizer", "make_optimizer",
    "TrainingRun",
]
