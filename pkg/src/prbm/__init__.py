"""p-RBM: restricted Boltzmann machines that remember p past time steps."""

from .checkpoint import deserialize, load, save, serialize
from .data import DirectionDataset, directions, load_bars, split, synth_markov, windows
from .errors import PRBMError
from .evaluation import confusion, evaluate, misclassification_loss
from .model import (
    PRBM,
    GradientBlocks,
    ModelShape,
    build_forgetting_matrix,
    energy,
    hidden_activation_probs,
    init_model,
    visible_activation_probs,
    zeros_model,
)
from .sampling import gibbs_chain, predict_direction, sample_hidden, sample_visible
from .training import TrainConfig, apply_update, cd_gradient, train

__version__ = "0.1.0"
