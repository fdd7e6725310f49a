"""Partial AUC optimization via instance-wise minimax reformulations."""

from ._backend import BACKEND
from .dataio import BatchSpec, SampleSet, generate_synthetic, iter_batches, load_csv
from .losses import AuxState, GradBundle, HyperParams, batch_objective_and_grad
from .metrics import empirical_auc, empirical_opauc, empirical_tpauc
from .model import ModelParams, backward, forward, init_params

__version__ = "0.1.0"
