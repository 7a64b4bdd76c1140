"""Natural-gradient optimization laboratory on small dense networks."""

from .errors import (
    CapacityError,
    DataError,
    NGDLabError,
    NumericError,
    SearchError,
    ShapeError,
    SingularMatrixError,
    StateError,
)
from .model import NetworkModel, DenseLayer, BatchCache, init_network, forward, backward, loss_eval
from .optim import OptimConfig, METHODS

__version__ = "0.1.0"
