"""Local dimension of fully-connected ReLU networks."""

from .dimension import DimEnvelope, LocalDimReport, dim_envelope, local_dimension, numerical_rank
from .errors import ConfigurationError, DomainError, InvariantError, NumericError, PreconditionError
from .jacobian import JacobianMatrix, backprop_row, finite_diff_jacobian, jacobian
from .net import (
    Architecture,
    ForwardTrace,
    InitScheme,
    OutAct,
    Params,
    activation_pattern,
    boundary_margin,
    forward,
    init_params,
    load_model,
    permute,
    rescale,
    save_model,
)

__version__ = "0.1.0"
