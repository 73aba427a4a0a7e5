"""Exact modal simulation of the relaxed (third-order) acoustic equation and
its strongly damped limit, with spectral and energy diagnostics."""

from . import errors
from .errors import *  # noqa: F401,F403
from .kernels import BACKEND as KERNEL_BACKEND
from .model import (
    ModalBasis,
    ModalState2,
    ModalState3,
    NormKind,
    Params,
    extend,
    make_params,
    norm_sq,
    poincare_constant,
    project,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "ModalBasis",
    "ModalState2",
    "ModalState3",
    "NormKind",
    "Params",
    "extend",
    "make_params",
    "norm_sq",
    "poincare_constant",
    "project",
] + list(errors.__all__)
