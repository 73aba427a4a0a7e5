"""Parameters, modal basis, modal states, weighted norms and the P/E maps.

Everything here is an immutable value.  States are stored as coefficient
arrays of shape ``(n_modes, 3)`` for the relaxed system ``(u, u_t, u_tt)``
and ``(n_modes, 2)`` for the limit system ``(u, u_t)``, expanded in the
eigenbasis of the positive self-adjoint operator A with eigenvalues ``mus``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterDomainError, ShapeError

__all__ = [
    "Params",
    "make_params",
    "ModalBasis",
    "ModalState2",
    "ModalState3",
    "NormKind",
    "norm_sq",
    "norm_sq_array",
    "project",
    "extend",
    "poincare_constant",
]


def _positive(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
        raise ParameterDomainError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ParameterDomainError(f"{name} must be finite and > 0, got {value!r}")
    return value


@dataclass(frozen=True)
class Params:
    """Physical coefficients of the relaxed and limit equations.

    ``b_tau``, ``gamma_tau`` and ``tau_max`` are derived on every access.
    """

    alpha: float
    c: float
    delta: float
    tau: float = 0.0

    @property
    def b_tau(self) -> float:
        return self.delta + self.tau * self.c**2

    @property
    def gamma_tau(self) -> Optional[float]:
        """Stability margin ``alpha - tau c^2 / b_tau``; ``None`` when tau == 0."""
        if self.tau == 0.0:
            return None
        return self.alpha - self.tau * self.c**2 / self.b_tau

    @property
    def tau_max(self) -> float:
        """Largest tau with gamma_tau > 0 (exclusive bound)."""
        if self.c**2 * (1.0 - self.alpha) <= 0.0:
            return math.inf
        return self.alpha * self.delta / (self.c**2 * (1.0 - self.alpha))

    def with_tau(self, tau: float) -> "Params":
        return make_params(self.alpha, self.c, self.delta, tau)

    def require_relaxed(self) -> float:
        """Return gamma_tau, raising if the relaxed system is undefined."""
        if self.tau <= 0.0:
            raise ParameterDomainError("operation requires tau > 0")
        return self.gamma_tau


def make_params(alpha, c, delta, tau=0.0) -> Params:
    alpha = _positive("alpha", alpha)
    c = _positive("c", c)
    delta = _positive("delta", delta)
    if isinstance(tau, bool) or not isinstance(tau, (int, float, np.floating, np.integer)):
        raise ParameterDomainError(f"tau must be a real number, got {tau!r}")
    tau = float(tau)
    if not math.isfinite(tau) or tau < 0.0:
        raise ParameterDomainError(f"tau must be finite and >= 0, got {tau!r}")
    return Params(alpha, c, delta, tau)


@dataclass(frozen=True, eq=False)
class ModalBasis:
    """Truncated eigenvalue list ``0 < mu_1 <= ... <= mu_N`` of A."""

    mus: np.ndarray

    def __post_init__(self):
        mus = np.array(self.mus, dtype=float).reshape(-1)
        if mus.size == 0:
            raise ShapeError("basis needs at least one mode")
        if not np.all(np.isfinite(mus)) or np.any(mus <= 0.0):
            raise ParameterDomainError("eigenvalues must be finite and positive")
        if np.any(np.diff(mus) < 0.0):
            raise ParameterDomainError("eigenvalues must be sorted nondecreasing")
        mus.setflags(write=False)
        object.__setattr__(self, "mus", mus)

    @property
    def n_modes(self) -> int:
        return int(self.mus.size)

    @classmethod
    def dirichlet_1d(cls, n_modes: int, length: float = 1.0) -> "ModalBasis":
        """Dirichlet Laplacian on ``(0, length)``: ``mu_n = (n pi / length)^2``."""
        if isinstance(n_modes, bool) or int(n_modes) != n_modes or n_modes < 1:
            raise ParameterDomainError(f"n_modes must be a positive integer, got {n_modes!r}")
        length = _positive("length", length)
        n = np.arange(1, int(n_modes) + 1, dtype=float)
        return cls((n * np.pi / length) ** 2)

    @classmethod
    def explicit(cls, mus) -> "ModalBasis":
        return cls(np.asarray(mus, dtype=float))

    def __eq__(self, other):
        return isinstance(other, ModalBasis) and np.array_equal(self.mus, other.mus)

    def __hash__(self):
        return hash(self.mus.tobytes())


class _ModalState:
    ORDER = 0

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        arr = np.array(coeffs, dtype=float)
        if arr.ndim == 1 and arr.size == self.ORDER:
            arr = arr.reshape(1, self.ORDER)
        if arr.ndim != 2 or arr.shape[1] != self.ORDER:
            raise ShapeError(
                f"{type(self).__name__} needs shape (n_modes, {self.ORDER}), got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ShapeError("state coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("modal states are immutable")

    @classmethod
    def zeros(cls, n_modes: int):
        return cls(np.zeros((n_modes, cls.ORDER)))

    @classmethod
    def from_components(cls, *components):
        if len(components) != cls.ORDER:
            raise ShapeError(f"expected {cls.ORDER} components")
        return cls(np.column_stack([np.asarray(x, dtype=float).reshape(-1) for x in components]))

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[0]

    @property
    def u(self):
        return self.coeffs[:, 0]

    @property
    def v(self):
        return self.coeffs[:, 1]

    def scaled(self, factor: float):
        return type(self)(self.coeffs * factor)

    def check_basis(self, basis: ModalBasis):
        if self.n_modes != basis.n_modes:
            raise ShapeError(
                f"state has {self.n_modes} modes but basis has {basis.n_modes}"
            )

    def __eq__(self, other):
        return type(self) is type(other) and np.array_equal(self.coeffs, other.coeffs)

    def __repr__(self):
        return f"{type(self).__name__}(n_modes={self.n_modes})"


class ModalState3(_ModalState):
    """Eigencoefficients of ``(u, u_t, u_tt)``."""

    ORDER = 3
    __slots__ = ()

    @property
    def w(self):
        return self.coeffs[:, 2]


class ModalState2(_ModalState):
    """Eigencoefficients of ``(u, u_t)`` for the limit system."""

    ORDER = 2
    __slots__ = ()


@dataclass(frozen=True)
class NormKind:
    """Which squared norm to evaluate.

    Tags: ``tau0``, ``tau1``, ``tau2`` (mass-weighted), ``H00``, ``H10``
    (first two components only), ``H2`` (unweighted D(A) x D(A) x D(A^1/2))
    and ``A_power`` with exponent ``s`` applied to one ``component``.
    """

    tag: str
    s: Optional[float] = None
    component: int = 0

    _TAGS = ("tau0", "tau1", "tau2", "H00", "H10", "H2", "A_power")

    def __post_init__(self):
        if self.tag not in self._TAGS:
            raise ParameterDomainError(f"unknown norm kind {self.tag!r}")
        if self.tag == "A_power" and self.s not in (0.0, 0.5, 1.0, 1.5):
            raise ParameterDomainError("A_power exponent must be one of 0, 1/2, 1, 3/2")

    @classmethod
    def a_power(cls, s: float, component: int = 0) -> "NormKind":
        return cls("A_power", float(s), int(component))


NormKind.TAU0 = NormKind("tau0")
NormKind.TAU1 = NormKind("tau1")
NormKind.TAU2 = NormKind("tau2")
NormKind.H00 = NormKind("H00")
NormKind.H10 = NormKind("H10")
NormKind.H2 = NormKind("H2")


def norm_sq_array(coeffs, mus, tau, kind: NormKind):
    """Vectorised squared norm over the last two axes ``(..., n_modes, k)``."""
    coeffs = np.asarray(coeffs, dtype=float)
    k = coeffs.shape[-1]
    u = coeffs[..., 0]
    tag = kind.tag
    if tag == "A_power":
        if kind.component >= k:
            raise ShapeError(f"component {kind.component} absent from order-{k} state")
        x = coeffs[..., kind.component]
        return np.sum(mus ** (2.0 * kind.s) * x**2, axis=-1)
    v = coeffs[..., 1]
    if tag == "H00":
        return np.sum(mus * (u**2 + v**2), axis=-1)
    if tag == "H10":
        return np.sum(mus**2 * (u**2 + v**2), axis=-1)
    if k != 3:
        raise ShapeError(f"norm {tag!r} needs a three-component state")
    w = coeffs[..., 2]
    if tag == "tau0":
        return np.sum(mus * (u**2 + v**2) + tau * w**2, axis=-1)
    if tag == "tau1":
        return np.sum(mus**2 * u**2 + mus * v**2 + tau * w**2, axis=-1)
    if tag == "tau2":
        return np.sum(mus**2 * (u**2 + v**2) + tau * mus * w**2, axis=-1)
    # H2: tau-independent reference norm
    return np.sum(mus**2 * (u**2 + v**2) + mus * w**2, axis=-1)


def norm_sq(state, basis: ModalBasis, params: Params, kind: NormKind) -> float:
    state.check_basis(basis)
    return float(norm_sq_array(state.coeffs, basis.mus, params.tau, kind))


def project(state: ModalState3) -> ModalState2:
    """P: (u, v, w) -> (u, v)."""
    return ModalState2(state.coeffs[:, :2])


def extend(state: ModalState2) -> ModalState3:
    """E: (u, v) -> (u, v, 0)."""
    return ModalState3(np.column_stack([state.coeffs, np.zeros(state.n_modes)]))


def poincare_constant(basis: ModalBasis) -> float:
    """Sharp constant in ``||u||^2 <= C ||A^{1/2} u||^2``, i.e. ``1 / mu_1``."""
    return 1.0 / float(basis.mus[0])
