"""Exact mode-by-mode propagation of the relaxed and limit systems.

Each mode is a constant-coefficient linear ODE.  When its characteristic
roots are well separated the flow is written as a sum of exponentials,
``x_j(t) = sum_k a_k lam_k^j exp(lam_k t)``, with the amplitudes ``a`` from a
power-of-two scaled Vandermonde solve.  Otherwise the matrix exponential is
used directly.  Quadratic-form integrals in time are evaluated in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from . import kernels
from .errors import ParameterDomainError, RangeError, ShapeError
from .model import ModalBasis, ModalState2, ModalState3, Params
from .spectrum import limit_roots_array, relaxed_roots_array

__all__ = [
    "ModePropagator",
    "Trajectory",
    "build_propagator",
    "generator_matrices",
    "propagate",
    "evolve",
    "time_grid",
    "uniform_grid",
    "third_derivative",
    "differentiated_initial",
    "difference_trajectory",
    "prepare_u2",
    "random_initial",
    "DATA_CLASSES",
]

SEPARATION_TOL = 1e-6
EXP_LIMIT = 700.0

# A-power exponents (u, v, w) defining the regularity of each data class
DATA_CLASSES = {
    "h0": (0.5, 0.5, 0.0),
    "h1": (1.0, 0.5, 0.0),
    "h2": (1.0, 1.0, 0.5),
}
DATA_EPS = 0.1


def generator_matrices(mus, params: Params, system: str) -> np.ndarray:
    mus = np.asarray(mus, dtype=float).reshape(-1)
    c2 = params.c**2
    if system == "relaxed":
        tau = params.tau
        if tau <= 0.0:
            raise ParameterDomainError("the relaxed system needs tau > 0")
        m = np.zeros((mus.size, 3, 3))
        m[:, 0, 1] = 1.0
        m[:, 1, 2] = 1.0
        m[:, 2, 0] = -c2 * mus / tau
        m[:, 2, 1] = -params.b_tau * mus / tau
        m[:, 2, 2] = -params.alpha / tau
        return m
    if system == "limit":
        m = np.zeros((mus.size, 2, 2))
        m[:, 0, 1] = 1.0
        m[:, 1, 0] = -c2 * mus / params.alpha
        m[:, 1, 1] = -params.delta * mus / params.alpha
        return m
    raise ParameterDomainError(f"system must be 'relaxed' or 'limit', got {system!r}")


def _as_coeffs(state, order):
    if isinstance(state, (ModalState2, ModalState3)):
        arr = state.coeffs
    else:
        arr = np.asarray(state, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != order:
        raise ShapeError(f"expected states with {order} components per mode, got {arr.shape}")
    return arr


class ModePropagator:
    """Exact flows for a batch of modes of one system.

    ``methods[n]`` is ``"root_form"`` or ``"matrix_exp"``; ``method`` is the
    single value when the batch has one mode.
    """

    def __init__(self, mus, params: Params, system: str):
        mus = np.asarray(mus, dtype=float).reshape(-1)
        if mus.size == 0 or np.any(mus <= 0) or not np.all(np.isfinite(mus)):
            raise ParameterDomainError("mu values must be finite and positive")
        self.system = system
        self.params = params
        self.mus = mus
        self.matrix = generator_matrices(mus, params, system)
        if system == "relaxed":
            self.roots = relaxed_roots_array(mus, params)
        else:
            self.roots = limit_roots_array(mus, params)
        k = self.order
        r = self.roots
        scale = np.max(np.abs(r), axis=1)
        sep = np.full(mus.size, np.inf)
        for i in range(k):
            for j in range(i + 1, k):
                sep = np.minimum(sep, np.abs(r[:, i] - r[:, j]))
        root_form = sep > SEPARATION_TOL * scale
        self.methods = np.where(root_form, "root_form", "matrix_exp")
        self._ridx = np.flatnonzero(root_form)
        self._midx = np.flatnonzero(~root_form)

        # scaled Vandermonde: V = D Vs, D = diag(s^j), Vs[j, k] = (lam_k / s)^j
        lam = r[self._ridx]
        s = 2.0 ** np.round(np.log2(np.maximum(scale[self._ridx], 1e-300)))
        self._s = s
        pw = np.arange(k)
        self._vs = (lam[:, None, :] / s[:, None, None]) ** pw[None, :, None]
        self._powers = lam[:, None, :] ** pw[None, :, None]

    @property
    def order(self) -> int:
        return 3 if self.system == "relaxed" else 2

    @property
    def method(self) -> str:
        if self.mus.size != 1:
            raise AttributeError("method is per mode; use .methods for a batch")
        return str(self.methods[0])

    @property
    def max_growth(self) -> float:
        return float(np.max(self.roots.real))

    def _check_times(self, t):
        t = np.asarray(t, dtype=float).reshape(-1)
        if not np.all(np.isfinite(t)):
            raise ParameterDomainError("times must be finite")
        if self.system == "limit" and np.any(t < 0):
            raise ParameterDomainError("the limit semigroup is forward-only (t >= 0)")
        if t.size:
            re = self.roots.real
            worst = max(np.max(re) * t.max(), np.min(re) * t.min())
            if worst > EXP_LIMIT:
                raise RangeError(f"exp argument {worst:.3g} would overflow")
        return t

    def amplitudes(self, x0) -> np.ndarray:
        """Complex ``a`` for the root-form modes, shape ``(n_root_modes, k)``."""
        x = np.asarray(x0, dtype=float)[self._ridx]
        rhs = x / self._s[:, None] ** np.arange(self.order)[None, :]
        return np.linalg.solve(self._vs, rhs.astype(complex)[..., None])[..., 0]

    def sample(self, x0, times) -> np.ndarray:
        """States at ``times`` for initial coefficients ``x0`` ``(N, k)``; shape ``(T, N, k)``."""
        x0 = _as_coeffs(x0, self.order)
        if x0.shape[0] != self.mus.size:
            raise ShapeError(f"state has {x0.shape[0]} modes, propagator {self.mus.size}")
        t = self._check_times(times)
        out = np.empty((t.size, self.mus.size, self.order))
        if self._ridx.size:
            a = self.amplitudes(x0)
            B = a[:, None, :] * self._powers
            out[:, self._ridx, :] = kernels.expsum_eval(self.roots[self._ridx], B, t)
        for n in self._midx:
            E = scipy.linalg.expm(self.matrix[n][None] * t[:, None, None])
            out[:, n, :] = E @ x0[n]
        # the flow at t = 0 is the identity; skip the Vandermonde round trip
        out[t == 0.0] = x0
        if not np.all(np.isfinite(out)):
            raise RangeError("propagation produced non-finite values")
        return out

    def quad_integral(self, x0, weights, times) -> np.ndarray:
        """Running ``sum_n int_0^t x_n(s)^T W_n x_n(s) ds`` at each of ``times``.

        ``weights`` is ``(N, k, k)`` symmetric, or ``(k, k)`` shared by all modes.
        """
        x0 = _as_coeffs(x0, self.order)
        t = self._check_times(times)
        if np.any(t < 0):
            raise ParameterDomainError("integrals are over forward time")
        k = self.order
        W = np.asarray(weights, dtype=float)
        if W.shape == (k, k):
            W = np.broadcast_to(W, (self.mus.size, k, k))
        if W.shape != (self.mus.size, k, k):
            raise ShapeError(f"weights must have shape ({self.mus.size}, {k}, {k})")
        total = np.zeros(t.size)
        if self._ridx.size:
            a = self.amplitudes(x0)
            P = self._powers
            M = np.einsum("nik,nij,njl->nkl", P, W[self._ridx], np.conj(P))
            G = a[:, :, None] * np.conj(a)[:, None, :] * M
            total += kernels.expsum_quad(self.roots[self._ridx], G, t)
        for n in self._midx:
            total += _lyapunov_running(self.matrix[n], W[n], x0[n], t)
        return total

    def tail_amplitudes(self, x0, t_start: float) -> np.ndarray:
        """Per-mode, per-component bounds on ``sup_{t >= t_start} |x_j(t)|``.

        Root-form modes use ``sum_k |a_k lam_k^j| exp(Re lam_k t_start)``;
        matrix-exponential modes use ``sup_s ||exp(A s)||_2 * |x(t_start)|``.
        Both assume every root has nonpositive real part.
        """
        x0 = _as_coeffs(x0, self.order)
        if np.any(self.roots.real > 0):
            raise ParameterDomainError("tail bounds need a non-growing flow")
        out = np.empty((self.mus.size, self.order))
        if self._ridx.size:
            a = self.amplitudes(x0)
            B = np.abs(a[:, None, :] * self._powers)
            decay = np.exp(self.roots[self._ridx].real * t_start)
            out[self._ridx] = np.sum(B * decay[:, None, :], axis=2)
        for n in self._midx:
            A = self.matrix[n]
            xt = scipy.linalg.expm(A * t_start) @ x0[n]
            out[n] = _expm_sup_norm(A) * np.linalg.norm(xt)
        return out


def _lyapunov_running(A, W, x0, t):
    """``x0^T [int_0^t exp(A^T s) W exp(A s) ds] x0`` via ``A^T M + M A = F(t)^T W F(t) - W``."""
    k = A.shape[0]
    ident = np.eye(k)
    L = np.kron(ident, A.T) + np.kron(A.T, ident)
    F = scipy.linalg.expm(A[None] * t[:, None, None])
    rhs = np.einsum("tji,jk,tkl->til", F, W, F) - W[None]
    vec = rhs.reshape(t.size, k * k).T
    M = np.linalg.solve(L, vec).T.reshape(t.size, k, k)
    return np.einsum("i,tij,j->t", x0, M, x0)


def _expm_sup_norm(A):
    rate = max(1e-3, float(np.min(np.abs(np.linalg.eigvals(A).real))))
    s = np.concatenate([[0.0], np.geomspace(1e-6, 60.0 / rate, 400)])
    E = scipy.linalg.expm(A[None] * s[:, None, None])
    return float(np.max(np.linalg.norm(E, ord=2, axis=(1, 2))))


def build_propagator(mu, params: Params, system: str) -> ModePropagator:
    """Propagator for one ``mu`` (scalar) or a batch (array or ModalBasis)."""
    if isinstance(mu, ModalBasis):
        mu = mu.mus
    return ModePropagator(np.atleast_1d(np.asarray(mu, dtype=float)), params, system)


def propagate(prop: ModePropagator, mode_state, t: float):
    """Flow ``mode_state`` forward (or, for the relaxed group, backward) by ``t``."""
    arr = _as_coeffs(mode_state, prop.order)
    out = prop.sample(arr, [float(t)])[0]
    if isinstance(mode_state, (ModalState2, ModalState3)):
        return type(mode_state)(out)
    if np.ndim(mode_state) == 1:
        return out[0]
    return out


# -- time grids --------------------------------------------------------------


def uniform_grid(t_final: float, n_samples: int) -> np.ndarray:
    if not t_final > 0 or n_samples < 2:
        raise ParameterDomainError("need t_final > 0 and at least two samples")
    return np.linspace(0.0, float(t_final), int(n_samples))


def time_grid(t_final: float, samples_per_unit_time: float = 40.0, early_samples: int = 400,
              t_min: float = 1e-9) -> np.ndarray:
    """Uniform grid merged with a geometric early-time refinement.

    Short transients (fast relaxed modes decay on the scale tau) are resolved
    by the geometric part, so sample maxima are not missed near ``t = 0``.
    """
    if not t_final > 0:
        raise ParameterDomainError("t_final must be positive")
    if samples_per_unit_time <= 0:
        raise ParameterDomainError("samples_per_unit_time must be positive")
    n = max(2, int(math.ceil(t_final * samples_per_unit_time)) + 1)
    parts = [np.linspace(0.0, t_final, n)]
    if early_samples > 0:
        parts.append(np.geomspace(t_min, min(1.0, t_final), int(early_samples)))
    return np.unique(np.concatenate(parts))


def _validate_grid(grid):
    g = np.asarray(grid, dtype=float).reshape(-1)
    if g.size == 0 or g[0] != 0.0:
        raise ParameterDomainError("time grid must start at 0")
    if np.any(np.diff(g) <= 0) or not np.all(np.isfinite(g)):
        raise ParameterDomainError("time grid must be finite and strictly increasing")
    return g


# -- trajectories ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Exact samples of one flow; ``coeffs`` has shape ``(T, n_modes, k)``."""

    times: np.ndarray
    coeffs: np.ndarray
    params: Params
    basis: ModalBasis
    propagator: Optional[ModePropagator] = None
    initial: Optional[np.ndarray] = None

    @property
    def order(self) -> int:
        return self.coeffs.shape[2]

    def __len__(self):
        return self.times.size

    def state(self, i: int):
        cls = ModalState3 if self.order == 3 else ModalState2
        return cls(self.coeffs[i])

    @property
    def states(self):
        return [self.state(i) for i in range(len(self))]

    def integral(self, weights) -> np.ndarray:
        """Exact running integral of a modal quadratic form at every sample."""
        if self.propagator is None:
            raise ParameterDomainError("trajectory carries no propagator for exact integrals")
        return self.propagator.quad_integral(self.initial, weights, self.times)


def evolve(initial, basis: ModalBasis, params: Params, grid) -> Trajectory:
    """Sample the exact flow of ``initial`` (3 components: relaxed, 2: limit)."""
    if isinstance(initial, ModalState3):
        system = "relaxed"
    elif isinstance(initial, ModalState2):
        system = "limit"
    else:
        raise ShapeError("initial state must be ModalState3 or ModalState2")
    initial.check_basis(basis)
    g = _validate_grid(grid)
    prop = build_propagator(basis, params, system)
    x0 = np.array(initial.coeffs)
    states = prop.sample(x0, g)
    states[0] = x0
    g.setflags(write=False)
    states.setflags(write=False)
    return Trajectory(g, states, params, basis, prop, x0)


def third_derivative(state: ModalState3, basis: ModalBasis, params: Params) -> np.ndarray:
    """Per-mode ``u_ttt`` read off the relaxed equation."""
    if params.tau <= 0.0:
        raise ParameterDomainError("u_ttt is defined only for tau > 0")
    state.check_basis(basis)
    return _uttt(state.coeffs, basis.mus, params)


def _uttt(coeffs, mus, params):
    u, v, w = coeffs[..., 0], coeffs[..., 1], coeffs[..., 2]
    return -(params.alpha * w + params.b_tau * mus * v + params.c**2 * mus * u) / params.tau


def differentiated_initial(state: ModalState3, basis: ModalBasis, params: Params) -> ModalState3:
    """Initial state ``(v, w, u_ttt)`` of the time-differentiated system."""
    d3 = third_derivative(state, basis, params)
    return ModalState3(np.column_stack([state.v, state.w, d3]))


def uttt_weight(mus, params: Params) -> np.ndarray:
    """Per-mode ``W`` with ``x^T W x = u_ttt^2``."""
    mus = np.asarray(mus, dtype=float)
    r = -np.stack(
        [params.c**2 * mus, params.b_tau * mus, np.full(mus.size, params.alpha)], axis=1
    ) / params.tau
    return r[:, :, None] * r[:, None, :]


# -- initial data --------------------------------------------------------------


def prepare_u2(u0, u1, mus, params: Params, preparation: str) -> np.ndarray:
    """Third component for shared ``(u0, u1)``.

    ``well_prepared`` solves the limit equation at ``t = 0``; ``zero_u2`` sets 0.
    """
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    if preparation == "well_prepared":
        return -(params.c**2 * mus * u0 + params.delta * mus * u1) / params.alpha
    if preparation == "zero_u2":
        return np.zeros_like(u0)
    raise ParameterDomainError(f"unknown preparation {preparation!r}")


def random_initial(basis: ModalBasis, params: Params, data_class: str, seed: int,
                   preparation: Optional[str] = None) -> ModalState3:
    """Seeded random data of a given regularity class.

    Component ``j`` gets ``g * mu^-(s_j + eps)`` with ``g`` standard normal and
    ``s_j`` the A-power of its regularity class.  With ``preparation`` the
    random third component is replaced by the prepared one.
    """
    if data_class not in DATA_CLASSES:
        raise ParameterDomainError(f"data class must be one of {sorted(DATA_CLASSES)}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((3, basis.n_modes))
    s = np.asarray(DATA_CLASSES[data_class])[:, None]
    comps = g * basis.mus[None, :] ** (-(s + DATA_EPS))
    if preparation is not None:
        comps[2] = prepare_u2(comps[0], comps[1], basis.mus, params, preparation)
    return ModalState3(comps.T)


# -- difference system ---------------------------------------------------------


def difference_trajectory(initial2: ModalState2, basis: ModalBasis, params: Params, grid,
                          preparation: str = "well_prepared",
                          relaxed: Optional[Trajectory] = None) -> Trajectory:
    """``x = P u_relaxed - u_limit`` from shared ``(u0, u1)``.

    ``relaxed`` replaces the relaxed trajectory (it must share the grid and its
    first two components must start at ``initial2``); this is how a caller
    supplies its own third component, and also a test hook.  The returned
    trajectory has no propagator.
    """
    params.require_relaxed()
    initial2.check_basis(basis)
    g = _validate_grid(grid)
    limit = evolve(initial2, basis, params, g)
    if relaxed is None:
        u2 = prepare_u2(initial2.u, initial2.v, basis.mus, params, preparation)
        init3 = ModalState3(np.column_stack([initial2.coeffs, u2]))
        relaxed = evolve(init3, basis, params, g)
    elif not np.array_equal(relaxed.times, g):
        raise ShapeError("supplied relaxed trajectory uses a different grid")
    diff = relaxed.coeffs[:, :, :2] - limit.coeffs
    diff[0] = 0.0
    diff.setflags(write=False)
    return Trajectory(g, diff, params, basis, None, None)

