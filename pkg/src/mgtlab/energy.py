"""Energy functionals, the dissipation identity, norm equivalence and decay.

Energies per mode (``b = b_tau``, ``g = gamma_tau``)::

    E0 = (alpha/2) v^2 + (c^2/2) mu u^2
    E1 = (b/2) mu (v + c^2 u / b)^2 + (tau/2) (w + c^2 v / b)^2 + (c^2 g / (2 b)) v^2

and along relaxed trajectories ``E1(t) + g int_0^t ||u_tt||^2 = E1(0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .dynamics import Trajectory, evolve, prepare_u2, uttt_weight
from .errors import (
    HorizonError,
    InternalConsistencyError,
    InvariantViolation,
    ParameterDomainError,
    ResolutionError,
    ShapeError,
    UnsupportedRegimeError,
)
from .fitting import RateFit, linear_fit
from .model import ModalBasis, ModalState2, ModalState3, NormKind, Params, norm_sq_array, poincare_constant

__all__ = [
    "EnergyTrace",
    "SandwichReport",
    "DecayFit",
    "IdentityResidual",
    "DatkoIntegral",
    "ThirdDerivativeBounds",
    "energy_E0",
    "energy_E1",
    "energy_total",
    "h1_energy",
    "build_energy_trace",
    "energy_identity_residual",
    "sandwich_constants",
    "check_sandwich",
    "datko_integral",
    "fit_decay_rate",
    "weighted_third_derivative_bounds",
    "prop_sd_metric",
]

EPS_FLOOR = 1e-300
EXPANSION_TOL = 1e-12
QUAD_ABS_TOL = 1e-8
QUAD_REL_TOL = 1e-6


# -- pointwise energies (vectorised over leading axes) -------------------------


def _e0(coeffs, mus, params):
    u, v = coeffs[..., 0], coeffs[..., 1]
    return np.sum(0.5 * params.alpha * v**2 + 0.5 * params.c**2 * mus * u**2, axis=-1)


def _e1_modes(coeffs, mus, params):
    u, v, w = coeffs[..., 0], coeffs[..., 1], coeffs[..., 2]
    c2, b, tau = params.c**2, params.b_tau, params.tau
    g = params.gamma_tau
    return (
        0.5 * b * mus * (v + c2 * u / b) ** 2
        + 0.5 * tau * (w + c2 * v / b) ** 2
        + 0.5 * c2 * g / b * v**2
    )


def _e1_expanded_terms(coeffs, mus, params):
    u, v, w = coeffs[..., 0], coeffs[..., 1], coeffs[..., 2]
    c2, b, tau, a = params.c**2, params.b_tau, params.tau, params.alpha
    return (
        0.5 * tau * w**2,
        0.5 * b * mus * v**2,
        0.5 * c2 * c2 / b * mus * u**2,
        c2 * mus * v * u,
        tau * c2 / b * w * v,
        0.5 * a * c2 / b * v**2,
    )


def _e1(coeffs, mus, params, check=True):
    modes = _e1_modes(coeffs, mus, params)
    total = np.sum(modes, axis=-1)
    if check:
        terms = _e1_expanded_terms(coeffs, mus, params)
        expanded = np.sum(sum(terms), axis=-1)
        scale = np.sum(sum(np.abs(t) for t in terms), axis=-1)
        err = np.abs(total - expanded)
        if np.any(err > EXPANSION_TOL * np.maximum(scale, EPS_FLOOR)):
            worst = float(np.max(err / np.maximum(scale, EPS_FLOOR)))
            raise InternalConsistencyError(
                f"completed-square and expanded E1 disagree (relative {worst:.3e})"
            )
    return total


def _coeffs_of(state, basis):
    state.check_basis(basis)
    return state.coeffs


def energy_E0(state, basis: ModalBasis, params: Params) -> float:
    return float(_e0(_coeffs_of(state, basis), basis.mus, params))


def energy_E1(state: ModalState3, basis: ModalBasis, params: Params) -> float:
    """Higher-order energy, evaluated in completed-square form and cross-checked."""
    params.require_relaxed()
    if not isinstance(state, ModalState3):
        raise ShapeError("E1 needs a three-component state")
    return float(_e1(_coeffs_of(state, basis), basis.mus, params))


def energy_total(state: ModalState3, basis: ModalBasis, params: Params) -> float:
    return energy_E0(state, basis, params) + energy_E1(state, basis, params)


def h1_energy(state: ModalState3, basis: ModalBasis, params: Params) -> float:
    """``E0 + E1 + ||A u||^2``."""
    coeffs = _coeffs_of(state, basis)
    return energy_total(state, basis, params) + float(np.sum(basis.mus**2 * coeffs[:, 0] ** 2))


# -- traces ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EnergyTrace:
    """Per-sample energies and norms of one trajectory.

    For limit trajectories ``E1`` and the tau-weighted quantities are zero and
    ``E`` equals ``E0``.  ``int_utt_sq`` and ``int_norm_tau0_sq`` are running
    integrals from 0.
    """

    times: np.ndarray
    E0: np.ndarray
    E1: np.ndarray
    E: np.ndarray
    script_E: np.ndarray
    norm_tau0_sq: np.ndarray
    norm_tau1_sq: np.ndarray
    utt_l2_sq: np.ndarray
    uttt_weighted_sq: np.ndarray
    int_utt_sq: np.ndarray
    int_norm_tau0_sq: np.ndarray


def _utt_weight(k):
    W = np.zeros((k, k))
    W[2, 2] = 1.0
    return W


def _tau0_weight(mus, tau, k):
    W = np.zeros((mus.size, k, k))
    W[:, 0, 0] = mus
    W[:, 1, 1] = mus
    if k == 3:
        W[:, 2, 2] = tau
    return W


def build_energy_trace(traj: Trajectory, quadrature: str = "exact") -> EnergyTrace:
    params, mus = traj.params, traj.basis.mus
    X = traj.coeffs
    k = traj.order
    e0 = _e0(X, mus, params)
    if k == 3:
        e1 = _e1(X, mus, params)
        n0 = norm_sq_array(X, mus, params.tau, NormKind.TAU0)
        n1 = norm_sq_array(X, mus, params.tau, NormKind.TAU1)
        utt = np.sum(X[..., 2] ** 2, axis=-1)
        d3 = -(params.alpha * X[..., 2] + params.b_tau * mus * X[..., 1]
               + params.c**2 * mus * X[..., 0]) / params.tau
        uttt = params.tau * np.sum(d3**2, axis=-1)
        int_utt = _running(traj, _utt_weight(3), utt, quadrature)
    else:
        e1 = np.zeros_like(e0)
        n0 = norm_sq_array(X, mus, 0.0, NormKind.H00)
        n1 = np.sum(mus**2 * X[..., 0] ** 2 + mus * X[..., 1] ** 2, axis=-1)
        utt = np.zeros_like(e0)
        uttt = np.zeros_like(e0)
        int_utt = np.zeros_like(e0)
    e = e0 + e1
    script = e + np.sum(mus**2 * X[..., 0] ** 2, axis=-1)
    int_n0 = _running(traj, _tau0_weight(mus, params.tau, k), n0, quadrature)
    return EnergyTrace(traj.times, e0, e1, e, script, n0, n1, utt, uttt, int_utt, int_n0)


def _cumtrapz(t, f):
    out = np.zeros_like(f)
    out[1:] = np.cumsum(0.5 * np.diff(t) * (f[1:] + f[:-1]))
    return out


def _running(traj, W, samples, quadrature):
    if quadrature == "exact":
        return traj.integral(W)
    if quadrature == "trapezoid":
        return _cumtrapz(traj.times, samples)
    raise ParameterDomainError(f"quadrature must be 'exact' or 'trapezoid', got {quadrature!r}")


# -- energy identity ---------------------------------------------------------------


class IdentityResidual(float):
    """Relative identity residual; ``quad_error`` is the attached quadrature estimate."""

    def __new__(cls, value, quad_error=0.0, method="exact", running=None):
        obj = super().__new__(cls, value)
        obj.quad_error = float(quad_error)
        obj.method = method
        obj.running = running
        return obj


def energy_identity_residual(traj: Trajectory, params: Params, basis: ModalBasis,
                             quadrature: str = "exact", perturb: float = 0.0) -> IdentityResidual:
    """``max_t |E1(t) + g Q(t) - E1(0)| / max(E1(0), floor)``.

    ``Q`` is the running integral of ``||u_tt||^2``: exact by default, or the
    composite trapezoid with a Richardson half-grid error estimate.
    ``perturb`` scales E1 after t = 0 and exists only for fault injection.
    """
    gamma = params.require_relaxed()
    if traj.order != 3:
        raise ShapeError("energy identity needs a relaxed trajectory")
    if traj.basis != basis or traj.params != params:
        raise ParameterDomainError("trajectory was computed for different params or basis")
    X = traj.coeffs
    e1 = _e1(X, basis.mus, params)
    if perturb:
        e1 = e1.copy()
        e1[1:] *= 1.0 + perturb
    utt = np.sum(X[..., 2] ** 2, axis=-1)
    quad_err = 0.0
    if quadrature == "exact":
        Q = traj.integral(_utt_weight(3))
    elif quadrature == "trapezoid":
        t = traj.times
        Q = _cumtrapz(t, utt)
        if t.size >= 3:
            coarse = _cumtrapz(t[::2], utt[::2])
            quad_err = float(np.max(np.abs(Q[::2] - coarse))) / 3.0
    else:
        raise ParameterDomainError(f"quadrature must be 'exact' or 'trapezoid', got {quadrature!r}")
    denom = max(float(e1[0]), EPS_FLOOR)
    running = np.abs(e1 + gamma * Q - e1[0]) / denom
    if quad_err and gamma * quad_err > max(QUAD_ABS_TOL, QUAD_REL_TOL * denom):
        raise ResolutionError(
            f"trapezoid error estimate {gamma * quad_err:.3e} exceeds tolerance; refine the time grid"
        )
    return IdentityResidual(float(np.max(running)), gamma * quad_err, quadrature, running)


# -- norm equivalence ----------------------------------------------------------------


def sandwich_constants(params: Params, tau0: float, basis: ModalBasis) -> Tuple[float, float]:
    """Constants ``(k, K)`` with ``k ||U||^2_{tau,0} <= E <= K ||U||^2_{tau,0}`` for tau <= tau0."""
    params.require_relaxed()
    tau = params.tau
    if not (0.0 < tau <= tau0):
        raise ParameterDomainError(f"need 0 < tau <= tau0, got tau={tau}, tau0={tau0}")
    if tau0 >= params.tau_max:
        raise UnsupportedRegimeError("gamma_tau nonpositive at tau0 (tau0 >= tau_max)")
    a, c2, d = params.alpha, params.c**2, params.delta
    g0 = params.with_tau(tau0).gamma_tau
    cs = poincare_constant(basis)
    k = min(c2 / 4.0, d * d / ((4.0 + tau0) * c2 + 2.0 * d), d / (2.0 * d + (4.0 + tau0) * c2))
    K = max(
        0.5 * c2 * (2.0 + c2 / d),
        0.5 * c2 / d * (cs * (tau0 + c2 * tau0 / d + g0) + (a * cs + d) * d / c2 + d),
        0.5 + c2 / (2.0 * d),
    )
    return k, K


@dataclass(frozen=True)
class SandwichReport:
    k_const: float
    K_const: float
    min_ratio: float
    max_ratio: float
    n_checked: int


def check_sandwich(states, params: Params, tau0: float, basis: ModalBasis) -> SandwichReport:
    """Check ``k ||s||^2_{tau,0} <= E(s) <= K ||s||^2_{tau,0}`` at every sample.

    ``states`` is a relaxed Trajectory, a sequence of ModalState3 or an array
    ``(S, n_modes, 3)``.
    """
    k, K = sandwich_constants(params, tau0, basis)
    if isinstance(states, Trajectory):
        X = states.coeffs
    elif isinstance(states, np.ndarray):
        X = states
    else:
        X = np.stack([_coeffs_of(s, basis) for s in states])
    if X.ndim != 3 or X.shape[1:] != (basis.n_modes, 3):
        raise ShapeError(f"expected (samples, {basis.n_modes}, 3) states, got {X.shape}")
    E = _e0(X, basis.mus, params) + _e1(X, basis.mus, params)
    N = norm_sq_array(X, basis.mus, params.tau, NormKind.TAU0)
    lo = k * N
    hi = K * N
    bad = np.flatnonzero((E < lo) | (E > hi))
    if bad.size:
        i = int(bad[0])
        raise InvariantViolation(
            f"sandwich violated at sample {i}: E={E[i]!r}, k*N={lo[i]!r}, K*N={hi[i]!r}", sample=i
        )
    nz = N > 0
    if np.any(nz):
        r = E[nz] / N[nz]
        rmin, rmax = float(r.min()), float(r.max())
    else:
        rmin = rmax = math.nan
    return SandwichReport(k, K, rmin, rmax, int(X.shape[0]))


# -- decay ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit(RateFit):
    """Fit of ``log E`` against ``t``; ``omega_hat`` is the amplitude decay rate."""

    @property
    def omega_hat(self) -> float:
        return -0.5 * self.slope


def fit_decay_rate(trace, window: Tuple[float, float], quantity: str = "E") -> DecayFit:
    """Least-squares slope of ``log trace.<quantity>`` over ``t_lo <= t <= t_hi``."""
    t_lo, t_hi = float(window[0]), float(window[1])
    if not t_hi > t_lo:
        raise ParameterDomainError("fit window must have t_hi > t_lo")
    t = np.asarray(trace.times, dtype=float)
    y = np.asarray(getattr(trace, quantity), dtype=float)
    sel = (t >= t_lo) & (t <= t_hi)
    if np.count_nonzero(sel) < 2:
        raise ParameterDomainError("fewer than two samples inside the fit window")
    if np.any(y[sel] <= 0.0):
        raise ParameterDomainError("energies must be positive on the fit window")
    f = linear_fit(t[sel], np.log(y[sel]), window=(t_lo, t_hi))
    return DecayFit(f.slope, f.intercept, f.r_squared, f.window, f.n_points)


class DatkoIntegral(float):
    """Horizon integral plus geometric tail; both pieces kept as attributes."""

    def __new__(cls, horizon, tail, omega_hat, final_ratio):
        obj = super().__new__(cls, horizon + tail)
        obj.horizon = float(horizon)
        obj.tail = float(tail)
        obj.omega_hat = float(omega_hat)
        obj.final_ratio = float(final_ratio)
        return obj


def datko_integral(traj: Trajectory, params: Params, basis: ModalBasis,
                   tail_tol: float = 1e-12, quantity: str = "norm") -> DatkoIntegral:
    """``int_0^inf q(t) dt`` with ``q = ||state||^2_{tau,0}`` (H00 for limit runs).

    ``quantity="energy"`` integrates ``E`` instead.  The horizon part is exact;
    beyond ``T`` the tail ``q(T) / (2 omega_hat)`` uses the decay rate fitted
    over the second half of the horizon.
    """
    if traj.basis != basis:
        raise ParameterDomainError("trajectory basis differs from basis")
    trace = build_energy_trace(traj)
    if quantity == "norm":
        q = trace.norm_tau0_sq
        horizon = float(trace.int_norm_tau0_sq[-1])
    elif quantity == "energy":
        q = trace.E
        horizon = float(_energy_integral(traj)[-1])
    else:
        raise ParameterDomainError("quantity must be 'norm' or 'energy'")
    if q[0] == 0.0:
        return DatkoIntegral(0.0, 0.0, math.inf, 0.0)
    ratio = float(q[-1] / q[0])
    if ratio > tail_tol:
        raise HorizonError(
            f"final/initial ratio {ratio:.3e} exceeds tail_tol {tail_tol:.1e}; extend t_final"
        )
    t = traj.times
    half = 0.5 * t[-1]
    sel = (t >= half) & (q > 0)
    if np.count_nonzero(sel) < 2:
        raise HorizonError("too few positive samples to fit the tail decay rate")
    f = linear_fit(t[sel], np.log(q[sel]))
    omega = -0.5 * f.slope
    if not omega > 0:
        raise HorizonError("fitted tail is not decaying")
    tail = float(q[-1]) / (2.0 * omega)
    return DatkoIntegral(horizon, tail, omega, ratio)


def _energy_integral(traj):
    params, mus = traj.params, traj.basis.mus
    k = traj.order
    W = np.zeros((mus.size, k, k))
    W[:, 0, 0] = 0.5 * params.c**2 * mus
    W[:, 1, 1] = 0.5 * params.alpha
    if k == 3:
        c2, b, tau = params.c**2, params.b_tau, params.tau
        W[:, 0, 0] += 0.5 * c2 * c2 / b * mus
        W[:, 1, 1] += 0.5 * b * mus + 0.5 * params.alpha * c2 / b
        W[:, 0, 1] = W[:, 1, 0] = 0.5 * c2 * mus
        W[:, 2, 2] = 0.5 * tau
        W[:, 1, 2] = W[:, 2, 1] = 0.5 * tau * c2 / b
    return traj.integral(W)


# -- tau-uniform bounds ------------------------------------------------------------------


class ThirdDerivativeBounds(NamedTuple):
    sup_bound: float
    integral_bound: float
    reference: float


def weighted_third_derivative_bounds(initial: ModalState3, basis: ModalBasis, params: Params,
                                     grid) -> ThirdDerivativeBounds:
    """``sup_t tau ||u_ttt||^2`` and ``g tau int_0^T ||u_ttt||^2`` with ``||U0||^2_H2``."""
    gamma = params.require_relaxed()
    traj = evolve(initial, basis, params, grid)
    X = traj.coeffs
    d3 = -(params.alpha * X[..., 2] + params.b_tau * basis.mus * X[..., 1]
           + params.c**2 * basis.mus * X[..., 0]) / params.tau
    sup = float(np.max(params.tau * np.sum(d3**2, axis=-1)))
    integral = float(traj.integral(uttt_weight(basis.mus, params))[-1])
    ref = float(norm_sq_array(initial.coeffs, basis.mus, params.tau, NormKind.H2))
    return ThirdDerivativeBounds(sup, gamma * params.tau * integral, ref)


def prop_sd_metric(initial, basis: ModalBasis, params_grid: Sequence[Params], grid,
                   preparation: Optional[str] = "well_prepared"):
    """``[(tau, sup_t tau ||u_tt(t)||^2)]`` over a tau grid.

    A ModalState2 gets its third component from ``preparation`` for each tau;
    a ModalState3 is used as given.
    """
    out = []
    for p in params_grid:
        p.require_relaxed()
        if isinstance(initial, ModalState2):
            u2 = prepare_u2(initial.u, initial.v, basis.mus, p, preparation)
            init3 = ModalState3(np.column_stack([initial.coeffs, u2]))
        elif isinstance(initial, ModalState3):
            init3 = initial
        else:
            raise ShapeError("initial must be a modal state")
        traj = evolve(init3, basis, p, grid)
        m = float(np.max(p.tau * np.sum(traj.coeffs[..., 2] ** 2, axis=-1)))
        out.append((p.tau, m))
    return out
