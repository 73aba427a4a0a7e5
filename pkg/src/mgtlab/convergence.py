"""Tau sweeps: convergence of the projected relaxed flow to the limit flow,
and the tau-uniform stability constants.

Every tau point is an independent job.  Jobs run on a thread pool when
``threads > 1``; results are collected in grid order so reports do not
depend on scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .dynamics import (
    build_propagator,
    difference_trajectory,
    evolve,
    prepare_u2,
    random_initial,
    time_grid,
)
from .energy import build_energy_trace, datko_integral, fit_decay_rate
from .errors import HorizonError, ParameterDomainError, UnsupportedRegimeError
from .fitting import RateFit, loglog_fit
from .model import ModalBasis, ModalState2, ModalState3, NormKind, Params, make_params, norm_sq_array

__all__ = [
    "DEFAULT_TAU_GRID",
    "NOISE_BAND",
    "SLOPE_BAND",
    "SweepPlan",
    "ConvergenceReport",
    "UniformBoundReport",
    "DatkoReport",
    "rate_sweep",
    "strong_convergence_sweep",
    "uniform_bound_sweep",
    "datko_sweep",
    "decreasing_within_band",
    "map_ordered",
]

DEFAULT_TAU_GRID = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
SLOPE_BAND = (0.8, 1.2)
NOISE_BAND = 0.05


@dataclass(frozen=True, eq=False)
class SweepPlan:
    """Everything a sweep needs; ``explicit`` overrides the random data class."""

    alpha: float = 1.0
    c: float = 1.0
    delta: float = 1.0
    tau_grid: Tuple[float, ...] = DEFAULT_TAU_GRID
    basis: ModalBasis = field(default_factory=lambda: ModalBasis.dirichlet_1d(64))
    data_class: str = "h2"
    seed: int = 0
    t_final: float = 5.0
    samples_per_unit_time: float = 40.0
    preparation: str = "well_prepared"
    explicit: Optional[ModalState2] = None
    early_samples: int = 400

    def __post_init__(self):
        grid = tuple(float(t) for t in self.tau_grid)
        object.__setattr__(self, "tau_grid", grid)
        if not grid:
            raise ParameterDomainError("tau_grid is empty")
        if any(t <= 0 for t in grid):
            raise ParameterDomainError("tau_grid values must be positive")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ParameterDomainError("tau_grid must be strictly decreasing")
        base = make_params(self.alpha, self.c, self.delta)
        if grid[0] >= base.tau_max:
            raise UnsupportedRegimeError(
                f"gamma_tau nonpositive: tau={grid[0]} >= tau_max={base.tau_max}"
            )
        if self.data_class not in ("h0", "h1", "h2", "explicit"):
            raise ParameterDomainError(f"unknown data class {self.data_class!r}")
        if (self.data_class == "explicit") != (self.explicit is not None):
            raise ParameterDomainError("explicit data goes with data_class='explicit'")
        if self.explicit is not None and self.preparation == "random":
            raise ParameterDomainError("preparation 'random' needs a random data class")
        if self.preparation not in ("well_prepared", "zero_u2", "random"):
            raise ParameterDomainError(f"unknown preparation {self.preparation!r}")
        if not self.t_final > 0:
            raise ParameterDomainError("t_final must be positive")

    def params(self, tau: float = 0.0) -> Params:
        return make_params(self.alpha, self.c, self.delta, tau)

    def grid(self) -> np.ndarray:
        return time_grid(self.t_final, self.samples_per_unit_time, self.early_samples)

    def shared_data(self) -> ModalState2:
        """The ``(u0, u1)`` shared by every tau point."""
        if self.explicit is not None:
            self.explicit.check_basis(self.basis)
            return self.explicit
        s = random_initial(self.basis, self.params(), self.data_class, self.seed)
        return ModalState2(s.coeffs[:, :2])

    def initial3(self, tau: float) -> ModalState3:
        """Relaxed initial state; ``random`` keeps the data class's own third component."""
        if self.preparation == "random":
            return random_initial(self.basis, self.params(), self.data_class, self.seed)
        d = self.shared_data()
        u2 = prepare_u2(d.u, d.v, self.basis.mus, self.params(tau), self.preparation)
        return ModalState3(np.column_stack([d.coeffs, u2]))


def map_ordered(fn, items, threads):
    """``[fn(x) for x in items]``, on a thread pool when ``threads > 1``."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, items))


def decreasing_within_band(values, band: float = NOISE_BAND) -> bool:
    """``v[i+1] < (1 + band) v[i]`` for all i, and the last value below the first."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return True
    return bool(np.all(v[1:] < (1.0 + band) * v[:-1]) and v[-1] < v[0])


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    taus: np.ndarray
    sup_err_sq: np.ndarray
    fit: Optional[RateFit]
    long_horizon: bool = False
    monotone: bool = True
    notice: str = ""
    tail_bounds: Optional[np.ndarray] = None
    reference_h2: float = 0.0

    def slope_in_band(self, band=SLOPE_BAND) -> bool:
        return self.fit is not None and band[0] <= self.fit.slope <= band[1]


def _err_sq(diff_coeffs, mus):
    return norm_sq_array(diff_coeffs, mus, 0.0, NormKind.H00)


def _difference(plan: SweepPlan, tau: float):
    p = plan.params(tau)
    g = plan.grid()
    init3 = plan.initial3(tau)
    relaxed = evolve(init3, plan.basis, p, g)
    diff = difference_trajectory(plan.shared_data(), plan.basis, p, g, relaxed=relaxed)
    return init3, relaxed, diff


def _sup_error(plan: SweepPlan, tau: float) -> float:
    diff = _difference(plan, tau)[2]
    return float(np.max(_err_sq(diff.coeffs, plan.basis.mus)))


def _finish(plan, errs, long_horizon, descriptive, tails=None):
    taus = np.asarray(plan.tau_grid)
    errs = np.asarray(errs, dtype=float)
    ref = float(norm_sq_array(plan.initial3(plan.tau_grid[-1]).coeffs, plan.basis.mus, 0.0,
                              NormKind.H2))
    fit = None
    notice = ""
    if np.all(errs == 0.0):
        notice = "degenerate data: all errors are zero, no fit"
    elif descriptive:
        notice = "descriptive: no rate asserted for this data class"
    elif taus.size < 3:
        notice = "fewer than three tau points, no fit"
    elif np.any(errs <= 0.0):
        notice = "some errors are zero, no fit"
    else:
        fit = loglog_fit(taus, errs)
    return ConvergenceReport(taus, errs, fit, long_horizon, decreasing_within_band(errs), notice,
                             tails, ref)


def rate_sweep(plan: SweepPlan, threads: int = 1) -> ConvergenceReport:
    """Sup-in-time squared H00 distance between the flows, and its log-log slope in tau."""
    if plan.data_class not in ("h2", "explicit"):
        raise ParameterDomainError("rate_sweep needs h2 or explicit data")
    errs = map_ordered(lambda t: _sup_error(plan, t), plan.tau_grid, threads)
    return _finish(plan, errs, False, False)


def _long_error(plan: SweepPlan, tau: float):
    init3, relaxed, diff = _difference(plan, tau)
    p = relaxed.params
    d = plan.shared_data()
    sampled = float(np.max(_err_sq(diff.coeffs, plan.basis.mus)))
    T = float(diff.times[-1])
    a_rel = relaxed.propagator.tail_amplitudes(init3.coeffs, T)[:, :2]
    a_lim = build_propagator(plan.basis, p, "limit").tail_amplitudes(d.coeffs, T)
    amp = a_rel + a_lim
    tail = float(np.sum(plan.basis.mus[:, None] * amp**2))
    if tail > sampled:
        raise HorizonError(
            f"tau={tau}: tail bound {tail:.3e} exceeds sampled sup {sampled:.3e}; extend t_final"
        )
    return sampled, tail


def strong_convergence_sweep(plan: SweepPlan, threads: int = 1) -> ConvergenceReport:
    """Sup over ``[0, inf)`` of the squared distance: samples on ``[0, T]`` plus a
    rigorous modal bound on ``[T, inf)``.  h0/h1 data are reported descriptively."""
    res = map_ordered(lambda t: _long_error(plan, t), plan.tau_grid, threads)
    errs = [r[0] for r in res]
    tails = np.array([r[1] for r in res])
    return _finish(plan, errs, True, plan.data_class in ("h0", "h1"), tails)


@dataclass(frozen=True, eq=False)
class UniformBoundReport:
    taus: np.ndarray
    M_hat: np.ndarray
    omega_hat: np.ndarray

    @property
    def max_M(self) -> float:
        return float(np.max(self.M_hat))

    @property
    def min_omega(self) -> float:
        return float(np.min(self.omega_hat))


def _uniform_point(plan: SweepPlan, tau: float, window=None):
    p = plan.params(tau)
    traj = evolve(plan.initial3(tau), plan.basis, p, plan.grid())
    trace = build_energy_trace(traj)
    n0 = trace.norm_tau0_sq
    if n0[0] == 0.0:
        return 1.0, math.inf
    M = float(np.sqrt(np.max(n0) / n0[0]))
    T = float(traj.times[-1])
    fit = fit_decay_rate(trace, window or (0.5 * T, T))
    return M, fit.omega_hat


def uniform_bound_sweep(plan: SweepPlan, threads: int = 1, window=None) -> UniformBoundReport:
    """Per tau, ``M_hat = sup_t ||U(t)||_{tau,0} / ||U0||_{tau,0}`` and fitted ``omega_hat``.

    The energy decay fit uses ``window`` (default: second half of the horizon).
    """
    for t in plan.tau_grid:
        if not plan.params(t).gamma_tau > 0:
            raise UnsupportedRegimeError("uniform bounds need gamma_tau > 0")
    res = map_ordered(lambda t: _uniform_point(plan, t, window), plan.tau_grid, threads)
    return UniformBoundReport(np.asarray(plan.tau_grid), np.array([r[0] for r in res]),
                              np.array([r[1] for r in res]))


@dataclass(frozen=True, eq=False)
class DatkoReport:
    taus: np.ndarray
    integrals: np.ndarray
    initial_norms: np.ndarray
    tails: np.ndarray

    @property
    def K_bar(self) -> float:
        return float(np.max(self.integrals / self.initial_norms))

    @property
    def spread(self) -> float:
        return float(np.max(self.integrals) / np.min(self.integrals))


def _datko_point(plan: SweepPlan, tau: float, tail_tol: float):
    p = plan.params(tau)
    init = plan.initial3(tau)
    traj = evolve(init, plan.basis, p, plan.grid())
    d = datko_integral(traj, p, plan.basis, tail_tol)
    n0 = float(norm_sq_array(init.coeffs, plan.basis.mus, tau, NormKind.TAU0))
    return float(d), n0, d.tail


def datko_sweep(plan: SweepPlan, tail_tol: float = 1e-12, threads: int = 1) -> DatkoReport:
    """Datko integrals ``int_0^inf ||U(t)||^2_{tau,0} dt`` for every tau."""
    res = map_ordered(lambda t: _datko_point(plan, t, tail_tol), plan.tau_grid, threads)
    return DatkoReport(np.asarray(plan.tau_grid), np.array([r[0] for r in res]),
                       np.array([r[1] for r in res]), np.array([r[2] for r in res]))
