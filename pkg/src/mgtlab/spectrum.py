"""Point spectra of the limit and relaxed generators, mode by mode.

Per mode ``mu`` the limit generator has the roots of
``alpha l^2 + delta mu l + c^2 mu`` and the relaxed generator the roots of
``tau l^3 + alpha l^2 + b_tau mu l + c^2 mu``.  Cubics are solved through the
companion matrix followed by a Newton polish in the original polynomial.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from . import kernels
from .errors import (
    ClassificationError,
    InternalConsistencyError,
    NumericalFailure,
    ParameterDomainError,
    UnsupportedRegimeError,
)
from .fitting import RateFit, loglog_fit
from .model import ModalBasis, Params

__all__ = [
    "RootBranch",
    "SpectrumSet",
    "DivisionWitness",
    "GapReport",
    "limit_roots",
    "limit_roots_array",
    "relaxed_roots",
    "relaxed_roots_array",
    "cubic_coefficients",
    "companion_matrix",
    "classify_branches",
    "limit_spectrum",
    "relaxed_spectrum",
    "continuous_point",
    "vertical_asymptote",
    "theta_correction",
    "division_witness",
    "semicontinuity_gap",
]

ROOT_RESIDUAL_TOL = 1e-10
REAL_SNAP_TOL = 1e-9
AMBIGUITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RootBranch:
    label: str
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class SpectrumSet:
    """Labelled branches over the mode index plus continuous-spectrum data."""

    mus: np.ndarray
    branches: Dict[str, RootBranch] = field(default_factory=dict)
    cont_point: Optional[float] = None
    vert_asymptote: Optional[float] = None

    def __getitem__(self, label):
        return self.branches[label].values

    @property
    def labels(self):
        return tuple(self.branches)


@dataclass(frozen=True, eq=False)
class DivisionWitness:
    """``cubic = p * quadratic + q`` with p, q highest-degree first."""

    p_coeffs: np.ndarray
    q_coeffs: np.ndarray
    max_q_magnitude: float
    max_identity_error: float


@dataclass(frozen=True, eq=False)
class GapReport:
    taus: np.ndarray
    gaps: np.ndarray
    fit: Optional[RateFit]

    def pairs(self):
        return list(zip(self.taus.tolist(), self.gaps.tolist()))


# -- limit (quadratic) ------------------------------------------------------


def limit_roots_array(mus, params: Params) -> np.ndarray:
    """Roots for every ``mu``; column 0 is the '+' branch, column 1 the '-' branch.

    The larger-magnitude root is formed first and the other one recovered
    from the product ``c^2 mu / alpha``, so no cancellation occurs.
    """
    mus = np.asarray(mus, dtype=float).reshape(-1)
    a, c2, d = params.alpha, params.c**2, params.delta
    disc = mus * (d * d * mus - 4.0 * a * c2)
    out = np.empty((mus.size, 2), dtype=complex)
    real = disc >= 0.0
    if np.any(real):
        m = mus[real]
        q = -0.5 * (d * m + np.sqrt(disc[real]))
        out[real, 1] = q / a
        out[real, 0] = c2 * m / q
        dbl = disc[real] == 0.0
        if np.any(dbl):
            idx = np.flatnonzero(real)[dbl]
            out[idx, 0] = out[idx, 1] = -d * mus[idx] / (2.0 * a)
    cplx = ~real
    if np.any(cplx):
        re = -d * mus[cplx] / (2.0 * a)
        im = np.sqrt(-disc[cplx]) / (2.0 * a)
        out[cplx, 0] = re + 1j * im
        out[cplx, 1] = re - 1j * im
    return out


def limit_roots(mu: float, params: Params):
    if mu <= 0:
        raise ParameterDomainError("mu must be positive")
    r = limit_roots_array([mu], params)[0]
    return complex(r[0]), complex(r[1])


# -- relaxed (cubic) --------------------------------------------------------


def cubic_coefficients(mus, params: Params) -> np.ndarray:
    """Rows ``[tau, alpha, b_tau mu, c^2 mu]`` (highest degree first)."""
    mus = np.asarray(mus, dtype=float).reshape(-1)
    out = np.empty((mus.size, 4))
    out[:, 0] = params.tau
    out[:, 1] = params.alpha
    out[:, 2] = params.b_tau * mus
    out[:, 3] = params.c**2 * mus
    return out


def companion_matrix(mus, params: Params) -> np.ndarray:
    """Per-mode generator blocks; these are also the companion matrices."""
    mus = np.asarray(mus, dtype=float).reshape(-1)
    tau = params.tau
    m = np.zeros((mus.size, 3, 3))
    m[:, 0, 1] = 1.0
    m[:, 1, 2] = 1.0
    m[:, 2, 0] = -params.c**2 * mus / tau
    m[:, 2, 1] = -params.b_tau * mus / tau
    m[:, 2, 2] = -params.alpha / tau
    return m


def _residual_scale(coeffs, roots):
    deg = coeffs.shape[1] - 1
    absr = np.abs(roots)
    terms = [np.abs(coeffs[:, i, None]) * absr ** (deg - i) for i in range(deg + 1)]
    return np.max(np.stack(terms), axis=0)


def _pair_cubic_roots(roots, coeffs):
    """Snap near-real roots, enforce exact conjugate pairs, fixed ordering."""
    im = roots.imag
    snap = np.abs(im) < REAL_SNAP_TOL * (1.0 + np.abs(roots.real))
    if np.any(snap):
        roots = roots.copy()
        roots[snap] = roots[snap].real
        roots, _ = kernels.polish_roots(coeffs, roots)
        roots[snap] = roots[snap].real
    out = np.empty_like(roots)
    for m in range(roots.shape[0]):
        r = roots[m]
        nreal = int(np.sum(r.imag == 0.0))
        while nreal not in (1, 3):
            # a real cubic has 1 or 3 real roots; snap the least complex one
            cand = np.where(r.imag == 0.0, np.inf, np.abs(r.imag))
            j = int(np.argmin(cand))
            r = r.copy()
            r[j] = r[j].real
            nreal += 1
        reals = np.sort(r[r.imag == 0.0].real)[::-1]
        if nreal == 3:
            out[m] = reals
            continue
        z = r[r.imag != 0.0]
        if np.sign(z[0].imag) == np.sign(z[1].imag):
            raise NumericalFailure(f"mode {m}: complex roots are not a conjugate pair", raw=r)
        zp, zn = (z[0], z[1]) if z[0].imag > 0 else (z[1], z[0])
        pair = 0.5 * (zp + np.conj(zn))
        out[m] = [reals[0], pair, np.conj(pair)]
    return out


def relaxed_roots_array(mus, params: Params) -> np.ndarray:
    """All three cubic roots per mode, shape ``(N, 3)``.

    Ordering: real roots first (descending), then the complex pair with
    positive imaginary part first.
    """
    if params.tau <= 0.0:
        raise ParameterDomainError("relaxed roots need tau > 0")
    mus = np.asarray(mus, dtype=float).reshape(-1)
    if np.any(mus <= 0):
        raise ParameterDomainError("mu must be positive")
    coeffs = cubic_coefficients(mus, params)
    raw = np.linalg.eigvals(companion_matrix(mus, params))
    polished, _ = kernels.polish_roots(coeffs, raw)
    # a Newton step that jumps toward a neighbouring root is discarded
    sep = np.full(raw.shape, np.inf)
    for i, j in itertools.permutations(range(3), 2):
        sep[:, i] = np.minimum(sep[:, i], np.abs(raw[:, i] - raw[:, j]))
    jumped = np.abs(polished - raw) >= 0.5 * sep
    polished = np.where(jumped, raw, polished)
    roots = _pair_cubic_roots(polished, coeffs)
    resid = np.abs(_horner(coeffs, roots))
    scale = _residual_scale(coeffs, roots)
    bad = resid > ROOT_RESIDUAL_TOL * scale
    if np.any(bad):
        modes = np.flatnonzero(bad.any(axis=1))
        raise NumericalFailure(
            f"root polish did not converge for modes {modes.tolist()[:10]}", raw=raw[modes]
        )
    return roots


def _horner(coeffs, z):
    p = np.zeros_like(z, dtype=complex)
    for i in range(coeffs.shape[1]):
        p = p * z + coeffs[:, i, None]
    return p


def relaxed_roots(mu: float, params: Params):
    r = relaxed_roots_array([mu], params)[0]
    return tuple(complex(x) for x in r)


# -- classification ---------------------------------------------------------


def _pair_order(a, b, prev1, prev2):
    """Assign two roots to (b1, b2); returns (b1, b2, cost)."""
    if a.imag != 0.0 or b.imag != 0.0:
        p, n = (a, b) if a.imag > b.imag else (b, a)
        cost = 0.0 if prev1 is None else abs(p - prev1) + abs(n - prev2)
        return p, n, cost
    hi, lo = (a, b) if a.real >= b.real else (b, a)
    if prev1 is None:
        return hi, lo, 0.0
    keep = abs(hi - prev1) + abs(lo - prev2)
    swap = abs(lo - prev1) + abs(hi - prev2)
    if swap < keep:
        return lo, hi, swap
    return hi, lo, keep


def classify_branches(roots_by_mode, params: Params, mus=None) -> SpectrumSet:
    """Label cubic roots as b0 (eventually real) and b1/b2 (complex pair).

    The first mode is seeded by proximity to ``-c^2/b_tau``; later modes pick
    the b0 candidate minimising total displacement from the previous mode.
    """
    roots = np.asarray(roots_by_mode, dtype=complex)
    if roots.ndim != 2 or roots.shape[1] != 3:
        raise ParameterDomainError("expected an (N, 3) array of cubic roots")
    if roots.shape[0] < 3:
        raise ParameterDomainError("classification needs at least three modes")
    gamma = params.require_relaxed()
    if gamma < 0.0:
        raise UnsupportedRegimeError("branch classification refused for gamma_tau < 0")
    target = -params.c**2 / params.b_tau
    n = roots.shape[0]
    b0 = np.empty(n, dtype=complex)
    b1 = np.empty(n, dtype=complex)
    b2 = np.empty(n, dtype=complex)
    prev = None
    for m in range(n):
        r = roots[m]
        options = []
        for j in range(3):
            rest = [r[i] for i in range(3) if i != j]
            if prev is None:
                p1, p2, pc = _pair_order(rest[0], rest[1], None, None)
                cost = abs(r[j] - target)
            else:
                p1, p2, pc = _pair_order(rest[0], rest[1], prev[1], prev[2])
                cost = abs(r[j] - prev[0]) + pc
            options.append((cost, r[j], p1, p2))
        options.sort(key=lambda o: o[0])
        best, second = options[0], options[1]
        scale = 1.0 + max(abs(x) for x in r)
        if second[0] - best[0] <= AMBIGUITY_TOL * scale and best[1] != second[1]:
            raise ClassificationError(f"ambiguous branch assignment at mode index {m}", [m])
        _, b0[m], b1[m], b2[m] = best
        prev = (b0[m], b1[m], b2[m])
    if mus is None:
        mus = np.full(n, np.nan)
    return SpectrumSet(
        np.asarray(mus, dtype=float),
        {"b0": RootBranch("b0", b0), "b1": RootBranch("b1", b1), "b2": RootBranch("b2", b2)},
        continuous_point(params, "relaxed"),
        vertical_asymptote(params),
    )


def limit_spectrum(basis: ModalBasis, params: Params) -> SpectrumSet:
    r = limit_roots_array(basis.mus, params)
    return SpectrumSet(
        basis.mus,
        {"b0": RootBranch("b0", r[:, 0]), "b1": RootBranch("b1", r[:, 1])},
        continuous_point(params, "limit"),
        None,
    )


def relaxed_spectrum(basis: ModalBasis, params: Params) -> SpectrumSet:
    return classify_branches(relaxed_roots_array(basis.mus, params), params, basis.mus)


def continuous_point(params: Params, which: str) -> Optional[float]:
    if which == "limit":
        return -params.c**2 / params.delta
    if which != "relaxed":
        raise ParameterDomainError(f"which must be 'limit' or 'relaxed', got {which!r}")
    gamma = params.require_relaxed()
    if gamma < 0.0:
        raise UnsupportedRegimeError("continuous spectrum not characterised for gamma_tau < 0")
    if gamma == 0.0:
        return None
    return -params.c**2 / params.b_tau


def vertical_asymptote(params: Params) -> float:
    """``-gamma_tau / (2 tau)``, the limit of Re of the complex pair."""
    gamma = params.require_relaxed()
    return -gamma / (2.0 * params.tau) + 0.0  # no negative zero when gamma_tau = 0


def theta_correction(mus, params: Params):
    """First-order offset of b0 from ``-c^2/b_tau``: ``-gamma c^4 / (mu b_tau^3)``."""
    gamma = params.require_relaxed()
    return -gamma * params.c**4 / (np.asarray(mus, dtype=float) * params.b_tau**3)


# -- relaxed vs limit -------------------------------------------------------


def division_witness(mu: float, params: Params, probe_points: Sequence[complex]) -> DivisionWitness:
    """Exact synthetic division of the cubic by the limit quadratic."""
    params.require_relaxed()
    if mu <= 0:
        raise ParameterDomainError("mu must be positive")
    probes = np.asarray(probe_points, dtype=complex).reshape(-1)
    if probes.size < 5:
        raise ParameterDomainError("need at least five probe points")
    a, c2, d, tau, b = params.alpha, params.c**2, params.delta, params.tau, params.b_tau
    p1 = tau / a
    p0 = 1.0 - tau * d * mu / a**2
    q1 = (tau * mu / a**2) * (a * c2 * (a - 1.0) + d * d * mu)
    q0 = tau * d * c2 * mu**2 / a**2

    cubic = ((tau * probes + a) * probes + b * mu) * probes + c2 * mu
    quad = (a * probes + d * mu) * probes + c2 * mu
    rebuilt = (p1 * probes + p0) * quad + (q1 * probes + q0)
    scale = np.maximum.reduce(
        [tau * np.abs(probes) ** 3, a * np.abs(probes) ** 2, b * mu * np.abs(probes),
         np.full(probes.size, c2 * mu), np.abs(cubic)]
    )
    err = float(np.max(np.abs(cubic - rebuilt) / scale))
    if err > 1e-12:
        raise InternalConsistencyError(f"division identity off by {err:.3e} (relative)")
    return DivisionWitness(
        np.array([p1, p0]), np.array([q1, q0]), float(max(abs(q1), abs(q0))), err
    )


def semicontinuity_gap(mu: float, params_tau_grid: Sequence[Params]) -> GapReport:
    """Largest distance from a limit root to its nearest relaxed root, per tau."""
    grid = list(params_tau_grid)
    if not grid:
        raise ParameterDomainError("empty tau grid")
    base = grid[0]
    for p in grid:
        if p.tau <= 0.0:
            raise ParameterDomainError("all tau must be positive")
        if (p.alpha, p.c, p.delta) != (base.alpha, base.c, base.delta):
            raise ParameterDomainError("tau grid must share alpha, c, delta")
    lim = np.asarray(limit_roots(mu, base))
    taus = np.array([p.tau for p in grid])
    gaps = np.empty(taus.size)
    for i, p in enumerate(grid):
        rel = np.asarray(relaxed_roots(mu, p))
        gaps[i] = max(np.min(np.abs(rel - z)) for z in lim)
    fit = None
    if taus.size >= 2 and np.all(gaps > 0) and np.unique(taus).size >= 2:
        fit = loglog_fit(taus, gaps)
    return GapReport(taus, gaps, fit)
