"""The fourteen acceptance criteria, each returning a measured value and a verdict.

Criterion parameters are fixed here; ``run_criteria`` only chooses which to
run, the worker count, and the fault-injection hook for criterion 1.
Reports hold no timings, so they are byte-identical for any worker count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .convergence import (
    DEFAULT_TAU_GRID,
    NOISE_BAND,
    SLOPE_BAND,
    SweepPlan,
    datko_sweep,
    decreasing_within_band,
    map_ordered,
    rate_sweep,
    strong_convergence_sweep,
    uniform_bound_sweep,
)
from .csvio import render_csv
from .dynamics import (
    build_propagator,
    evolve,
    propagate,
    random_initial,
    time_grid,
    uniform_grid,
)
from .energy import (
    build_energy_trace,
    check_sandwich,
    energy_identity_residual,
    prop_sd_metric,
    sandwich_constants,
    weighted_third_derivative_bounds,
)
from .errors import InvariantViolation
from .model import ModalBasis, make_params
from .spectrum import (
    limit_roots_array,
    limit_spectrum,
    relaxed_roots_array,
    relaxed_spectrum,
    semicontinuity_gap,
    theta_correction,
)

__all__ = ["CriterionResult", "CRITERIA", "run_criteria", "report_csv", "all_passed"]

REPORT_HEADER = ("id", "status", "measured", "threshold")


@dataclass(frozen=True)
class CriterionResult:
    id: int
    name: str
    passed: bool
    measured: float
    threshold: str
    detail: str = ""

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def line(self) -> str:
        return (f"[{self.status.upper()}] criterion {self.id:2d} {self.name}: "
                f"measured={self.measured!r} threshold {self.threshold}"
                + (f" ({self.detail})" if self.detail else ""))


@dataclass(frozen=True)
class _Ctx:
    threads: int = 1
    perturb_energy: float = 0.0


def _c1(ctx):
    t0 = time.perf_counter()
    basis = ModalBasis.dirichlet_1d(64)
    worst = 0.0
    for tau in (1.0, 0.1, 0.01):
        p = make_params(1, 1, 1, tau)
        x = random_initial(basis, p, "h2", 0)
        traj = evolve(x, basis, p, uniform_grid(10.0, 2000))
        r = energy_identity_residual(traj, p, basis, perturb=ctx.perturb_energy)
        worst = max(worst, float(r))
    dt = time.perf_counter() - t0
    return worst, worst < 1e-6 and dt < 10.0, "< 1e-06", f"runtime {dt:.2f}s, limit 10s"


def _c2(ctx):
    basis = ModalBasis.dirichlet_1d(64)
    p = make_params(0.5, 1, 1, 1)
    x = random_initial(basis, p, "h2", 0)
    tr = build_energy_trace(evolve(x, basis, p, uniform_grid(10.0, 2000)))
    drift = float(np.max(np.abs(tr.E1 - tr.E1[0])) / tr.E1[0])
    return drift, drift < 1e-8, "< 1e-08", "gamma_tau = 0"


def _c3(ctx):
    basis = ModalBasis.dirichlet_1d(64)
    p = make_params(1, 1, 1, 0.1)
    k, K = sandwich_constants(p, 1.0, basis)
    consts_ok = abs(k - 1 / 7) <= 1e-12 and abs(K - 1.5) <= 1e-12
    rng = np.random.default_rng(0)
    randoms = rng.standard_normal((100, 64, 3))
    traj = evolve(random_initial(basis, p, "h2", 0), basis, p, time_grid(10.0))
    violations = 0
    ratios = []
    for states in (randoms, traj):
        try:
            rep = check_sandwich(states, p, 1.0, basis)
            ratios += [rep.min_ratio, rep.max_ratio]
        except InvariantViolation:
            violations += 1
    detail = f"k={k!r}, K={K!r}, observed ratio range [{min(ratios):.4f}, {max(ratios):.4f}]" \
        if ratios else f"k={k!r}, K={K!r}"
    return float(violations), consts_ok and violations == 0, "== 0 violations", detail


def _c4(ctx):
    t0 = time.perf_counter()
    rep = rate_sweep(SweepPlan(), threads=ctx.threads)
    dt = time.perf_counter() - t0
    f = rep.fit
    ok = rep.slope_in_band() and f.r_squared >= 0.98 and dt < 60.0
    return (f.slope, ok, f"in [{SLOPE_BAND[0]}, {SLOPE_BAND[1]}] with r2 >= 0.98",
            f"r2={f.r_squared:.4f}, runtime {dt:.2f}s")


def _c5(ctx):
    plan = SweepPlan(data_class="h0", preparation="random", t_final=20.0)
    rep = strong_convergence_sweep(plan, threads=ctx.threads)
    e = rep.sup_err_sq
    worst = float(np.max(e[1:] / e[:-1]))
    ok = decreasing_within_band(e, NOISE_BAND)
    return worst, ok, f"successive ratio < {1 + NOISE_BAND}", "max ratio err(tau_next)/err(tau)"


def _c6(ctx):
    mu = math.pi**2
    rep = semicontinuity_gap(mu, [make_params(1, 1, 1, t) for t in DEFAULT_TAU_GRID])
    tiny = semicontinuity_gap(mu, [make_params(1, 1, 1, 1e-6)]).gaps[0]
    slope = rep.fit.slope
    ok = abs(slope - 1.0) <= 0.2 and tiny < 1e-4
    return slope, ok, "in [0.8, 1.2] and gap(1e-6) < 1e-4", f"gap(1e-6)={tiny:.3e}"


def _c7(ctx):
    p = make_params(1, 1, 1, 0.1)
    basis = ModalBasis.dirichlet_1d(10_000)
    sp = relaxed_spectrum(basis, p)
    target = -p.c**2 / p.b_tau
    asym = p.gamma_tau / (2 * p.tau)
    d0 = np.abs(sp["b0"] - target)
    tail = slice(9, None)
    b1 = sp["b1"]
    re_err = abs(b1[-1].real + asym) / asym
    theta = theta_correction(basis.mus, p)
    big = np.arange(1, basis.n_modes + 1) >= 1000
    theta_rel = float(np.max(np.abs(sp["b0"][big].real - target - theta[big]) / np.abs(theta[big])))
    ok = (
        d0[-1] < 1e-3
        and np.all(np.diff(d0[tail]) < 0)
        and re_err < 1e-3
        and np.all(np.diff(np.abs(b1[tail].imag)) > 0)
        and theta_rel <= 0.1
    )
    return (float(d0[-1]), bool(ok), "< 1e-3 (plus tail, asymptote and theta checks)",
            f"Re(b1) rel. error {re_err:.2e}, theta rel. error {theta_rel:.2e}")


def _c8(ctx):
    p = make_params(1, 1, 1)
    sp = limit_spectrum(ModalBasis.dirichlet_1d(10_000), p)
    plus, minus = sp["b0"], sp["b1"]
    d = abs(plus[-1].real + p.c**2 / p.delta)
    mags = np.abs(minus)
    tail = slice(9, None)
    ok = d < 1e-3 and mags[-1] > 1e3 and np.all(np.diff(mags[tail]) > 0)
    return float(d), bool(ok), "< 1e-3 and |minus| > 1e3 increasing", f"|minus|={mags[-1]:.4g}"


def _draw_params(rng):
    alpha = rng.uniform(0.2, 2.0)
    c = rng.uniform(0.2, 2.0)
    delta = rng.uniform(0.1, 2.0)
    tau = 10 ** rng.uniform(-4, 0)
    mu = 10 ** rng.uniform(0, 6)
    return make_params(alpha, c, delta, tau), mu


def _c9(ctx):
    rng = np.random.default_rng(9)
    worst_root = 0.0
    worst_vieta = 0.0
    for _ in range(1000):
        p, mu = _draw_params(rng)
        r = relaxed_roots_array([mu], p)[0]
        comp = np.array([[-p.alpha / p.tau, -p.b_tau * mu / p.tau, -p.c**2 * mu / p.tau],
                         [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        worst_root = max(worst_root, _match(r, np.linalg.eigvals(comp)))
        worst_vieta = max(worst_vieta, _vieta(r, [p.tau, p.alpha, p.b_tau * mu, p.c**2 * mu]))
        q = limit_roots_array([mu], p)[0]
        comp2 = np.array([[-p.delta * mu / p.alpha, -p.c**2 * mu / p.alpha], [1.0, 0.0]])
        worst_root = max(worst_root, _match(q, np.linalg.eigvals(comp2)))
        worst_vieta = max(worst_vieta, _vieta(q, [p.alpha, p.delta * mu, p.c**2 * mu]))
    ok = worst_root <= 1e-9 and worst_vieta <= 1e-10
    return worst_root, ok, "<= 1e-9 (Vieta <= 1e-10)", f"worst Vieta error {worst_vieta:.2e}"


def _match(ours, oracle):
    """Largest distance from an oracle root to its partner, relative to the spectral radius."""
    scale = max(np.max(np.abs(oracle)), 1e-300)
    remaining = list(ours)
    worst = 0.0
    for z in oracle:
        j = int(np.argmin([abs(z - w) for w in remaining]))
        worst = max(worst, abs(z - remaining.pop(j)) / scale)
    return worst


def _vieta(roots, coeffs):
    """Relative error of every elementary symmetric function against ``coeffs`` (highest first)."""
    lead = coeffs[0]
    absr = np.abs(roots)
    err = 0.0
    for k in range(1, len(coeffs)):
        expected = (-1) ** k * coeffs[k] / lead
        e_k = _elem_sym(roots, k)
        bound = _elem_sym(absr, k).real
        err = max(err, abs(e_k - expected) / max(bound, abs(expected), 1e-300))
    return err


def _elem_sym(vals, k):
    e = np.zeros(k + 1, dtype=complex)
    e[0] = 1.0
    for v in vals:
        e[1:] = e[1:] + v * e[:-1]
    return e[k]


def _ode_oracle(A, x0, ts):
    sol = solve_ivp(lambda t, y: A @ y, (0.0, ts[-1]), x0, method="DOP853", t_eval=ts,
                    rtol=1e-13, atol=1e-30)
    return sol.y.T


def _c10(ctx):
    rng = np.random.default_rng(10)
    ts = np.array([0.1, 1.0, 5.0])
    worst = 0.0
    worst_flow = 0.0
    for system in ("relaxed", "limit"):
        for _ in range(20):
            p = make_params(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0),
                            rng.uniform(0.05, 0.5))
            mu = rng.uniform(1.0, 50.0)
            prop = build_propagator(mu, p, system)
            x0 = rng.standard_normal(prop.order)
            ours = prop.sample(x0[None], ts)[:, 0, :]
            ref = _ode_oracle(prop.matrix[0], x0, ts)
            rel = np.linalg.norm(ours - ref, axis=1) / np.linalg.norm(ref, axis=1)
            worst = max(worst, float(np.max(rel)))
            s, t = rng.uniform(0.0, 2.0, size=2)
            a = propagate(prop, x0, s + t)
            b = propagate(prop, propagate(prop, x0, t), s)
            worst_flow = max(worst_flow, float(np.linalg.norm(a - b) / np.linalg.norm(a)))
    ok = worst <= 1e-8 and worst_flow <= 1e-10
    return worst, ok, "<= 1e-8 (flow <= 1e-10)", f"worst flow error {worst_flow:.2e}"


def _c11(ctx):
    plan = SweepPlan(data_class="h0", preparation="random", tau_grid=(0.5, 0.1, 0.02), t_final=40.0)
    ub = uniform_bound_sweep(plan, threads=ctx.threads)
    dk = datko_sweep(plan, threads=ctx.threads)
    ok = ub.min_omega > 0 and dk.spread < 5.0
    return (dk.spread, bool(ok), "< 5 and all omega_hat > 0",
            f"min omega_hat={ub.min_omega:.4f}, K_bar={dk.K_bar:.4f}")


def _c12(ctx):
    basis = ModalBasis.dirichlet_1d(64)
    d = SweepPlan().shared_data()
    taus = [0.1 / 2**k for k in range(9)]
    vals = [m for _, m in prop_sd_metric(d, basis, [make_params(1, 1, 1, t) for t in taus],
                                         time_grid(5.0), "well_prepared")]
    v = np.asarray(vals)
    worst = float(np.max(v[1:] / v[:-1]))
    return worst, bool(np.all(np.diff(v) < 0)), "successive ratio < 1", f"last={v[-1]:.4e}"


def _c13(ctx):
    plan = SweepPlan(preparation="random")
    basis, grid = plan.basis, plan.grid()

    def one(tau):
        r = weighted_third_derivative_bounds(plan.initial3(tau), basis, plan.params(tau), grid)
        return r.integral_bound / r.reference

    R = np.asarray(map_ordered(one, plan.tau_grid, ctx.threads))
    growth = float(np.max(R) / R[0])
    ok = np.all(np.isfinite(R)) and growth < 5.0
    return growth, bool(ok), "max R / R(tau_max) < 5", f"C_measured={np.max(R):.4f}"


_DETERMINISM_SUBSET = (4, 5, 11, 13)


def _c14(ctx):
    a = report_csv(run_criteria(_DETERMINISM_SUBSET, threads=1))
    b = report_csv(run_criteria(_DETERMINISM_SUBSET, threads=4))
    same = a == b
    return 1.0 if same else 0.0, same, "== 1 (identical bytes)", "criteria 4, 5, 11, 13 at 1 vs 4 threads"


CRITERIA: Dict[int, tuple] = {
    1: ("energy identity", _c1),
    2: ("conservative case", _c2),
    3: ("norm sandwich", _c3),
    4: ("convergence rate", _c4),
    5: ("strong convergence trend", _c5),
    6: ("spectral convergence", _c6),
    7: ("relaxed branch asymptotics", _c7),
    8: ("limit branch asymptotics", _c8),
    9: ("root solver oracle", _c9),
    10: ("propagator oracle", _c10),
    11: ("uniform decay and Datko", _c11),
    12: ("tau^1/2 u_tt proxy", _c12),
    13: ("weighted third derivative", _c13),
    14: ("determinism", _c14),
}


def run_criteria(ids: Optional[Sequence[int]] = None, threads: int = 1,
                 perturb_energy: float = 0.0) -> List[CriterionResult]:
    ctx = _Ctx(int(threads), float(perturb_energy))
    out = []
    for i in sorted(set(ids) if ids else CRITERIA):
        name, fn = CRITERIA[i]
        measured, ok, threshold, detail = fn(ctx)
        out.append(CriterionResult(i, name, bool(ok), float(measured), threshold, detail))
    return out


def report_csv(results: Sequence[CriterionResult]) -> str:
    return render_csv(REPORT_HEADER, [(r.id, r.status, r.measured, r.threshold) for r in results])


def all_passed(results: Sequence[CriterionResult]) -> bool:
    return all(r.passed for r in results)
