"""Energy functionals, the dissipation identity, norm sandwich and decay."""

import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mgtlab import (
    HorizonError,
    InternalConsistencyError,
    InvariantViolation,
    ModalBasis,
    ModalState2,
    ModalState3,
    ParameterDomainError,
    ResolutionError,
    ShapeError,
    UnsupportedRegimeError,
    make_params,
)
from mgtlab import energy
from mgtlab.dynamics import evolve, random_initial, time_grid, uniform_grid
from mgtlab.energy import (
    build_energy_trace,
    check_sandwich,
    datko_integral,
    energy_E0,
    energy_E1,
    energy_identity_residual,
    energy_total,
    fit_decay_rate,
    h1_energy,
    prop_sd_metric,
    sandwich_constants,
    weighted_third_derivative_bounds,
)

PI2 = math.pi**2
coef = st.floats(-10.0, 10.0, allow_nan=False)


def _one(mu):
    return ModalBasis.explicit([mu])


class TestFunctionals:
    def test_e0_single_mode(self):
        p = make_params(1, 1, 1, 0.1)
        assert energy_E0(ModalState3([1.0, 0, 0]), _one(PI2), p) == pytest.approx(PI2 / 2, rel=1e-15)
        assert energy_E0(ModalState3.zeros(1), _one(PI2), p) == 0.0

    def test_e1_single_mode(self):
        p = make_params(1, 1, 1, 0.1)
        assert energy_E1(ModalState3([1.0, 0, 0]), _one(1.0), p) == pytest.approx(1 / 2.2, rel=1e-15)

    def test_h1_energy_frozen(self):
        """At mu = pi^2 the E1 term is pi^2 / 2.2, so the total is E0 + pi^2/2.2 + pi^4."""
        p = make_params(1, 1, 1, 0.1)
        val = h1_energy(ModalState3([1.0, 0, 0]), _one(PI2), p)
        assert val == pytest.approx(PI2 / 2 + PI2 / 2.2 + PI2**2, rel=1e-15)
        assert val == pytest.approx(106.83007705322409, rel=1e-14)

    def test_frozen_random_state(self, unit_params):
        b = ModalBasis.dirichlet_1d(4)
        x = random_initial(b, unit_params, "h2", 0)
        assert energy_E0(x, b, unit_params) == pytest.approx(0.00256872552724061, rel=1e-13)
        assert energy_E1(x, b, unit_params) == pytest.approx(0.021147876731361898, rel=1e-13)

    def test_e1_needs_relaxed(self):
        with pytest.raises(ParameterDomainError):
            energy_E1(ModalState3.zeros(1), _one(1.0), make_params(1, 1, 1))
        with pytest.raises(ShapeError):
            energy_E1(ModalState2.zeros(1), _one(1.0), make_params(1, 1, 1, 0.1))

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(coef, coef, coef), min_size=1, max_size=4),
           st.floats(0.3, 2.0), st.floats(0.3, 2.0), st.floats(0.3, 2.0), st.floats(1e-3, 1.0))
    def test_expansion_and_positivity(self, rows, alpha, c, delta, tau):
        p = make_params(alpha, c, delta, tau)
        x = np.array(rows)
        mus = (np.arange(1, x.shape[0] + 1) * np.pi) ** 2
        # completed square and expansion agree (raises otherwise)
        e1 = energy._e1(x, mus, p, check=True)
        e0 = energy._e0(x, mus, p)
        assert e0 >= 0.0
        if p.gamma_tau >= 0:
            assert e1 >= 0.0
        s = ModalState3(x)
        basis = ModalBasis.explicit(mus)
        assert energy_E0(s.scaled(2.0), basis, p) == pytest.approx(4 * e0, rel=1e-12, abs=1e-300)
        assert h1_energy(s, basis, p) >= energy_total(s, basis, p)

    def test_expansion_cross_check_fires(self, monkeypatch, unit_params):
        monkeypatch.setattr(energy, "_e1_modes", lambda X, mus, p: 1.5 * np.ones(X.shape[:-1]))
        with pytest.raises(InternalConsistencyError):
            energy_E1(ModalState3([1.0, 2.0, 3.0]), _one(4.0), unit_params)


class TestIdentity:
    @pytest.mark.parametrize("tau", [1.0, 0.1, 0.01])
    def test_generic(self, tau):
        basis = ModalBasis.dirichlet_1d(64)
        p = make_params(1, 1, 1, tau)
        traj = evolve(random_initial(basis, p, "h2", 0), basis, p, uniform_grid(10.0, 2000))
        r = energy_identity_residual(traj, p, basis)
        assert r < 1e-6
        assert r.method == "exact"
        assert r.running.shape == (2000,)

    def test_conservative(self):
        basis = ModalBasis.dirichlet_1d(64)
        p = make_params(0.5, 1, 1, 1)
        traj = evolve(random_initial(basis, p, "h2", 0), basis, p, uniform_grid(10.0, 2000))
        assert energy_identity_residual(traj, p, basis) < 1e-8

    def test_zero_data(self, basis8, unit_params):
        traj = evolve(ModalState3.zeros(8), basis8, unit_params, uniform_grid(1.0, 11))
        assert energy_identity_residual(traj, unit_params, basis8) == 0.0

    def test_trapezoid_too_coarse(self):
        basis = ModalBasis.dirichlet_1d(64)
        p = make_params(1, 1, 1, 0.1)
        traj = evolve(random_initial(basis, p, "h2", 0), basis, p, uniform_grid(10.0, 2000))
        with pytest.raises(ResolutionError):
            energy_identity_residual(traj, p, basis, quadrature="trapezoid")

    def test_trapezoid_single_slow_mode(self):
        basis = ModalBasis.explicit([1.0])
        p = make_params(1, 1, 1, 0.1)
        traj = evolve(ModalState3([1.0, 0.0, -1.0]), basis, p, uniform_grid(10.0, 20001))
        r = energy_identity_residual(traj, p, basis, quadrature="trapezoid")
        assert r < 1e-6 and r.quad_error > 0

    def test_fault_injection(self, basis8, unit_params):
        traj = evolve(random_initial(basis8, unit_params, "h2", 0), basis8, unit_params, time_grid(2.0))
        assert energy_identity_residual(traj, unit_params, basis8, perturb=1e-3) > 1e-4

    def test_mismatched_params(self, basis8, unit_params):
        traj = evolve(ModalState3.zeros(8), basis8, unit_params, uniform_grid(1.0, 3))
        with pytest.raises(ParameterDomainError):
            energy_identity_residual(traj, make_params(1, 1, 1, 0.2), basis8)

    def test_e1_nonincreasing(self, basis8, unit_params):
        traj = evolve(random_initial(basis8, unit_params, "h2", 2), basis8, unit_params, time_grid(5.0))
        tr = build_energy_trace(traj)
        assert np.all(np.diff(tr.E1) <= 1e-14 * tr.E1[0])


class TestTrace:
    def test_fields(self, basis8, unit_params):
        traj = evolve(random_initial(basis8, unit_params, "h2", 0), basis8, unit_params, time_grid(2.0))
        tr = build_energy_trace(traj)
        np.testing.assert_array_equal(tr.E, tr.E0 + tr.E1)
        assert np.all(tr.E0 >= 0) and np.all(tr.E1 >= 0)
        assert np.all(tr.script_E >= tr.E)
        # the tau-weighted u_tt term is one summand of the squared tau,0 norm
        assert np.all(unit_params.tau * tr.utt_l2_sq <= tr.norm_tau0_sq)
        ex = build_energy_trace(traj, "exact").int_norm_tau0_sq
        tz = build_energy_trace(traj, "trapezoid").int_norm_tau0_sq
        assert tz[-1] == pytest.approx(ex[-1], rel=1e-3)

    def test_limit_trace(self):
        basis = ModalBasis.explicit([1.0])
        traj = evolve(ModalState2([1.0, 0.0]), basis, make_params(1, 1, 2), uniform_grid(20.0, 2001))
        tr = build_energy_trace(traj)
        assert np.all(tr.E1 == 0.0)
        np.testing.assert_array_equal(tr.E, tr.E0)


class TestSandwich:
    def test_constants(self):
        basis = ModalBasis.dirichlet_1d(64)
        k, K = sandwich_constants(make_params(1, 1, 1, 0.1), 1.0, basis)
        assert k == pytest.approx(1 / 7, rel=1e-15)
        assert K == 1.5

    def test_middle_term(self):
        # a large delta makes the middle term of K the maximum
        basis = ModalBasis.dirichlet_1d(4)
        p = make_params(1, 1, 0.05, 0.01)
        k, K = sandwich_constants(p, 0.02, basis)
        g0 = p.with_tau(0.02).gamma_tau
        cs = 1 / PI2
        mid = 0.5 / 0.05 * (cs * (0.02 + 0.02 / 0.05 + g0) + (cs + 0.05) * 0.05 + 0.05)
        assert K == pytest.approx(max(0.5 * (2 + 1 / 0.05), mid, 0.5 + 1 / 0.1), rel=1e-14)
        assert k < K

    def test_regime(self):
        with pytest.raises(UnsupportedRegimeError):
            sandwich_constants(make_params(0.5, 1, 1, 0.1), 1.0, ModalBasis.dirichlet_1d(3))
        with pytest.raises(ParameterDomainError):
            sandwich_constants(make_params(1, 1, 1, 0.5), 0.1, ModalBasis.dirichlet_1d(3))

    def test_random_states_and_trajectory(self):
        basis = ModalBasis.dirichlet_1d(64)
        p = make_params(1, 1, 1, 0.1)
        states = np.random.default_rng(0).standard_normal((100, 64, 3))
        rep = check_sandwich(states, p, 1.0, basis)
        assert rep.k_const <= rep.min_ratio <= rep.max_ratio <= rep.K_const
        assert rep.n_checked == 100
        traj = evolve(random_initial(basis, p, "h2", 0), basis, p, time_grid(10.0))
        check_sandwich(traj, p, 1.0, basis)
        scaled = check_sandwich(states * 7.0, p, 1.0, basis)
        assert scaled.min_ratio == pytest.approx(rep.min_ratio, rel=1e-13)

    def test_zero_and_list_input(self, basis8, unit_params):
        rep = check_sandwich([ModalState3.zeros(8)], unit_params, 1.0, basis8)
        assert math.isnan(rep.min_ratio)

    def test_violation_names_sample(self, basis8, unit_params, monkeypatch):
        monkeypatch.setattr(energy, "sandwich_constants", lambda p, t0, b: (10.0, 20.0))
        states = np.random.default_rng(1).standard_normal((3, 8, 3))
        with pytest.raises(InvariantViolation) as err:
            energy.check_sandwich(states, unit_params, 1.0, basis8)
        assert err.value.sample == 0


class TestDecay:
    def test_exact_exponential(self):
        t = np.linspace(0, 5, 51)
        fit = fit_decay_rate(SimpleNamespace(times=t, E=np.exp(-2 * t)), (0, 5))
        assert fit.slope == pytest.approx(-2.0, rel=1e-13)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-14)
        assert fit.omega_hat == pytest.approx(1.0)

    def test_double_root_tail_frozen(self):
        """E = (1+t)^2 e^{-2t}/2 + t^2 e^{-2t}/2 has log-slope -2 + (2 + 4t)/(1 + 2t + 2t^2).

        Over [10, 20] the polynomial factor keeps the fitted slope near -1.87.
        """
        basis = _one(1.0)
        traj = evolve(ModalState2([1.0, 0.0]), basis, make_params(1, 1, 2), uniform_grid(20.0, 2001))
        fit = fit_decay_rate(build_energy_trace(traj), (10, 20))
        assert fit.slope == pytest.approx(-1.8683022779676002, rel=1e-9)
        tt = np.linspace(10, 20, 1001)
        analytic = np.polyfit(tt, np.log(0.5 * ((1 + tt) ** 2 + tt**2) * np.exp(-2 * tt)), 1)[0]
        assert fit.slope == pytest.approx(analytic, rel=1e-3)

    def test_bad_window(self):
        t = np.linspace(0, 1, 11)
        tr = SimpleNamespace(times=t, E=np.exp(-t))
        with pytest.raises(ParameterDomainError):
            fit_decay_rate(tr, (1, 0))
        with pytest.raises(ParameterDomainError):
            fit_decay_rate(tr, (0.01, 0.02))
        with pytest.raises(ParameterDomainError):
            fit_decay_rate(SimpleNamespace(times=t, E=np.zeros(11)), (0, 1))

    @pytest.mark.parametrize("tau", [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4])
    def test_positive_rate_on_grid(self, tau):
        basis = ModalBasis.dirichlet_1d(16)
        p = make_params(1, 1, 1, tau)
        traj = evolve(random_initial(basis, p, "h0", 0), basis, p, time_grid(10.0))
        assert fit_decay_rate(build_energy_trace(traj), (5, 10)).omega_hat > 0


class TestDatko:
    def test_double_root_energy_integral(self):
        basis = _one(1.0)
        p = make_params(1, 1, 2)
        traj = evolve(ModalState2([1.0, 0.0]), basis, p, uniform_grid(40.0, 4001))
        d = datko_integral(traj, p, basis, quantity="energy")
        ref = quad(lambda t: 0.5 * ((1 + t) ** 2 + t**2) * math.exp(-2 * t), 0, math.inf,
                   epsabs=0, epsrel=1e-13)[0]
        assert float(d) == pytest.approx(ref, rel=1e-6)
        assert d.horizon > 0 and d.tail >= 0

    def test_double_root_norm_frozen(self):
        basis = _one(1.0)
        p = make_params(1, 1, 2)
        traj = evolve(ModalState2([1.0, 0.0]), basis, p, uniform_grid(40.0, 4001))
        assert float(datko_integral(traj, p, basis)) == pytest.approx(1.5, rel=1e-9)

    def test_zero_data(self, basis8, unit_params):
        traj = evolve(ModalState3.zeros(8), basis8, unit_params, uniform_grid(1.0, 3))
        assert float(datko_integral(traj, unit_params, basis8)) == 0.0

    def test_short_horizon(self, basis8, unit_params):
        traj = evolve(random_initial(basis8, unit_params, "h0", 0), basis8, unit_params, time_grid(5.0))
        with pytest.raises(HorizonError):
            datko_integral(traj, unit_params, basis8)


class TestThirdDerivative:
    def test_zero(self, basis8, unit_params):
        r = weighted_third_derivative_bounds(ModalState3.zeros(8), basis8, unit_params, time_grid(1.0))
        assert (r.sup_bound, r.integral_bound, r.reference) == (0.0, 0.0, 0.0)

    def test_integral_matches_trapezoid(self, unit_params):
        basis = ModalBasis.dirichlet_1d(4)
        x = random_initial(basis, unit_params, "h2", 0)
        g = uniform_grid(5.0, 50001)
        r = weighted_third_derivative_bounds(x, basis, unit_params, g)
        X = evolve(x, basis, unit_params, g).coeffs
        d3 = -(X[..., 2] + 1.1 * basis.mus * X[..., 1] + basis.mus * X[..., 0]) / 0.1
        f = np.sum(d3**2, axis=1)
        trap = np.sum(0.5 * np.diff(g) * (f[1:] + f[:-1]))
        assert r.integral_bound == pytest.approx(unit_params.gamma_tau * 0.1 * trap, rel=1e-4)

    def test_prop_sd_zero_and_bound(self, basis8):
        params = [make_params(1, 1, 1, t) for t in (0.1, 0.05)]
        zero = prop_sd_metric(ModalState2.zeros(8), basis8, params, time_grid(1.0))
        assert [m for _, m in zero] == [0.0, 0.0]
        x = random_initial(basis8, params[0], "h2", 0)
        vals = prop_sd_metric(x, basis8, params[:1], time_grid(1.0), None)
        tr = build_energy_trace(evolve(x, basis8, params[0], time_grid(1.0)))
        assert vals[0][1] <= np.max(tr.norm_tau0_sq)
