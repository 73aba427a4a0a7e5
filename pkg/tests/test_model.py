"""Parameters, bases, states and weighted norms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgtlab import (
    ModalBasis,
    ModalState2,
    ModalState3,
    NormKind,
    ParameterDomainError,
    ShapeError,
    extend,
    make_params,
    norm_sq,
    poincare_constant,
    project,
)
from mgtlab.model import norm_sq_array

finite = st.floats(-1e3, 1e3, allow_nan=False)


class TestParams:
    def test_derived_coefficients(self):
        p = make_params(1, 1, 1, 0.1)
        assert p.b_tau == pytest.approx(1.1, rel=1e-15)
        assert p.gamma_tau == pytest.approx(1 - 0.1 / 1.1, rel=1e-15)

    def test_tau_max(self):
        assert make_params(0.5, 1, 1).tau_max == pytest.approx(1.0, rel=1e-15)
        assert make_params(0.5, 2, 3).tau_max == pytest.approx(0.5 * 3 / (4 * 0.5), rel=1e-15)
        assert make_params(1, 1, 1).tau_max == math.inf

    def test_gamma_zero_at_tau_max(self):
        p = make_params(0.5, 1, 1, 1.0)
        assert p.gamma_tau == 0.0

    def test_limit_has_no_gamma(self):
        p = make_params(1, 1, 1)
        assert p.gamma_tau is None
        with pytest.raises(ParameterDomainError):
            p.require_relaxed()

    @pytest.mark.parametrize(
        "args",
        [(0, 1, 1), (1, -1, 1), (1, 1, 0), (math.nan, 1, 1), (1, math.inf, 1), (True, 1, 1),
         (1, 1, 1, -0.1), (1, 1, 1, math.nan), ("1", 1, 1)],
    )
    def test_rejects_bad_values(self, args):
        with pytest.raises(ParameterDomainError):
            make_params(*args)

    def test_with_tau(self):
        p = make_params(2, 3, 4, 0.5)
        q = p.with_tau(0.25)
        assert (q.alpha, q.c, q.delta, q.tau) == (2.0, 3.0, 4.0, 0.25)


class TestBasis:
    def test_dirichlet_eigenvalues(self):
        b = ModalBasis.dirichlet_1d(4, length=2.0)
        np.testing.assert_allclose(b.mus, (np.arange(1, 5) * np.pi / 2) ** 2, rtol=1e-15)
        assert b.n_modes == 4

    def test_read_only(self):
        b = ModalBasis.dirichlet_1d(3)
        with pytest.raises(ValueError):
            b.mus[0] = 1.0

    @pytest.mark.parametrize("mus", [[], [0.0, 1.0], [2.0, 1.0], [1.0, math.nan]])
    def test_rejects(self, mus):
        with pytest.raises((ShapeError, ParameterDomainError)):
            ModalBasis.explicit(mus)

    def test_bad_mode_count(self):
        with pytest.raises(ParameterDomainError):
            ModalBasis.dirichlet_1d(0)

    def test_equality_and_hash(self):
        assert ModalBasis.dirichlet_1d(5) == ModalBasis.dirichlet_1d(5)
        assert hash(ModalBasis.dirichlet_1d(5)) == hash(ModalBasis.dirichlet_1d(5))
        assert ModalBasis.dirichlet_1d(5) != ModalBasis.dirichlet_1d(6)

    def test_poincare(self):
        assert poincare_constant(ModalBasis.dirichlet_1d(3)) == pytest.approx(1 / np.pi**2)


class TestStates:
    def test_immutable(self):
        s = ModalState3.zeros(2)
        with pytest.raises(AttributeError):
            s.coeffs = None
        with pytest.raises(ValueError):
            s.coeffs[0, 0] = 1.0

    def test_shape_checks(self):
        with pytest.raises(ShapeError):
            ModalState3(np.zeros((2, 2)))
        with pytest.raises(ShapeError):
            ModalState2([[1.0, math.nan]])
        with pytest.raises(ShapeError):
            ModalState3.zeros(3).check_basis(ModalBasis.dirichlet_1d(4))

    def test_single_mode_vector(self):
        s = ModalState3([1.0, 2.0, 3.0])
        assert s.coeffs.shape == (1, 3)
        assert (s.u[0], s.v[0], s.w[0]) == (1.0, 2.0, 3.0)

    def test_project_extend(self):
        s2 = ModalState2.from_components([1, 2], [3, 4])
        s3 = extend(s2)
        np.testing.assert_array_equal(s3.w, [0.0, 0.0])
        assert project(s3) == s2


class TestNorms:
    def test_hand_values(self):
        mus = np.array([1.0, 4.0])
        x = np.array([[1.0, 2.0, 3.0], [0.5, -1.0, 2.0]])
        # tau0: mu (u^2 + v^2) + tau w^2
        assert norm_sq_array(x, mus, 0.5, NormKind.TAU0) == pytest.approx(
            1 * (1 + 4) + 0.5 * 9 + 4 * (0.25 + 1) + 0.5 * 4
        )
        assert norm_sq_array(x, mus, 0.5, NormKind.TAU1) == pytest.approx(
            1 * 1 + 1 * 4 + 0.5 * 9 + 16 * 0.25 + 4 * 1 + 0.5 * 4
        )
        assert norm_sq_array(x, mus, 0.5, NormKind.H2) == pytest.approx(
            1 * (1 + 4) + 1 * 9 + 16 * (0.25 + 1) + 4 * 4
        )
        assert norm_sq_array(x, mus, 0.0, NormKind.a_power(0.5, 2)) == pytest.approx(9 + 4 * 4)

    def test_norm_needs_three_components(self):
        with pytest.raises(ShapeError):
            norm_sq_array(np.ones((2, 2)), np.ones(2), 0.1, NormKind.TAU0)
        with pytest.raises(ParameterDomainError):
            NormKind.a_power(0.25)

    def test_norm_sq_checks_basis(self):
        with pytest.raises(ShapeError):
            norm_sq(ModalState3.zeros(2), ModalBasis.dirichlet_1d(3), make_params(1, 1, 1, 0.1),
                    NormKind.TAU0)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=5),
           st.floats(1e-4, 10.0))
    def test_tau_weight_is_linear(self, rows, tau):
        x = np.array(rows)
        mus = (np.arange(1, x.shape[0] + 1) * np.pi) ** 2
        n1 = norm_sq_array(x, mus, tau, NormKind.TAU0)
        n2 = norm_sq_array(x, mus, 2 * tau, NormKind.TAU0)
        base = norm_sq_array(x, mus, 0.0, NormKind.TAU0)
        assert n2 - base == pytest.approx(2 * (n1 - base), rel=1e-9, abs=1e-13 * n2)
        unweighted = np.sum(mus * (x[:, 0] ** 2 + x[:, 1] ** 2) + x[:, 2] ** 2)
        assert min(1.0, tau) * unweighted <= n1 * (1 + 1e-12) + 1e-300
