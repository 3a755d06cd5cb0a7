import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import lap1d_eigs, random_complex
from tgopt.errors import NotAConvergent, NotHermitian, SingularX, ZeroDiagonal
from tgopt.linalg import eig_generalized, is_hermitian, operator_a_norm, spectrum_general
from tgopt.problems import laplacian_1d, random_hpd
from tgopt.smoothers import (
    SmootherOperator,
    SmootherSpec,
    build_smoother,
    check_convergence_conditions,
    composed_x,
    scale_smoother,
    symmetrized_x,
)


class TestBuild:
    def test_jacobi(self, lap3, jacobi):
        np.testing.assert_array_equal(jacobi.m, 2 * np.eye(3))
        assert jacobi.hermitian

    def test_weighted_jacobi(self, wj_half):
        np.testing.assert_array_equal(wj_half.m, 4 * np.eye(3))

    def test_gauss_seidel(self, lap3):
        m = build_smoother(SmootherSpec("GaussSeidel"), lap3)
        np.testing.assert_array_equal(m.m, [[2, 0, 0], [-1, 2, 0], [0, -1, 2]])
        assert not m.hermitian

    def test_sor(self, lap3):
        m = build_smoother(SmootherSpec("SOR", 1.5), lap3)
        np.testing.assert_allclose(m.m, np.diag([2 / 1.5] * 3) + np.tril(lap3, -1))

    def test_richardson(self, lap3):
        np.testing.assert_allclose(build_smoother(SmootherSpec("Richardson", 0.25), lap3).m, 4 * np.eye(3))

    def test_explicit(self, lap3):
        m = build_smoother(SmootherSpec("ExplicitMatrix", explicit=lap3), lap3)
        np.testing.assert_allclose(m.m @ m.m_inv, np.eye(3), atol=1e-12)

    def test_zero_diagonal(self):
        with pytest.raises(ZeroDiagonal):
            build_smoother(SmootherSpec("Jacobi"), [[0, 1], [1, 0]])

    @pytest.mark.parametrize("omega", [0.0, -1.0])
    def test_bad_omega(self, omega):
        with pytest.raises(ValueError):
            SmootherSpec("WeightedJacobi", omega)

    def test_sor_range(self):
        with pytest.raises(ValueError):
            SmootherSpec("SOR", 2.0)


class TestSymmetrized:
    def test_identity_smoother(self):
        a = 0.1 * laplacian_1d(4)
        x = symmetrized_x(SmootherOperator.from_matrix(np.eye(4)), a)
        np.testing.assert_allclose(x.x_inv, 2 * np.eye(4) - a, atol=1e-15)
        assert x.provenance == "STG"

    def test_polynomial_image(self, lap3, wj_half):
        x = symmetrized_x(wj_half, lap3)
        t = lap1d_eigs(3) / 4
        expected = 2 * t - t**2
        np.testing.assert_allclose(np.sort(spectrum_general(x.x_inv @ lap3).real), expected, atol=1e-12)
        np.testing.assert_allclose(expected, [0.271447, 0.75, 0.978553], atol=1e-6)

    def test_gauss_seidel_hermitian(self):
        a = laplacian_1d(5)
        x = symmetrized_x(build_smoother(SmootherSpec("GaussSeidel"), a), a)
        assert np.max(np.abs(x.x_inv - x.x_inv.conj().T)) <= 1e-12 * np.max(np.abs(x.x_inv))
        np.testing.assert_allclose(x.x @ x.x_inv, np.eye(5), atol=1e-10)

    def test_not_a_convergent(self, lap3):
        with pytest.raises(NotAConvergent):
            symmetrized_x(build_smoother(SmootherSpec("Richardson", 1.0), lap3), lap3)

    @given(st.integers(0, 2**32 - 1), st.integers(2, 12))
    @settings(max_examples=20, deadline=None)
    def test_polynomial_relation_hermitian_m(self, seed, n):
        a = random_hpd(n, 50, seed)
        # Hermitian M with M + M^H - A positive definite
        m = SmootherOperator.from_matrix(random_hpd(n, 5, seed + 1) + 0.6 * np.linalg.norm(a, 2) * np.eye(n))
        t = eig_generalized(a, m.m).values
        stg = eig_generalized(a, symmetrized_x(m, a).x).values
        np.testing.assert_allclose(stg, np.sort(2 * t - t**2), atol=1e-9)


class TestComposed:
    def test_single_factor(self, lap3):
        m = build_smoother(SmootherSpec("GaussSeidel"), lap3)
        x = composed_x(m, 1, m, 0, lap3)
        np.testing.assert_allclose(x.x_inv, m.m_inv, atol=1e-14)
        assert x.provenance == "Composed"

    def test_adjoint_pair_is_symmetrized(self):
        for n, kind in [(5, "GaussSeidel"), (6, "SOR"), (4, "WeightedJacobi")]:
            a = random_hpd(n, 20, n)
            m = build_smoother(SmootherSpec(kind, 0.8 if kind != "GaussSeidel" else 1.0), a)
            np.testing.assert_allclose(composed_x(m, 1, m.adjoint, 1, a).x_inv, symmetrized_x(m, a).x_inv, atol=1e-10)

    def test_exact_smoother(self, lap3):
        m = SmootherOperator.from_matrix(lap3)
        x = composed_x(m, 1, m, 1, lap3)
        np.testing.assert_allclose(x.x_inv, np.linalg.inv(lap3), atol=1e-14)

    def test_identity_residual(self, rng):
        a = random_complex(rng, 6, 6) + 6 * np.eye(6)
        m1 = build_smoother(SmootherSpec("GaussSeidel"), a)
        m2 = build_smoother(SmootherSpec("WeightedJacobi", 0.6), a)
        x = composed_x(m1, 2, m2, 1, a)
        s = np.linalg.matrix_power(m1.iteration_matrix(a), 2) @ m2.iteration_matrix(a)
        np.testing.assert_allclose(np.eye(6) - x.x_inv @ a, s, atol=1e-12)

    def test_singular_x(self, lap3):
        # I - M^{-1} A with M = A/2 is -I, so (I - S) = 0 for two sweeps
        m = SmootherOperator.from_matrix(lap3 / 2)
        with pytest.raises(SingularX):
            composed_x(m, 2, m, 0, lap3)


class TestConvergenceConditions:
    def test_weighted_jacobi(self, lap3, wj_half):
        f = check_convergence_conditions(wj_half, lap3)
        assert (f.a_norm_convergent, f.m_minus_a_hpd, f.rho_convergent) == (True, True, True)

    def test_jacobi(self, lap3, jacobi):
        f = check_convergence_conditions(jacobi, lap3)
        assert (f.a_norm_convergent, f.m_minus_a_hpd, f.rho_convergent) == (True, False, True)
        assert f.rho == pytest.approx(1 / np.sqrt(2), abs=1e-12)

    def test_exact(self, lap3):
        f = check_convergence_conditions(SmootherOperator.from_matrix(lap3), lap3)
        assert f.a_norm_convergent and f.rho_convergent and not f.m_minus_a_hpd
        assert f.rho < 1e-14

    def test_flag_matches_a_norm(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(3, 15))
            a = random_hpd(n, 30, seed)
            omega = float(rng.uniform(0.2, 1.9))
            m = build_smoother(SmootherSpec(["WeightedJacobi", "SOR", "Richardson"][seed % 3], omega), a)
            f = check_convergence_conditions(m, a)
            assert f.a_norm_convergent == (operator_a_norm(m.iteration_matrix(a), a) < 1)


class TestScale:
    def test_fixed_point(self, lap3):
        m = scale_smoother(SmootherOperator.from_matrix(lap3), lap3)
        np.testing.assert_allclose(m.m, lap3, atol=1e-12)

    def test_jacobi(self, lap3, jacobi):
        m = scale_smoother(jacobi, lap3)
        np.testing.assert_allclose(m.m, (2 + np.sqrt(2)) * np.eye(3), atol=1e-12)
        np.testing.assert_allclose(m.m, 3.414214 * np.eye(3), atol=1e-6)

    def test_rejects_non_hermitian(self, lap3):
        with pytest.raises(NotHermitian):
            scale_smoother(build_smoother(SmootherSpec("GaussSeidel"), lap3), lap3)

    @given(st.integers(0, 2**32 - 1), st.integers(2, 12))
    @settings(max_examples=20, deadline=None)
    def test_postconditions(self, seed, n):
        a = random_hpd(n, 100, seed)
        m = SmootherOperator.from_matrix(random_hpd(n, 10, seed + 7))
        s = scale_smoother(m, a)
        assert eig_generalized(a, s.m).values[-1] == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.eigvalsh(s.m - a)[0] >= -1e-10 * np.linalg.norm(a, 2)
        np.testing.assert_allclose(scale_smoother(s, a).m, s.m, atol=1e-10 * np.linalg.norm(s.m))
        assert is_hermitian(s.m)
