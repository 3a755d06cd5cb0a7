import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import lap1d_eigs, random_complex
from tgopt.errors import DimensionMismatch, SingularRXP
from tgopt.identity import (
    ComplementBasis,
    complement_basis,
    complement_rayleigh,
    matching_distance,
    spectrum_via_identity,
    verify_config,
    verify_identity,
)
from tgopt.linalg import eig_hermitian, spectrum_general
from tgopt.problems import random_hpd
from tgopt.smoothers import SmootherOperator, SmootherSpec, XOperator, build_smoother, composed_x
from tgopt.twogrid import TwoGridConfig


def _random_nonhermitian(rng, n):
    return random_complex(rng, n, n) + 2 * np.sqrt(n) * np.eye(n)


class TestComplementRayleigh:
    def test_diagonal(self):
        a_d = np.array([1.0, 2.0, 3.0, 4.0])
        x_d = np.array([2.0, 5.0, 7.0, 11.0])
        x_op = XOperator.from_inverse(np.diag(1 / x_d), "Explicit")
        p = np.eye(4)[:, :2]
        z = complement_rayleigh(np.diag(a_d), x_op, p)
        np.testing.assert_allclose(np.sort(spectrum_general(z).real), np.sort(a_d[2:] / x_d[2:]), atol=1e-14)

    def test_lap3(self, lap3, wj_half):
        u = eig_hermitian(lap3).vectors[:, :1]
        z = complement_rayleigh(lap3, XOperator.from_smoother(wj_half), u)
        expected = lap1d_eigs(3)[1:] / 4
        np.testing.assert_allclose(np.sort(spectrum_general(z).real), expected, atol=1e-12)
        np.testing.assert_allclose(expected, [0.5, 0.853553], atol=1e-6)

    def test_exact_x(self, lap3, rng):
        x_op = XOperator.from_inverse(np.linalg.inv(lap3), "Explicit")
        s = spectrum_via_identity(lap3, x_op, random_complex(rng, 3, 1))
        np.testing.assert_allclose(s, 1, atol=1e-12)

    def test_basis_invariance(self, rng):
        n, r = 9, 3
        a = _random_nonhermitian(rng, n)
        x_op = XOperator.from_inverse(np.linalg.inv(_random_nonhermitian(rng, n)), "Explicit")
        p = random_complex(rng, n, r)
        r_op = random_complex(rng, r, n)
        b1 = complement_basis(p, r_op)
        q1, _ = np.linalg.qr(random_complex(rng, n - r, n - r))
        q2, _ = np.linalg.qr(random_complex(rng, n - r, n - r))
        b2 = ComplementBasis(p_tilde=b1.p_tilde @ q1, r_tilde=b1.r_tilde @ q2)
        z1 = complement_rayleigh(a, x_op, p, r_op, basis=b1)
        z2 = complement_rayleigh(a, x_op, p, r_op, basis=b2)
        assert matching_distance(spectrum_general(z1), spectrum_general(z2)) < 1e-10

    def test_complement_is_orthogonal(self, rng):
        p = random_complex(rng, 7, 2)
        b = complement_basis(p, p.conj().T)
        np.testing.assert_allclose(b.p_tilde.conj().T @ p, 0, atol=1e-13)
        np.testing.assert_allclose(b.p_tilde.conj().T @ b.p_tilde, np.eye(5), atol=1e-13)

    def test_singular_rxp(self):
        swap = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        x_op = XOperator.from_inverse(np.linalg.inv(swap), "Explicit")
        with pytest.raises(SingularRXP):
            complement_rayleigh(np.eye(3), x_op, np.eye(3)[:, :1])

    def test_shape_mismatch(self, lap3, wj_half):
        with pytest.raises(DimensionMismatch):
            complement_rayleigh(lap3, XOperator.from_smoother(wj_half), np.ones((3, 1)), np.ones((1, 4)))


class TestVerifyIdentity:
    def test_nonhermitian_petrov_galerkin(self, rng):
        n, r = 12, 4
        a = _random_nonhermitian(rng, n)
        x_op = XOperator.from_inverse(np.linalg.inv(_random_nonhermitian(rng, n)), "Explicit")
        rep = verify_identity(a, x_op, random_complex(rng, n, r), random_complex(rng, r, n))
        assert rep.passed, rep.max_matching_distance
        assert rep.direct_spectrum.size == n == rep.identity_spectrum.size

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_general_configs(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 25))
        r = int(rng.integers(1, n))
        a = _random_nonhermitian(rng, n) if seed % 2 else random_hpd(n, 100.0, seed)
        m1 = SmootherOperator.from_matrix(a + (1 + rng.uniform()) * np.linalg.norm(a, 2) * np.eye(n))
        m2 = build_smoother(SmootherSpec("GaussSeidel"), a)
        r_op = random_complex(rng, r, n) if seed % 3 else None
        cfg = TwoGridConfig(a=a, p=random_complex(rng, n, r), r_op=r_op,
                            pre=m1, nu1=int(rng.integers(0, 3)), post=m2, nu2=int(rng.integers(1, 3)))
        rep = verify_config(cfg)
        assert rep.passed, (rep.max_matching_distance, rep.tolerance)

    def test_real_for_hermitian(self, rng):
        a = random_hpd(10, 50.0, 3)
        m = build_smoother(SmootherSpec("GaussSeidel"), a)
        x_op = composed_x(m, 1, m.adjoint, 1, a)
        s = spectrum_via_identity(a, x_op, random_complex(rng, 10, 3))
        assert np.max(np.abs(s.imag)) < 1e-10

    def test_multiplicity_of_one(self, lap3, wj_half):
        s = spectrum_via_identity(lap3, XOperator.from_smoother(wj_half), np.eye(3)[:, :2])
        assert np.sum(np.abs(s - 1) < 1e-12) >= 2


class TestMatchingDistance:
    def test_permutation(self):
        z = np.array([1.0, 2.0, 3.0 + 1j])
        assert matching_distance(z, z[::-1]) == 0.0

    def test_bottleneck(self):
        # sum-optimal pairing is not bottleneck-optimal here
        z = np.array([0.0, 1.0])
        w = np.array([1.0, 2.0])
        assert matching_distance(z, w) == pytest.approx(1.0)
        z = np.array([0.0, 0.0, 10.0])
        w = np.array([0.0, 4.0, 6.0])
        assert matching_distance(z, w) == pytest.approx(4.0)

    def test_multiplicity(self):
        assert matching_distance([1, 1, 2], [1, 2, 2]) == pytest.approx(1.0)

    def test_empty(self):
        assert matching_distance([], []) == 0.0

    def test_size_mismatch(self):
        with pytest.raises(DimensionMismatch):
            matching_distance([1, 2], [1])

    @given(st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
                    min_size=1, max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_symmetric_and_shift_bound(self, z):
        z = np.asarray(z)
        w = np.random.default_rng(0).permutation(z) + 0.5
        d = matching_distance(z, w)
        assert d == pytest.approx(matching_distance(w, z))
        assert d <= 0.5 + 1e-9
