import numpy as np
import pytest

from slnsim import (
    SystemModel,
    anticommutator_superop,
    apply_superop,
    commutator_superop,
    family_superop,
    flatten,
    rotate_coupling,
    unflatten,
)

from conftest import SX, SY, SZ


def random_matrix(rng, n=2):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


class TestFlatten:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for n in (2, 3, 4):
            a = random_matrix(rng, n)
            assert np.array_equal(unflatten(flatten(a)), a)
            assert flatten(a).shape == (n * n,)

    def test_column_major_convention(self):
        a = np.array([[1, 2], [3, 4]], dtype=complex)
        assert np.array_equal(flatten(a), np.array([1, 3, 2, 4], dtype=complex))

    def test_unflatten_rejects_bad_length(self):
        with pytest.raises(ValueError):
            unflatten(np.zeros(5))


class TestSystemModel:
    def test_validation(self):
        good = np.array([[1, 0], [0, 0]], dtype=complex)
        with pytest.raises(ValueError, match="Hermitian"):
            SystemModel(h_sys=np.array([[0, 1], [0, 0]]), coupling=SX, rho0=good)
        with pytest.raises(ValueError, match="trace"):
            SystemModel(h_sys=SZ, coupling=SX, rho0=2 * good)
        with pytest.raises(ValueError, match="semidefinite"):
            bad = np.array([[1.5, 0], [0, -0.5]], dtype=complex)
            SystemModel(h_sys=SZ, coupling=SX, rho0=bad)

    def test_purity_helpers(self):
        pure = SystemModel(h_sys=SZ, coupling=SX, rho0=np.array([[1, 0], [0, 0]], dtype=complex))
        assert pure.is_pure()
        assert np.allclose(pure.pure_state(), [1, 0])
        mixed = SystemModel(h_sys=SZ, coupling=SX, rho0=0.5 * np.eye(2))
        assert not mixed.is_pure()
        with pytest.raises(ValueError):
            mixed.pure_state()


class TestRotateCoupling:
    def test_identity_at_zero(self, transverse_model):
        assert np.allclose(rotate_coupling(transverse_model, 0.0), SX, atol=1e-14)

    def test_commuting_case(self, dephasing_model):
        for t in (0.0, 0.7, 2.3):
            assert np.allclose(rotate_coupling(dephasing_model, t), SZ, atol=1e-13)

    def test_closed_form_rotation(self, transverse_model):
        for t in (0.3, 1.0, 2.5):
            expected = np.cos(t) * SX - np.sin(t) * SY
            assert np.allclose(rotate_coupling(transverse_model, t), expected, atol=1e-12)

    def test_spectrum_preserved(self, transverse_model):
        x_t = rotate_coupling(transverse_model, 1.3)
        assert np.allclose(x_t, x_t.conj().T, atol=1e-13)
        assert np.allclose(np.linalg.eigvalsh(x_t), np.linalg.eigvalsh(SX), atol=1e-12)


class TestSuperops:
    def test_commutator_with_identity(self):
        s = commutator_superop(SZ)
        assert np.allclose(apply_superop(s, np.eye(2)), 0.0, atol=1e-14)

    def test_commutator_pauli_algebra(self):
        s = commutator_superop(SZ)
        assert np.allclose(apply_superop(s, SX), -2.0 * SY, atol=1e-14)

    def test_commutator_trace_annihilating(self):
        rng = np.random.default_rng(1)
        s = commutator_superop(random_matrix(rng))
        for _ in range(5):
            out = apply_superop(s, random_matrix(rng))
            assert abs(np.trace(out)) < 1e-12

    def test_anticommutator_with_identity(self):
        rng = np.random.default_rng(2)
        s = anticommutator_superop(np.eye(2))
        a = random_matrix(rng)
        assert np.allclose(apply_superop(s, a), -a, atol=1e-14)

    def test_anticommutator_pauli(self):
        s = anticommutator_superop(SZ)
        assert np.allclose(apply_superop(s, SZ), -np.eye(2), atol=1e-14)

    def test_anticommutator_preserves_hermiticity(self):
        rng = np.random.default_rng(3)
        x = random_matrix(rng)
        x = x + x.conj().T
        s = anticommutator_superop(x)
        a = random_matrix(rng)
        a = a + a.conj().T
        out = apply_superop(s, a)
        assert np.allclose(out, out.conj().T, atol=1e-12)

    def test_superop_matches_action(self):
        rng = np.random.default_rng(4)
        x = random_matrix(rng)
        sc = commutator_superop(x)
        sa = anticommutator_superop(x)
        for _ in range(5):
            a = random_matrix(rng)
            assert np.allclose(apply_superop(sc, a), 1j * (x @ a - a @ x), atol=1e-12)
            assert np.allclose(apply_superop(sa, a), -0.5 * (x @ a + a @ x), atol=1e-12)

    def test_composition(self):
        rng = np.random.default_rng(5)
        x1, x2 = random_matrix(rng), random_matrix(rng)
        s1, s2 = commutator_superop(x1), anticommutator_superop(x2)
        a = random_matrix(rng)
        composed = unflatten(s1 @ (s2 @ flatten(a)))
        nested = 1j * (x1 @ apply_superop(s2, a) - apply_superop(s2, a) @ x1)
        assert np.allclose(composed, nested, atol=1e-12)


class TestFamilyMap:
    def test_family_zero_types_match(self):
        x = SX + 0.5 * SZ
        assert np.array_equal(family_superop(0, "0", x), family_superop(0, "*", x))

    def test_family_one_commutator_doubled(self):
        x = SX + 0.5 * SZ
        assert np.allclose(family_superop(1, "0", x), 2.0 * family_superop(0, "0", x), atol=1e-14)

    def test_family_one_star_on_identity(self):
        x = SX + 0.5 * SZ
        assert np.allclose(apply_superop(family_superop(1, "*", x), np.eye(2)), -x, atol=1e-14)

    def test_rejects_bad_indices(self):
        with pytest.raises(ValueError):
            family_superop(2, "0", SX)
        with pytest.raises(ValueError):
            family_superop(0, "x", SX)
