import math

import numpy as np
import pytest

from slnsim import (
    BathSpectrum,
    ConfigurationError,
    OracleConfig,
    build_kernels,
    dephasing_decay,
    discretize_spectral_density,
    exact_oracle,
    solve_convolved,
    solve_lindblad,
    solve_tcl2,
)

from conftest import unitary_series


@pytest.fixture
def zero_spec():
    return discretize_spectral_density("ohmic", 0.0, 1.0, 3.0, 10, 10.0, beta=1.0)


@pytest.fixture
def dephasing_spec():
    return discretize_spectral_density(
        "ohmic", 0.002, 1.0, 4.0, 120, 30.0, beta=np.inf
    )


class TestNoiseFreeLimits:
    def test_convolved_unitary(self, transverse_model, zero_spec):
        kernel = build_kernels(zero_spec, 0.02, 100)
        out = solve_convolved(transverse_model, kernel)
        assert np.max(np.abs(out.rhos - unitary_series(transverse_model, 0.02, 100))) < 1e-12

    def test_tcl2_unitary(self, transverse_model, zero_spec):
        kernel = build_kernels(zero_spec, 0.02, 100)
        out = solve_tcl2(transverse_model, kernel)
        assert np.max(np.abs(out.rhos - unitary_series(transverse_model, 0.02, 100))) < 1e-12

    def test_lindblad_unitary(self, transverse_model):
        out = solve_lindblad(transverse_model, 0.0, 0.02, 100)
        assert np.max(np.abs(out.rhos - unitary_series(transverse_model, 0.02, 100))) < 1e-10


class TestDephasingOracles:
    def test_tcl2_exact_for_dephasing(self, dephasing_model, dephasing_spec):
        dt, n = 0.005, 1000
        kernel = build_kernels(dephasing_spec, dt, n)
        out = solve_tcl2(dephasing_model, kernel)
        target = 0.5 * np.exp(-1j * out.times) * dephasing_decay(dephasing_spec, out.times)
        assert np.max(np.abs(out.coherence(0, 1) - target)) < 1e-6
        assert np.max(np.abs(out.population(0) - 0.5)) < 1e-12

    def test_convolved_gap_shrinks_16x_with_coupling(self, dephasing_model):
        gaps = []
        for eta in (0.004, 0.002):
            spec = discretize_spectral_density("ohmic", eta, 1.0, 4.0, 120, 30.0, beta=np.inf)
            kernel = build_kernels(spec, 0.005, 800)
            out = solve_convolved(dephasing_model, kernel)
            target = 0.5 * np.exp(-1j * out.times) * dephasing_decay(spec, out.times)
            gaps.append(np.max(np.abs(out.coherence(0, 1) - target)))
        assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.3)

    def test_tcl2_convolved_gap_order_g4(self, transverse_model):
        gaps = []
        for scale in (1.0, 0.5):
            spec = BathSpectrum(
                omegas=np.array([0.8, 1.0, 1.3]),
                g_hats=scale * np.array([0.12, 0.10, 0.08]),
                beta=np.inf,
            )
            kernel = build_kernels(spec, 0.02, 150)
            a = solve_convolved(transverse_model, kernel)
            b = solve_tcl2(transverse_model, kernel)
            gaps.append(a.max_distance(b))
        assert gaps[0] / gaps[1] == pytest.approx(16.0, rel=0.3)


class TestLindblad:
    def test_rejects_negative_rate(self, dephasing_model):
        with pytest.raises(ValueError):
            solve_lindblad(dephasing_model, -0.1, 0.01, 10)

    def test_diagonal_coupling_keeps_populations(self, dephasing_model):
        out = solve_lindblad(dephasing_model, 0.3, 0.01, 300)
        assert np.max(np.abs(out.population(0) - 0.5)) < 1e-12

    def test_coherence_decay_rate(self, dephasing_model):
        gamma = 0.3
        out = solve_lindblad(dephasing_model, gamma, 0.005, 400)
        target = 0.5 * np.exp(-1j * out.times) * np.exp(-4.0 * gamma * out.times)
        assert np.max(np.abs(out.coherence(0, 1) - target)) < 1e-8

    def test_trace_and_positivity(self, transverse_model):
        out = solve_lindblad(transverse_model, 0.2, 0.01, 200)
        assert out.trace_deviation().max() < 1e-12
        eigmin = min(np.linalg.eigvalsh(r).min() for r in out.rhos)
        assert eigmin > -1e-10


class TestExactOracle:
    def test_zero_coupling_unitary(self, transverse_model):
        spec = BathSpectrum(omegas=np.array([1.0]), g_hats=np.array([0.0]), beta=math.inf)
        cfg = OracleConfig(fock_cutoff=3, dt=0.02, n=50)
        out = exact_oracle(transverse_model, spec, cfg)
        assert np.max(np.abs(out.rhos - unitary_series(transverse_model, 0.02, 50))) < 1e-12

    def test_single_mode_dephasing_closed_form(self, dephasing_model):
        spec = BathSpectrum(omegas=np.array([1.3]), g_hats=np.array([0.25]), beta=math.inf)
        cfg = OracleConfig(fock_cutoff=8, dt=0.02, n=150)
        out = exact_oracle(dephasing_model, spec, cfg)
        t = out.times
        target = 0.5 * np.exp(-1j * t) * np.exp(-4 * 0.25**2 * (1 - np.cos(1.3 * t)) / 1.3**2)
        assert np.max(np.abs(out.coherence(0, 1) - target)) < 1e-8
        assert out.meta["cutoff_converged"]

    def test_thermal_oracle_matches_thermal_dephasing(self, dephasing_model):
        beta = 2.0
        spec = BathSpectrum(omegas=np.array([1.3]), g_hats=np.array([0.2]), beta=beta)
        cfg = OracleConfig(fock_cutoff=12, dt=0.02, n=100, bath_state="thermal")
        out = exact_oracle(dephasing_model, spec, cfg)
        target = 0.5 * np.exp(-1j * out.times) * dephasing_decay(spec, out.times)
        assert np.max(np.abs(out.coherence(0, 1) - target)) < 1e-6

    def test_reduced_state_physicality(self, transverse_model, three_mode_vacuum):
        cfg = OracleConfig(fock_cutoff=5, dt=0.02, n=100, check_convergence=False)
        out = exact_oracle(transverse_model, three_mode_vacuum, cfg)
        assert out.trace_deviation().max() < 1e-10
        assert out.hermiticity_deviation().max() < 1e-12
        assert min(np.linalg.eigvalsh(r).min() for r in out.rhos) > -1e-10
        assert out.meta["norm_drift"] < 1e-10

    def test_weak_coupling_matches_tcl2(self, transverse_model, three_mode_vacuum):
        cfg = OracleConfig(fock_cutoff=6, dt=0.02, n=150)
        orc = exact_oracle(transverse_model, three_mode_vacuum, cfg)
        kernel = build_kernels(three_mode_vacuum, 0.02, 150)
        tcl = solve_tcl2(transverse_model, kernel)
        assert tcl.max_distance(orc) < 0.05

    def test_dimension_guards(self, transverse_model):
        spec = BathSpectrum(
            omegas=np.array([0.5, 1.0, 1.5, 2.0, 2.5]),
            g_hats=np.full(5, 0.1),
            beta=math.inf,
        )
        with pytest.raises(ConfigurationError, match="modes"):
            exact_oracle(transverse_model, spec, OracleConfig(fock_cutoff=3, dt=0.1, n=5))
        big = BathSpectrum(omegas=np.array([1.0, 2.0, 3.0]), g_hats=np.full(3, 0.1), beta=math.inf)
        with pytest.raises(ConfigurationError, match="dimension"):
            exact_oracle(transverse_model, big, OracleConfig(fock_cutoff=13, dt=0.1, n=5))
        with pytest.raises(ConfigurationError, match="thermal"):
            exact_oracle(
                transverse_model,
                BathSpectrum(omegas=np.array([1.0]), g_hats=np.array([0.1]), beta=math.inf),
                OracleConfig(fock_cutoff=3, dt=0.1, n=5, bath_state="thermal"),
            )

    def test_cutoff_convergence_flagging(self, dephasing_model):
        # strong coupling with a tiny cutoff cannot be converged
        spec = BathSpectrum(omegas=np.array([0.8]), g_hats=np.array([0.9]), beta=math.inf)
        cfg = OracleConfig(fock_cutoff=2, dt=0.02, n=100)
        out = exact_oracle(dephasing_model, spec, cfg)
        assert not out.meta["cutoff_converged"]
