import math
from dataclasses import dataclass

import numpy as np
import pytest

from slnsim import (
    BathSpectrum,
    SystemModel,
    dephasing_decay,
    discretize_spectral_density,
    ensemble_average,
    integrate_density,
    integrate_pair,
    make_path,
)
from slnsim.sln import EnsembleStats
from slnsim.series import DensityMatrixSeries

from conftest import SX, SZ, unitary_series


@dataclass
class _StubAmplitudes:
    seed: int = 0


class _StubPath:
    """Noise path with prescribed constant values, for closed-form checks."""

    def __init__(self, xi, nu, dt, n):
        self.xi = xi
        self.nu = nu
        self.t_max = n * dt
        self.factors = type("F", (), {"dt_comb": dt / 2})()
        self.amplitudes = _StubAmplitudes()

    def tabulate(self, n_points):
        return (
            np.full(n_points, self.xi, dtype=complex),
            np.full(n_points, self.nu, dtype=complex),
        )


@pytest.fixture
def weak_spec():
    return BathSpectrum(
        omegas=np.array([0.8, 1.0, 1.3]),
        g_hats=np.array([0.12, 0.10, 0.08]),
        beta=np.inf,
    )


class TestSinglePath:
    def test_noise_free_reduction(self, transverse_model):
        dt, n = 0.01, 200
        traj = integrate_density(transverse_model, _StubPath(0.0, 0.0, dt, n), dt, n)
        assert np.max(np.abs(traj.projectors - unitary_series(transverse_model, dt, n))) < 1e-10

    def test_constant_commutator_drive(self):
        # H = 0, nu = 0, constant real xi: P(t) = e^{i xi X t} rho0 e^{-i xi X t}
        model = SystemModel(h_sys=np.zeros((2, 2)), coupling=SX,
                            rho0=np.array([[1, 0], [0, 0]], dtype=complex))
        xi = 0.7
        dt, n = 0.01, 100
        traj = integrate_density(model, _StubPath(xi, 0.0, dt, n), dt, n)
        for k in (10, 50, 100):
            t = k * dt
            c, s = math.cos(xi * t), math.sin(xi * t)
            u = np.array([[c, 1j * s], [1j * s, c]])
            expected = u @ model.rho0 @ u.conj().T
            assert np.max(np.abs(traj.projectors[k] - expected)) < 1e-9

    def test_constant_anticommutator_drive(self):
        # H = 0, xi = 0, constant real nu, X = sigma_z, diagonal rho0:
        # dP/dt = -i nu {sigma_z, P} so P(t) = e^{-i nu t sz} rho0 e^{-i nu t sz};
        # the trace is not conserved path by path.
        model = SystemModel(h_sys=np.zeros((2, 2)), coupling=SZ,
                            rho0=np.diag([0.75, 0.25]).astype(complex))
        nu = 0.4
        dt, n = 0.005, 200
        traj = integrate_density(model, _StubPath(0.0, nu, dt, n), dt, n)
        for k in (40, 120, 200):
            t = k * dt
            u = np.diag([np.exp(-1j * nu * t), np.exp(1j * nu * t)])
            expected = u @ model.rho0 @ u
            assert np.max(np.abs(traj.projectors[k] - expected)) < 1e-9
        traces = np.einsum("kii->k", traj.projectors)
        assert np.max(np.abs(traces - 1.0)) > 0.1

    def test_pair_equals_density_noise_free(self, transverse_model):
        dt, n = 0.01, 100
        stub = _StubPath(0.0, 0.0, dt, n)
        t1 = integrate_density(transverse_model, stub, dt, n)
        t2 = integrate_pair(transverse_model, stub, dt, n)
        assert np.max(np.abs(t1.projectors - t2.projectors)) < 1e-10

    def test_pair_equals_density_on_random_path(self, transverse_model, weak_spec):
        dt, n = 0.005, 200
        path = make_path(weak_spec, 17, dt, n)
        t1 = integrate_density(transverse_model, path, dt, n)
        t2 = integrate_pair(transverse_model, path, dt, n)
        assert np.max(np.abs(t1.projectors - t2.projectors)) < 1e-8

    def test_pair_requires_pure_state(self, weak_spec):
        model = SystemModel(h_sys=0.5 * SZ, coupling=SX, rho0=0.5 * np.eye(2))
        path = make_path(weak_spec, 1, 0.01, 10)
        with pytest.raises(ValueError, match="pure"):
            integrate_pair(model, path, 0.01, 10)

    def test_pair_hermitian_for_real_noise(self):
        # nu = 0 and real xi make both wavevectors coincide
        model = SystemModel(h_sys=0.5 * SZ, coupling=SX,
                            rho0=np.array([[1, 0], [0, 0]], dtype=complex))
        dt, n = 0.01, 50
        traj = integrate_pair(model, _StubPath(0.55, 0.0, dt, n), dt, n)
        gap = traj.projectors - np.conj(np.swapaxes(traj.projectors, 1, 2))
        assert np.max(np.abs(gap)) < 1e-12

    def test_divergence_flagged(self, transverse_model):
        traj = integrate_density(transverse_model, _StubPath(1e160, 1e160, 0.5, 40), 0.5, 40)
        assert traj.divergent

    def test_grid_mismatch_rejected(self, transverse_model, weak_spec):
        path = make_path(weak_spec, 1, 0.01, 10)
        with pytest.raises(ValueError, match="comb"):
            integrate_density(transverse_model, path, 0.02, 5)

    def test_coarse_step_warning(self, weak_spec):
        model = SystemModel(h_sys=40.0 * SZ, coupling=SX,
                            rho0=np.array([[1, 0], [0, 0]], dtype=complex))
        path = make_path(weak_spec, 1, 0.05, 10)
        with pytest.warns(UserWarning, match="under-resolved"):
            integrate_density(model, path, 0.05, 10)


class TestEnsemble:
    def test_zero_coupling_matches_unitary_exactly(self, transverse_model):
        spec = discretize_spectral_density("ohmic", 0.0, 1.0, 3.0, 5, 8.0, beta=1.0)
        dt, n = 0.01, 100
        stats = ensemble_average(transverse_model, spec, 16, 0, dt, n)
        assert np.max(np.abs(stats.mean.rhos - unitary_series(transverse_model, dt, n))) < 1e-10
        assert np.max(stats.stderr) < 1e-14

    def test_single_trajectory_stderr_infinite(self, transverse_model, weak_spec):
        stats = ensemble_average(transverse_model, weak_spec, 1, 3, 0.02, 20)
        assert np.all(np.isinf(stats.stderr))

    def test_determinism_and_thread_independence(self, transverse_model, weak_spec):
        kw = dict(n_traj=600, master_seed=42, dt=0.02, n=40)
        a = ensemble_average(transverse_model, weak_spec, **kw)
        b = ensemble_average(transverse_model, weak_spec, **kw)
        c = ensemble_average(transverse_model, weak_spec, threads=3, **kw)
        assert np.array_equal(a.mean.rhos, b.mean.rhos)
        assert np.array_equal(a.mean.rhos, c.mean.rhos)
        assert np.array_equal(a.stderr, c.stderr)

    def test_forms_agree_statistically(self, transverse_model, weak_spec):
        kw = dict(n_traj=400, master_seed=9, dt=0.02, n=50)
        a = ensemble_average(transverse_model, weak_spec, form="density", **kw)
        b = ensemble_average(transverse_model, weak_spec, form="pair", **kw)
        # same seeds, same noise: identical paths up to integrator tolerance
        assert np.max(np.abs(a.mean.rhos - b.mean.rhos)) < 1e-7

    def test_stderr_scaling_with_ensemble_size(self, dephasing_model):
        spec = discretize_spectral_density("ohmic", 0.02, 1.0, 2.0, 40, 10.0, beta=2.0)
        dt, n = 0.02, 50
        s1 = ensemble_average(dephasing_model, spec, 500, 1, dt, n)
        s2 = ensemble_average(dephasing_model, spec, 1000, 1, dt, n)
        med1 = np.median(s1.stderr[1:])
        med2 = np.median(s2.stderr[1:])
        assert med1 / med2 == pytest.approx(math.sqrt(2.0), rel=0.2)

    def test_hermiticity_improves_with_ensemble(self, transverse_model, weak_spec):
        small = ensemble_average(transverse_model, weak_spec, 50, 2, 0.02, 50)
        large = ensemble_average(transverse_model, weak_spec, 2000, 2, 0.02, 50)
        assert large.hermiticity_dev.max() < small.hermiticity_dev.max()

    def test_dephasing_matches_analytic_not_half(self, dephasing_model):
        # discriminates the implemented noise normalization from a factor-2
        # weaker alternative
        spec = discretize_spectral_density("ohmic", 0.04, 1.0, 2.0, 60, 12.0, beta=2.0)
        dt, n = 0.02, 150
        stats = ensemble_average(dephasing_model, spec, 6000, 77, dt, n)
        times = stats.mean.times
        decay = dephasing_decay(spec, times)
        target = 0.5 * np.exp(-1j * times) * decay
        wrong = 0.5 * np.exp(-1j * times) * np.sqrt(decay)
        emp = stats.mean.coherence(0, 1)
        se = np.where(stats.stderr[:, 0, 1] > 0, stats.stderr[:, 0, 1], np.inf)
        assert np.max(np.abs(emp - target) / se) < 5.0
        assert np.max(np.abs(emp - wrong) / se) > 7.0

    def test_health_flag_threshold(self):
        mean = DensityMatrixSeries(times=np.zeros(1), rhos=np.eye(2)[None, :, :])
        stats = EnsembleStats(
            mean=mean, stderr=np.zeros((1, 2, 2)), trace_dev=np.zeros(1),
            hermiticity_dev=np.zeros(1), n_total=1000, n_divergent=11, master_seed=0,
        )
        assert not stats.healthy
        ok = EnsembleStats(
            mean=mean, stderr=np.zeros((1, 2, 2)), trace_dev=np.zeros(1),
            hermiticity_dev=np.zeros(1), n_total=1000, n_divergent=10, master_seed=0,
        )
        assert ok.healthy

    def test_all_divergent_raises(self, weak_spec):
        model = SystemModel(h_sys=1e8 * SZ, coupling=1e8 * SX,
                            rho0=np.array([[1, 0], [0, 0]], dtype=complex))
        with pytest.warns(UserWarning):
            with pytest.raises(FloatingPointError):
                ensemble_average(model, weak_spec, 4, 0, 0.5, 30)

    def test_input_validation(self, transverse_model, weak_spec):
        with pytest.raises(ValueError):
            ensemble_average(transverse_model, weak_spec, 0, 1, 0.01, 10)
        with pytest.raises(ValueError):
            ensemble_average(transverse_model, weak_spec, 4, 1, 0.01, 10, form="bogus")


class TestIntegratorOrder:
    def test_rk4_richardson_ratio(self):
        # noise-free global error falls 16x per step halving
        model = SystemModel(
            h_sys=0.5 * SZ + 0.3 * SX,
            coupling=SX,
            rho0=np.array([[1, 0], [0, 0]], dtype=complex),
        )
        n0, dt0 = 25, 0.2
        errs = []
        for factor in (1, 2, 4):
            dt, n = dt0 / factor, n0 * factor
            traj = integrate_density(model, _StubPath(0.0, 0.0, dt, n), dt, n)
            errs.append(np.max(np.abs(traj.projectors[-1] - unitary_series(model, dt, n)[-1])))
        r1 = errs[0] / errs[1]
        r2 = errs[1] / errs[2]
        assert r1 == pytest.approx(16.0, rel=0.3)
        assert r2 == pytest.approx(16.0, rel=0.3)
