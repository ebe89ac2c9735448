import math

import numpy as np
import pytest

from slnsim import (
    BathSpectrum,
    NoiseAmplitudes,
    NoisePath,
    build_kernels,
    cross_factors,
    discretize_spectral_density,
    evaluate_noise,
    make_path,
    sample_amplitudes,
    validate_statistics,
    validate_statistics_seeded,
)


@pytest.fixture
def small_spec():
    return BathSpectrum(
        omegas=np.array([0.6, 1.1, 1.9]), g_hats=np.array([0.3, 0.25, 0.15]), beta=2.0
    )


class TestAmplitudes:
    def test_determinism(self, small_spec):
        factors = cross_factors(small_spec, 0.1, 20)
        a = sample_amplitudes(small_spec, 99, factors)
        b = sample_amplitudes(small_spec, 99, factors)
        assert np.array_equal(a.z0, b.z0)
        assert np.array_equal(a.z1, b.z1)
        c = sample_amplitudes(small_spec, 100, factors)
        assert not np.array_equal(a.z0, c.z0)

    def test_unit_circular_moments(self, small_spec):
        # empirical M[z z*] -> 1, M[z z] -> 0, cross-family -> 0 over 1e5 draws
        factors = cross_factors(small_spec, 0.1, 20)
        m = 100_000
        nm = small_spec.n_modes
        seeds = np.random.SeedSequence(5).spawn(m)
        z0 = np.empty((m, nm), dtype=complex)
        z1 = np.empty((m, nm), dtype=complex)
        for i, s in enumerate(seeds):
            amp = sample_amplitudes(small_spec, s, factors)
            z0[i] = amp.z0
            z1[i] = amp.z1[:nm]
        se = 1.0 / math.sqrt(m)
        assert np.all(np.abs(np.mean(z0 * np.conj(z0), axis=0) - 1.0) < 5 * se)
        assert np.all(np.abs(np.mean(z0 * z0, axis=0)) < 5 * se)
        assert np.all(np.abs(np.mean(z0 * np.conj(z1), axis=0)) < 5 * se)

    def test_cross_factor_product_matches_target(self, small_spec):
        # sum_m f_m h_m* e^{-i Omega_m tau_k} = -alpha_I(tau_k) theta_k / 2 on the comb
        dt, n = 0.05, 40
        factors = cross_factors(small_spec, dt, n)
        coeff = factors.f * np.conj(factors.h)
        taus = np.arange(-2 * n, 2 * n + 1) * factors.dt_comb
        recon = np.array(
            [np.sum(coeff * np.exp(-1j * factors.omegas * tau)) for tau in taus]
        )
        phases = np.outer(taus, small_spec.omegas)
        alpha_i = -(small_spec.g_hats**2 * np.sin(phases)).sum(axis=1)
        target = np.where(taus > 0, -0.5 * alpha_i, 0.0)
        assert np.max(np.abs(recon - target)) < 1e-10


class TestEvaluation:
    def test_zero_coupling_gives_zero_noise(self):
        spec = discretize_spectral_density("ohmic", 0.0, 1.0, 3.0, 10, 10.0, beta=1.0)
        path = make_path(spec, 3, 0.1, 20)
        xi, nu = evaluate_noise(path, 0.7)
        assert xi == 0.0 and nu == 0.0

    def test_z1_zero_means_real_xi_and_zero_nu(self, small_spec):
        factors = cross_factors(small_spec, 0.1, 20)
        amp = sample_amplitudes(small_spec, 7, factors)
        amp = NoiseAmplitudes(z0=amp.z0.copy(), z1=np.zeros_like(amp.z1), seed=7)
        path = NoisePath(spec=small_spec, factors=factors, amplitudes=amp)
        for t in (0.0, 0.4, 1.3):
            xi, nu = path.evaluate(t)
            assert nu == 0.0
            assert abs(xi.imag) < 1e-14

    def test_single_mode_cosine(self):
        spec = BathSpectrum(omegas=np.array([1.5]), g_hats=np.array([1.0]), beta=math.inf)
        factors = cross_factors(spec, 0.1, 20)
        amp = NoiseAmplitudes(
            z0=np.array([1.0 + 0.0j]), z1=np.zeros(factors.n_comb, dtype=complex), seed=0
        )
        path = NoisePath(spec=spec, factors=factors, amplitudes=amp)
        for t in (0.0, 0.3, 1.1):
            xi, _ = path.evaluate(t)
            assert xi == pytest.approx(math.sqrt(2.0) * math.cos(1.5 * t), abs=1e-12)

    def test_tabulate_matches_pointwise(self, small_spec):
        dt, n = 0.05, 30
        path = make_path(small_spec, 11, dt, n)
        xi_tab, nu_tab = path.tabulate(2 * n + 1)
        for k in (0, 1, 7, 33, 60):
            xi, nu = path.evaluate(k * path.factors.dt_comb)
            assert abs(xi - xi_tab[k]) < 1e-12
            assert abs(nu - nu_tab[k]) < 1e-12

    def test_window_enforced(self, small_spec):
        path = make_path(small_spec, 1, 0.1, 10)
        with pytest.raises(ValueError):
            path.evaluate(1.5)
        with pytest.raises(ValueError):
            path.evaluate(-0.1)


class TestStatistics:
    def test_moments_within_five_se(self, small_spec):
        dt, n = 0.25, 15
        kernel = build_kernels(small_spec, dt, n)
        factors = cross_factors(small_spec, dt, n)
        paths = [make_path(small_spec, s, dt, n, factors) for s in range(4000)]
        report = validate_statistics(paths, kernel, np.arange(n + 1))
        assert report.max_z < 5.0
        assert not report.flagged
        # targets are the kernel samples themselves
        assert report.target_xixi[0, 0] == pytest.approx(kernel.alpha_r[0])
        assert report.target_xinu[3, 1] == pytest.approx(-1j * kernel.alpha_i[2])
        assert report.target_xinu[1, 3] == 0.0

    def test_seeded_variant_matches(self, small_spec):
        dt, n = 0.2, 10
        kernel = build_kernels(small_spec, dt, n)
        factors = cross_factors(small_spec, dt, n)
        seeds = np.random.SeedSequence(21).spawn(500)
        paths = [make_path(small_spec, s, dt, n, factors) for s in seeds]
        r1 = validate_statistics(paths, kernel, np.arange(0, n + 1, 2))
        r2 = validate_statistics_seeded(
            small_spec, kernel, factors, seeds, np.arange(0, n + 1, 2)
        )
        assert np.allclose(r1.m_xixi, r2.m_xixi, atol=1e-14)
        assert np.allclose(r1.m_xinu, r2.m_xinu, atol=1e-14)

    @pytest.mark.filterwarnings("ignore:dt \\* max")
    def test_zero_coupling_moments_vanish(self):
        spec = discretize_spectral_density("ohmic", 0.0, 1.0, 3.0, 10, 10.0, beta=1.0)
        kernel = build_kernels(spec, 0.2, 10)
        factors = cross_factors(spec, 0.2, 10)
        paths = [make_path(spec, s, 0.2, 10, factors) for s in range(50)]
        report = validate_statistics(paths, kernel, np.arange(11))
        assert np.all(report.m_xixi == 0.0)
        assert np.all(report.m_xinu == 0.0)
        assert np.all(report.m_nunu == 0.0)

    def test_csv_output(self, small_spec, tmp_path):
        kernel = build_kernels(small_spec, 0.2, 10)
        paths = [make_path(small_spec, s, 0.2, 10) for s in range(50)]
        report = validate_statistics(paths, kernel, np.arange(0, 11, 5))
        out = tmp_path / "noise-stats.csv"
        report.to_csv(out)
        header = out.read_text().splitlines()[0]
        assert header.startswith("t1,t2,re_emp_xixi")
        assert len(out.read_text().splitlines()) == 1 + 9
