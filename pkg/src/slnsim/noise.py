"""Correlated complex Gaussian noise pair (xi, nu) built from mode sums.

The pair must satisfy, in the ensemble mean ``M[.]`` (no conjugation),

    M[xi(t) xi(t')] = alpha_R(t - t')
    M[xi(t) nu(t')] = -i alpha_I(t - t') theta(t - t')
    M[nu(t) nu(t')] = 0

The construction composes two independent families of unit circular
complex Gaussians ``z_{0l}``, ``z_{1m}``:

    xi(t) = z0(t) + z0*(t) + 2 z1(t),      nu(t) = i z1*(t)

    z0(t)  = 2^{-1/2} sum_l g_l z_{0l} exp(-i omega_l t)
    z1(t)  = sum_m f_m z_{1m} exp(-i Omega_m t)
    z1*(t) = sum_m h_m* z_{1m}* exp(+i Omega_m t)

The ``z0`` family lives on the physical bath modes with the effective
couplings ``g_l`` and reproduces ``alpha_R`` exactly for all times. The
``z1`` family lives on a dense uniform frequency comb ``Omega_m`` carrying
both signs of frequency; its weights ``f_m h_m*`` are the DFT coefficients
of the one-sided target ``-alpha_I(tau) theta(tau) / 2``, which makes the
cross correlation exact at every multiple of the comb time step inside the
simulation window (a one-sided correlation cannot be realized exactly by
any finite stationary mode sum off the grid). Integrators only ever sample
noise on that comb, so they see exact statistics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.fft import next_fast_len

from .bath import BathSpectrum, CorrelationKernel

__all__ = [
    "CrossFactors",
    "NoiseAmplitudes",
    "NoisePath",
    "cross_factors",
    "sample_amplitudes",
    "make_path",
    "evaluate_noise",
    "validate_statistics",
    "StatisticsReport",
]


@dataclass
class CrossFactors:
    """Frequency comb and spectral factors realizing the causal cross term.

    ``f[m] * conj(h[m])`` equals the DFT coefficient ``c_m`` of the periodized
    one-sided sequence ``q_k = -alpha_I(k dt_comb) theta_k / 2``, so that
    ``sum_m f_m h_m* exp(-i Omega_m k dt_comb) = q_k`` exactly.
    """

    dt_comb: float
    n_comb: int
    omegas: np.ndarray
    f: np.ndarray
    h: np.ndarray
    t_max: float

    def __post_init__(self) -> None:
        for arr in (self.omegas, self.f, self.h):
            arr.setflags(write=False)


def cross_factors(spec: BathSpectrum, dt: float, n: int, pad: float = 3.0) -> CrossFactors:
    """Build the comb factors for a window ``[0, n dt]`` at comb step ``dt/2``.

    The comb period exceeds ``pad * t_max`` (at least ``2 t_max`` plus one
    step) so no aliasing of the one-sided target occurs inside the window.
    Outside the constrained window the periodized target is tapered to zero
    with a smooth half-cosine bridge; this leaves every in-window sample
    exact while suppressing the high-frequency comb content a hard
    periodization jump would create (integrators never resolve frequencies
    beyond their own Nyquist, so smoothness keeps per-path trajectories
    step-size convergent).
    """
    if dt <= 0.0 or n < 1:
        raise ValueError("need dt > 0 and n >= 1")
    dt_comb = 0.5 * dt
    n_grid = 2 * n  # window grid points at comb resolution
    n_comb = next_fast_len(max(int(math.ceil(pad * n_grid)), 2 * n_grid + 2))
    # one-sided target on the periodized comb grid
    q = np.zeros(n_comb, dtype=complex)
    k_pos = np.arange(1, n_comb // 2 + 1)
    taus = k_pos * dt_comb
    phases = np.outer(taus, spec.omegas)
    alpha_i = -(spec.g_hats**2 * np.sin(phases)).sum(axis=1)
    target = -0.5 * alpha_i
    slack = k_pos > n_grid  # beyond the constrained window
    if np.any(slack):
        ramp = (k_pos[slack] - n_grid) / (n_comb // 2 - n_grid)
        target[slack] = target[slack] * 0.5 * (1.0 + np.cos(math.pi * ramp))
    q[1 : n_comb // 2 + 1] = target
    coeff = np.fft.ifft(q)
    mag = np.abs(coeff)
    f = np.sqrt(mag)
    h = np.zeros(n_comb, dtype=complex)
    nz = mag > 0.0
    h[nz] = np.conj(coeff[nz]) / f[nz]
    omegas = 2.0 * math.pi * np.fft.fftfreq(n_comb, d=dt_comb)
    return CrossFactors(
        dt_comb=dt_comb, n_comb=n_comb, omegas=omegas, f=f, h=h, t_max=n * dt
    )


@dataclass
class NoiseAmplitudes:
    """Per-realization complex Gaussian draws for both noise families."""

    z0: np.ndarray
    z1: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        self.z0.setflags(write=False)
        self.z1.setflags(write=False)


def _draw_unit_complex(rng: np.random.Generator, size: int) -> np.ndarray:
    """Circular complex Gaussians with M[z]=0, M[z z]=0, M[z z*]=1."""
    pair = rng.standard_normal((2, size))
    return (pair[0] + 1j * pair[1]) / math.sqrt(2.0)


def sample_amplitudes(
    spec: BathSpectrum,
    seed: int | np.random.SeedSequence,
    factors: CrossFactors,
) -> NoiseAmplitudes:
    """Draw the two independent amplitude families for one noise path.

    Deterministic for a given seed: ``z0`` (one draw per physical mode) is
    drawn first, then ``z1`` (one draw per comb line).
    """
    rng = np.random.default_rng(seed)
    z0 = _draw_unit_complex(rng, spec.n_modes)
    z1 = _draw_unit_complex(rng, factors.n_comb)
    seed_repr = seed.entropy if isinstance(seed, np.random.SeedSequence) else seed
    return NoiseAmplitudes(z0=z0, z1=z1, seed=seed_repr)


@dataclass
class NoisePath:
    """One realization of the correlated pair, evaluable anywhere in window."""

    spec: BathSpectrum
    factors: CrossFactors
    amplitudes: NoiseAmplitudes
    _w0: np.ndarray = field(init=False, repr=False)
    _w1: np.ndarray = field(init=False, repr=False)
    _w1c: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        g = np.sqrt(self.spec.g_squared)
        self._w0 = g / math.sqrt(2.0) * self.amplitudes.z0
        self._w1 = self.factors.f * self.amplitudes.z1
        self._w1c = self.factors.h * self.amplitudes.z1

    @property
    def t_max(self) -> float:
        return self.factors.t_max

    def evaluate(self, t: float) -> tuple[complex, complex]:
        """Exact mode-sum evaluation of ``(xi(t), nu(t))`` at one time."""
        if t < 0.0 or t > self.t_max + 1e-12:
            raise ValueError(f"t = {t} outside the noise window [0, {self.t_max}]")
        e0 = np.exp(-1j * self.spec.omegas * t)
        z0t = np.dot(self._w0, e0)
        e1 = np.exp(-1j * self.factors.omegas * t)
        z1t = np.dot(self._w1, e1)
        z1ct = np.conj(np.dot(self._w1c, e1))
        xi = 2.0 * z0t.real + 2.0 * z1t
        nu = 1j * z1ct
        return complex(xi), complex(nu)

    def tabulate(self, n_points: int) -> tuple[np.ndarray, np.ndarray]:
        """Values of ``(xi, nu)`` on the comb grid ``t_k = k dt_comb``."""
        xi, nu = _tabulate_batch(
            self.spec, self.factors, self._w0[None, :], self._w1[None, :], self._w1c[None, :], n_points
        )
        return xi[0], nu[0]


def _tabulate_batch(
    spec: BathSpectrum,
    factors: CrossFactors,
    w0: np.ndarray,
    w1: np.ndarray,
    w1c: np.ndarray,
    n_points: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate a batch of paths on the comb grid via FFT over the comb.

    ``w0, w1, w1c`` have one row per path. Returns ``(xi, nu)`` with shape
    ``(n_paths, n_points)``. Values agree with pointwise evaluation to
    rounding because both compute the same exponential sums.
    """
    if n_points > factors.n_comb:
        raise ValueError("requested grid exceeds the comb period")
    phases0 = np.exp(-1j * np.outer(spec.omegas, np.arange(n_points) * factors.dt_comb))
    z0t = w0 @ phases0
    z1t = np.fft.fft(w1, axis=1)[:, :n_points]
    z1ct = np.conj(np.fft.fft(w1c, axis=1)[:, :n_points])
    xi = 2.0 * z0t.real + 2.0 * z1t
    nu = 1j * z1ct
    return xi, nu


def make_path(
    spec: BathSpectrum,
    seed: int | np.random.SeedSequence,
    dt: float,
    n: int,
    factors: CrossFactors | None = None,
) -> NoisePath:
    """Convenience constructor: factors (shared, seed-independent) + draws."""
    if factors is None:
        factors = cross_factors(spec, dt, n)
    return NoisePath(spec=spec, factors=factors, amplitudes=sample_amplitudes(spec, seed, factors))


def evaluate_noise(path: NoisePath, t: float) -> tuple[complex, complex]:
    """Functional form of :meth:`NoisePath.evaluate`."""
    return path.evaluate(t)


@dataclass
class StatisticsReport:
    """Empirical noise moments against their targets on a time grid."""

    times: np.ndarray
    m_xixi: np.ndarray
    m_xinu: np.ndarray
    m_nunu: np.ndarray
    target_xixi: np.ndarray
    target_xinu: np.ndarray
    target_nunu: np.ndarray
    se_xixi: np.ndarray
    se_xinu: np.ndarray
    se_nunu: np.ndarray
    n_paths: int
    max_abs_deviation: float = field(init=False)
    max_z: float = field(init=False)
    flagged: list = field(init=False)

    def __post_init__(self) -> None:
        self.flagged = []
        max_dev = 0.0
        max_z = 0.0
        for name in ("xixi", "xinu", "nunu"):
            emp = getattr(self, f"m_{name}")
            tgt = getattr(self, f"target_{name}")
            se = getattr(self, f"se_{name}")
            dev = np.abs(emp - tgt)
            max_dev = max(max_dev, float(dev.max()))
            z = dev / np.where(se > 0.0, se, np.inf)
            max_z = max(max_z, float(z.max()))
            for i, j in zip(*np.nonzero(z > 5.0)):
                self.flagged.append((name, int(i), int(j), float(z[i, j])))
        self.max_abs_deviation = max_dev
        self.max_z = max_z

    def to_csv(self, path) -> None:
        cols = ["t1", "t2"]
        for name in ("xixi", "xinu", "nunu"):
            cols += [f"re_emp_{name}", f"im_emp_{name}", f"re_target_{name}",
                     f"im_target_{name}", f"se_{name}"]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            g = self.times.size
            for i in range(g):
                for j in range(g):
                    row = [f"{self.times[i]:.17e}", f"{self.times[j]:.17e}"]
                    for name in ("xixi", "xinu", "nunu"):
                        emp = getattr(self, f"m_{name}")[i, j]
                        tgt = getattr(self, f"target_{name}")[i, j]
                        se = getattr(self, f"se_{name}")[i, j]
                        row += [f"{emp.real:.17e}", f"{emp.imag:.17e}",
                                f"{tgt.real:.17e}", f"{tgt.imag:.17e}", f"{se:.17e}"]
                    fh.write(",".join(row) + "\n")


def stack_weights(
    spec: BathSpectrum, factors: CrossFactors, seeds: Sequence
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Phase-weight arrays (one row per seed) feeding batched tabulation."""
    g = np.sqrt(spec.g_squared)
    w0 = np.empty((len(seeds), spec.n_modes), dtype=complex)
    w1 = np.empty((len(seeds), factors.n_comb), dtype=complex)
    w1c = np.empty((len(seeds), factors.n_comb), dtype=complex)
    for i, seed in enumerate(seeds):
        amp = sample_amplitudes(spec, seed, factors)
        w0[i] = g / math.sqrt(2.0) * amp.z0
        w1[i] = factors.f * amp.z1
        w1c[i] = factors.h * amp.z1
    return w0, w1, w1c


def _moment_report(
    spec: BathSpectrum,
    factors: CrossFactors,
    kernel: CorrelationKernel,
    grid_indices: np.ndarray,
    weight_blocks,
    n_paths: int,
) -> StatisticsReport:
    grid_indices = np.asarray(grid_indices, dtype=int)
    if grid_indices.min() < 0 or grid_indices.max() > kernel.n:
        raise ValueError("grid indices outside the kernel grid")
    times = grid_indices * kernel.dt
    g = grid_indices.size
    comb_idx = (np.round(kernel.dt / factors.dt_comb).astype(int)) * grid_indices
    n_points = comb_idx.max() + 1

    sums = {k: np.zeros((g, g), dtype=complex) for k in ("xixi", "xinu", "nunu")}
    sq_re = {k: np.zeros((g, g)) for k in sums}
    sq_im = {k: np.zeros((g, g)) for k in sums}
    for w0, w1, w1c in weight_blocks:
        xi, nu = _tabulate_batch(spec, factors, w0, w1, w1c, n_points)
        xi = xi[:, comb_idx]
        nu = nu[:, comb_idx]
        for name, a, b in (("xixi", xi, xi), ("xinu", xi, nu), ("nunu", nu, nu)):
            prod = np.einsum("pi,pj->pij", a, b)
            sums[name] += prod.sum(axis=0)
            sq_re[name] += (prod.real**2).sum(axis=0)
            sq_im[name] += (prod.imag**2).sum(axis=0)

    lag = grid_indices[:, None] - grid_indices[None, :]
    tgt_xixi = kernel.alpha_r[np.abs(lag)].astype(complex)
    alpha_i_signed = np.sign(lag) * kernel.alpha_i[np.abs(lag)]
    tgt_xinu = np.where(lag > 0, -1j * alpha_i_signed, 0.0).astype(complex)
    tgt_nunu = np.zeros((g, g), dtype=complex)

    out = {}
    se = {}
    m = n_paths
    for name in sums:
        mean = sums[name] / m
        var_re = sq_re[name] / m - mean.real**2
        var_im = sq_im[name] / m - mean.imag**2
        se[name] = np.sqrt(np.clip(var_re + var_im, 0.0, None) / m)
        out[name] = mean
    return StatisticsReport(
        times=times,
        m_xixi=out["xixi"], m_xinu=out["xinu"], m_nunu=out["nunu"],
        target_xixi=tgt_xixi, target_xinu=tgt_xinu, target_nunu=tgt_nunu,
        se_xixi=se["xixi"], se_xinu=se["xinu"], se_nunu=se["nunu"],
        n_paths=m,
    )


def validate_statistics(
    ensemble: Sequence[NoisePath],
    kernel: CorrelationKernel,
    grid_indices: np.ndarray,
    block: int = 2048,
) -> StatisticsReport:
    """Empirical two-time moments of an ensemble against the kernel targets.

    ``grid_indices`` selects kernel grid points ``t = k kernel.dt``; paths
    are tabulated on their comb grid. Deviations above five standard
    errors are flagged in the report, never raised. For very large
    ensembles prefer :func:`validate_statistics_seeded`, which never
    materializes the paths.
    """
    if len(ensemble) < 2:
        raise ValueError("need at least 2 paths to estimate moments")
    factors = ensemble[0].factors
    spec = ensemble[0].spec

    def blocks():
        for start in range(0, len(ensemble), block):
            paths = ensemble[start : start + block]
            yield (
                np.stack([p._w0 for p in paths]),
                np.stack([p._w1 for p in paths]),
                np.stack([p._w1c for p in paths]),
            )

    return _moment_report(spec, factors, kernel, grid_indices, blocks(), len(ensemble))


def validate_statistics_seeded(
    spec: BathSpectrum,
    kernel: CorrelationKernel,
    factors: CrossFactors,
    seeds: Sequence,
    grid_indices: np.ndarray,
    block: int = 2048,
) -> StatisticsReport:
    """Memory-lean :func:`validate_statistics` over per-path seeds."""
    if len(seeds) < 2:
        raise ValueError("need at least 2 paths to estimate moments")

    def blocks():
        for start in range(0, len(seeds), block):
            yield stack_weights(spec, factors, seeds[start : start + block])

    return _moment_report(spec, factors, kernel, grid_indices, blocks(), len(seeds))
