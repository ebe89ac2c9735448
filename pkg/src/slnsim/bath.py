"""Discrete-mode environment: spectral density, thermal weights, kernels.

The environment is a finite set of harmonic modes ``(omega_l, g_hat_l)``
at inverse temperature ``beta``. Its two-time correlation function is

    alpha(tau) = sum_l g_hat_l^2 [coth(beta omega_l / 2) cos(omega_l tau)
                                  - i sin(omega_l tau)]

whose real and imaginary parts ``alpha_R`` and ``alpha_I`` drive every
solver in the package. The effective (temperature-dressed) coupling used
by the noise synthesizer and the hierarchy kernels is

    g_l^2 = g_hat_l^2 coth(beta omega_l / 2) = g_hat_l^2 (2 N(omega_l) + 1)

so that ``sum_l g_l^2 cos(omega_l tau) = alpha_R(tau)`` exactly. Kernel
sampling uses the symmetric Heaviside convention ``theta(0) = 1/2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .exceptions import ConfigurationError

__all__ = [
    "BathSpectrum",
    "CorrelationKernel",
    "thermal_occupation",
    "discretize_spectral_density",
    "correlation_function",
    "build_kernels",
    "kernels_from_functions",
    "exponential_kernel",
]

#: Sampling is flagged as under-resolved when dt * max(omega) exceeds this.
COARSE_GRID_LIMIT = 0.5


def thermal_occupation(omega: float, beta: float) -> float:
    """Mean thermal quantum number ``N(omega) = 1 / (exp(omega beta) - 1)``.

    ``beta = inf`` is the explicit zero-temperature flag and returns 0.
    """
    if omega <= 0.0:
        raise ValueError(f"thermal occupation requires omega > 0, got {omega}")
    if beta <= 0.0:
        raise ValueError(f"inverse temperature must be positive, got {beta}")
    if math.isinf(beta):
        return 0.0
    return 1.0 / math.expm1(omega * beta)


@dataclass
class BathSpectrum:
    """Discrete bath: strictly increasing mode frequencies, bare couplings
    ``g_hat`` and inverse temperature (``math.inf`` flags zero temperature)."""

    omegas: np.ndarray
    g_hats: np.ndarray
    beta: float

    def __post_init__(self) -> None:
        self.omegas = np.asarray(self.omegas, dtype=float)
        self.g_hats = np.asarray(self.g_hats, dtype=float)
        if self.omegas.ndim != 1 or self.omegas.shape != self.g_hats.shape:
            raise ValueError("omegas and g_hats must be 1-d arrays of equal length")
        if self.omegas.size == 0:
            raise ValueError("a bath needs at least one mode")
        if np.any(self.omegas <= 0.0):
            raise ValueError("all mode frequencies must be strictly positive")
        if np.any(np.diff(self.omegas) <= 0.0):
            raise ValueError("mode frequencies must be strictly increasing")
        if np.any(self.g_hats < 0.0):
            raise ValueError("bare couplings must be non-negative")
        if not (self.beta > 0.0):
            raise ValueError(f"beta must be positive or inf, got {self.beta}")
        self.omegas.setflags(write=False)
        self.g_hats.setflags(write=False)

    @property
    def n_modes(self) -> int:
        return self.omegas.size

    @property
    def thermal_weights(self) -> np.ndarray:
        """``coth(beta omega / 2)`` per mode; ones at zero temperature."""
        if math.isinf(self.beta):
            return np.ones_like(self.omegas)
        return 1.0 / np.tanh(0.5 * self.beta * self.omegas)

    @property
    def g_squared(self) -> np.ndarray:
        """Effective couplings ``g_l^2 = g_hat_l^2 coth(beta omega_l / 2)``."""
        return self.g_hats**2 * self.thermal_weights

    def recurrence_time(self) -> float:
        """Shortest beat period of the discrete mode comb (inf for one mode)."""
        if self.n_modes < 2:
            return math.inf
        return 2.0 * math.pi / np.min(np.diff(self.omegas))


def discretize_spectral_density(
    family: str,
    eta: float,
    s: float,
    omega_c: float,
    n_modes: int,
    omega_max: float,
    beta: float,
    table: Iterable[tuple[float, float]] | None = None,
    t_max: float | None = None,
) -> BathSpectrum:
    """Discretize ``J(omega) = eta omega^s exp(-omega / omega_c)`` into modes.

    A linear midpoint grid ``omega_l = (l - 1/2) domega`` with
    ``domega = omega_max / n_modes`` is used and each mode carries
    ``g_hat_l^2 = J(omega_l) domega``. ``family="custom"`` bypasses the
    built-in families and passes ``table`` of ``(omega, g_hat)`` pairs
    through unchanged. When ``t_max`` is given, the Poincare recurrence
    guard ``2 pi / domega > t_max`` is enforced.
    """
    if family == "custom":
        if table is None:
            raise ConfigurationError("custom spectra require a mode table")
        pairs = sorted((float(w), float(g)) for w, g in table)
        spec = BathSpectrum(
            omegas=np.array([p[0] for p in pairs]),
            g_hats=np.array([p[1] for p in pairs]),
            beta=beta,
        )
        if t_max is not None and spec.recurrence_time() <= t_max:
            raise ConfigurationError(
                f"mode spacing gives recurrence time {spec.recurrence_time():.3g} "
                f"<= t_max {t_max:.3g}"
            )
        return spec

    if family == "ohmic":
        if abs(s - 1.0) > 1e-12:
            raise ConfigurationError("ohmic family requires s = 1")
    elif family == "super_ohmic":
        if s <= 1.0:
            raise ConfigurationError("super_ohmic family requires s > 1")
    else:
        raise ConfigurationError(
            f"unknown spectral family {family!r}; use ohmic, super_ohmic or custom"
        )
    if n_modes < 1:
        raise ConfigurationError("n_modes must be at least 1")
    if omega_max <= 0.0 or omega_c <= 0.0:
        raise ConfigurationError("omega_max and omega_c must be positive")
    if eta < 0.0:
        raise ConfigurationError("eta must be non-negative")

    domega = omega_max / n_modes
    if t_max is not None and n_modes > 1 and 2.0 * math.pi / domega <= t_max:
        raise ConfigurationError(
            f"recurrence time {2.0 * math.pi / domega:.3g} <= t_max {t_max:.3g}; "
            "increase n_modes or reduce omega_max"
        )
    omegas = (np.arange(1, n_modes + 1) - 0.5) * domega
    j_vals = eta * omegas**s * np.exp(-omegas / omega_c)
    g_hats = np.sqrt(j_vals * domega)
    return BathSpectrum(omegas=omegas, g_hats=g_hats, beta=beta)


def correlation_function(spec: BathSpectrum, tau: float | np.ndarray) -> complex | np.ndarray:
    """Bath correlation ``alpha(tau)`` as a mode sum; vectorized over tau."""
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    coth = spec.thermal_weights
    phases = np.outer(tau_arr, spec.omegas)
    vals = (spec.g_hats**2 * (coth * np.cos(phases) - 1j * np.sin(phases))).sum(axis=1)
    return complex(vals[0]) if np.ndim(tau) == 0 else vals


@dataclass
class CorrelationKernel:
    """Correlation function and hierarchy kernels sampled on a uniform grid.

    Arrays run over lags ``tau = k dt`` for ``k = 0..n``:

    ``alpha_r``, ``alpha_i``
        real / imaginary part of the bath correlation function;
    ``k00_0s``
        half-range commutator-family kernel ``1/2 sum_l g_l^2 e^{-i omega_l tau}``
        (so ``2 Re k00_0s = alpha_r``);
    ``k00_s0``
        its complex conjugate (reversed time ordering);
    ``k11_0s``
        causal cross-family kernel ``alpha_i(tau) theta(tau)``;
    ``k11_s0``
        the anti-causal partner, identically zero on the positive-lag grid.
    """

    dt: float
    n: int
    alpha_r: np.ndarray
    alpha_i: np.ndarray
    k00_0s: np.ndarray
    k00_s0: np.ndarray
    k11_0s: np.ndarray
    k11_s0: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        expected = self.n + 1
        for name in ("alpha_r", "alpha_i", "k00_0s", "k00_s0", "k11_0s", "k11_s0"):
            arr = np.asarray(getattr(self, name))
            if arr.shape != (expected,):
                raise ValueError(f"{name} must have {expected} samples")
            setattr(self, name, arr)
            arr.setflags(write=False)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dt

    def alpha(self, k: int) -> complex:
        """alpha(k dt) reassembled from the sampled real/imaginary parts."""
        return complex(self.alpha_r[k] + 1j * self.alpha_i[k])


def build_kernels(spec: BathSpectrum, dt: float, n: int) -> CorrelationKernel:
    """Sample the correlation function and all hierarchy kernels on a grid.

    Warns when ``dt * max(omega)`` exceeds the resolution limit and rejects
    grids that run into the Poincare recurrence of the discrete mode comb.
    """
    if dt <= 0.0 or n < 1:
        raise ValueError("need dt > 0 and n >= 1")
    if n * dt >= spec.recurrence_time():
        raise ConfigurationError(
            f"grid span {n * dt:.3g} reaches the recurrence time "
            f"{spec.recurrence_time():.3g} of the discrete bath"
        )
    if dt * spec.omegas.max() > COARSE_GRID_LIMIT:
        warnings.warn(
            f"dt * max(omega) = {dt * spec.omegas.max():.3g} > {COARSE_GRID_LIMIT}; "
            "kernel sampling is under-resolved",
            stacklevel=2,
        )
    taus = np.arange(n + 1) * dt
    phases = np.outer(taus, spec.omegas)
    gh2 = spec.g_hats**2
    coth = spec.thermal_weights
    alpha_r = (gh2 * coth * np.cos(phases)).sum(axis=1)
    alpha_i = -(gh2 * np.sin(phases)).sum(axis=1)
    k00_0s = 0.5 * (spec.g_squared * np.exp(-1j * phases)).sum(axis=1)
    k11_0s = alpha_i.astype(complex).copy()
    k11_0s[0] = 0.5 * alpha_i[0]  # theta(0) = 1/2; alpha_i(0) = 0 anyway
    return CorrelationKernel(
        dt=dt,
        n=n,
        alpha_r=alpha_r,
        alpha_i=alpha_i,
        k00_0s=k00_0s,
        k00_s0=np.conj(k00_0s),
        k11_0s=k11_0s,
        k11_s0=np.zeros(n + 1, dtype=complex),
        meta={"source": "modes", "n_modes": spec.n_modes, "beta": spec.beta},
    )


def kernels_from_functions(
    alpha_r: Callable[[np.ndarray], np.ndarray],
    alpha_i: Callable[[np.ndarray], np.ndarray] | None,
    dt: float,
    n: int,
) -> CorrelationKernel:
    """Build kernels from explicit correlation callables instead of modes.

    Used for analytic kernels (exponential, delta-like) that are not tied
    to a discrete spectrum. ``alpha_i = None`` means a purely real kernel.
    The half-range kernel is stored as ``alpha_r / 2`` which leaves every
    solver in the package unchanged: they only consume ``2 Re k00_0s``
    and the causal ``k11_0s``.
    """
    if dt <= 0.0 or n < 1:
        raise ValueError("need dt > 0 and n >= 1")
    taus = np.arange(n + 1) * dt
    ar = np.asarray(alpha_r(taus), dtype=float)
    ai = np.zeros(n + 1) if alpha_i is None else np.asarray(alpha_i(taus), dtype=float)
    k00 = 0.5 * ar.astype(complex)
    k11 = ai.astype(complex).copy()
    k11[0] = 0.5 * ai[0]
    return CorrelationKernel(
        dt=dt,
        n=n,
        alpha_r=ar,
        alpha_i=ai,
        k00_0s=k00,
        k00_s0=np.conj(k00),
        k11_0s=k11,
        k11_s0=np.zeros(n + 1, dtype=complex),
        meta={"source": "functions"},
    )


def exponential_kernel(gamma: float, tau_c: float, dt: float, n: int) -> CorrelationKernel:
    """Real exponential kernel ``alpha(tau) = (gamma / tau_c) exp(-|tau| / tau_c)``.

    Normalized so the half-range integral equals ``gamma``; as ``tau_c -> 0``
    it approaches ``gamma * delta(tau)`` and the memory solvers approach the
    Markovian generator with rate ``gamma``.
    """
    if gamma < 0.0 or tau_c <= 0.0:
        raise ValueError("need gamma >= 0 and tau_c > 0")
    return kernels_from_functions(
        lambda taus: (gamma / tau_c) * np.exp(-taus / tau_c), None, dt, n
    )
