"""Stochastic trajectory integration and ensemble averaging.

Each trajectory evolves the stochastic projector ``P`` (generally
non-Hermitian path by path; only the ensemble mean is physical) under

    dP/dt = -i [H, P] + i xi(t) [X, P] - i nu(t) {X, P}

with classical RK4 and noise evaluated exactly at the substep times
(the noise comb is built at ``dt/2`` resolution for this reason).

The anticommutator weight ``-i nu`` is tied to the noise normalization
``M[xi(t) nu(t')] = -i alpha_I(t - t') theta(t - t')`` exposed by the
noise module: with that convention, ``-i nu {X, .}`` is the unique
coupling for which the trajectory average converges to the reduced
density matrix (cross-checked against the brute-force oracle in the
test suite). The pair form evolves two wavevectors

    d psi1/dt = -i H psi1 + i (xi - nu) X psi1
    d psi2/dt = -i H psi2 + i (xi* + nu*) X psi2

and composes ``P = |psi1><psi2|``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .bath import BathSpectrum
from .liouville import SystemModel
from .noise import CrossFactors, NoisePath, cross_factors
from .series import DensityMatrixSeries

__all__ = [
    "Trajectory",
    "EnsembleStats",
    "integrate_density",
    "integrate_pair",
    "ensemble_average",
]

#: warn when dt * ||H|| exceeds this (integration under-resolved)
STEP_RESOLUTION_LIMIT = 0.5

#: trajectories are processed in fixed-size blocks so that results are
#: independent of the worker count used to schedule the blocks
BLOCK_SIZE = 512


@dataclass
class Trajectory:
    """A single stochastic-projector path on a uniform grid."""

    times: np.ndarray
    projectors: np.ndarray
    seed: int
    divergent: bool


@dataclass
class EnsembleStats:
    """Ensemble mean with per-entry standard errors and health diagnostics."""

    mean: DensityMatrixSeries
    stderr: np.ndarray
    trace_dev: np.ndarray
    hermiticity_dev: np.ndarray
    n_total: int
    n_divergent: int
    master_seed: int
    healthy: bool = field(init=False)

    def __post_init__(self) -> None:
        self.healthy = self.n_divergent <= 0.01 * self.n_total


def _check_step(model: SystemModel, dt: float) -> None:
    h_norm = np.linalg.norm(model.h_sys, ord=2)
    if dt * h_norm > STEP_RESOLUTION_LIMIT:
        warnings.warn(
            f"dt * ||H|| = {dt * h_norm:.3g} > {STEP_RESOLUTION_LIMIT}; "
            "trajectory integration is under-resolved",
            stacklevel=3,
        )


def _integrate_density_batch(
    model: SystemModel, xi: np.ndarray, nu: np.ndarray, dt: float, n: int
) -> np.ndarray:
    """RK4 on a batch of projector paths; noise arrays are on the dt/2 grid."""
    h = model.h_sys
    x = model.coupling
    b = xi.shape[0]
    p = np.broadcast_to(model.rho0, (b,) + model.rho0.shape).copy()
    out = np.empty((b, n + 1) + model.rho0.shape, dtype=complex)
    out[:, 0] = p

    def rhs(p, j):
        hp = h @ p - p @ h
        xp = x @ p
        px = p @ x
        return -1j * hp + (1j * xi[:, j])[:, None, None] * (xp - px) \
            - (1j * nu[:, j])[:, None, None] * (xp + px)

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            j = 2 * k
            k1 = rhs(p, j)
            k2 = rhs(p + 0.5 * dt * k1, j + 1)
            k3 = rhs(p + 0.5 * dt * k2, j + 1)
            k4 = rhs(p + dt * k3, j + 2)
            p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[:, k + 1] = p
    return out


def _integrate_pair_batch(
    model: SystemModel, psi0: np.ndarray, xi: np.ndarray, nu: np.ndarray, dt: float, n: int
) -> np.ndarray:
    """RK4 on batched wavevector pairs; returns projector paths."""
    h = model.h_sys
    x = model.coupling
    b = xi.shape[0]
    c1 = 1j * (xi - nu)
    c2 = 1j * (np.conj(xi) + np.conj(nu))
    psi1 = np.broadcast_to(psi0, (b, psi0.size)).copy()
    psi2 = psi1.copy()
    out = np.empty((b, n + 1, psi0.size, psi0.size), dtype=complex)
    out[:, 0] = np.einsum("bi,bj->bij", psi1, np.conj(psi2))

    def rhs(psi, c, j):
        return -1j * psi @ h.T + c[:, j][:, None] * (psi @ x.T)

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            j = 2 * k
            for psi_name, c in (("psi1", c1), ("psi2", c2)):
                psi = psi1 if psi_name == "psi1" else psi2
                k1 = rhs(psi, c, j)
                k2 = rhs(psi + 0.5 * dt * k1, c, j + 1)
                k3 = rhs(psi + 0.5 * dt * k2, c, j + 1)
                k4 = rhs(psi + dt * k3, c, j + 2)
                psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if psi_name == "psi1":
                    psi1 = psi
                else:
                    psi2 = psi
            out[:, k + 1] = np.einsum("bi,bj->bij", psi1, np.conj(psi2))
    return out


def _noise_tables(path: NoisePath, n: int) -> tuple[np.ndarray, np.ndarray]:
    xi, nu = path.tabulate(2 * n + 1)
    return xi[None, :], nu[None, :]


def integrate_density(model: SystemModel, path: NoisePath, dt: float, n: int) -> Trajectory:
    """Integrate one stochastic projector path in the density form."""
    if n * dt > path.t_max + 1e-12:
        raise ValueError("noise window shorter than requested propagation")
    if abs(2.0 * path.factors.dt_comb - dt) > 1e-12 * max(dt, 1.0):
        raise ValueError("noise comb was built for a different grid step")
    _check_step(model, dt)
    xi, nu = _noise_tables(path, n)
    out = _integrate_density_batch(model, xi, nu, dt, n)[0]
    divergent = not bool(np.all(np.isfinite(out.view(float))))
    return Trajectory(
        times=np.arange(n + 1) * dt,
        projectors=out,
        seed=path.amplitudes.seed,
        divergent=divergent,
    )


def integrate_pair(model: SystemModel, path: NoisePath, dt: float, n: int) -> Trajectory:
    """Integrate one path in the paired-wavevector form (pure rho0 only)."""
    if not model.is_pure():
        raise ValueError("paired-wavevector form requires a pure initial state")
    if n * dt > path.t_max + 1e-12:
        raise ValueError("noise window shorter than requested propagation")
    _check_step(model, dt)
    xi, nu = _noise_tables(path, n)
    out = _integrate_pair_batch(model, model.pure_state(), xi, nu, dt, n)[0]
    divergent = not bool(np.all(np.isfinite(out.view(float))))
    return Trajectory(
        times=np.arange(n + 1) * dt,
        projectors=out,
        seed=path.amplitudes.seed,
        divergent=divergent,
    )


def _block_sums(
    model: SystemModel,
    spec: BathSpectrum,
    factors: CrossFactors,
    seeds: list[np.random.SeedSequence],
    dt: float,
    n: int,
    form: str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    from .noise import _tabulate_batch, stack_weights

    w0, w1, w1c = stack_weights(spec, factors, seeds)
    xi, nu = _tabulate_batch(spec, factors, w0, w1, w1c, 2 * n + 1)
    if form == "density":
        paths = _integrate_density_batch(model, xi, nu, dt, n)
    else:
        paths = _integrate_pair_batch(model, model.pure_state(), xi, nu, dt, n)
    finite = np.all(np.isfinite(paths.view(float)), axis=(1, 2, 3))
    good = paths[finite]
    s = good.sum(axis=0)
    sq = (good.real**2 + good.imag**2).sum(axis=0)
    return s, sq, finite, int(np.count_nonzero(~finite))


def ensemble_average(
    model: SystemModel,
    spec: BathSpectrum,
    n_traj: int,
    master_seed: int,
    dt: float,
    n: int,
    form: str = "density",
    threads: int = 1,
    factors: CrossFactors | None = None,
) -> EnsembleStats:
    """Average independent trajectories into the reduced density matrix.

    Each trajectory index owns a seed spawned from ``master_seed``, and
    trajectories are processed in fixed-size blocks combined in block
    order, so the result is bitwise independent of ``threads``.
    Divergent (non-finite) trajectories are excluded and counted; more
    than 1 percent of them marks the run unhealthy.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    if form not in ("density", "pair"):
        raise ValueError(f"unknown form {form!r}")
    if form == "pair" and not model.is_pure():
        raise ValueError("paired-wavevector form requires a pure initial state")
    _check_step(model, dt)
    if factors is None:
        factors = cross_factors(spec, dt, n)
    seeds = np.random.SeedSequence(master_seed).spawn(n_traj)
    blocks = [seeds[i : i + BLOCK_SIZE] for i in range(0, n_traj, BLOCK_SIZE)]

    def work(block):
        return _block_sums(model, spec, factors, block, dt, n, form)

    if threads > 1 and len(blocks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, blocks))
    else:
        results = [work(b) for b in blocks]

    dim = model.dim
    total = np.zeros((n + 1, dim, dim), dtype=complex)
    total_sq = np.zeros((n + 1, dim, dim))
    n_div = 0
    for s, sq, _, bad in results:
        total = total + s
        total_sq = total_sq + sq
        n_div += bad
    m_good = n_traj - n_div
    if m_good == 0:
        raise FloatingPointError("all trajectories divergent")
    mean = total / m_good
    if m_good > 1:
        var = total_sq / m_good - (mean.real**2 + mean.imag**2)
        stderr = np.sqrt(np.clip(var, 0.0, None) / (m_good - 1))
    else:
        stderr = np.full((n + 1, dim, dim), np.inf)
    times = np.arange(n + 1) * dt
    series = DensityMatrixSeries(
        times=times,
        rhos=mean,
        meta={"n_traj": n_traj, "n_divergent": n_div, "master_seed": master_seed, "form": form},
    )
    return EnsembleStats(
        mean=series,
        stderr=stderr,
        trace_dev=series.trace_deviation(),
        hermiticity_dev=series.hermiticity_deviation(),
        n_total=n_traj,
        n_divergent=n_div,
        master_seed=master_seed,
    )
