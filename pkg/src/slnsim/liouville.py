"""Dense superoperator algebra on the flattened Liouville space.

Conventions fixed here and relied on by every solver in the package:

* matrices are flattened column-major (``order="F"``), so an ``N x N``
  matrix becomes a vector of length ``N**2``;
* a superoperator is a plain ``N**2 x N**2`` complex ndarray acting on
  flattened matrices;
* ``hbar = 1`` and ``k_B = 1`` throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SystemModel",
    "flatten",
    "unflatten",
    "apply_superop",
    "rotation",
    "rotate_coupling",
    "commutator_superop",
    "anticommutator_superop",
    "family_superop",
]

HERM_TOL = 1e-10


def flatten(a: np.ndarray) -> np.ndarray:
    """Column-major flattening of a square matrix into a vector."""
    return np.asarray(a).flatten(order="F")


def unflatten(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`flatten`."""
    v = np.asarray(v)
    n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise ValueError(f"vector of length {v.size} is not a flattened square matrix")
    return v.reshape((n, n), order="F")


def apply_superop(s: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Apply a superoperator to a matrix, returning a matrix."""
    return unflatten(s @ flatten(a))


def _check_hermitian(m: np.ndarray, name: str) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > HERM_TOL * max(1.0, np.max(np.abs(m))):
        raise ValueError(f"{name} is not Hermitian")


@dataclass
class SystemModel:
    """System Hamiltonian, Hermitian coupling operator and initial state.

    Parameters
    ----------
    h_sys : ndarray
        Hermitian ``N x N`` system Hamiltonian (energy units, hbar = 1).
    coupling : ndarray
        Hermitian ``N x N`` operator through which the environment couples.
    rho0 : ndarray
        Initial density matrix: Hermitian, unit trace, positive semidefinite.
    """

    h_sys: np.ndarray
    coupling: np.ndarray
    rho0: np.ndarray
    _energies: np.ndarray = field(init=False, repr=False)
    _basis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.h_sys = np.asarray(self.h_sys, dtype=complex)
        self.coupling = np.asarray(self.coupling, dtype=complex)
        self.rho0 = np.asarray(self.rho0, dtype=complex)
        _check_hermitian(self.h_sys, "h_sys")
        _check_hermitian(self.coupling, "coupling")
        _check_hermitian(self.rho0, "rho0")
        n = self.h_sys.shape[0]
        if self.coupling.shape != (n, n) or self.rho0.shape != (n, n):
            raise ValueError("h_sys, coupling and rho0 must share one dimension")
        if abs(np.trace(self.rho0) - 1.0) > 1e-9:
            raise ValueError("rho0 must have unit trace")
        if np.linalg.eigvalsh(self.rho0).min() < -1e-9:
            raise ValueError("rho0 must be positive semidefinite")
        self._energies, self._basis = np.linalg.eigh(self.h_sys)
        for m in (self.h_sys, self.coupling, self.rho0):
            m.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.h_sys.shape[0]

    def is_pure(self, tol: float = 1e-10) -> bool:
        ev = np.linalg.eigvalsh(self.rho0)
        return bool(ev[-1] > 1.0 - tol)

    def pure_state(self) -> np.ndarray:
        """Return the state vector when rho0 is (numerically) pure."""
        ev, vec = np.linalg.eigh(self.rho0)
        if ev[-1] < 1.0 - 1e-10:
            raise ValueError("rho0 is not a pure state")
        return vec[:, -1]


def rotation(model: SystemModel, t: float | np.ndarray) -> np.ndarray:
    """Exact ``U(t) = exp(+i H_sys t)`` via the eigendecomposition of H_sys.

    A scalar ``t`` returns an ``N x N`` matrix, an array of times returns a
    stacked ``(len(t), N, N)`` array.
    """
    w, v = model._energies, model._basis
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    phases = np.exp(1j * np.outer(t_arr, w))
    u = (v[None, :, :] * phases[:, None, :]) @ v.conj().T
    return u[0] if np.isscalar(t) or np.ndim(t) == 0 else u


def rotate_coupling(model: SystemModel, t: float) -> np.ndarray:
    """Interaction-picture coupling ``X(t) = e^{iHt} X e^{-iHt}``."""
    u = rotation(model, t)
    return u @ model.coupling @ u.conj().T


def coupling_grid(model: SystemModel, dt: float, n: int) -> np.ndarray:
    """Interaction-picture coupling ``X(t_k)`` stacked over a uniform grid."""
    u = rotation(model, np.arange(n + 1) * dt)
    return u @ model.coupling @ np.conj(np.swapaxes(u, 1, 2))


def commutator_superop(x: np.ndarray) -> np.ndarray:
    """Superoperator for ``A -> i [x, A]`` on column-flattened matrices."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[0]
    eye = np.eye(n)
    return 1j * (np.kron(eye, x) - np.kron(x.T, eye))


def anticommutator_superop(x: np.ndarray) -> np.ndarray:
    """Superoperator for ``A -> -1/2 {x, A}`` on column-flattened matrices."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[0]
    eye = np.eye(n)
    return -0.5 * (np.kron(eye, x) + np.kron(x.T, eye))


def family_superop(j: int, kind: str, x: np.ndarray) -> np.ndarray:
    """Noise-family superoperators entering the hierarchical master equation.

    ``(0, "0")`` and ``(0, "*")`` both map to the commutator lift, ``(1, "0")``
    to twice the commutator lift, and ``(1, "*")`` to the anticommutator lift.
    """
    if j not in (0, 1):
        raise ValueError(f"family index must be 0 or 1, got {j}")
    if kind not in ("0", "*"):
        raise ValueError(f"kind must be '0' or '*', got {kind!r}")
    if j == 0:
        return commutator_superop(x)
    if kind == "0":
        return 2.0 * commutator_superop(x)
    return anticommutator_superop(x)
