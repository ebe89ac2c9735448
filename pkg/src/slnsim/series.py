"""Time-indexed density-matrix series and the shared CSV format.

CSV column order is fixed: ``t`` followed by row-major interleaved
``re_i_j, im_i_j`` entries of the density matrix. All solvers emit this
format so series files stay directly comparable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["DensityMatrixSeries"]


@dataclass
class DensityMatrixSeries:
    """A sequence of ``N x N`` complex matrices on a uniform time grid."""

    times: np.ndarray
    rhos: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.rhos = np.asarray(self.rhos, dtype=complex)
        if self.rhos.ndim != 3 or self.rhos.shape[0] != self.times.size:
            raise ValueError("rhos must have shape (len(times), N, N)")
        if self.rhos.shape[1] != self.rhos.shape[2]:
            raise ValueError("density matrices must be square")

    @property
    def dim(self) -> int:
        return self.rhos.shape[1]

    def __len__(self) -> int:
        return self.times.size

    def population(self, i: int) -> np.ndarray:
        return self.rhos[:, i, i].real

    def coherence(self, i: int, j: int) -> np.ndarray:
        return self.rhos[:, i, j]

    def trace_deviation(self) -> np.ndarray:
        return np.abs(np.einsum("kii->k", self.rhos) - 1.0)

    def hermiticity_deviation(self) -> np.ndarray:
        gap = self.rhos - np.conj(np.swapaxes(self.rhos, 1, 2))
        return np.linalg.norm(gap, ord=2, axis=(1, 2))

    def assert_same_grid(self, other: "DensityMatrixSeries", tol: float = 1e-12) -> None:
        if self.rhos.shape != other.rhos.shape:
            raise ValueError(
                f"series shapes differ: {self.rhos.shape} vs {other.rhos.shape}"
            )
        if np.max(np.abs(self.times - other.times)) > tol:
            raise ValueError("series time grids differ")

    def max_distance(self, other: "DensityMatrixSeries") -> float:
        """Maximum entrywise absolute distance to another series."""
        self.assert_same_grid(other)
        return float(np.max(np.abs(self.rhos - other.rhos)))

    def l2_distance(self, other: "DensityMatrixSeries") -> float:
        """Root-mean-square entrywise distance to another series."""
        self.assert_same_grid(other)
        return float(np.sqrt(np.mean(np.abs(self.rhos - other.rhos) ** 2)))

    def to_csv(self, path) -> None:
        n = self.dim
        cols = ["t"]
        for i in range(n):
            for j in range(n):
                cols.append(f"re_{i}_{j}")
                cols.append(f"im_{i}_{j}")
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for k, t in enumerate(self.times):
                row = [f"{t:.17e}"]
                for i in range(n):
                    for j in range(n):
                        row.append(f"{self.rhos[k, i, j].real:.17e}")
                        row.append(f"{self.rhos[k, i, j].imag:.17e}")
                fh.write(",".join(row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "DensityMatrixSeries":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        n = int(round(np.sqrt((data.shape[1] - 1) / 2)))
        if 1 + 2 * n * n != data.shape[1]:
            raise ValueError(f"{path}: column count does not match a square matrix")
        times = data[:, 0]
        re = data[:, 1::2].reshape(-1, n, n)
        im = data[:, 2::2].reshape(-1, n, n)
        return cls(times=times, rhos=re + 1j * im)
