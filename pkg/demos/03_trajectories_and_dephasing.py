## Integrate stochastic projector trajectories for a pure-dephasing qubit
## and compare the ensemble mean with the closed-form coherence decay.
## Individual trajectories are non-Hermitian and drift in trace; only the
## average is physical.

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slnsim import (
    SystemModel,
    cross_factors,
    dephasing_decay,
    discretize_spectral_density,
    ensemble_average,
    integrate_density,
    make_path,
)

sz = np.array([[1, 0], [0, -1]], dtype=complex)
model = SystemModel(
    h_sys=0.5 * sz,
    coupling=sz,
    rho0=0.5 * np.array([[1, 1], [1, 1]], dtype=complex),
)
spec = discretize_spectral_density(
    "ohmic", eta=0.04, s=1.0, omega_c=2.0, n_modes=60, omega_max=12.0, beta=2.0
)
dt, n = 0.02, 200

## A few single trajectories.
factors = cross_factors(spec, dt, n)
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for seed in range(5):
    traj = integrate_density(model, make_path(spec, seed, dt, n, factors), dt, n)
    axes[0].plot(traj.times, np.abs(traj.projectors[:, 0, 1]), lw=0.8, alpha=0.7)
    print(f"trajectory {seed}: final |tr P - 1| = "
          f"{abs(np.trace(traj.projectors[-1]) - 1):.3f} (not conserved path-wise)")

## The ensemble mean against the analytic decay.
stats = ensemble_average(model, spec, n_traj=5000, master_seed=12, dt=dt, n=n)
times = stats.mean.times
target = 0.5 * dephasing_decay(spec, times)
emp = np.abs(stats.mean.coherence(0, 1))
se = stats.stderr[:, 0, 1]
print(f"ensemble of {stats.n_total}: max |coherence - analytic| = "
      f"{np.max(np.abs(emp - target)):.2e}, median SE = {np.median(se[1:]):.2e}")
print(f"trace deviation of the mean: {stats.trace_dev.max():.2e}")

axes[0].plot(times, target, "k", lw=2, label="analytic")
axes[0].set_title("single trajectories vs analytic")
axes[0].set_xlabel("t")
axes[0].set_ylabel(r"$|P_{01}|$")
axes[0].legend()
axes[1].errorbar(times[::10], emp[::10], yerr=3 * se[::10], fmt=".", label="ensemble (3 SE)")
axes[1].plot(times, target, "k", lw=1, label="analytic")
axes[1].set_title("ensemble mean")
axes[1].set_xlabel("t")
axes[1].legend()
fig.tight_layout()
fig.savefig("demo03_dephasing.png", dpi=120)
print("wrote demo03_dephasing.png")
