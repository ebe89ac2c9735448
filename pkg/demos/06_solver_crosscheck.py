## Cross-validate every solver on a two-level system coupled to three modes:
## the brute-force system-plus-bath propagation is the ground truth, the
## stochastic ensemble agrees within its error bars, and the deterministic
## approximations rank by their order in the coupling.

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slnsim import (
    BathSpectrum,
    HierarchyConfig,
    OracleConfig,
    SystemModel,
    build_kernels,
    ensemble_average,
    exact_oracle,
    solve_convolved,
    solve_hierarchy,
    solve_tcl2,
)

sz = np.array([[1, 0], [0, -1]], dtype=complex)
sx = np.array([[0, 1], [1, 0]], dtype=complex)
model = SystemModel(h_sys=0.5 * sz, coupling=sx,
                    rho0=np.array([[1, 0], [0, 0]], dtype=complex))
spec = BathSpectrum(
    omegas=np.array([0.8, 1.0, 1.3]),
    g_hats=np.array([0.24, 0.20, 0.16]),
    beta=np.inf,
)
dt, n = 0.02, 200
kernel = build_kernels(spec, dt, n)

oracle = exact_oracle(model, spec, OracleConfig(fock_cutoff=8, dt=dt, n=n))
print("oracle cutoff converged:", oracle.meta["cutoff_converged"])

solutions = {
    "convolved": solve_convolved(model, kernel),
    "tcl2": solve_tcl2(model, kernel),
    "hierarchy1": solve_hierarchy(model, kernel, HierarchyConfig(n=n, truncation="class1"))[0],
    "hierarchy2": solve_hierarchy(model, kernel, HierarchyConfig(n=n, truncation="class1+class2"))[0],
}
stats = ensemble_average(model, spec, n_traj=4000, master_seed=5, dt=dt, n=n)
solutions["sln (M=4000)"] = stats.mean

print(f"{'solver':>14}  max distance to oracle")
for name, series in solutions.items():
    print(f"{name:>14}  {series.max_distance(oracle):.5f}")
print(f"(stochastic row carries a 3 SE band of about "
      f"{3 * np.max(stats.stderr):.3f}; the deterministic gaps are the"
      f" genuine truncation errors at this fairly strong coupling)")

fig, axes = plt.subplots(1, 2, figsize=(10, 4))
t = oracle.times
axes[0].plot(t, oracle.population(0), "k", lw=2, label="oracle")
axes[1].plot(t, np.abs(oracle.coherence(0, 1)), "k", lw=2, label="oracle")
for name, series in solutions.items():
    axes[0].plot(t, series.population(0), lw=1, label=name)
    axes[1].plot(t, np.abs(series.coherence(0, 1)), lw=1, label=name)
axes[0].set_title("excited population")
axes[1].set_title("coherence magnitude")
for ax in axes:
    ax.set_xlabel("t")
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("demo06_solver_crosscheck.png", dpi=120)
print("wrote demo06_solver_crosscheck.png")
