## Narrow the memory kernel toward a delta function and watch the truncated
## master equation approach the Markovian generator: the triple-integral
## terms die out and the coherence decay rate tends to 4 * gamma for
## diagonal coupling.

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slnsim import (
    HierarchyConfig,
    SystemModel,
    exponential_kernel,
    solve_hierarchy,
    solve_lindblad,
)

sz = np.array([[1, 0], [0, -1]], dtype=complex)
model = SystemModel(h_sys=0.5 * sz, coupling=sz,
                    rho0=0.5 * np.array([[1, 1], [1, 1]], dtype=complex))
gamma, t_max = 1.0, 3.0

fig, axes = plt.subplots(1, 2, figsize=(10, 4))
widths = (0.4, 0.2, 0.1, 0.05)
dists, rates = [], []
for tau_c in widths:
    dt = min(0.01, tau_c / 8)
    n = int(round(t_max / dt))
    kernel = exponential_kernel(gamma, tau_c, dt, n)
    h2, _ = solve_hierarchy(model, kernel, HierarchyConfig(n=n, truncation="class1+class2"))
    lb = solve_lindblad(model, gamma, dt, n)
    dists.append(h2.max_distance(lb))
    t = h2.times
    coh = np.abs(h2.coherence(0, 1))
    mask = t > 1.0
    rates.append(-np.polyfit(t[mask], np.log(coh[mask]), 1)[0])
    print(f"kernel width {tau_c:4.2f}: distance to Lindblad {dists[-1]:.4f}, "
          f"decay rate {rates[-1]:.3f} (Markovian value {4 * gamma})")
    axes[0].semilogy(t, coh, label=rf"$\tau_c = {tau_c}$")

axes[0].semilogy(lb.times, np.abs(lb.coherence(0, 1)), "k--", label="Lindblad")
axes[0].set_xlabel("t")
axes[0].set_ylabel(r"$|\rho_{01}|$")
axes[0].legend(fontsize=8)
axes[1].loglog(widths, dists, "o-", label="max distance to Lindblad")
axes[1].loglog(widths, np.abs(np.array(rates) - 4.0) / 4.0, "s-", label="relative rate error")
axes[1].set_xlabel(r"kernel width $\tau_c$")
axes[1].legend(fontsize=8)
fig.tight_layout()
fig.savefig("demo05_markov_limit.png", dpi=120)
print("wrote demo05_markov_limit.png")
