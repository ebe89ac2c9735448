## Solve the truncated master equation with both term classes and use the
## relative class weights to judge whether the truncation is trustworthy.
## The single-integral class scales with g^2 and the triple-integral class
## with g^4, so their ratio grows with the coupling until the expansion
## stops converging.

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slnsim import (
    BathSpectrum,
    HierarchyConfig,
    SystemModel,
    build_kernels,
    solve_hierarchy,
    tractability_report,
)

sz = np.array([[1, 0], [0, -1]], dtype=complex)
sx = np.array([[0, 1], [1, 0]], dtype=complex)
model = SystemModel(h_sys=0.5 * sz, coupling=sx,
                    rho0=np.array([[1, 0], [0, 0]], dtype=complex))
dt, n = 0.02, 200

scales = np.array([0.4, 0.6, 0.8, 1.2, 1.8, 2.7])
ratios = []
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for scale in scales:
    spec = BathSpectrum(
        omegas=np.array([0.8, 1.0, 1.3]),
        g_hats=scale * np.array([0.12, 0.10, 0.08]),
        beta=np.inf,
    )
    kernel = build_kernels(spec, dt, n)
    series, weights = solve_hierarchy(
        model, kernel, HierarchyConfig(n=n, truncation="class1+class2")
    )
    rep = tractability_report(weights)
    ratios.append(rep.max_ratio)
    print(f"coupling scale {scale:.1f}: max W2/W1 = {rep.max_ratio:.3f} -> {rep.verdict} "
          f"(error estimate {rep.truncation_error_estimate:.2e})")
    if scale in (0.4, 1.8):
        axes[0].plot(weights.times, weights.w1, label=f"W1, scale {scale}")
        axes[0].plot(weights.times, weights.w2, "--", label=f"W2, scale {scale}")

axes[0].set_yscale("log")
axes[0].set_xlabel("t")
axes[0].set_title("class weights along a run")
axes[0].legend(fontsize=8)
axes[1].loglog(scales, ratios, "o-")
axes[1].loglog(scales, ratios[0] * (scales / scales[0]) ** 2, "k--", label=r"$\propto g^2$")
axes[1].axhline(0.1, color="g", lw=0.8, label="valid below")
axes[1].axhline(0.5, color="r", lw=0.8, label="invalid above")
axes[1].set_xlabel("coupling scale")
axes[1].set_ylabel("max W2 / W1")
axes[1].legend(fontsize=8)
fig.tight_layout()
fig.savefig("demo04_term_weights.png", dpi=120)
print("wrote demo04_term_weights.png")
