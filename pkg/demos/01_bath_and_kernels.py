## Discretize an ohmic spectral density into modes and inspect the
## correlation function and the memory kernels every solver consumes.

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slnsim import build_kernels, correlation_function, discretize_spectral_density

## An ohmic bath J(w) = eta * w * exp(-w / w_c) at inverse temperature beta,
## discretized on a midpoint frequency grid.
spec = discretize_spectral_density(
    "ohmic", eta=0.1, s=1.0, omega_c=5.0, n_modes=200, omega_max=50.0, beta=1.0
)
print(f"{spec.n_modes} modes, sum g_hat^2 = {np.sum(spec.g_hats**2):.4f} "
      f"(analytic integral eta * omega_c^2 = {0.1 * 25.0:.4f})")

## The two-time correlation function alpha(tau): its real part drives the
## symmetric noise, its imaginary part the causal cross correlation.
taus = np.linspace(0.0, 6.0, 400)
alpha = correlation_function(spec, taus)

## Kernels on a uniform grid; the half-range kernel satisfies
## 2 Re k00_0s = alpha_R exactly, and the causal kernel vanishes at zero lag.
## The step resolves the fastest mode (dt * omega_max < 0.5).
kernel = build_kernels(spec, dt=0.008, n=750)
print("max |2 Re k00_0s - alpha_R| =",
      np.max(np.abs(2 * kernel.k00_0s.real - kernel.alpha_r)))
print("k11_0s[0] =", kernel.k11_0s[0], " k11_s0 all zero:", bool(np.all(kernel.k11_s0 == 0)))

fig, axes = plt.subplots(1, 2, figsize=(10, 4))
axes[0].plot(taus, alpha.real, label=r"$\alpha_R$")
axes[0].plot(taus, alpha.imag, label=r"$\alpha_I$")
axes[0].set_xlabel(r"$\tau$")
axes[0].set_title("bath correlation function")
axes[0].legend()
axes[1].plot(kernel.times, kernel.k00_0s.real, label=r"Re $k^{0*}_{00}$")
axes[1].plot(kernel.times, kernel.k00_0s.imag, label=r"Im $k^{0*}_{00}$")
axes[1].plot(kernel.times, kernel.k11_0s.real, label=r"$k^{0*}_{11}$")
axes[1].set_xlabel(r"$\tau$")
axes[1].set_title("hierarchy kernels")
axes[1].legend()
fig.tight_layout()
fig.savefig("demo01_bath_kernels.png", dpi=120)
print("wrote demo01_bath_kernels.png")
