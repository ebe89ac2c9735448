"""Fixed-step propagators shared by the deterministic solvers.

Two schemes are used package-wide:

* classical RK4 for ordinary (memoryless) right-hand sides,
* a trapezoid predictor-corrector for Volterra integro-differential
  equations, whose right-hand side at step ``k`` may consume the whole
  state history up to ``k``. Globally second order, matching the
  trapezoid quadrature used in every memory integral.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["trapezoid_weights", "rk4_propagate", "volterra_propagate"]


def trapezoid_weights(m: int, dt: float) -> np.ndarray:
    """Composite trapezoid weights for nodes ``0..m`` spaced by ``dt``.

    ``m = 0`` returns a single zero weight (empty integral).
    """
    if m == 0:
        return np.zeros(1)
    w = np.full(m + 1, dt)
    w[0] = 0.5 * dt
    w[m] = 0.5 * dt
    return w


def rk4_propagate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    dt: float,
    n: int,
) -> np.ndarray:
    """Propagate ``dy/dt = rhs(t, y)`` over ``n`` steps, returning all states."""
    y = np.array(y0, dtype=complex)
    out = np.empty((n + 1,) + y.shape, dtype=complex)
    out[0] = y
    for k in range(n):
        t = k * dt
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = y
    return out


def volterra_propagate(
    rhs: Callable[[int, np.ndarray], np.ndarray],
    y0: np.ndarray,
    dt: float,
    n: int,
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Trapezoid predictor-corrector for history-dependent equations.

    ``rhs(k, history)`` must return ``dy/dt`` at grid index ``k`` given the
    state history ``history[0..k]`` (shape ``(k + 1, dim)``). ``callback``,
    when given, receives ``(k, rhs_value)`` for every accepted step, which
    solvers use to record per-step diagnostics.
    """
    dim = np.asarray(y0).size
    hist = np.empty((n + 1, dim), dtype=complex)
    hist[0] = np.asarray(y0, dtype=complex).ravel()
    for k in range(n):
        f_k = rhs(k, hist[: k + 1])
        if callback is not None:
            callback(k, f_k)
        hist[k + 1] = hist[k] + dt * f_k
        f_next = rhs(k + 1, hist[: k + 2])
        hist[k + 1] = hist[k] + 0.5 * dt * (f_k + f_next)
        if not np.all(np.isfinite(hist[k + 1].view(float))):
            raise FloatingPointError(f"non-finite state at step {k + 1}")
    if callback is not None:
        callback(n, rhs(n, hist))
    return hist
