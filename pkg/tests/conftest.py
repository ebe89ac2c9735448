import numpy as np
import pytest

SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)


@pytest.fixture
def paulis():
    return SZ, SX, SY


@pytest.fixture
def dephasing_model():
    """H = omega0/2 sigma_z with diagonal coupling; superposition start."""
    from slnsim import SystemModel

    rho0 = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
    return SystemModel(h_sys=0.5 * SZ, coupling=SZ, rho0=rho0)


@pytest.fixture
def transverse_model():
    """H = omega0/2 sigma_z with sigma_x coupling; excited-state start."""
    from slnsim import SystemModel

    rho0 = np.array([[1, 0], [0, 0]], dtype=complex)
    return SystemModel(h_sys=0.5 * SZ, coupling=SX, rho0=rho0)


@pytest.fixture
def three_mode_vacuum():
    from slnsim import BathSpectrum

    return BathSpectrum(
        omegas=np.array([0.8, 1.0, 1.3]),
        g_hats=np.array([0.12, 0.10, 0.08]),
        beta=np.inf,
    )


def unitary_series(model, dt, n):
    """Reference noise-free evolution of model.rho0."""
    from slnsim.liouville import rotation

    times = np.arange(n + 1) * dt
    u = rotation(model, times)
    return np.conj(np.swapaxes(u, 1, 2)) @ model.rho0 @ u
