import numpy as np
import pytest

from thermomap.hardware import load_hardware


def rk4_cell_temperature(i_pcm, r_pcm, duty, t_surrounding, pcm, t_end=None, steps=4000):
    """Independent oracle: integrate the single-cell heat balance ODE

        dT/dt = (W_j - W_d) / (C * V),
        W_j = duty * I^2 * R,  W_d = k*V/l^2 * (T - T_surrounding)

    from T(0) = t_surrounding with classic RK4.
    """
    if t_end is None:
        t_end = pcm.pulse_seconds
    w_j = duty * i_pcm ** 2 * r_pcm
    cv = pcm.heat_capacity_c * pcm.volume_v
    g = pcm.k * pcm.volume_v / pcm.thickness_l ** 2

    def dTdt(t_cell):
        return (w_j - g * (t_cell - t_surrounding)) / cv

    h = t_end / steps
    t_cell = t_surrounding
    for _ in range(steps):
        k1 = dTdt(t_cell)
        k2 = dTdt(t_cell + 0.5 * h * k1)
        k3 = dTdt(t_cell + 0.5 * h * k2)
        k4 = dTdt(t_cell + h * k3)
        t_cell += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return t_cell


@pytest.fixture
def desk_hw():
    """Small stress-parameter model used across solver and mapper tests."""
    return load_hardware({
        "n_tiles": 4,
        "crossbar_dim": 32,
        "clusters_per_tile": 3,
        "parasitics": {"r_wordline_seg": 150.0, "r_bitline_seg": 150.0,
                       "i_required": 2e-5},
    })


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
