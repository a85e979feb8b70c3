"""Shared helpers: random chamber-scale scenes that keep returns inside
the sampled delay window (bistatic range below c*T)."""

import numpy as np
import pytest

from udarsim.geometry import SPEED_OF_LIGHT, BistaticLink, PropellerGeometry, derive_angles
from udarsim.waveform import OfdmConfig


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_scene(rng, n_blades=None, blade_length=None, station_range=(0.4, 0.8),
                 omega_range=(100.0, 350.0)):
    """A propeller near the origin, both stations under a meter away."""
    link = BistaticLink(
        tx_pos=random_unit(rng) * rng.uniform(*station_range),
        rx_pos=random_unit(rng) * rng.uniform(*station_range),
    )
    if n_blades is None:
        n_blades = int(rng.integers(1, 5))
    if blade_length is None:
        blade_length = float(rng.uniform(0.05, 0.2))
    prop = PropellerGeometry(
        rotation_center=np.zeros(3),
        omega_vec=random_unit(rng) * rng.uniform(*omega_range),
        phi0=float(rng.uniform(0.0, 2 * np.pi)),
        n_blades=n_blades,
        blade_length=blade_length,
    )
    return link, prop


def hrr_ofdm_for(ang, prop, rng, n_subcarriers, n_symbols, max_carrier=1e10, seed=0):
    """OFDM grid whose bins slice the blade while keeping R_O in-window.

    The carrier is capped so the brute-force oracle's quadrature error
    stays well under 1e-6 at 1e4 points (phase step per cell ~ k*a_b*L/K).
    """
    span = max(ang.a_b * prop.blade_length, 1e-3)
    bin_width = float(rng.uniform(span / 30.0, span / 1.5))
    bin_width = max(bin_width, ang.r_o / (n_subcarriers - 1.5))
    symbol_duration = n_subcarriers * bin_width / SPEED_OF_LIGHT
    bandwidth = n_subcarriers / symbol_duration
    f_cap = min(max_carrier, 0.5e9 / prop.blade_length)
    carrier = float(rng.uniform(max(bandwidth, 1e9), max(f_cap, bandwidth * 1.5)))
    return OfdmConfig(
        n_subcarriers=n_subcarriers,
        symbol_duration=symbol_duration,
        carrier_freq=carrier,
        n_symbols=n_symbols,
        modulation="psk4",
        seed=seed,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
