"""OFDM waveform parameters, modulation symbols and reference samples.

The sensing link transmits ``n_symbols`` OFDM symbols of duration ``T``
on ``n_subcarriers`` subcarriers spaced ``1/T`` above the carrier
``f0``.  One complex modulation symbol ``D(n, m)`` rides on subcarrier
``n`` during symbol ``m``; the receiver knows the whole matrix, which is
what makes channel estimation a plain element-wise division.

No cyclic prefix is modeled: the return models index fast time directly
as ``mu in [0, N)``, so sample ``(mu, m)`` occurs at
``t = (m + mu/N) * T``.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

TWO_PI = 2.0 * np.pi

_SYMBOL_MAGIC = b"UDARSYM1"
_SYMBOL_HEADER = struct.Struct("<8sII16s")


class WaveformError(ValueError):
    """Raised for invalid OFDM configuration or symbol data."""


@dataclass(frozen=True)
class OfdmConfig:
    """Static OFDM link parameters.

    ``modulation`` is one of ``"psk<k>"`` (uniform draws from the k-ary
    PSK alphabet), ``"qam<k>"`` (square QAM, unit average power) or
    ``"unit-random-phase"``.
    """

    n_subcarriers: int
    symbol_duration: float
    carrier_freq: float
    n_symbols: int
    modulation: str = "psk4"
    seed: int = 0

    def __post_init__(self):
        if self.n_subcarriers < 1:
            raise WaveformError(f"n_subcarriers must be >= 1, got {self.n_subcarriers}")
        if not self.symbol_duration > 0:
            raise WaveformError(f"symbol_duration must be > 0, got {self.symbol_duration}")
        if not self.carrier_freq > 0:
            raise WaveformError(f"carrier_freq must be > 0, got {self.carrier_freq}")
        if self.n_symbols < 1:
            raise WaveformError(f"n_symbols must be >= 1, got {self.n_symbols}")
        if self.bandwidth > self.carrier_freq:
            raise WaveformError(
                f"bandwidth {self.bandwidth:.3e} Hz exceeds carrier {self.carrier_freq:.3e} Hz; "
                "complex-baseband representation invalid"
            )
        _parse_modulation(self.modulation)

    @property
    def sampling_freq(self) -> float:
        """Fast-time sampling frequency N/T in Hz."""
        return self.n_subcarriers / self.symbol_duration

    @property
    def bandwidth(self) -> float:
        return self.n_subcarriers / self.symbol_duration


@dataclass(frozen=True)
class SymbolMatrix:
    """Complex modulation symbols D(n, m), shape (n_subcarriers, n_symbols)."""

    values: np.ndarray
    modulation: str = "external"
    seed: Optional[int] = None

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise WaveformError(f"symbol matrix must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise WaveformError("symbol matrix contains non-finite entries")
        values = values.astype(np.complex128, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape


def subcarrier_frequencies(cfg: OfdmConfig) -> np.ndarray:
    """Center frequency of each subcarrier: f0 + n/T, n = 0..N-1."""
    n = np.arange(cfg.n_subcarriers)
    return cfg.carrier_freq + n / cfg.symbol_duration


def subcarrier_angular_freqs(cfg: OfdmConfig) -> np.ndarray:
    """Angular subcarrier frequencies 2*pi*(f0 + n/T); spacing 2*pi/T keeps orthogonality."""
    return TWO_PI * subcarrier_frequencies(cfg)


def _parse_modulation(tag: str):
    """Return the constellation for a modulation tag, or None for random phase."""
    if tag == "unit-random-phase":
        return None
    match = re.fullmatch(r"psk(\d+)", tag)
    if match:
        k = int(match.group(1))
        if k < 2:
            raise WaveformError(f"PSK order must be >= 2, got {k}")
        return np.exp(2j * np.pi * np.arange(k) / k)
    match = re.fullmatch(r"qam(\d+)", tag)
    if match:
        k = int(match.group(1))
        side = int(round(np.sqrt(k)))
        if side * side != k or side % 2 != 0:
            raise WaveformError(f"QAM order must be an even perfect square, got {k}")
        levels = 2.0 * np.arange(side) - (side - 1)
        points = (levels[:, None] + 1j * levels[None, :]).ravel()
        return points / np.sqrt(np.mean(np.abs(points) ** 2))
    raise WaveformError(f"unsupported modulation tag: {tag!r}")


def generate_symbols(cfg: OfdmConfig) -> SymbolMatrix:
    """Draw the full D(n, m) matrix, deterministically from cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    shape = (cfg.n_subcarriers, cfg.n_symbols)
    constellation = _parse_modulation(cfg.modulation)
    if constellation is None:
        values = np.exp(1j * rng.uniform(0.0, TWO_PI, size=shape))
    else:
        values = constellation[rng.integers(len(constellation), size=shape)]
    return SymbolMatrix(values=values, modulation=cfg.modulation, seed=cfg.seed)


def tx_baseband_sample(symbols: SymbolMatrix, cfg: OfdmConfig, mu: int, m: int,
                       baseband: bool = False) -> complex:
    """Transmit sample (mu, m): sum over subcarriers of D(n,m)*exp(j*w_n*(m + mu/N)*T).

    With ``baseband=True`` the carrier is removed (w_n -> 2*pi*n/T), which
    collapses the sum to an inverse-DFT-style synthesis of column ``m``.
    """
    n_sub, n_sym = symbols.shape
    if not (0 <= mu < n_sub):
        raise IndexError(f"fast-time index mu={mu} out of range [0, {n_sub})")
    if not (0 <= m < n_sym):
        raise IndexError(f"symbol index m={m} out of range [0, {n_sym})")
    n = np.arange(n_sub)
    frac = m + mu / cfg.n_subcarriers
    if baseband:
        phase = TWO_PI * n * frac
    else:
        phase = subcarrier_angular_freqs(cfg) * frac * cfg.symbol_duration
    return complex(np.sum(symbols.values[:, m] * np.exp(1j * phase)))


def save_symbols(symbols: SymbolMatrix, path) -> None:
    """Write a symbol matrix: 32-byte header then little-endian complex64,
    column-major (subcarrier index fastest)."""
    n_sub, n_sym = symbols.shape
    header = _SYMBOL_HEADER.pack(_SYMBOL_MAGIC, n_sub, n_sym, b"\x00" * 16)
    data = symbols.values.astype("<c8").ravel(order="F").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data)


def load_symbols(path) -> SymbolMatrix:
    """Read a symbol matrix written by :func:`save_symbols` (or any tool
    following the same layout, e.g. replayed measurement coefficients)."""
    with open(path, "rb") as fh:
        raw = fh.read(_SYMBOL_HEADER.size)
        if len(raw) != _SYMBOL_HEADER.size:
            raise WaveformError(f"{path}: truncated symbol-matrix header")
        magic, n_sub, n_sym, _ = _SYMBOL_HEADER.unpack(raw)
        if magic != _SYMBOL_MAGIC:
            raise WaveformError(f"{path}: bad magic {magic!r}, expected {_SYMBOL_MAGIC!r}")
        data = np.frombuffer(fh.read(), dtype="<c8")
    if data.size != n_sub * n_sym:
        raise WaveformError(
            f"{path}: expected {n_sub * n_sym} samples, found {data.size}"
        )
    values = data.reshape((n_sub, n_sym), order="F")
    return SymbolMatrix(values=values, modulation="external", seed=None)
