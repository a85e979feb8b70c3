"""Signal processing: channel estimation, range-Doppler maps, metrics.

Standard OFDM radar processing: divide out the known modulation symbols
per subcarrier (channel estimation), IDFT across subcarriers for range,
windowed DFT across symbols for Doppler.  Defaults follow the usual
practice for micro-Doppler work: Hann on slow time, rectangular on fast
time, map magnitudes in dB normalized to the peak with a -120 dB floor.

Scalar signature metrics quantify what classification cares about: the
spacing of the periodic spike comb (blade count times rotation rate),
the total Doppler spread (twice the blade-tip Doppler), and the
zero-Doppler energy fraction (body line vs. vibration smear).  Peak
detection uses a -30 dB threshold relative to the spectrum maximum and
a minimum separation of 2 bins so the metrics are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.signal import find_peaks

from .geometry import DerivedAngles, SPEED_OF_LIGHT, TWO_PI
from .propeller import IqFrame
from .waveform import SymbolMatrix

PEAK_THRESHOLD_DB = -30.0
PEAK_MIN_SEPARATION_BINS = 2
DB_FLOOR = -120.0


class ProcessingError(ValueError):
    """Raised for inputs the processing chain cannot handle."""


class MetricsUnavailableError(ProcessingError):
    """Raised when a series is too short or featureless for metric extraction."""


@dataclass(frozen=True)
class RangeDopplerMap:
    """Magnitude map in dB over (bistatic range bin, Doppler bin)."""

    values_db: np.ndarray
    range_axis_m: np.ndarray
    doppler_axis_hz: np.ndarray
    window: str
    subsample: int
    db_floor: float = DB_FLOOR

    def __post_init__(self):
        if self.values_db.shape != (self.range_axis_m.size, self.doppler_axis_hz.size):
            raise ProcessingError(
                f"map shape {self.values_db.shape} inconsistent with axes "
                f"({self.range_axis_m.size}, {self.doppler_axis_hz.size})"
            )


@dataclass(frozen=True)
class SignatureMetrics:
    """Scalar signature descriptors; spacing is None when < 2 peaks found."""

    spike_spacing_hz: Optional[float]
    doppler_spread_hz: float
    dc_fraction: float
    peak_range_bin: Optional[int] = None


def _window(name: str, length: int) -> np.ndarray:
    name = name.lower()
    if name in ("rect", "rectangular", "boxcar", "none"):
        return np.ones(length)
    if name == "hann":
        return np.hanning(length)
    if name == "hamming":
        return np.hamming(length)
    if name == "blackman":
        return np.blackman(length)
    raise ProcessingError(f"unknown window: {name!r}")


def channel_estimate(frame: IqFrame, symbols: SymbolMatrix) -> np.ndarray:
    """Per-subcarrier channel response H(n, m).

    DFT over fast time recovers the received subcarrier amplitudes
    (normalized by N so a unit channel stays unit), then the known
    D(n, m) is divided out.  Requires |D| bounded away from zero.
    """
    if symbols.shape != frame.shape:
        raise ProcessingError(f"symbol shape {symbols.shape} != frame shape {frame.shape}")
    if np.any(np.abs(symbols.values) < 1e-12):
        raise ProcessingError("symbol matrix has (near-)zero entries; cannot divide")
    n_sub = frame.shape[0]
    spectrum = np.fft.fft(frame.values, axis=0) / n_sub
    return spectrum / symbols.values


def range_profiles(frame: IqFrame, symbols: SymbolMatrix) -> np.ndarray:
    """Complex range profile per symbol: IDFT of the channel estimate over n.

    Row r peaks where the bistatic range is r * c*T/N (modulo the
    unambiguous span c*T)."""
    est = channel_estimate(frame, symbols)
    return np.fft.ifft(est, axis=0)


def range_doppler(frame: IqFrame, symbols: SymbolMatrix, window: str = "hann",
                  subsample: int = 1, db_floor: float = DB_FLOOR) -> RangeDopplerMap:
    """Range-Doppler magnitude map of a frame.

    ``subsample`` decimates slow time before the Doppler DFT (trades
    unambiguous Doppler for compute, matching common practice for long
    captures).  Magnitudes are normalized to the map peak in dB and
    floored at ``db_floor``.
    """
    if subsample < 1:
        raise ProcessingError(f"subsample must be >= 1, got {subsample}")
    profiles = range_profiles(frame, symbols)[:, ::subsample]
    n_slow = profiles.shape[1]
    if n_slow < 2:
        raise ProcessingError("need at least 2 slow-time samples after decimation")
    win = _window(window, n_slow)
    spectrum = np.fft.fftshift(np.fft.fft(profiles * win[None, :], axis=1), axes=1)
    magnitude = np.abs(spectrum)
    peak = magnitude.max()
    if peak == 0.0:
        raise ProcessingError("all-zero frame; range-Doppler map undefined")
    values_db = 20.0 * np.log10(np.maximum(magnitude / peak, 10.0 ** (db_floor / 20.0)))
    ofdm = frame.ofdm
    bin_width = SPEED_OF_LIGHT * ofdm.symbol_duration / ofdm.n_subcarriers
    range_axis = np.arange(ofdm.n_subcarriers) * bin_width
    doppler_axis = np.fft.fftshift(
        np.fft.fftfreq(n_slow, d=ofdm.symbol_duration * subsample)
    )
    return RangeDopplerMap(
        values_db=values_db,
        range_axis_m=range_axis,
        doppler_axis_hz=doppler_axis,
        window=window,
        subsample=subsample,
        db_floor=db_floor,
    )


def dc_energy_fraction(series: np.ndarray) -> float:
    """Fraction of the series' energy in the zero-Doppler bin.

    Computed on the raw (unwindowed) series so a constant series scores
    exactly 1; windowing would leak a pure line into its mainlobe."""
    series = np.asarray(series)
    total = float(np.sum(np.abs(series) ** 2))
    if total == 0.0:
        raise MetricsUnavailableError("all-zero series has no DC fraction")
    return float(np.abs(np.sum(series)) ** 2 / (series.size * total))


def _spectrum_peaks(freqs: np.ndarray, magnitude: np.ndarray):
    height = magnitude.max() * 10.0 ** (PEAK_THRESHOLD_DB / 20.0)
    idx, _ = find_peaks(magnitude, height=height, distance=PEAK_MIN_SEPARATION_BINS)
    return freqs[idx], idx


def _metrics_from_spectrum(freqs: np.ndarray, magnitude: np.ndarray,
                           dc_fraction: float) -> SignatureMetrics:
    peak_freqs, idx = _spectrum_peaks(freqs, magnitude)
    if idx.size == 0:
        raise MetricsUnavailableError("no spectral peaks above threshold")
    spacing = float(np.median(np.diff(peak_freqs))) if idx.size >= 2 else None
    spread = float(peak_freqs.max() - peak_freqs.min())
    return SignatureMetrics(
        spike_spacing_hz=spacing,
        doppler_spread_hz=spread,
        dc_fraction=dc_fraction,
    )


def doppler_spectrum(series: np.ndarray, sample_interval: float, window: str = "hann"
                     ) -> Tuple[np.ndarray, np.ndarray, SignatureMetrics]:
    """Doppler magnitude spectrum of a slow-time series plus metrics.

    The caller is responsible for providing at least two rotation
    periods of data; with less, the spike comb is unresolved and the
    metrics are meaningless.  Series shorter than 4 samples are
    rejected outright.
    """
    series = np.asarray(series)
    if series.ndim != 1 or series.size < 4:
        raise MetricsUnavailableError(
            f"series of shape {series.shape} too short for spectral metrics"
        )
    if not sample_interval > 0:
        raise ProcessingError("sample_interval must be > 0")
    win = _window(window, series.size)
    spectrum = np.fft.fftshift(np.fft.fft(series * win))
    freqs = np.fft.fftshift(np.fft.fftfreq(series.size, d=sample_interval))
    magnitude = np.abs(spectrum)
    if magnitude.max() == 0.0:
        raise MetricsUnavailableError("all-zero series has no spectrum")
    metrics = _metrics_from_spectrum(freqs, magnitude, dc_energy_fraction(series))
    return freqs, magnitude, metrics


def doppler_profile_metrics(freqs: np.ndarray, magnitude: np.ndarray,
                            dc_fraction: float = float("nan")) -> SignatureMetrics:
    """Metrics of an externally computed Doppler magnitude profile
    (e.g. a range-gated slice of a map), same peak rules as above."""
    return _metrics_from_spectrum(np.asarray(freqs), np.asarray(magnitude), dc_fraction)


def extract_metrics(frame: IqFrame, symbols: SymbolMatrix, window: str = "hann",
                    subsample: int = 1) -> SignatureMetrics:
    """Frame-level metrics at the strongest range bin.

    Channel-estimate the frame, locate the range bin with the most
    energy, and run the Doppler metrics on that bin's slow-time series.
    """
    profiles = range_profiles(frame, symbols)[:, ::subsample]
    energy = np.sum(np.abs(profiles) ** 2, axis=1)
    if not np.any(energy > 0):
        raise MetricsUnavailableError("all-zero frame")
    peak_bin = int(np.argmax(energy))
    _, _, metrics = doppler_spectrum(
        profiles[peak_bin], frame.ofdm.symbol_duration * subsample, window=window
    )
    return SignatureMetrics(
        spike_spacing_hz=metrics.spike_spacing_hz,
        doppler_spread_hz=metrics.doppler_spread_hz,
        dc_fraction=metrics.dc_fraction,
        peak_range_bin=peak_bin,
    )


def pearson_correlation(sig_a: np.ndarray, sig_b: np.ndarray) -> float:
    """Pearson correlation of two equal-length real signatures."""
    a = np.asarray(sig_a, dtype=float)
    b = np.asarray(sig_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ProcessingError("signatures must be equal-length 1-D arrays of size >= 2")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.sum(da**2) * np.sum(db**2))
    if denom == 0.0:
        raise ProcessingError("zero-variance signature; correlation undefined")
    return float(np.sum(da * db) / denom)


def sliding_spectrogram(series: np.ndarray, sample_interval: float, segment: int,
                        hop: int, window: str = "hann"):
    """Short-time Doppler analysis: magnitude spectra of sliding segments.

    Thin wrapper over the same windowed DFT as :func:`doppler_spectrum`;
    returns (segment start times, Doppler axis, magnitude matrix with one
    column per segment).
    """
    series = np.asarray(series)
    if segment < 4 or segment > series.size:
        raise ProcessingError(f"segment length {segment} invalid for series of {series.size}")
    if hop < 1:
        raise ProcessingError("hop must be >= 1")
    win = _window(window, segment)
    freqs = np.fft.fftshift(np.fft.fftfreq(segment, d=sample_interval))
    starts = np.arange(0, series.size - segment + 1, hop)
    mags = np.empty((freqs.size, starts.size))
    for col, start in enumerate(starts):
        chunk = series[start : start + segment] * win
        mags[:, col] = np.abs(np.fft.fftshift(np.fft.fft(chunk)))
    return starts * sample_interval, freqs, mags


def expected_spike_spacing(n_blades: int, omega: float) -> float:
    """Spike spacing of the rotor comb: n_blades * omega / (2*pi), in Hz."""
    return n_blades * omega / TWO_PI


def doppler_spread_law(omega: float, blade_length: float, beta: float,
                       axis_bisector_angle: float, wavelength: float) -> float:
    """Doppler spread 4*omega*L*cos(beta/2)*sin(psi)/lambda.

    ``axis_bisector_angle`` (psi) is the angle between the rotation axis
    and the bistatic bisector; sin(psi) = 1 when the bisector lies in
    the rotation plane.  Equals :func:`model_doppler_spread` because the
    modulation gain satisfies a_b = 2*cos(beta/2)*sin(psi).
    """
    return 4.0 * omega * blade_length * np.cos(beta / 2.0) * np.sin(axis_bisector_angle) / wavelength


def model_doppler_spread(ang: DerivedAngles, blade_length: float, wavelength: float) -> float:
    """Exact model Doppler spread: twice the tip Doppler, 2*a_b*L*omega/lambda."""
    return 2.0 * ang.a_b * blade_length * ang.omega / wavelength
