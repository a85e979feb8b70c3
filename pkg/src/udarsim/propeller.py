"""Return models for a single rotating propeller.

Four models of the same physics at different fidelities:

* :func:`propeller_returns` — the closed-form OFDM fast/slow-time frame.
  Each blade is a line of scatterers; within one delay bin the line
  integral has an exact sinc solution whose integration limits follow
  from intersecting the blade's range extent with the bin edges.
* :func:`point_scatterer_returns` — a single point target; the kernel
  both body models and the brute-force oracle are built on.
* :func:`brute_force_propeller_returns` — numerical quadrature of the
  blade integral; the independent reference the closed form is checked
  against.
* :func:`narrowband_returns` / :func:`single_tone_hrr_returns` — the
  single-tone (non-OFDM) slow-time and continuous (t, tau) variants.

Conventions that matter here:

* ``sinc`` is the unnormalized sin(x)/x with sinc(0) = 1 (it is the
  closed form of ``integral exp(j*a*x) dx``, not the DSP convention).
* Delay bin ``mu`` owns bistatic ranges ``(mu-1)*dR < R <= mu*dR`` with
  ``dR = c*T/N``: closed on the upper edge, so a point exactly on a
  shared edge is claimed by the lower-``mu`` bin exactly once.
* Frames are complex baseband: the carrier time factor
  ``exp(j*w0*(m + mu/N)*T)`` is removed, while the range phase keeps
  the full ``w_n`` (carrier included) — that is where micro-Doppler
  lives.  ``point_scatterer_returns`` can retain the carrier for
  passband use.
* Receiver noise is never added here; the drone-level composer adds it
  once for the whole scene.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .geometry import DerivedAngles, GeometryError, PropellerGeometry, SPEED_OF_LIGHT, TWO_PI, wrap_angle
from .waveform import OfdmConfig, SymbolMatrix, subcarrier_angular_freqs


class ModelError(ValueError):
    """Raised for inconsistent model inputs (dimension or parameter mismatch)."""


def sinc_unnormalized(x):
    """sin(x)/x with the removable singularity filled: sinc(0) = 1."""
    return np.sinc(np.asarray(x) / np.pi)


def sample_times(cfg: OfdmConfig, mu=None, m=None) -> np.ndarray:
    """Sampling instants t = (m + mu/N)*T on the (fast, slow) grid.

    Defaults to the full grid, shape (N, M)."""
    if mu is None:
        mu = np.arange(cfg.n_subcarriers)[:, None]
    if m is None:
        m = np.arange(cfg.n_symbols)[None, :]
    return cfg.symbol_duration * (np.asarray(m) + np.asarray(mu) / cfg.n_subcarriers)


@dataclass(frozen=True)
class BladeWindow:
    """Blade-length interval [l1, l2] whose returns land in one delay bin.

    Empty windows are encoded as l1 == l2.  Fields may be arrays when the
    query was vectorized.
    """

    l1: np.ndarray
    l2: np.ndarray

    @property
    def length(self):
        return self.l2 - self.l1


@dataclass(frozen=True)
class IqFrame:
    """Received baseband samples, shape (n_subcarriers, n_symbols) = (mu, m)."""

    values: np.ndarray
    ofdm: OfdmConfig
    noise_variance: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        expected = (self.ofdm.n_subcarriers, self.ofdm.n_symbols)
        if values.shape != expected:
            raise ModelError(f"frame shape {values.shape} != OFDM grid {expected}")
        if not np.all(np.isfinite(values)):
            raise ModelError("frame contains non-finite samples")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class PropellerReturnParams:
    """Inputs of the closed-form propeller model.

    ``reflectivity`` is the per-unit-length blade reflectivity: a scalar
    replicated over subcarriers and blades, a length-N vector, or a full
    (N, n_blades) matrix.  ``phi_b_per_blade`` holds the rotation-phase
    offset of each blade, ``phi_b + phi0 + 2*pi*i/n_blades``; it may be
    shaped (n_blades,) or (n_blades, M) for a moving scene.
    """

    derived: DerivedAngles
    n_blades: int
    blade_length: float
    reflectivity: Union[complex, np.ndarray] = 1.0 + 0.0j
    phi_b_per_blade: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.n_blades < 1:
            raise ModelError(f"n_blades must be >= 1, got {self.n_blades}")
        if not self.blade_length > 0:
            raise ModelError(f"blade_length must be > 0, got {self.blade_length}")
        if self.phi_b_per_blade is None:
            object.__setattr__(
                self,
                "phi_b_per_blade",
                blade_phase_offsets(self.derived, self.n_blades, 0.0),
            )
        phases = np.asarray(self.phi_b_per_blade, dtype=float)
        if phases.shape[0] != self.n_blades:
            raise ModelError(
                f"phi_b_per_blade leading dimension {phases.shape[0]} != n_blades {self.n_blades}"
            )
        object.__setattr__(self, "phi_b_per_blade", phases)
        refl = np.asarray(self.reflectivity, dtype=np.complex128)
        if not np.all(np.isfinite(refl)):
            raise ModelError("reflectivity must be finite")
        object.__setattr__(self, "reflectivity", refl if refl.ndim else complex(refl))

    @classmethod
    def from_geometry(
        cls,
        derived: DerivedAngles,
        prop: PropellerGeometry,
        reflectivity=1.0 + 0.0j,
        phi0: Optional[float] = None,
    ) -> "PropellerReturnParams":
        """Build params from geometry; phi0 falls back to prop.phi0, then 0."""
        if phi0 is None:
            phi0 = prop.phi0 if prop.phi0 is not None else 0.0
        return cls(
            derived=derived,
            n_blades=prop.n_blades,
            blade_length=prop.blade_length,
            reflectivity=reflectivity,
            phi_b_per_blade=blade_phase_offsets(derived, prop.n_blades, phi0),
        )


def blade_phase_offsets(derived: DerivedAngles, n_blades: int, phi0: float = 0.0) -> np.ndarray:
    """Per-blade rotation phases: phi_b + phi0 + 2*pi*i/n_blades, i = 0..n_blades-1."""
    offsets = TWO_PI * np.arange(n_blades) / n_blades
    phi_b = np.asarray(derived.phi_b)
    if phi_b.ndim:  # per-instant geometry: result (n_blades, ...)
        return wrap_angle(phi_b[None, ...] + phi0 + offsets[(...,) + (None,) * phi_b.ndim])
    return wrap_angle(phi_b + phi0 + offsets)


def psi_i(params: PropellerReturnParams, i: int, mu, m, cfg: OfdmConfig):
    """Instantaneous range-modulation slope of blade i at sample (mu, m):
    a_b * cos(omega*T*(m + mu/N) + phi_b(i))."""
    t = cfg.symbol_duration * (np.asarray(m) + np.asarray(mu) / cfg.n_subcarriers)
    phase = np.asarray(params.phi_b_per_blade)[i]
    return params.derived.a_b * np.cos(params.derived.omega * t + phase)


def blade_window(r_o, psi, mu, cfg: OfdmConfig, blade_length: float) -> BladeWindow:
    """Blade interval whose bistatic range falls inside delay bin ``mu``.

    The two candidate roots are where the blade's range R(l) = r_o - psi*l
    crosses the bin edges; taking medians against the physical limits 0
    and blade_length handles every ordering (including empty windows) in
    one expression.  psi == 0 collapses the blade to a point: the window
    is the whole blade when r_o lies inside the bin, otherwise empty.
    """
    l1, l2 = _blade_windows(
        np.asarray(r_o, float), np.asarray(psi, float), np.asarray(mu), cfg, blade_length
    )
    return BladeWindow(l1=l1, l2=l2)


def _blade_windows(r_o, psi, mu, cfg: OfdmConfig, blade_length):
    bin_width = SPEED_OF_LIGHT * cfg.symbol_duration / cfg.n_subcarriers
    edge_lo = (np.asarray(mu) - 1.0) * bin_width
    edge_hi = np.asarray(mu) * bin_width
    psi = np.asarray(psi, dtype=float)
    safe = np.where(psi == 0.0, 1.0, psi)
    with np.errstate(invalid="ignore", over="ignore"):
        root_a = (r_o - edge_lo) / safe
        root_b = (r_o - edge_hi) / safe
    lo = np.minimum(root_a, root_b)
    hi = np.maximum(root_a, root_b)
    # median of {x, lo, hi} == clip(x, lo, hi) since lo <= hi
    l1 = np.clip(0.0, lo, hi)
    l2 = np.clip(blade_length, lo, hi)
    inside = (r_o > edge_lo) & (r_o <= edge_hi)
    degenerate = psi == 0.0
    l1 = np.where(degenerate, 0.0, l1)
    l2 = np.where(degenerate, np.where(inside, blade_length, 0.0), l2)
    return l1, l2


def _reflectivity_matrix(reflectivity, n_sub: int, n_blades: int) -> np.ndarray:
    gamma = np.asarray(reflectivity, dtype=np.complex128)
    if gamma.ndim == 0:
        return np.full((n_sub, n_blades), complex(gamma))
    if gamma.shape == (n_sub,):
        return np.repeat(gamma[:, None], n_blades, axis=1)
    if gamma.shape == (n_sub, n_blades):
        return gamma
    raise ModelError(
        f"reflectivity shape {gamma.shape} not scalar, ({n_sub},) or ({n_sub}, {n_blades})"
    )


def _per_symbol(value, m_slice, extra_axes: int):
    """Broadcast a scalar or per-symbol (M,) quantity onto sliced grids."""
    arr = np.asarray(value)
    if arr.ndim == 0:
        return arr
    return arr[m_slice][(None,) * extra_axes + (...,)]


def _symbol_chunks(n_symbols: int, per_chunk_elems: int, elems_per_symbol: int):
    chunk = max(1, per_chunk_elems // max(elems_per_symbol, 1))
    for start in range(0, n_symbols, chunk):
        yield slice(start, min(start + chunk, n_symbols))


def propeller_returns(
    params: PropellerReturnParams,
    symbols: SymbolMatrix,
    cfg: OfdmConfig,
    chunk_elems: int = 4_000_000,
) -> IqFrame:
    """Closed-form baseband frame of one propeller (noise-free).

    For each sample and blade, the blade segment inside the sample's
    delay bin contributes
    ``gamma * (l2-l1) * exp(j*(w_n/c)*(-R_O + dRp)) * sinc((w_n/c)*dRm)``
    with ``dRp/dRm = (l2 +/- l1)/2 * psi``, summed over blades, weighted
    by ``D(n, m) * exp(2j*pi*n*mu/N)`` and summed over subcarriers.
    Geometry fields may be per-symbol arrays for a moving drone (range
    and angles frozen within each symbol).
    """
    n_sub, n_sym = cfg.n_subcarriers, cfg.n_symbols
    if symbols.shape != (n_sub, n_sym):
        raise ModelError(f"symbol matrix shape {symbols.shape} != OFDM grid {(n_sub, n_sym)}")
    der = params.derived
    gamma = _reflectivity_matrix(params.reflectivity, n_sub, params.n_blades)
    w_n = subcarrier_angular_freqs(cfg)
    k_n = w_n / SPEED_OF_LIGHT
    mu = np.arange(n_sub)
    mu_phase = np.exp(2j * np.pi * np.outer(mu, np.arange(n_sub)) / n_sub)  # (mu, n)

    phases = np.asarray(params.phi_b_per_blade, dtype=float)
    time_varying = phases.ndim == 2

    out = np.empty((n_sub, n_sym), dtype=np.complex128)
    for ms in _symbol_chunks(n_sym, chunk_elems, params.n_blades * n_sub):
        t = sample_times(cfg, m=np.arange(n_sym)[ms][None, :])  # (mu, m)
        chi = phases[:, None, ms] if time_varying else phases[:, None, None]
        a_b = _per_symbol(der.a_b, ms, 2)
        r_o = _per_symbol(der.r_o, ms, 2)
        psi = a_b * np.cos(der.omega * t[None, :, :] + chi)  # (blade, mu, m)
        l1, l2 = _blade_windows(r_o, psi, mu[None, :, None], cfg, params.blade_length)
        width = l2 - l1
        shift_plus = 0.5 * (l2 + l1) * psi
        shift_minus = 0.5 * width * psi
        chunk = np.zeros(t.shape, dtype=np.complex128)
        for n in range(n_sub):
            blade_sum = (
                gamma[n][:, None, None]
                * np.exp(1j * k_n[n] * (shift_plus - r_o))
                * width
                * sinc_unnormalized(k_n[n] * shift_minus)
            ).sum(axis=0)
            chunk += mu_phase[:, n][:, None] * symbols.values[n, ms][None, :] * blade_sum
        out[:, ms] = chunk
    return IqFrame(values=out, ofdm=cfg)


RangeHistory = Union[float, np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _evaluate_range(r_of_t: RangeHistory, t: np.ndarray) -> np.ndarray:
    if callable(r_of_t):
        return np.broadcast_to(np.asarray(r_of_t(t), dtype=float), t.shape)
    return np.broadcast_to(np.asarray(r_of_t, dtype=float), t.shape)


def bin_indicator(r: np.ndarray, mu, cfg: OfdmConfig) -> np.ndarray:
    """True where range r falls in delay bin mu: (mu-1)*dR < r <= mu*dR."""
    bin_width = SPEED_OF_LIGHT * cfg.symbol_duration / cfg.n_subcarriers
    mu = np.asarray(mu)
    return (r > (mu - 1.0) * bin_width) & (r <= mu * bin_width)


def point_scatterer_returns(
    gamma_n,
    r_of_t: RangeHistory,
    symbols: SymbolMatrix,
    cfg: OfdmConfig,
    include_carrier: bool = True,
) -> IqFrame:
    """Frame of a single point scatterer with range history R(t).

    ``y(mu, m) = sum_n gamma_n D(n,m) exp(j w_n ((m + mu/N)T - R/c))``
    gated to the delay bin containing R at that instant.  This is the
    kernel of the body models and of the brute-force blade oracle.
    ``include_carrier=False`` drops the carrier time factor, matching
    the baseband convention of :func:`propeller_returns`.
    """
    n_sub, n_sym = cfg.n_subcarriers, cfg.n_symbols
    if symbols.shape != (n_sub, n_sym):
        raise ModelError(f"symbol matrix shape {symbols.shape} != OFDM grid {(n_sub, n_sym)}")
    gamma = np.asarray(gamma_n, dtype=np.complex128)
    if gamma.ndim == 0:
        gamma = np.full(n_sub, complex(gamma))
    elif gamma.shape != (n_sub,):
        raise ModelError(f"gamma_n shape {gamma.shape} != ({n_sub},)")

    t = sample_times(cfg)  # (mu, m)
    r = _evaluate_range(r_of_t, t)
    mu = np.arange(n_sub)[:, None]
    gate = bin_indicator(r, mu, cfg)

    w_n = subcarrier_angular_freqs(cfg)
    out = np.zeros((n_sub, n_sym), dtype=np.complex128)
    for n in range(n_sub):
        if include_carrier:
            phase = w_n[n] * (t - r / SPEED_OF_LIGHT)
        else:
            phase = TWO_PI * n * mu / n_sub - w_n[n] * r / SPEED_OF_LIGHT
        out += gamma[n] * symbols.values[n] * np.exp(1j * phase)
    out *= gate
    return IqFrame(values=out, ofdm=cfg)


def brute_force_propeller_returns(
    params: PropellerReturnParams,
    symbols: SymbolMatrix,
    cfg: OfdmConfig,
    n_points: int = 10_000,
) -> IqFrame:
    """Quadrature reference for :func:`propeller_returns`.

    Each blade is cut into ``n_points`` equal cells.  A cell's range
    interval (sampled at its endpoints) is intersected with every delay
    bin; the covered fraction and the midpoint of the covered range
    sub-interval follow by linear interpolation, which is exact because
    the modeled range is linear in blade position.  The per-cell
    contribution is the point-scatterer integrand evaluated at that
    midpoint, weighted by the covered blade length.  The only remaining
    error is the midpoint rule on the smooth phase, O((k*psi*L/K)^2) per
    cell, so the sum converges to the closed form quadratically in
    ``n_points``.  No window medians and no sinc are used here.
    """
    n_sub, n_sym = cfg.n_subcarriers, cfg.n_symbols
    if symbols.shape != (n_sub, n_sym):
        raise ModelError(f"symbol matrix shape {symbols.shape} != OFDM grid {(n_sub, n_sym)}")
    der = params.derived
    gamma = _reflectivity_matrix(params.reflectivity, n_sub, params.n_blades)
    k_n = subcarrier_angular_freqs(cfg) / SPEED_OF_LIGHT
    bin_width = SPEED_OF_LIGHT * cfg.symbol_duration / cfg.n_subcarriers
    mu = np.arange(n_sub)
    edge_lo = (mu - 1.0) * bin_width  # per fast-time bin
    edge_hi = mu * bin_width
    mu_phase = np.exp(2j * np.pi * np.outer(mu, np.arange(n_sub)) / n_sub)  # (mu, n)

    cell_edges = np.linspace(0.0, params.blade_length, n_points + 1)
    phases = np.asarray(params.phi_b_per_blade, dtype=float)
    time_varying = phases.ndim == 2

    r_o_all = np.asarray(der.r_o, dtype=float)
    a_b_all = np.asarray(der.a_b, dtype=float)

    out = np.empty((n_sub, n_sym), dtype=np.complex128)
    for m in range(n_sym):
        t_mu = cfg.symbol_duration * (m + mu / n_sub)  # instant of each fast-time sample
        r_o = float(r_o_all[m]) if r_o_all.ndim else float(r_o_all)
        a_b = float(a_b_all[m]) if a_b_all.ndim else float(a_b_all)
        acc = np.zeros((n_sub, n_sub), dtype=np.complex128)  # (mu, n)
        for i in range(params.n_blades):
            chi = phases[i, m] if time_varying else phases[i]
            slope = a_b * np.cos(der.omega * t_mu + chi)  # (mu,)
            r_edges = r_o - cell_edges[:, None] * slope[None, :]  # (K+1, mu)
            ra, rb = r_edges[:-1], r_edges[1:]
            r_min = np.minimum(ra, rb)
            r_max = np.maximum(ra, rb)
            clip_lo = np.maximum(r_min, edge_lo[None, :])
            clip_hi = np.minimum(r_max, edge_hi[None, :])
            overlap = clip_hi - clip_lo
            span = r_max - r_min
            flat = span == 0.0  # cell at constant range (slope 0)
            covered = np.where(
                flat,
                (ra > edge_lo[None, :]) & (ra <= edge_hi[None, :]),
                overlap > 0.0,
            )
            with np.errstate(invalid="ignore", divide="ignore"):
                fraction = np.where(flat, 1.0, overlap / np.where(flat, 1.0, span))
            cell_idx, mu_idx = np.nonzero(covered)
            if cell_idx.size == 0:
                continue
            weights = fraction[cell_idx, mu_idx] * (params.blade_length / n_points)
            r_mid = np.where(
                flat[cell_idx, mu_idx],
                ra[cell_idx, mu_idx],
                0.5 * (clip_lo[cell_idx, mu_idx] + clip_hi[cell_idx, mu_idx]),
            )
            contrib = weights[:, None] * np.exp(-1j * np.outer(r_mid, k_n))  # (pairs, n)
            pair_acc = np.zeros_like(acc)
            np.add.at(pair_acc, mu_idx, contrib)
            acc += pair_acc * gamma[None, :, i]
        out[:, m] = np.einsum("un,un->u", mu_phase * symbols.values[None, :, m], acc)
    return IqFrame(values=out, ofdm=cfg)


@dataclass(frozen=True)
class SingleToneConfig:
    """Single-tone sensing link: carrier and slow-time sampling."""

    carrier_freq: float
    sample_interval: float
    n_samples: int

    def __post_init__(self):
        if not self.carrier_freq > 0:
            raise ModelError("carrier_freq must be > 0")
        if not self.sample_interval > 0:
            raise ModelError("sample_interval must be > 0")
        if self.n_samples < 1:
            raise ModelError("n_samples must be >= 1")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq


def narrowband_returns(
    params: PropellerReturnParams,
    cfg: SingleToneConfig,
    times: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Slow-time micro-Doppler signature when the whole blade fits one bin.

    ``h(t_m) = sum_i gamma_i * L * exp(j*(w0/c)*(-R_O + a_b*(L/2)*cos(...)))
    * sinc((w0*L*a_b/(2c)) * cos(omega*t_m + phi_b(i)))`` — the full-blade
    limit of the high-resolution model.  In the monostatic limit
    (a_b = 2*cos(elevation), R_O twice the one-way range) this is exactly
    the classic single-rotor slow-time form; see
    :func:`classic_monostatic_returns`.
    """
    der = params.derived
    if times is None:
        times = np.arange(cfg.n_samples) * cfg.sample_interval
    w0 = TWO_PI * cfg.carrier_freq
    k0 = w0 / SPEED_OF_LIGHT
    length = params.blade_length
    gamma = np.asarray(params.reflectivity, dtype=np.complex128)
    if gamma.ndim == 0:
        gamma = np.full(params.n_blades, complex(gamma))
    elif gamma.shape != (params.n_blades,):
        raise ModelError(
            f"narrowband reflectivity must be scalar or ({params.n_blades},), got {gamma.shape}"
        )
    out = np.zeros(np.shape(times), dtype=np.complex128)
    for i in range(params.n_blades):
        chi = np.asarray(params.phi_b_per_blade)[i]
        cos_term = np.cos(der.omega * times + chi)
        out += (
            gamma[i]
            * np.exp(1j * k0 * (-der.r_o + der.a_b * (length / 2.0) * cos_term))
            * length
            * sinc_unnormalized(k0 * length * der.a_b / 2.0 * cos_term)
        )
    return out


def classic_monostatic_returns(
    range_to_center: float,
    elevation: float,
    omega: float,
    phi0: float,
    n_blades: int,
    blade_length: float,
    cfg: SingleToneConfig,
    reflectivity=1.0 + 0.0j,
    times: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Classic monostatic thin-wire rotor signature (printed narrowband form).

    ``h(t) = sum_i gamma * L * exp(j*(w0/c)*(-2*R + L*cos(omega*t + phi_i)*cos(psi)))
    * sinc((w0*L/c)*cos(omega*t + phi_i)*cos(psi))`` with ``psi`` the
    elevation of the radar above the rotation plane and blade phases
    ``phi_i = phi0 + 2*pi*i/n_blades``.  Kept as the documented monostatic
    variant; the bistatic form above reproduces it exactly when Tx == Rx.
    """
    if times is None:
        times = np.arange(cfg.n_samples) * cfg.sample_interval
    w0 = TWO_PI * cfg.carrier_freq
    k0 = w0 / SPEED_OF_LIGHT
    cos_psi = np.cos(elevation)
    out = np.zeros(np.shape(times), dtype=np.complex128)
    for i in range(n_blades):
        chi = phi0 + TWO_PI * i / n_blades
        cos_term = np.cos(omega * times + chi)
        out += (
            reflectivity
            * np.exp(1j * k0 * (-2.0 * range_to_center + blade_length * cos_term * cos_psi))
            * blade_length
            * sinc_unnormalized(k0 * blade_length * cos_term * cos_psi)
        )
    return out


def single_tone_hrr_returns(
    params: PropellerReturnParams,
    cfg: SingleToneConfig,
    delta_r: float,
    t_grid: np.ndarray,
    tau_grid: np.ndarray,
) -> np.ndarray:
    """Continuous-time single-tone high-resolution returns y(t, tau).

    Same windowed line integral as the OFDM model but for one tone w0 and
    free-running delay bins of width delta_tau = delta_r / c centered on
    ``tau_grid``.  Returns a (len(t_grid), len(tau_grid)) matrix.  The
    carrier time factor exp(j*w0*t) is retained (passband form); when a
    single bin swallows the whole blade the row reduces to
    exp(j*w0*t) * narrowband_returns at the same instants.
    """
    if not delta_r > 0:
        raise ModelError(f"delta_r must be > 0, got {delta_r}")
    der = params.derived
    t = np.asarray(t_grid, dtype=float)[:, None]
    tau = np.asarray(tau_grid, dtype=float)[None, :]
    w0 = TWO_PI * cfg.carrier_freq
    k0 = w0 / SPEED_OF_LIGHT
    half_bin = 0.5 * delta_r
    gamma = np.asarray(params.reflectivity, dtype=np.complex128)
    if gamma.ndim == 0:
        gamma = np.full(params.n_blades, complex(gamma))
    elif gamma.shape != (params.n_blades,):
        raise ModelError(
            f"single-tone reflectivity must be scalar or ({params.n_blades},), got {gamma.shape}"
        )

    out = np.zeros(np.broadcast_shapes(t.shape, tau.shape), dtype=np.complex128)
    edge_lo = tau * SPEED_OF_LIGHT - half_bin
    edge_hi = tau * SPEED_OF_LIGHT + half_bin
    for i in range(params.n_blades):
        chi = np.asarray(params.phi_b_per_blade)[i]
        psi = der.a_b * np.cos(der.omega * t + chi)
        safe = np.where(psi == 0.0, 1.0, psi)
        with np.errstate(invalid="ignore", over="ignore"):
            root_a = (der.r_o - edge_lo) / safe
            root_b = (der.r_o - edge_hi) / safe
        lo = np.minimum(root_a, root_b)
        hi = np.maximum(root_a, root_b)
        l1 = np.clip(0.0, lo, hi)
        l2 = np.clip(params.blade_length, lo, hi)
        inside = (der.r_o > edge_lo) & (der.r_o <= edge_hi)
        flat = psi == 0.0
        l1 = np.where(flat, 0.0, l1)
        l2 = np.where(flat, np.where(inside, params.blade_length, 0.0), l2)
        width = l2 - l1
        shift_plus = 0.5 * (l2 + l1) * psi
        shift_minus = 0.5 * width * psi
        out += (
            gamma[i]
            * np.exp(1j * w0 * t + 1j * k0 * (shift_plus - der.r_o))
            * width
            * sinc_unnormalized(k0 * shift_minus)
        )
    return out


def scatterer_amplitude(gamma0: float, sigma_p: float, r: float, f0: float,
                        r_rx: Optional[float] = None) -> float:
    """Return amplitude of a point scatterer from the radar equation:
    gamma0 * sqrt(c * sigma / ((4*pi^3) * R^4 * f0^2)).

    Monostatic as printed; passing ``r_rx`` replaces R^4 by
    r^2 * r_rx^2 (independent path losses on each leg), an extension
    beyond the printed monostatic equation.
    """
    if not f0 > 0:
        raise ModelError(f"f0 must be > 0, got {f0}")
    if sigma_p < 0:
        raise ModelError(f"sigma_p must be >= 0, got {sigma_p}")
    if not r > 0 or (r_rx is not None and not r_rx > 0):
        raise ModelError("scatterer range must be > 0")
    r4 = r**4 if r_rx is None else r**2 * r_rx**2
    return gamma0 * np.sqrt(SPEED_OF_LIGHT * sigma_p / (4.0 * np.pi**3 * r4 * f0**2))
