"""Whole-drone composition: propellers + static body + vibration + noise.

The total frame is the coherent sum of every propeller's closed-form
returns and one static-body contribution, plus circularly-symmetric
Gaussian receiver noise added exactly once:

    y = sum_p y_p + y_body + z

Two body models are provided.  The Gaussian model spreads a single
reflectivity over range with a Gaussian envelope whose width is the
drone size projected on the bistatic bisector, ``d_max * cos(beta/2)``,
clamped from below to one range bin so pure forward scatter (beta = pi)
stays well-defined.  The measurement-based model replaces the flat
spectrum with a measured reflectivity profile S21(f) sampled at the
subcarrier frequencies.

Vibration is a per-symbol random walk added to the body range history
(optionally also to the propellers' center ranges): bounded uniform
increments, which is enough to smear the body line off zero Doppler.

Randomness is split into independent, stably-ordered streams (initial
blade azimuths, vibration, noise) derived from the drone seed, so the
same configuration always produces bit-identical frames regardless of
how the work is scheduled.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geometry import (
    BistaticLink,
    GeometryError,
    PropellerGeometry,
    SPEED_OF_LIGHT,
    TWO_PI,
    bistatic_angle,
    bistatic_range,
    derive_angles,
    in_plane_basis,
    wrap_angle,
)
from .propeller import (
    IqFrame,
    ModelError,
    PropellerReturnParams,
    blade_phase_offsets,
    propeller_returns,
    sample_times,
)
from .waveform import OfdmConfig, SymbolMatrix, subcarrier_frequencies


class BodyModelError(ValueError):
    """Raised for invalid body-model configuration or profile coverage."""


@dataclass(frozen=True)
class S21Profile:
    """Measured frequency-domain reflectivity of the drone's static parts."""

    freqs_hz: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.freqs_hz, dtype=float)
        values = np.asarray(self.values, dtype=np.complex128)
        if freqs.ndim != 1 or freqs.size < 2:
            raise BodyModelError("S21 profile needs at least two frequency points")
        if values.shape != freqs.shape:
            raise BodyModelError("S21 frequency and value arrays differ in length")
        if np.any(np.diff(freqs) <= 0):
            raise BodyModelError("S21 profile frequencies must be strictly increasing")
        freqs.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "freqs_hz", freqs)
        object.__setattr__(self, "values", values)

    def sample(self, freqs_hz) -> np.ndarray:
        """Interpolate the profile at the given frequencies.

        Linear in the complex rectangular components; raises when any
        requested frequency falls outside the tabulated band.
        """
        f = np.asarray(freqs_hz, dtype=float)
        if np.any(f < self.freqs_hz[0]) or np.any(f > self.freqs_hz[-1]):
            raise BodyModelError(
                "profile does not cover band: requested "
                f"[{f.min():.6g}, {f.max():.6g}] Hz, have "
                f"[{self.freqs_hz[0]:.6g}, {self.freqs_hz[-1]:.6g}] Hz"
            )
        re_part = np.interp(f, self.freqs_hz, self.values.real)
        im_part = np.interp(f, self.freqs_hz, self.values.imag)
        return re_part + 1j * im_part

    @classmethod
    def from_file(cls, path) -> "S21Profile":
        """Read a profile file: '# f_hz re im' header, ascending rows."""
        data = np.loadtxt(path, comments="#", ndmin=2)
        if data.shape[1] != 3:
            raise BodyModelError(f"{path}: expected 3 columns (f_hz re im), got {data.shape[1]}")
        return cls(freqs_hz=data[:, 0], values=data[:, 1] + 1j * data[:, 2])

    def to_file(self, path) -> None:
        rows = np.column_stack([self.freqs_hz, self.values.real, self.values.imag])
        np.savetxt(path, rows, header="f_hz re im")


_S21_NAME = re.compile(r"az(-?\d+(?:\.\d+)?)_el(-?\d+(?:\.\d+)?)_beta(-?\d+(?:\.\d+)?)\.s21$")


def select_s21_profile(library_dir, azimuth_deg: float, elevation_deg: float,
                       beta_deg: float) -> S21Profile:
    """Pick the nearest profile from a directory of aspect-keyed files.

    File names carry the aspect keys: ``az<deg>_el<deg>_beta<deg>.s21``.
    Nearest neighbor in (azimuth, elevation, beta) degrees; the azimuth
    difference is wrapped modulo 360.
    """
    candidates = []
    for entry in sorted(Path(library_dir).iterdir()):
        match = _S21_NAME.search(entry.name)
        if match:
            candidates.append((entry, *(float(g) for g in match.groups())))
    if not candidates:
        raise BodyModelError(f"no .s21 profiles with aspect keys found in {library_dir}")

    def distance(item):
        _, az, el, beta = item
        daz = abs((az - azimuth_deg + 180.0) % 360.0 - 180.0)
        return math.hypot(daz, el - elevation_deg, beta - beta_deg)

    best = min(candidates, key=distance)
    return S21Profile.from_file(best[0])


@dataclass(frozen=True)
class BodyModelConfig:
    """Static-body contribution settings.

    ``kind``: "none", "gaussian" or "measurement".  ``gamma_prime`` is a
    single complex reflectivity applied to every subcarrier (the usual
    manually-adjusted body-to-propeller level).  ``d_max`` is the largest
    body dimension along the bistatic bisector, in meters.
    """

    kind: str = "none"
    gamma_prime: complex = 1.0 + 0.0j
    d_max: float = 0.0
    s21_profile: Optional[S21Profile] = None

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "measurement"):
            raise BodyModelError(f"unknown body model kind: {self.kind!r}")
        if self.kind == "gaussian" and not self.d_max > 0:
            raise BodyModelError("gaussian body model requires d_max > 0")
        if self.kind == "measurement":
            if self.s21_profile is None:
                raise BodyModelError("measurement body model requires an S21 profile")
            if not self.d_max > 0:
                raise BodyModelError("measurement body model requires d_max > 0")
        if self.kind != "measurement" and self.s21_profile is not None:
            raise BodyModelError("s21_profile given but kind is not 'measurement'")


@dataclass(frozen=True)
class VibrationConfig:
    """Bounded-increment random-walk displacement of the body range.

    One step per OFDM symbol (constant within a symbol): vibration
    bandwidths are far below 1/T, and per-sample walks would be both
    spectrally implausible and needlessly expensive.  By default the
    walk displaces only the body; ``apply_to_propellers`` extends it to
    the propeller center ranges.
    """

    d0: float = 0.0
    enabled: bool = False
    seed: Optional[int] = None
    apply_to_propellers: bool = False

    def __post_init__(self):
        if self.d0 < 0:
            raise BodyModelError(f"vibration d0 must be >= 0, got {self.d0}")


@dataclass(frozen=True)
class DroneConfig:
    """Everything needed to simulate one drone observation."""

    link: BistaticLink
    propellers: Sequence[PropellerGeometry]
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    reflectivities: Optional[Sequence[complex]] = None
    body: BodyModelConfig = field(default_factory=BodyModelConfig)
    vibration: VibrationConfig = field(default_factory=VibrationConfig)
    noise_variance: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "propellers", tuple(self.propellers))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))
        if self.velocity.shape != (3,):
            raise ModelError(f"velocity must be a 3-vector, got shape {self.velocity.shape}")
        if self.noise_variance < 0:
            raise ModelError(f"noise_variance must be >= 0, got {self.noise_variance}")
        if self.reflectivities is not None and len(self.reflectivities) != len(self.propellers):
            raise ModelError("reflectivities list must match the number of propellers")


def component_seed_sequences(seed: int) -> dict:
    """Stable per-component RNG streams derived from the drone seed.

    Keys: 'phi0' (initial azimuth draws), 'vibration', 'noise'.  The
    split is what makes concurrent per-propeller evaluation incapable of
    changing results.
    """
    children = np.random.SeedSequence(seed).spawn(3)
    return {"phi0": children[0], "vibration": children[1], "noise": children[2]}


def resolve_initial_azimuths(cfg: DroneConfig) -> list:
    """Per-propeller phi0, drawing U(0, 2*pi) for any left unset."""
    rng = np.random.default_rng(component_seed_sequences(cfg.seed)["phi0"])
    out = []
    for prop in cfg.propellers:
        if prop.phi0 is None:
            out.append(float(rng.uniform(0.0, TWO_PI)))
        else:
            out.append(float(prop.phi0))
    return out


def vibration_walk(vib: VibrationConfig, n_steps: int, seed=None) -> np.ndarray:
    """Displacement series: D(0) = 0, D(k) = D(k-1) + d0 * U(-1, 1)."""
    if n_steps < 1:
        raise ModelError(f"n_steps must be >= 1, got {n_steps}")
    if seed is None:
        seed = vib.seed
    rng = np.random.default_rng(seed)
    steps = vib.d0 * rng.uniform(-1.0, 1.0, size=n_steps - 1)
    walk = np.empty(n_steps)
    walk[0] = 0.0
    np.cumsum(steps, out=walk[1:])
    return walk


def add_noise(frame: IqFrame, variance: float, seed) -> IqFrame:
    """Add circularly-symmetric complex Gaussian noise, total per-sample
    power ``variance`` (variance/2 per quadrature), deterministic per seed."""
    if variance < 0:
        raise ModelError(f"noise variance must be >= 0, got {variance}")
    if variance == 0.0:
        return frame
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(variance / 2.0)
    noise = rng.normal(scale=sigma, size=frame.shape) + 1j * rng.normal(
        scale=sigma, size=frame.shape
    )
    return IqFrame(values=frame.values + noise, ofdm=frame.ofdm, noise_variance=variance)


def _body_gate(r: np.ndarray, beta, cfg: OfdmConfig, d_max: float):
    """Gaussian width and rect gate shared by both body models.

    Width is the bisector-projected size d_max*cos(beta/2), clamped to
    one range bin: at forward scatter the projection collapses but the
    body still occupies one resolution cell.  The same clamped width
    scales the rect support so the gate never divides by zero.
    """
    bin_width = SPEED_OF_LIGHT * cfg.symbol_duration / cfg.n_subcarriers
    width = np.maximum(np.asarray(d_max * np.cos(np.asarray(beta) / 2.0)), bin_width)
    mu = np.arange(cfg.n_subcarriers)[:, None]
    offset = mu - r / bin_width - 0.5
    gate = np.abs((bin_width / width) * offset) <= 0.5
    return width, gate


def _body_subcarrier_sum(gamma_n: np.ndarray, symbols: SymbolMatrix, cfg: OfdmConfig,
                         r: np.ndarray) -> np.ndarray:
    """sum_n gamma_n D(n,m) exp(j*(2*pi*n*mu/N - w_n*R/c)) on the (mu, m) grid.

    Baseband convention: carrier removed from the time phase, full w_n
    kept in the range phase (the micro-Doppler carrier term).
    """
    n_sub = cfg.n_subcarriers
    mu = np.arange(n_sub)[:, None]
    k_n = TWO_PI * subcarrier_frequencies(cfg) / SPEED_OF_LIGHT
    out = np.zeros(r.shape, dtype=np.complex128)
    for n in range(n_sub):
        phase = TWO_PI * n * mu / n_sub - k_n[n] * r
        out += gamma_n[n] * symbols.values[n] * np.exp(1j * phase)
    return out


def gaussian_body_returns(body: BodyModelConfig, symbols: SymbolMatrix, cfg: OfdmConfig,
                          r_of_t, beta) -> IqFrame:
    """Gaussian-envelope body frame.

    ``y(mu, m) = exp(-((mu*T*c/N - R)^2) / (2*width^2)) * gate *
    sum_n gamma' D(n,m) exp(j*(...))``.  The envelope peaks at exactly 1
    when R sits on a sample point (the Gaussian's normalization is
    absorbed into gamma').  ``r_of_t`` is the body range history on the
    (mu, m) grid (array or callable of t); ``beta`` the bistatic angle
    (scalar or per-sample).
    """
    t = sample_times(cfg)
    r = _evaluate_history(r_of_t, t)
    width, gate = _body_gate(r, beta, cfg, body.d_max)
    bin_width = SPEED_OF_LIGHT * cfg.symbol_duration / cfg.n_subcarriers
    mu = np.arange(cfg.n_subcarriers)[:, None]
    envelope = np.exp(-0.5 * ((mu * bin_width - r) / width) ** 2)
    gamma_n = np.full(cfg.n_subcarriers, complex(body.gamma_prime))
    values = envelope * gate * _body_subcarrier_sum(gamma_n, symbols, cfg, r)
    return IqFrame(values=values, ofdm=cfg)


def measurement_body_returns(body: BodyModelConfig, symbols: SymbolMatrix, cfg: OfdmConfig,
                             r_of_t, beta) -> IqFrame:
    """Measurement-based body frame: per-subcarrier reflectivity from S21.

    The profile is sampled at the subcarrier frequencies f_n = f0 + n/T
    (error if not fully covered) and applied once per subcarrier on top
    of gamma'.  Range gating is identical to the Gaussian model's rect
    (clamped width), without the Gaussian envelope.
    """
    if body.s21_profile is None:
        raise BodyModelError("measurement body model requires an S21 profile")
    t = sample_times(cfg)
    r = _evaluate_history(r_of_t, t)
    _, gate = _body_gate(r, beta, cfg, body.d_max)
    s21 = body.s21_profile.sample(subcarrier_frequencies(cfg))
    gamma_n = complex(body.gamma_prime) * s21
    values = gate * _body_subcarrier_sum(gamma_n, symbols, cfg, r)
    return IqFrame(values=values, ofdm=cfg)


def _evaluate_history(r_of_t, t: np.ndarray) -> np.ndarray:
    if callable(r_of_t):
        return np.broadcast_to(np.asarray(r_of_t(t), dtype=float), t.shape)
    return np.broadcast_to(np.asarray(r_of_t, dtype=float), t.shape)


def _moving(cfg: DroneConfig) -> bool:
    return bool(np.any(cfg.velocity != 0.0))


def propeller_params_for(cfg: DroneConfig, ofdm: OfdmConfig, index: int,
                         phi0: float, vibration_shift=None) -> PropellerReturnParams:
    """Closed-form parameters of propeller ``index`` under drone motion.

    Static drones get scalar geometry; moving drones get per-symbol
    geometry evaluated at the symbol starts (range error bounded by
    |velocity|*T, negligible against the range bin for sane configs).
    """
    prop = cfg.propellers[index]
    refl = 1.0 + 0.0j if cfg.reflectivities is None else cfg.reflectivities[index]
    if _moving(cfg):
        t_m = np.arange(ofdm.n_symbols) * ofdm.symbol_duration
        centers = prop.rotation_center + np.outer(t_m, cfg.velocity)
        derived = derive_angles(cfg.link, prop, rotation_center=centers)
    else:
        derived = derive_angles(cfg.link, prop)
    params = PropellerReturnParams(
        derived=derived,
        n_blades=prop.n_blades,
        blade_length=prop.blade_length,
        reflectivity=refl,
        phi_b_per_blade=blade_phase_offsets(derived, prop.n_blades, phi0),
    )
    if vibration_shift is not None:
        derived = _shift_center_range(derived, vibration_shift, ofdm.n_symbols)
        params = PropellerReturnParams(
            derived=derived,
            n_blades=params.n_blades,
            blade_length=params.blade_length,
            reflectivity=params.reflectivity,
            phi_b_per_blade=params.phi_b_per_blade,
        )
    return params


def _shift_center_range(derived, shift: np.ndarray, n_symbols: int):
    """Add a per-symbol displacement to the center range (vibration)."""
    from dataclasses import replace

    r_o = np.broadcast_to(np.asarray(derived.r_o, dtype=float), (n_symbols,)).copy()
    return replace(derived, r_o=r_o + shift)


def body_range_history(cfg: DroneConfig, ofdm: OfdmConfig,
                       vibration_shift=None) -> np.ndarray:
    """Bistatic range of the drone center on the (mu, m) grid, per sample."""
    t = sample_times(ofdm)
    centers = cfg.link.drone_center + t[..., None] * cfg.velocity
    r = bistatic_range(cfg.link.tx_pos, cfg.link.rx_pos, centers)
    if vibration_shift is not None:
        r = r + vibration_shift[None, :]
    return r


def simulate_drone(cfg: DroneConfig, symbols: SymbolMatrix, ofdm: OfdmConfig) -> IqFrame:
    """Total drone frame: propellers + body + noise.

    Per-propeller geometry (rotation speed, center range, aspect angles,
    initial azimuth) is derived independently for each propeller, so any
    placement works, including a vertical-axis propeller among
    horizontal ones.  Component RNG streams come from
    :func:`component_seed_sequences`, making the result independent of
    evaluation order.
    """
    seeds = component_seed_sequences(cfg.seed)
    phi0s = resolve_initial_azimuths(cfg)

    vib_shift = None
    if cfg.vibration.enabled and cfg.vibration.d0 > 0:
        vib_seed = cfg.vibration.seed if cfg.vibration.seed is not None else seeds["vibration"]
        vib_shift = vibration_walk(cfg.vibration, ofdm.n_symbols, seed=vib_seed)

    total = np.zeros((ofdm.n_subcarriers, ofdm.n_symbols), dtype=np.complex128)
    prop_shift = vib_shift if (vib_shift is not None and cfg.vibration.apply_to_propellers) else None
    for index in range(len(cfg.propellers)):
        params = propeller_params_for(cfg, ofdm, index, phi0s[index], vibration_shift=prop_shift)
        total += propeller_returns(params, symbols, ofdm).values

    if cfg.body.kind != "none":
        r = body_range_history(cfg, ofdm, vibration_shift=vib_shift)
        if _moving(cfg):
            t = sample_times(ofdm)
            centers = cfg.link.drone_center + t[..., None] * cfg.velocity
            beta = bistatic_angle(cfg.link.tx_pos, cfg.link.rx_pos, centers)
        else:
            beta = bistatic_angle(cfg.link.tx_pos, cfg.link.rx_pos, cfg.link.drone_center)
        if cfg.body.kind == "gaussian":
            total += gaussian_body_returns(cfg.body, symbols, ofdm, r, beta).values
        else:
            total += measurement_body_returns(cfg.body, symbols, ofdm, r, beta).values

    frame = IqFrame(values=total, ofdm=ofdm)
    return add_noise(frame, cfg.noise_variance, seeds["noise"])
