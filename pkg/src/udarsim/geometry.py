"""Bistatic geometry of rotating point scatterers.

Everything downstream rests on one first-order result: a point at radius
``l`` on a blade spinning about an axis ``omega_vec`` through ``O`` has
bistatic range (transmitter leg plus receiver leg)

    R(l, t) = R_O - A_B * l * cos(omega * t + phi_B)

where ``R_O`` is the bistatic range of the rotation center, ``A_B`` is the
in-plane projection gain and ``phi_B`` the rotation-phase offset fixed by
the station geometry.  :func:`derive_angles` produces all of these
quantities, :func:`bistatic_range_rotating_point` evaluates the model and
:func:`exact_bistatic_range` gives the exact two-leg range used to bound
the first-order error.

Conventions
-----------
* Station-to-center vectors: ``OT = O - tx_pos``, ``OR = O - rx_pos``.
* ``beta_t`` / ``beta_r`` are the angles between the rotation axis and
  ``OT`` / ``OR``; ``beta`` is the bistatic angle at the rotation center.
* In-plane azimuths are measured in a right-handed basis ``(e1, e2)``
  with ``e1`` the normalized projection of ``OT`` onto the rotation
  plane, so ``phi_t == 0`` whenever that projection is non-degenerate.
  Only azimuth differences are observable; the gauge is fixed to make
  results deterministic.
* Rotation is right-handed about ``omega_vec``.  A blade whose model
  phase offset is ``chi`` sits at in-plane azimuth
  ``alpha(t) = omega*t + chi + phi_b + pi`` (see
  :func:`blade_azimuth_for_phase`); the additive per-blade convention
  ``chi_i = phi_b + phi0 + 2*pi*i/n_blades`` matches the mirrored gauge,
  which is indistinguishable in any magnitude product.
* The elevation of a station above the rotation plane is
  ``pi/2 - beta_t`` (resp. ``beta_r``); formulas quoted elsewhere in
  terms of an elevation angle use that mapping.

All functions broadcast over leading axes of ``rotation_center`` so a
moving drone can be evaluated for a whole slow-time grid in one call.
For time-varying geometry the in-plane basis is frozen to the first
instant; otherwise the rotation phase would drift with the gauge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

TWO_PI = 2.0 * np.pi

# Relative threshold below which an in-plane projection is treated as
# degenerate (station on the rotation axis).
_AXIS_TOL = 1e-12


class GeometryError(ValueError):
    """Raised for degenerate or inconsistent scene geometry."""


def wrap_angle(theta):
    """Wrap an angle (or array of angles) to [0, 2*pi)."""
    return np.mod(theta, TWO_PI)


def _as_vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape[-1] != 3:
        raise GeometryError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class BistaticLink:
    """Transmitter, receiver and drone-center positions, in meters.

    ``tx_pos == rx_pos`` is allowed and degenerates to the monostatic
    case (zero baseline).
    """

    tx_pos: np.ndarray
    rx_pos: np.ndarray
    drone_center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "tx_pos", _as_vec3(self.tx_pos, "tx_pos"))
        object.__setattr__(self, "rx_pos", _as_vec3(self.rx_pos, "rx_pos"))
        object.__setattr__(self, "drone_center", _as_vec3(self.drone_center, "drone_center"))

    @property
    def baseline(self) -> float:
        return float(np.linalg.norm(self.tx_pos - self.rx_pos))


@dataclass(frozen=True)
class PropellerGeometry:
    """One propeller: rotation center, angular-velocity vector, blades.

    ``phi0`` is the initial mechanical azimuth of blade 0; ``None`` means
    "draw uniformly at random at drone level".
    """

    rotation_center: np.ndarray
    omega_vec: np.ndarray
    phi0: Optional[float] = 0.0
    n_blades: int = 2
    blade_length: float = 0.15

    def __post_init__(self):
        object.__setattr__(self, "rotation_center", _as_vec3(self.rotation_center, "rotation_center"))
        object.__setattr__(self, "omega_vec", _as_vec3(self.omega_vec, "omega_vec"))
        if self.n_blades < 1:
            raise GeometryError(f"n_blades must be >= 1, got {self.n_blades}")
        if not self.blade_length > 0:
            raise GeometryError(f"blade_length must be > 0, got {self.blade_length}")
        if self.phi0 is not None:
            object.__setattr__(self, "phi0", float(wrap_angle(self.phi0)))

    @property
    def omega(self) -> float:
        """Rotation speed |omega_vec| in rad/s."""
        return float(np.linalg.norm(self.omega_vec))


@dataclass(frozen=True)
class DerivedAngles:
    """All geometric quantities of the rotating-point range model.

    Fields are scalars for a static scene or arrays with one entry per
    evaluated instant.  ``e1``/``e2`` are the in-plane basis the azimuths
    refer to; ``r_t``/``r_r`` are the individual legs of ``r_o``.
    """

    omega: float
    r_t: np.ndarray
    r_r: np.ndarray
    r_o: np.ndarray
    beta: np.ndarray
    beta_t: np.ndarray
    beta_r: np.ndarray
    phi_t: np.ndarray
    phi_r: np.ndarray
    phi_b: np.ndarray
    a_b: np.ndarray
    e1: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    e2: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))


def _perpendicular_to(axis: np.ndarray) -> np.ndarray:
    """A fixed unit vector perpendicular to ``axis`` (deterministic)."""
    trial = np.zeros(3)
    trial[int(np.argmin(np.abs(axis)))] = 1.0
    perp = np.cross(axis, trial)
    return perp / np.linalg.norm(perp)


def in_plane_basis(axis_unit: np.ndarray, ot: np.ndarray, orx: np.ndarray):
    """Right-handed orthonormal basis (e1, e2) spanning the rotation plane.

    e1 follows the projection of ``ot``; falls back to ``orx`` and then to
    an arbitrary fixed perpendicular when the projections degenerate.
    """
    for ref in (ot, orx):
        proj = ref - np.dot(ref, axis_unit) * axis_unit
        norm = np.linalg.norm(proj)
        if norm > _AXIS_TOL * max(np.linalg.norm(ref), 1.0):
            e1 = proj / norm
            return e1, np.cross(axis_unit, e1)
    e1 = _perpendicular_to(axis_unit)
    return e1, np.cross(axis_unit, e1)


def compute_phi_b(phi_t, phi_r, beta_t, beta_r):
    """Rotation-phase offset of the range model from station azimuths.

    Evaluates ``phi_t - atan2(sin(beta_r)*sin(phi_t - phi_r),
    sin(beta_t) + sin(beta_r)*cos(phi_t - phi_r))`` wrapped to [0, 2*pi).
    The two-argument arctangent keeps the correct quadrant for any
    geometry.  Raises when both stations lie on the rotation axis, where
    the offset is undefined (there is no in-plane modulation to phase).
    """
    phi_t = np.asarray(phi_t, dtype=float)
    phi_r = np.asarray(phi_r, dtype=float)
    sin_bt = np.sin(np.asarray(beta_t, dtype=float))
    sin_br = np.sin(np.asarray(beta_r, dtype=float))
    if np.any((np.abs(sin_bt) <= _AXIS_TOL) & (np.abs(sin_br) <= _AXIS_TOL)):
        raise GeometryError(
            "undefined rotation phase: transmitter and receiver both on the rotation axis"
        )
    dphi = phi_t - phi_r
    correction = np.arctan2(sin_br * np.sin(dphi), sin_bt + sin_br * np.cos(dphi))
    out = wrap_angle(phi_t - correction)
    return out if out.ndim else float(out)


def derive_angles(
    link: BistaticLink,
    prop: PropellerGeometry,
    rotation_center=None,
    basis=None,
) -> DerivedAngles:
    """Compute every derived quantity of the rotating-point range model.

    Parameters
    ----------
    link, prop : scene description.  ``prop.omega_vec`` must be nonzero.
    rotation_center : optional override for ``prop.rotation_center``;
        may carry leading axes (e.g. one center per slow-time instant)
        in which case all outputs gain those axes.
    basis : optional pre-built ``(e1, e2)`` tuple.  Passed by callers
        that evaluate a trajectory in several chunks and need one gauge.

    On-axis stations are tolerated: when both in-plane projections
    vanish the modulation gain ``a_b`` is zero and ``phi_b`` is reported
    as 0, which is inert because the blade term it phases is zero.
    """
    omega = prop.omega
    if omega <= 0.0:
        raise GeometryError("degenerate rotation axis: |omega_vec| must be > 0")
    axis = prop.omega_vec / omega

    center = prop.rotation_center if rotation_center is None else np.asarray(rotation_center, float)
    ot = center - link.tx_pos
    orx = center - link.rx_pos
    r_t = np.asarray(np.linalg.norm(ot, axis=-1))
    r_r = np.asarray(np.linalg.norm(orx, axis=-1))
    if np.any(r_t == 0.0) or np.any(r_r == 0.0):
        raise GeometryError("rotation center coincides with a station position")

    ut = ot / r_t[..., None]
    ur = orx / r_r[..., None]
    cos_bt = np.clip(ut @ axis, -1.0, 1.0)
    cos_br = np.clip(ur @ axis, -1.0, 1.0)
    beta_t = np.arccos(cos_bt)
    beta_r = np.arccos(cos_br)
    beta = np.arccos(np.clip(np.sum(ut * ur, axis=-1), -1.0, 1.0))

    if basis is None:
        first_ot = ot.reshape(-1, 3)[0]
        first_or = orx.reshape(-1, 3)[0]
        basis = in_plane_basis(axis, first_ot, first_or)
    e1, e2 = basis

    phi_t = np.arctan2(ot @ e2, ot @ e1)
    phi_r = np.arctan2(orx @ e2, orx @ e1)

    a_b = np.sqrt(np.maximum(4.0 * np.cos(beta / 2.0) ** 2 - (cos_bt + cos_br) ** 2, 0.0))

    # phi_b as compute_phi_b, but tolerant of the fully on-axis case.
    sin_bt = np.sin(beta_t)
    sin_br = np.sin(beta_r)
    degenerate = (np.abs(sin_bt) <= _AXIS_TOL) & (np.abs(sin_br) <= _AXIS_TOL)
    dphi = phi_t - phi_r
    correction = np.arctan2(sin_br * np.sin(dphi), sin_bt + sin_br * np.cos(dphi))
    phi_b = np.where(degenerate, 0.0, wrap_angle(phi_t - correction))

    scalar = np.ndim(beta) == 0

    def _maybe_scalar(x):
        return float(x) if scalar else np.asarray(x)

    return DerivedAngles(
        omega=omega,
        r_t=_maybe_scalar(r_t),
        r_r=_maybe_scalar(r_r),
        r_o=_maybe_scalar(r_t + r_r),
        beta=_maybe_scalar(beta),
        beta_t=_maybe_scalar(beta_t),
        beta_r=_maybe_scalar(beta_r),
        phi_t=_maybe_scalar(phi_t),
        phi_r=_maybe_scalar(phi_r),
        phi_b=_maybe_scalar(phi_b),
        a_b=_maybe_scalar(a_b),
        e1=np.asarray(e1),
        e2=np.asarray(e2),
    )


def bistatic_range_rotating_point(ang: DerivedAngles, l, t, phase=None):
    """First-order bistatic range of a rotating point at blade radius ``l``.

    ``R_O - A_B * l * cos(omega*t + phase)`` with ``phase`` defaulting to
    ``ang.phi_b``.  All arguments broadcast; pass per-instant arrays in
    ``ang`` for a moving scene.
    """
    if phase is None:
        phase = ang.phi_b
    return ang.r_o - ang.a_b * np.asarray(l) * np.cos(ang.omega * np.asarray(t) + phase)


def exact_bistatic_range(link: BistaticLink, prop: PropellerGeometry, l, t, azimuth0=0.0):
    """Exact two-leg range of a blade point, no small-``l`` approximation.

    The point sits at in-plane azimuth ``omega*t + azimuth0`` (right-
    handed about the axis, measured from the derived ``e1``) and radius
    ``l``.  Serves as the oracle for the first-order model; the error is
    bounded by ``2*l**2 / min(r_t, r_r)``.
    """
    ang = derive_angles(link, prop)
    alpha = ang.omega * np.asarray(t, dtype=float) + azimuth0
    l = np.asarray(l, dtype=float)
    point = (
        prop.rotation_center
        + l[..., None] * (np.cos(alpha)[..., None] * ang.e1 + np.sin(alpha)[..., None] * ang.e2)
    )
    return np.linalg.norm(point - link.tx_pos, axis=-1) + np.linalg.norm(
        point - link.rx_pos, axis=-1
    )


def blade_azimuth_for_phase(ang: DerivedAngles, phase):
    """Physical in-plane azimuth at t=0 realizing a given model phase offset.

    With the point placed at ``alpha(t) = omega*t + phase + phi_b + pi``
    the exact range reduces to ``r_o - a_b*l*cos(omega*t + phase)`` to
    first order in ``l``.
    """
    return wrap_angle(np.asarray(phase) + ang.phi_b + np.pi)


def bistatic_range(tx_pos, rx_pos, points):
    """Plain two-leg bistatic range of arbitrary point(s)."""
    points = np.asarray(points, dtype=float)
    return np.linalg.norm(points - tx_pos, axis=-1) + np.linalg.norm(points - rx_pos, axis=-1)


def bistatic_angle(tx_pos, rx_pos, points):
    """Bistatic angle at ``points``: angle between directions to Tx and Rx."""
    points = np.asarray(points, dtype=float)
    to_tx = np.asarray(tx_pos, float) - points
    to_rx = np.asarray(rx_pos, float) - points
    nt = np.linalg.norm(to_tx, axis=-1)
    nr = np.linalg.norm(to_rx, axis=-1)
    if np.any(nt == 0.0) or np.any(nr == 0.0):
        raise GeometryError("bistatic angle undefined at a station position")
    cos_beta = np.clip(np.sum(to_tx * to_rx, axis=-1) / (nt * nr), -1.0, 1.0)
    return np.arccos(cos_beta)
