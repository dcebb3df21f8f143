"""Two-level Hamiltonian near a level crossing.

The Hamiltonian is ``h = (E0 + y0(t)) I + g sigma . y(t)`` with a
three-component field ``y = (y1, y2, y3)``. The crossing sits at
``y = 0``. Eigenvectors use the polar gauge

    v+ = (cos(theta/2) e^{-i phi},  sin(theta/2))
    v- = (sin(theta/2) e^{-i phi}, -cos(theta/2))

which is single valued around any loop that avoids the poles and the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ContractError, DegeneracyError, DomainError

R_MIN = 1e-14
"""Default degeneracy threshold on |y| (field units)."""

CLOSURE_TOL = 1e-12
DERIVATIVE_STEP = 1e-6
"""Central-difference step for path velocities, as a fraction of the period."""

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class Spinor:
    """Two-component complex state ``(upper, lower)``."""

    upper: complex
    lower: complex

    @classmethod
    def from_array(cls, arr) -> "Spinor":
        a = np.asarray(arr, dtype=complex).reshape(2)
        return cls(complex(a[0]), complex(a[1]))

    @property
    def array(self) -> np.ndarray:
        return np.array([self.upper, self.lower], dtype=complex)

    def norm(self) -> float:
        return math.sqrt(abs(self.upper) ** 2 + abs(self.lower) ** 2)

    def normalized(self) -> "Spinor":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero spinor")
        return Spinor(self.upper / n, self.lower / n)

    def vdot(self, other: "Spinor") -> complex:
        """Inner product <self|other>."""
        return self.upper.conjugate() * other.upper + self.lower.conjugate() * other.lower

    def __mul__(self, scalar) -> "Spinor":
        return Spinor(self.upper * scalar, self.lower * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class TwoLevelHamiltonian:
    """``scalar_shift * I + coupling_g * sigma . field`` at one instant."""

    scalar_shift: float
    coupling_g: float
    field: tuple

    def __post_init__(self):
        if not self.coupling_g > 0:
            raise ContractError(f"coupling_g must be positive, got {self.coupling_g}")
        object.__setattr__(self, "field", tuple(float(v) for v in self.field))

    @property
    def r(self) -> float:
        return math.sqrt(sum(v * v for v in self.field))

    def matrix(self) -> np.ndarray:
        y1, y2, y3 = self.field
        g = self.coupling_g
        return np.array(
            [
                [self.scalar_shift + g * y3, g * (y1 - 1j * y2)],
                [g * (y1 + 1j * y2), self.scalar_shift - g * y3],
            ],
            dtype=complex,
        )


@dataclass(frozen=True)
class PolarField:
    """Polar coordinates of a field vector with an unwrapped azimuth.

    ``winding`` is the branch index of ``phi``: the integer k with
    phi in (-pi + 2 pi k, pi + 2 pi k].
    """

    r: float
    theta: float
    phi: float
    winding: int = 0
    gauge_fixed_at_pole: bool = False

    def to_cartesian(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array(
            [
                self.r * st * math.cos(self.phi),
                self.r * st * math.sin(self.phi),
                self.r * math.cos(self.theta),
            ]
        )


def _branch_index(phi: float) -> int:
    return int(math.ceil((phi - math.pi) / (2 * math.pi)))


def to_polar(field, previous: Optional[PolarField] = None, r_min: float = R_MIN) -> PolarField:
    """Convert a field vector to polar coordinates.

    With ``previous`` the azimuth is placed on the branch continuous with it.
    At the poles the azimuth is undefined; it is carried over from
    ``previous`` (or set to 0) and the result is flagged.
    """
    y1, y2, y3 = (float(v) for v in field)
    r = math.sqrt(y1 * y1 + y2 * y2 + y3 * y3)
    if r <= r_min:
        raise DegeneracyError(f"field magnitude {r:.3e} is at the crossing point", r=r)
    rho = math.hypot(y1, y2)
    theta = math.atan2(rho, y3)
    if rho == 0.0:
        phi = previous.phi if previous is not None else 0.0
        return PolarField(r, theta, phi, _branch_index(phi), gauge_fixed_at_pole=True)
    raw = math.atan2(y2, y1)
    if previous is None:
        phi = raw
    else:
        d = raw - previous.phi
        phi = previous.phi + (d - 2 * math.pi * math.floor((d + math.pi) / (2 * math.pi)))
    return PolarField(r, theta, phi, _branch_index(phi))


def from_polar(p: PolarField) -> np.ndarray:
    return p.to_cartesian()


class Eigensystem(NamedTuple):
    E_plus: float
    E_minus: float
    v_plus: Spinor
    v_minus: Spinor


def polar_eigenvectors(theta, phi):
    """Polar-gauge eigenvectors as arrays of shape (..., 2)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    e = np.exp(-1j * phi)
    v_plus = np.stack([c * e, s + 0j], axis=-1)
    v_minus = np.stack([s * e, -c + 0j], axis=-1)
    return v_plus, v_minus


def eigensystem(
    h: TwoLevelHamiltonian, r_min: float = R_MIN, previous: Optional[PolarField] = None
) -> Eigensystem:
    """Exact eigenpairs of ``h``; ``E+- = shift +- g r`` with polar-gauge vectors."""
    p = to_polar(h.field, previous=previous, r_min=r_min)
    vp, vm = polar_eigenvectors(p.theta, p.phi)
    gr = h.coupling_g * p.r
    return Eigensystem(
        h.scalar_shift + gr,
        h.scalar_shift - gr,
        Spinor.from_array(vp),
        Spinor.from_array(vm),
    )


@dataclass(frozen=True)
class ParameterPath:
    """A drive protocol ``t -> (y0, y1, y2, y3)`` on ``[0, period_T]``.

    ``sampler`` and the optional ``derivative`` accept an array of times and
    return an array of shape (4, n). The coupling ``g`` and the constant
    offset ``E0`` travel with the path so that a path fully determines the
    Hamiltonian. ``breakpoints`` lists interior times where the path is
    only C0/C1; integrators put grid nodes on them.
    """

    period_T: float
    sampler: Callable[[np.ndarray], np.ndarray]
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    closed: bool = True
    coupling_g: float = 1.0
    energy_offset: float = 0.0
    smoothness_hint: str = "C1"
    name: str = "path"
    meta: dict = dc_field(default_factory=dict, compare=False)
    breakpoints: tuple = ()

    def __post_init__(self):
        if not self.period_T > 0:
            raise ContractError(f"period_T must be positive, got {self.period_T}")
        if not self.coupling_g > 0:
            raise ContractError(f"coupling_g must be positive, got {self.coupling_g}")
        if self.closed:
            ends = self.sample(np.array([0.0, self.period_T]))
            mismatch = float(np.linalg.norm(ends[:, 1] - ends[:, 0]))
            if mismatch >= CLOSURE_TOL * max(1.0, float(np.abs(ends).max())):
                raise ContractError(f"path marked closed but |y(T) - y(0)| = {mismatch:.3e}")

    def sample(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.asarray(self.sampler(t), dtype=float)
        return np.broadcast_to(out, (4, t.size)).copy() if out.shape != (4, t.size) else out

    def velocity(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.derivative is not None:
            out = np.asarray(self.derivative(t), dtype=float)
            return np.broadcast_to(out, (4, t.size)).copy() if out.shape != (4, t.size) else out
        h = self.period_T * DERIVATIVE_STEP
        return (self.sample(t + h) - self.sample(t - h)) / (2 * h)

    def field(self, t) -> np.ndarray:
        return self.sample(t)[1:]

    def scaled(self, epsilon: float) -> "ParameterPath":
        """Uniform rescaling ``y_k -> epsilon y_k`` of the three field components."""
        scale = np.array([1.0, epsilon, epsilon, epsilon])[:, None]
        base_s, base_d = self.sampler, self.derivative
        deriv = None if base_d is None else (lambda t: scale * base_d(t))
        return ParameterPath(
            self.period_T,
            lambda t: scale * base_s(t),
            deriv,
            self.closed,
            self.coupling_g,
            self.energy_offset,
            self.smoothness_hint,
            f"{self.name}*{epsilon:g}",
            dict(self.meta),
            self.breakpoints,
        )

    def reparametrized(self, s, s_dot) -> "ParameterPath":
        """Compose with a monotone time map ``s: [0,T] -> [0,T]``.

        Breakpoints are not carried over; compose only smooth paths.
        """
        base = self

        def sampler(t):
            return base.sample(s(t))

        def derivative(t):
            return base.velocity(s(t)) * s_dot(t)

        return ParameterPath(
            self.period_T, sampler, derivative, self.closed, self.coupling_g,
            self.energy_offset, self.smoothness_hint, f"{self.name}@s", dict(self.meta),
        )


def hamiltonian_at(path: ParameterPath, t: float) -> TwoLevelHamiltonian:
    if not 0.0 <= t <= path.period_T:
        raise DomainError(f"t={t} outside [0, {path.period_T}]")
    y = path.sample(t)[:, 0]
    return TwoLevelHamiltonian(path.energy_offset + y[0], path.coupling_g, tuple(y[1:]))


def constant_path(field, period_T: float = 1.0, y0: float = 0.0, **kw) -> ParameterPath:
    v = np.array([y0, *field], dtype=float)[:, None]
    return ParameterPath(
        period_T,
        lambda t: np.repeat(v, np.size(t), axis=1),
        lambda t: np.zeros((4, np.size(t))),
        **kw,
    )


def fourier_path(period_T: float, mean, cos_coeffs=None, sin_coeffs=None, **kw) -> ParameterPath:
    """Closed path ``y_k(t) = mean_k + sum_n a_kn cos(n w t) + b_kn sin(n w t)``.

    ``mean`` has four entries (y0, y1, y2, y3); coefficient arrays have
    shape (4, n_harmonics).
    """
    mean = np.asarray(mean, dtype=float).reshape(4, 1)
    a = np.zeros((4, 0)) if cos_coeffs is None else np.asarray(cos_coeffs, dtype=float)
    b = np.zeros_like(a) if sin_coeffs is None else np.asarray(sin_coeffs, dtype=float)
    if a.shape != b.shape or a.shape[0] != 4:
        raise ContractError("Fourier coefficient arrays must both have shape (4, n)")
    w = 2 * np.pi / period_T
    n = np.arange(1, a.shape[1] + 1)

    def sampler(t):
        arg = w * np.outer(n, t)
        return mean + a @ np.cos(arg) + b @ np.sin(arg)

    def derivative(t):
        arg = w * np.outer(n, t)
        nw = (w * n)[:, None]
        return (b @ (nw * np.cos(arg))) - (a @ (nw * np.sin(arg)))

    meta = kw.pop("meta", {})
    meta = {**meta, "fourier": {"mean": mean.ravel().tolist(), "cos": a.tolist(), "sin": b.tolist()}}
    return ParameterPath(period_T, sampler, derivative, meta=meta, **kw)


class PolarTrack(NamedTuple):
    r: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    theta_dot: np.ndarray
    phi_dot: np.ndarray
    r_dot: np.ndarray


def polar_track(path: ParameterPath, t, r_min: float = R_MIN, need_azimuth: bool = True) -> PolarTrack:
    """Polar coordinates and their rates along ``path`` at the times ``t``.

    ``phi`` is unwrapped along ``t`` in the given order. Raises
    ``SingularityError`` if the path reaches the crossing or, when the
    azimuth is needed, a pole.
    """
    from .errors import SingularityError

    t = np.atleast_1d(np.asarray(t, dtype=float))
    y = path.sample(t)[1:]
    yd = path.velocity(t)[1:]
    r = np.sqrt(np.sum(y * y, axis=0))
    rho2 = y[0] ** 2 + y[1] ** 2
    bad = r <= r_min
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SingularityError(f"path reaches the crossing at t={t[i]:.6g}", r=float(r[i]), t=float(t[i]))
    if need_azimuth:
        pole = rho2 <= (r_min * np.maximum(r, 1.0)) ** 2
        if np.any(pole):
            i = int(np.argmax(pole))
            raise SingularityError(f"path crosses a pole (theta in {{0, pi}}) at t={t[i]:.6g}", r=float(r[i]), t=float(t[i]))
    rho = np.sqrt(rho2)
    theta = np.arctan2(rho, y[2])
    phi = np.unwrap(np.arctan2(y[1], y[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_dot = (y[0] * yd[1] - y[1] * yd[0]) / rho2
        r_dot = np.sum(y * yd, axis=0) / r
        rho_dot = (y[0] * yd[0] + y[1] * yd[1]) / rho
        theta_dot = (y[2] * rho_dot - rho * yd[2]) / r**2
    if not need_azimuth:
        phi_dot = np.where(rho2 > 0, phi_dot, 0.0)
        theta_dot = np.where(rho2 > 0, theta_dot, 0.0)
    return PolarTrack(r, theta, phi, theta_dot, phi_dot, r_dot)
