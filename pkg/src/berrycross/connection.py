"""Geometric terms ``<v_m| i d/dt |v_n>`` of the instantaneous eigenframe.

Entries are in rad/time; multiply by hbar for the energy-valued terms that
enter the effective Hamiltonian.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import simpson

from .errors import ContractError, DegeneracyError, SingularityError, StencilError
from .model import R_MIN, ParameterPath, polar_eigenvectors, polar_track

LEVELS = ("+", "-")


@dataclass(frozen=True)
class ConnectionMatrix:
    """2x2 matrix of connection values, rows/columns ordered (+, -)."""

    entries: np.ndarray

    def __getitem__(self, key):
        m, n = key
        return complex(self.entries[LEVELS.index(m), LEVELS.index(n)])

    @property
    def pp(self) -> complex:
        return complex(self.entries[0, 0])

    @property
    def pm(self) -> complex:
        return complex(self.entries[0, 1])

    @property
    def mp(self) -> complex:
        return complex(self.entries[1, 0])

    @property
    def mm(self) -> complex:
        return complex(self.entries[1, 1])

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        e = self.entries
        return bool(np.max(np.abs(e - e.conj().T)) <= tol and np.max(np.abs(np.diag(e).imag)) <= tol)

    def max_deviation(self, other: "ConnectionMatrix") -> float:
        return float(np.max(np.abs(self.entries - other.entries)))


def connection_analytic(theta, theta_dot, phi_dot) -> ConnectionMatrix:
    """Closed-form connection in the polar gauge."""
    c, s = np.cos(theta), np.sin(theta)
    pm = 0.5 * s * phi_dot + 0.5j * theta_dot
    return ConnectionMatrix(
        np.array(
            [
                [0.5 * (1 + c) * phi_dot, pm],
                [np.conj(pm), 0.5 * (1 - c) * phi_dot],
            ],
            dtype=complex,
        )
    )


def _frame_at(path: ParameterPath, t: np.ndarray, r_min: float):
    y = path.field(t)
    r = np.sqrt(np.sum(y * y, axis=0))
    rho = np.hypot(y[0], y[1])
    if np.any(r <= r_min) or np.any(rho <= r_min * np.maximum(r, 1.0)):
        raise StencilError(
            f"eigenframe undefined inside the stencil around t={t[1]:.6g}",
            r=float(r.min()),
            t=float(t[1]),
        )
    return polar_eigenvectors(np.arctan2(rho, y[2]), np.arctan2(y[1], y[0]))


def connection_numeric(
    path: ParameterPath, t: float, dt: float, gauge: str = "polar", r_min: float = R_MIN
) -> ConnectionMatrix:
    """Central-difference connection ``<v_m(t)| i (v_n(t+dt) - v_n(t-dt)) / 2dt>``.

    ``gauge="polar"`` uses the closed-form eigenvector phases, which is the
    gauge the analytic formula refers to. ``gauge="parallel"`` rephases the
    neighbouring eigenvectors so each overlap ``<v_n(t)|v_n(t+-dt)>`` is
    real and positive, which removes the diagonal entries to O(dt^2).
    """
    if gauge not in ("polar", "parallel"):
        raise ValueError(f"unknown gauge {gauge!r}")
    ts = np.array([t - dt, t, t + dt], dtype=float)
    vp, vm = _frame_at(path, ts, r_min)
    frame = np.stack([vp, vm], axis=1)  # (3 times, level, component)
    if gauge == "parallel":
        for k in (0, 2):
            ov = np.einsum("lc,lc->l", frame[1].conj(), frame[k])
            frame[k] = frame[k] * (ov.conj() / np.abs(ov))[:, None]
    deriv = (frame[2] - frame[0]) / (2 * dt)
    entries = 1j * frame[1].conj() @ deriv.T
    return ConnectionMatrix(entries)


class LoopIntegral(NamedTuple):
    gamma_plus: float
    gamma_minus: float
    solid_angle: float
    samples: int
    winding: int


def _polygon_area(u: np.ndarray, pole: np.ndarray) -> float:
    a = u[:, :-1]
    b = u[:, 1:]
    num = pole @ np.cross(a.T, b.T).T
    den = 1.0 + pole @ a + pole @ b + np.sum(a * b, axis=0)
    return float(np.sum(2.0 * np.arctan2(num, den)))


def solid_angle(directions: np.ndarray, winding: int) -> float:
    """Signed solid angle ``integral (1 - cos theta) dphi`` of a closed loop of unit vectors.

    ``directions`` has shape (3, n) with the first and last columns equal.
    The sum of spherical-triangle excesses against the pole converges as
    O(n^-2); one Richardson step using every other sample removes that
    leading term. Loops lying mostly in the southern hemisphere are measured
    against the south pole and shifted by ``4 pi winding``.
    """
    north = np.array([0.0, 0.0, 1.0])
    # reference pole: the one nearer the loop; the triangle formula loses
    # precision when a sample sits close to the antipode of the reference
    use_south = bool(-np.min(directions[2]) > np.max(directions[2]))
    pole = -north if use_south else north

    def area(u):
        omega = _polygon_area(u, pole)
        return omega + 4 * np.pi * winding if use_south else omega

    n = directions.shape[1] - 1
    fine = area(directions)
    if n % 2 == 0 and n >= 8:
        coarse = area(directions[:, ::2])
        return (4 * fine - coarse) / 3
    return fine


def _even(n: int) -> int:
    return n + (n % 2)


def berry_loop_integral(path: ParameterPath, quadrature_n: int = 4096, r_min: float = R_MIN) -> LoopIntegral:
    """Diagonal connection integrals around a closed loop, plus its solid angle.

    ``gamma_minus`` is the integral of ``(1 - cos theta) phi_dot / 2``, the
    lower-level geometric phase in the adiabatic limit.
    """
    if not path.closed:
        raise ContractError("loop integral requires a closed path")
    n = _even(max(int(quadrature_n), 8))
    t = np.linspace(0.0, path.period_T, n + 1)
    pt = polar_track(path, t, r_min=r_min)
    cos_t = np.cos(pt.theta)
    g_minus = simpson(0.5 * (1 - cos_t) * pt.phi_dot, x=t)
    g_plus = simpson(0.5 * (1 + cos_t) * pt.phi_dot, x=t)
    winding = int(round((pt.phi[-1] - pt.phi[0]) / (2 * np.pi)))
    y = path.field(t)
    u = y / pt.r
    u[:, -1] = u[:, 0]
    omega = solid_angle(u, winding)
    return LoopIntegral(float(g_plus), float(g_minus), float(omega), n + 1, winding)


def scaling_check(path: ParameterPath, epsilon: float, quadrature_n: int = 4096, r_min: float = R_MIN):
    """Lower-level loop integral before and after ``y_k -> epsilon y_k``."""
    if not epsilon > 0:
        raise ContractError(f"epsilon must be positive, got {epsilon}")
    scaled = path.scaled(epsilon)
    try:
        after = berry_loop_integral(scaled, quadrature_n, r_min=r_min)
    except SingularityError as exc:
        raise DegeneracyError(f"scaled path reaches the degeneracy threshold: {exc}", r=exc.r) from exc
    before = berry_loop_integral(path, quadrature_n, r_min=r_min)
    return before.gamma_minus, after.gamma_minus


def connection_along(path: ParameterPath, t, r_min: float = R_MIN) -> np.ndarray:
    """Analytic connection entries along a path, shape (n, 2, 2)."""
    pt = polar_track(path, t, r_min=r_min)
    c, s = np.cos(pt.theta), np.sin(pt.theta)
    pm = 0.5 * s * pt.phi_dot + 0.5j * pt.theta_dot
    out = np.empty((np.size(t), 2, 2), dtype=complex)
    out[:, 0, 0] = 0.5 * (1 + c) * pt.phi_dot
    out[:, 1, 1] = 0.5 * (1 - c) * pt.phi_dot
    out[:, 0, 1] = pm
    out[:, 1, 0] = np.conj(pm)
    return out
