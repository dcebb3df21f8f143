"""Unitary time evolution in the fixed, instantaneous-eigenframe and rotated frames.

Every Hamiltonian handled here is a 2x2 Hermitian matrix written in Pauli
form ``a I + bx sx + by sy + bz sz``. Three representations are supported:

``original``
    ``h = (E0 + y0) I + g sigma . y`` in the fixed basis.
``b``
    coefficients on the polar-gauge eigenvectors, ``psi = U_X b`` with
    ``U_X = [v+, v-]``. The generator is ``diag(E+, E-) - hbar A`` where
    ``A`` is the full connection matrix, off-diagonal entries included.
``c``
    ``b = U_theta c`` with ``U_theta`` the rotation by theta/2 about y.
    The theta_dot pieces of the connection cancel and only ``-hbar phi_dot``
    on the (+,+) entry survives, so ``psi = diag(e^{-i phi}, -1) c``.

The fixed-grid integrators apply exact 2x2 exponentials through
:mod:`berrycross.kernels`, so every step is unitary to rounding. Step
counts are chosen by whole-trajectory step doubling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.integrate import simpson, solve_ivp

from . import kernels
from .errors import ContractError, IntegrationError
from .model import R_MIN, ParameterPath, Spinor, polar_eigenvectors, polar_track

INTEGRATORS = ("midpoint_exponential", "magnus4", "rk_adaptive")
BASES = ("original", "b", "c")
_ORDER = {"midpoint_exponential": 2, "magnus4": 4}
_GAUSS = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)


@dataclass(frozen=True)
class EvolutionConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: Optional[float] = None
    integrator: str = "magnus4"
    hbar: float = 1.0
    max_steps: int = 2**20
    min_steps: int = 16
    record_trajectory: bool = False
    r_min: float = R_MIN

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ContractError(f"unknown integrator {self.integrator!r}; choose from {INTEGRATORS}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ContractError("tolerances must be positive")
        if not self.hbar > 0:
            raise ContractError("hbar must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise ContractError("max_step must be positive")

    def step_cap(self, period_T: float) -> float:
        """Largest allowed step; never more than period_T / 16."""
        cap = period_T / 16
        return cap if self.max_step is None else min(cap, self.max_step)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    original: np.ndarray

    def spinor(self, k: int) -> Spinor:
        return Spinor.from_array(self.original[k])


@dataclass(frozen=True)
class EvolutionResult:
    """Outcome of one evolution run.

    ``final_state`` is in the run's own basis; ``final_original`` is the
    same state mapped back to the fixed basis. ``dynamical_integral`` is
    ``(1/hbar) * integral <psi|h|psi> dt`` of the physical Hamiltonian.
    """

    final_state: Spinor
    final_original: Spinor
    dynamical_integral: float
    norm_drift: float
    steps: int
    basis: str
    integrator: str
    error_estimate: float
    t_start: float
    t_end: float
    trajectory: Optional[Trajectory] = field(default=None, repr=False)

    def cyclicity_fidelity(self, psi0: Spinor) -> float:
        return abs(psi0.vdot(self.final_original))


# --- generators -----------------------------------------------------------

def _generator(path: ParameterPath, basis: str, variant: str, t: np.ndarray, hbar: float, r_min: float):
    """Pauli coefficients (4, n) of the generator that drives ``basis``."""
    y = path.sample(t)
    shift = path.energy_offset + y[0]
    g = path.coupling_g
    if basis == "original":
        return np.vstack([shift, g * y[1], g * y[2], g * y[3]])
    pt = polar_track(path, t, r_min=r_min)
    gr = g * pt.r
    half_phi = 0.5 * hbar * pt.phi_dot
    a = shift - half_phi
    if basis == "b":
        bx = -np.sin(pt.theta) * half_phi
        by = 0.5 * hbar * pt.theta_dot
        bz = gr - np.cos(pt.theta) * half_phi
        if variant == "adiabatic":
            bx = np.zeros_like(bx)
            by = np.zeros_like(by)
        return np.vstack([a, bx, by, bz])
    if basis == "c":
        if variant == "near_crossing":
            return np.vstack([a, np.zeros_like(a), np.zeros_like(a), -half_phi])
        return np.vstack([a, -gr * np.sin(pt.theta), np.zeros_like(a), gr * np.cos(pt.theta) - half_phi])
    raise ContractError(f"unknown basis {basis!r}")


def _energy_operator(path: ParameterPath, basis: str, t: np.ndarray, r_min: float):
    """Pauli coefficients of the physical Hamiltonian expressed in ``basis``."""
    y = path.sample(t)
    shift = path.energy_offset + y[0]
    g = path.coupling_g
    if basis == "original":
        return np.vstack([shift, g * y[1], g * y[2], g * y[3]])
    pt = polar_track(path, t, r_min=r_min, need_azimuth=False)
    gr = g * pt.r
    zero = np.zeros_like(gr)
    if basis == "b":
        return np.vstack([shift, zero, zero, gr])
    return np.vstack([shift, -gr * np.sin(pt.theta), zero, gr * np.cos(pt.theta)])


def _expectation(op: np.ndarray, states: np.ndarray) -> np.ndarray:
    u, d = states[:, 0], states[:, 1]
    pu, pd = np.abs(u) ** 2, np.abs(d) ** 2
    cross = np.conj(u) * d
    return op[0] * (pu + pd) + 2 * op[1] * cross.real + 2 * op[2] * cross.imag + op[3] * (pu - pd)


def basis_map(path: ParameterPath, basis: str, t, r_min: float = R_MIN) -> np.ndarray:
    """Matrices (n, 2, 2) taking ``basis`` coefficients to the fixed basis."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if basis == "original":
        return np.broadcast_to(np.eye(2, dtype=complex), (t.size, 2, 2)).copy()
    pt = polar_track(path, t, r_min=r_min)
    if basis == "b":
        vp, vm = polar_eigenvectors(pt.theta, pt.phi)
        return np.stack([vp, vm], axis=-1)
    if basis == "c":
        out = np.zeros((t.size, 2, 2), dtype=complex)
        out[:, 0, 0] = np.exp(-1j * pt.phi)
        out[:, 1, 1] = -1.0
        return out
    raise ContractError(f"unknown basis {basis!r}")


def to_basis(path: ParameterPath, basis: str, psi: Spinor, t: float, r_min: float = R_MIN) -> Spinor:
    """Coefficients of the fixed-basis state ``psi`` in ``basis`` at time ``t``."""
    m = basis_map(path, basis, [t], r_min)[0]
    return Spinor.from_array(m.conj().T @ psi.array)


def to_original(path: ParameterPath, basis: str, coeffs: Spinor, t: float, r_min: float = R_MIN) -> Spinor:
    m = basis_map(path, basis, [t], r_min)[0]
    return Spinor.from_array(m @ coeffs.array)


def theta_rotation(theta) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def c_generator_by_transformation(path: ParameterPath, t: float, hbar: float = 1.0, r_min: float = R_MIN):
    """Rotate the b-frame generator into the c frame by explicit matrix algebra.

    Returns ``(h_c, geometric)`` where ``geometric`` collects the connection
    term ``-hbar U^dag A U`` and the induced ``-i hbar U^dag dU/dt``. The
    theta_dot contributions of the two cancel, leaving
    ``-hbar phi_dot`` on the (+,+) entry.
    """
    pt = polar_track(path, [t], r_min=r_min)
    theta, theta_dot, phi_dot = pt.theta[0], pt.theta_dot[0], pt.phi_dot[0]
    y = path.sample([t])[:, 0]
    gr = path.coupling_g * pt.r[0]
    shift = path.energy_offset + y[0]
    c, s = np.cos(theta), np.sin(theta)
    pm = 0.5 * s * phi_dot + 0.5j * theta_dot
    conn = np.array([[0.5 * (1 + c) * phi_dot, pm], [np.conj(pm), 0.5 * (1 - c) * phi_dot]])
    u = theta_rotation(theta)
    ch, sh = np.cos(theta / 2), np.sin(theta / 2)
    du = 0.5 * theta_dot * np.array([[-sh, -ch], [ch, -sh]], dtype=complex)
    energy = np.diag([shift + gr, shift - gr]).astype(complex)
    geometric = -hbar * (u.conj().T @ conn @ u) - 1j * hbar * (u.conj().T @ du)
    return u.conj().T @ energy @ u + geometric, geometric


# --- fixed-grid exponential integrators -------------------------------------

def _step_exponents(gen_fn, t0: float, dt: float, n: int, order: int, hbar: float) -> np.ndarray:
    starts = t0 + dt * np.arange(n)
    if order == 2:
        g = gen_fn(starts + 0.5 * dt)
        return (g * (dt / hbar)).T.copy()
    g1 = gen_fn(starts + _GAUSS[0] * dt)
    g2 = gen_fn(starts + _GAUSS[1] * dt)
    out = 0.5 * dt * (g1 + g2)
    # commutator correction: (sqrt(3) dt^2 / 6 hbar) * (b2 x b1)
    cross = np.cross(g2[1:].T, g1[1:].T).T
    out[1:] += (math.sqrt(3) * dt * dt / (6 * hbar)) * cross
    return (out / hbar).T.copy()


def _edges(t0: float, t1: float, breakpoints) -> list:
    lo, hi = min(t0, t1), max(t0, t1)
    inner = sorted(float(b) for b in breakpoints if lo < b < hi)
    return [t0] + (inner if t1 > t0 else inner[::-1]) + [t1]


def _plan(edges: list, n: int) -> list:
    """Split ``n`` steps over the segments in proportion to their length (each even)."""
    span = abs(edges[-1] - edges[0])
    counts = []
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(2, int(math.ceil(n * abs(b - a) / span)))
        counts.append(k + k % 2)
    return counts


def _run_grid(gen_fn, energy_fn, psi0: np.ndarray, edges: list, counts: list, order: int, hbar: float):
    gens, times = [], [np.array([edges[0]])]
    for (a, b), k in zip(zip(edges[:-1], edges[1:]), counts):
        dt = (b - a) / k
        gens.append(_step_exponents(gen_fn, a, dt, k, order, hbar))
        seg = a + dt * np.arange(1, k + 1)
        seg[-1] = b
        times.append(seg)
    gens = np.ascontiguousarray(np.concatenate(gens))
    times = np.concatenate(times)
    states = kernels.propagate(gens, complex(psi0[0]), complex(psi0[1]))
    energy = _expectation(energy_fn(times), states)
    dyn, i = 0.0, 0
    for k in counts:
        dyn += float(simpson(energy[i:i + k + 1], x=times[i:i + k + 1]))
        i += k
    return times, states, dyn / hbar


def _controlled(gen_fn, energy_fn, psi0, t0, t1, cfg: EvolutionConfig, period_T: float, breakpoints=()):
    order = _ORDER[cfg.integrator]
    span = abs(t1 - t0)
    edges = _edges(t0, t1, breakpoints)
    n = max(cfg.min_steps, int(math.ceil(span / cfg.step_cap(period_T))))
    counts = _plan(edges, n)
    coarse = _run_grid(gen_fn, energy_fn, psi0, edges, counts, order, cfg.hbar)
    denom = 2**order - 1
    while True:
        fine_counts = [2 * k for k in counts]
        total = sum(fine_counts)
        if total > cfg.max_steps:
            raise IntegrationError(
                f"step budget of {cfg.max_steps} exhausted before reaching tolerance "
                f"(last step {span / sum(counts):.3e})",
                t_reached=t0,
                steps=sum(counts),
            )
        if span / total < period_T * 1e-12:
            raise IntegrationError("step size underflow", t_reached=t0, steps=total)
        fine = _run_grid(gen_fn, energy_fn, psi0, edges, fine_counts, order, cfg.hbar)
        psi_f, psi_c = fine[1][-1], coarse[1][-1]
        scale = cfg.abs_tol + cfg.rel_tol * float(np.max(np.abs(psi_f)))
        err = float(np.max(np.abs(psi_f - psi_c))) / denom
        dyn_err = abs(fine[2] - coarse[2]) / denom
        dyn_scale = cfg.abs_tol + cfg.rel_tol * max(1.0, abs(fine[2]))
        ratio = max(err / scale, dyn_err / dyn_scale)
        if ratio <= 1.0:
            return fine, err, total
        need = total * (1.2 * ratio) ** (1.0 / order)
        factor = 1
        while 2 * factor * total < need and 4 * factor * total <= cfg.max_steps:
            factor *= 2
        if factor == 1:
            counts, coarse = fine_counts, fine
        else:
            counts = [k * factor for k in fine_counts]
            coarse = _run_grid(gen_fn, energy_fn, psi0, edges, counts, order, cfg.hbar)


def _run_rk(gen_fn, energy_fn, psi0, t0, t1, cfg: EvolutionConfig, period_T: float):
    hbar = cfg.hbar

    def rhs(t, z):
        tt = np.array([t])
        a, bx, by, bz = gen_fn(tt)[:, 0]
        u, d = z[0], z[1]
        hu = (a + bz) * u + (bx - 1j * by) * d
        hd = (bx + 1j * by) * u + (a - bz) * d
        phys = _expectation(energy_fn(tt), z[None, :2])[0]
        return np.array([-1j * hu / hbar, -1j * hd / hbar, phys / hbar], dtype=complex)

    z0 = np.array([psi0[0], psi0[1], 0.0], dtype=complex)
    sol = solve_ivp(
        rhs,
        (t0, t1),
        z0,
        method="DOP853",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.step_cap(period_T),
    )
    if not sol.success:
        t_reached = float(sol.t[-1]) if sol.t.size else t0
        raise IntegrationError(f"adaptive integration failed: {sol.message}", t_reached=t_reached)
    states = sol.y[:2].T.copy()
    return (sol.t, states, float(sol.y[2, -1].real)), float("nan"), sol.t.size - 1


def _evolve(path, basis, variant, psi0: Spinor, cfg: EvolutionConfig, t_start, t_end) -> EvolutionResult:
    if cfg is None:
        cfg = EvolutionConfig()
    t0 = 0.0 if t_start is None else float(t_start)
    t1 = path.period_T if t_end is None else float(t_end)

    def gen_fn(t):
        return _generator(path, basis, variant, t, cfg.hbar, cfg.r_min)

    def energy_fn(t):
        return _energy_operator(path, basis, t, cfg.r_min)

    start = psi0.array
    if cfg.integrator == "rk_adaptive":
        (times, states, dyn), err, steps = _run_rk(gen_fn, energy_fn, start, t0, t1, cfg, path.period_T)
    else:
        (times, states, dyn), err, steps = _controlled(gen_fn, energy_fn, start, t0, t1, cfg, path.period_T,
                                                       path.breakpoints)
    final = Spinor.from_array(states[-1])
    final_orig = final if basis == "original" else to_original(path, basis, final, t1, cfg.r_min)
    traj = None
    if cfg.record_trajectory:
        if basis == "original":
            orig = states
        else:
            orig = np.einsum("nij,nj->ni", basis_map(path, basis, times, cfg.r_min), states)
        traj = Trajectory(times, states, orig)
    return EvolutionResult(
        final_state=final,
        final_original=final_orig,
        dynamical_integral=dyn,
        norm_drift=abs(final.norm() - psi0.norm()),
        steps=steps,
        basis=basis,
        integrator=cfg.integrator,
        error_estimate=err,
        t_start=t0,
        t_end=t1,
        trajectory=traj,
    )


def _check_normalized(psi: Spinor, what: str):
    if abs(psi.norm() - 1.0) > 1e-12:
        raise ContractError(f"{what} must be normalized (|psi| = {psi.norm():.15f})")


def evolve_exact(path: ParameterPath, psi0: Spinor, cfg: Optional[EvolutionConfig] = None,
                 t_start: Optional[float] = None, t_end: Optional[float] = None) -> EvolutionResult:
    """Integrate ``i hbar dpsi/dt = h(t) psi`` in the fixed basis.

    ``t_end < t_start`` integrates backwards in time.
    """
    _check_normalized(psi0, "psi0")
    return _evolve(path, "original", "full", psi0, cfg or EvolutionConfig(), t_start, t_end)


def evolve_effective_b(path: ParameterPath, coeffs0: Spinor, cfg: Optional[EvolutionConfig] = None,
                       off_diagonal: bool = True, t_start=None, t_end=None) -> EvolutionResult:
    """Evolve eigenframe coefficients under ``diag(E+, E-) - hbar A``.

    With ``off_diagonal=False`` only the diagonal connection is kept, which
    is the adiabatic approximation.
    """
    _check_normalized(coeffs0, "coeffs0")
    variant = "full" if off_diagonal else "adiabatic"
    return _evolve(path, "b", variant, coeffs0, cfg or EvolutionConfig(), t_start, t_end)


def evolve_effective_c(path: ParameterPath, coeffs0: Spinor, cfg: Optional[EvolutionConfig] = None,
                       near_crossing: bool = False, t_start=None, t_end=None) -> EvolutionResult:
    """Evolve rotated-frame coefficients.

    The generator is ``(E0+y0) I + g r (cos theta sz - sin theta sx) - hbar phi_dot P+``
    with ``P+`` the projector on the first component. ``near_crossing=True``
    drops every ``g r`` term, keeping only the geometric piece.
    """
    _check_normalized(coeffs0, "coeffs0")
    variant = "near_crossing" if near_crossing else "full"
    return _evolve(path, "c", variant, coeffs0, cfg or EvolutionConfig(), t_start, t_end)


def evolve_adiabatic(path: ParameterPath, level: str = "minus", cfg: Optional[EvolutionConfig] = None,
                     quadrature_n: int = 4096):
    """Adiabatic phase of one level around a closed loop.

    Returns ``(phase_total, phase_geometric)``, both unwrapped, with
    ``phase_total = -(1/hbar) integral E_level dt + integral A_level,level dt``.
    """
    if level not in ("plus", "minus"):
        raise ContractError(f"level must be 'plus' or 'minus', got {level!r}")
    if not path.closed:
        raise ContractError("adiabatic loop phase requires a closed path")
    cfg = cfg or EvolutionConfig()
    n = max(8, int(quadrature_n))
    n += n % 2
    t = np.linspace(0.0, path.period_T, n + 1)
    pt = polar_track(path, t, r_min=cfg.r_min)
    y = path.sample(t)
    sign = 1.0 if level == "plus" else -1.0
    energy = path.energy_offset + y[0] + sign * path.coupling_g * pt.r
    conn = 0.5 * (1 + sign * np.cos(pt.theta)) * pt.phi_dot
    geometric = float(simpson(conn, x=t))
    dynamical = -float(simpson(energy, x=t)) / cfg.hbar
    return dynamical + geometric, geometric


def evolve_fixed(path: ParameterPath, psi0: Spinor, n_steps: int, integrator: str = "midpoint_exponential",
                 hbar: float = 1.0, r_min: float = R_MIN) -> EvolutionResult:
    """Fixed-grid exact evolution over one period with no error control.

    Meant for convergence studies; ``n_steps`` is spread over the path's
    smooth segments.
    """
    if integrator not in _ORDER:
        raise ContractError(f"fixed-grid runs support {tuple(_ORDER)}, got {integrator!r}")
    if n_steps < 2:
        raise ContractError("n_steps must be at least 2")
    _check_normalized(psi0, "psi0")

    def gen_fn(t):
        return _generator(path, "original", "full", t, hbar, r_min)

    def energy_fn(t):
        return _energy_operator(path, "original", t, r_min)

    edges = _edges(0.0, path.period_T, path.breakpoints)
    counts = _plan(edges, n_steps)
    _, states, dyn = _run_grid(gen_fn, energy_fn, psi0.array, edges, counts, _ORDER[integrator], hbar)
    final = Spinor.from_array(states[-1])
    return EvolutionResult(final, final, dyn, abs(final.norm() - psi0.norm()), sum(counts), "original",
                           integrator, float("nan"), 0.0, path.period_T)


def with_config(cfg: EvolutionConfig, **changes) -> EvolutionConfig:
    return replace(cfg, **changes)
