"""Finite-T phase bookkeeping for cyclic runs.

The total phase of a run is ``arg <psi(0)|psi(T)>``; removing the dynamical
part ``-(1/hbar) integral <psi|h|psi> dt`` leaves the geometric phase
(the Aharonov-Anandan split). In the adiabatic limit this reduces to the
loop integral of the diagonal connection, and for a frozen state it
vanishes.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ContractError, DegeneracyError, SingularityError
from .evolution import EvolutionResult
from .model import R_MIN, ParameterPath, Spinor, polar_eigenvectors, to_polar

FIDELITY_FLOOR = 0.98
BRANCH_NOTE = "phases wrapped to (-pi, pi]; exp(i*pi) and exp(-i*pi) both report as +pi"


def wrap_phase(x):
    """Map an angle (or array of angles) to (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    out = x - 2 * np.pi * np.ceil((x - np.pi) / (2 * np.pi))
    return float(out) if out.ndim == 0 else out


def phase_distance(a: float, b: float) -> float:
    """Distance between two angles on the circle."""
    return abs(wrap_phase(a - b))


def adiabaticity_ratio(path: ParameterPath, hbar: float = 1.0, samples: int = 2049) -> float:
    """``T g min_t r(t) / (hbar pi)``; large values mean adiabatic following."""
    t = np.linspace(0.0, path.period_T, samples)
    y = path.field(t)
    r_min = float(np.sqrt(np.sum(y * y, axis=0)).min())
    return path.period_T * path.coupling_g * r_min / (hbar * math.pi)


@dataclass(frozen=True)
class PhaseDecomposition:
    total_phase: float
    dynamical_phase: float
    geometric_phase: float
    cyclicity_fidelity: float
    adiabaticity_ratio: float
    fidelity_floor: float = FIDELITY_FLOOR

    @property
    def flagged(self) -> bool:
        """True when the run is too far from cyclic for the split to mean much."""
        return self.cyclicity_fidelity < self.fidelity_floor

    def as_dict(self) -> dict:
        d = asdict(self)
        d["below_fidelity_floor"] = self.flagged
        d["branch_note"] = BRANCH_NOTE
        return d


def decompose_phase(
    result: EvolutionResult,
    psi0: Spinor,
    path: ParameterPath | None = None,
    fidelity_floor: float = FIDELITY_FLOOR,
    hbar: float = 1.0,
) -> PhaseDecomposition:
    """Split the phase of a cyclic run into dynamical and geometric parts.

    ``psi0`` is the fixed-basis initial state of the run. ``dynamical_phase``
    holds ``(1/hbar) integral <H> dt`` so that
    ``geometric = total + dynamical (mod 2 pi)``.
    """
    if path is not None and not path.closed:
        raise ContractError("phase decomposition needs a closed path")
    overlap = psi0.vdot(result.final_original)
    total = wrap_phase(cmath.phase(overlap)) if overlap != 0 else 0.0
    dyn = result.dynamical_integral
    ratio = adiabaticity_ratio(path, hbar) if path is not None else float("nan")
    return PhaseDecomposition(
        total_phase=total,
        dynamical_phase=dyn,
        geometric_phase=wrap_phase(total + dyn),
        cyclicity_fidelity=min(1.0, abs(overlap)),
        adiabaticity_ratio=ratio,
        fidelity_floor=fidelity_floor,
    )


def _frame(path: ParameterPath, t: float, r_min: float):
    try:
        p = to_polar(path.field([t])[:, 0], r_min=r_min)
    except DegeneracyError as exc:
        raise SingularityError(f"no eigenframe at t={t:.6g}: {exc}", r=exc.r, t=t) from exc
    vp, vm = polar_eigenvectors(p.theta, p.phi)
    return vp, vm


def projected_amplitude(result: EvolutionResult, path: ParameterPath, level: str = "minus",
                        r_min: float = R_MIN) -> complex:
    """``<v_level(y(t_end))|psi(t_end)>`` in the polar gauge."""
    if level not in ("plus", "minus"):
        raise ContractError(f"level must be 'plus' or 'minus', got {level!r}")
    vp, vm = _frame(path, result.t_end, r_min)
    v = vp if level == "plus" else vm
    return complex(np.vdot(v, result.final_original.array))


def transition_probability(result: EvolutionResult, path: ParameterPath, r_min: float = R_MIN) -> float:
    """Weight left in the upper level at the end of a run started in ``v-``."""
    return abs(projected_amplitude(result, path, "plus", r_min)) ** 2


def transition_profile(result: EvolutionResult, path: ParameterPath, r_min: float = R_MIN) -> np.ndarray:
    """Upper-level weight at every recorded trajectory time."""
    if result.trajectory is None:
        raise ContractError("run was made without record_trajectory=True")
    traj = result.trajectory
    y = path.field(traj.t)
    rho = np.hypot(y[0], y[1])
    vp, _ = polar_eigenvectors(np.arctan2(rho, y[2]), np.arctan2(y[1], y[0]))
    return np.abs(np.einsum("ni,ni->n", vp.conj(), traj.original)) ** 2
