"""Drive models, the shrink-rotate-return cycle and (B0, omega) sweeps."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BerryCrossError, ContractError, DegeneracyError
from .evolution import EvolutionConfig, EvolutionResult, evolve_adiabatic, evolve_exact
from .model import R_MIN, ParameterPath, eigensystem, fourier_path, hamiltonian_at
from .phases import PhaseDecomposition, decompose_phase, transition_probability

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class FieldSweepModel:
    """Field ``(B0 (b1 + cos wt), B0 sin wt, Bz)`` with coupling ``mu``."""

    B0: float
    omega: float
    mu: float
    b1: float = 0.0
    Bz: float = 0.0
    periods: int = 1
    y0: float = 0.0
    E0: float = 0.0

    def __post_init__(self):
        if self.omega == 0:
            raise ContractError("omega must be nonzero for a closed loop")
        if not self.mu > 0:
            raise ContractError("mu must be positive")
        if int(self.periods) != self.periods or self.periods < 1:
            raise ContractError("periods must be a positive integer")

    @property
    def period_T(self) -> float:
        return TWO_PI * self.periods / abs(self.omega)

    def drive_ratio(self, hbar: float = 1.0) -> float:
        """``mu B0 / (hbar omega)``."""
        return self.mu * self.B0 / (hbar * abs(self.omega))


def build_field_path(model: FieldSweepModel) -> ParameterPath:
    B0, w, b1, Bz, y0 = model.B0, model.omega, model.b1, model.Bz, model.y0

    def sampler(t):
        return np.array([np.full_like(t, y0), B0 * (b1 + np.cos(w * t)), B0 * np.sin(w * t), np.full_like(t, Bz)])

    def derivative(t):
        z = np.zeros_like(t)
        return np.array([z, -B0 * w * np.sin(w * t), B0 * w * np.cos(w * t), z])

    return ParameterPath(
        model.period_T,
        sampler,
        derivative,
        closed=True,
        coupling_g=model.mu,
        energy_offset=model.E0,
        smoothness_hint="analytic",
        name="field_sweep",
        meta={"model": asdict(model)},
    )


@dataclass(frozen=True)
class NoCrossingModel:
    """Field with ``y3`` pinned at ``delta_E / 2g`` so the gap never closes.

    The transverse loop is the circle ``B0 (b1 + cos wt, sin wt)`` unless a
    custom ``transverse`` callable returning ``(y1, y2, dy1, dy2)`` is given.
    """

    delta_E: float
    g: float
    B0: float
    omega: float
    b1: float = 0.0
    periods: int = 1
    transverse: Optional[Callable] = None

    def __post_init__(self):
        if not (self.delta_E > 0 and self.g > 0):
            raise ContractError("delta_E and g must be positive")
        if self.omega == 0:
            raise ContractError("omega must be nonzero for a closed loop")

    @property
    def y3(self) -> float:
        return self.delta_E / (2 * self.g)

    @property
    def period_T(self) -> float:
        return TWO_PI * self.periods / abs(self.omega)


def build_no_crossing_path(model: NoCrossingModel) -> ParameterPath:
    if model.transverse is None:
        fm = FieldSweepModel(model.B0, model.omega, model.g, b1=model.b1, Bz=model.y3, periods=model.periods)
        path = build_field_path(fm)
        return ParameterPath(path.period_T, path.sampler, path.derivative, True, model.g,
                             name="no_crossing", meta={"y3": model.y3})
    y3 = model.y3
    tr = model.transverse

    def sampler(t):
        y1, y2, _, _ = tr(t)
        return np.array([np.zeros_like(t), y1, y2, np.full_like(t, y3)])

    def derivative(t):
        _, _, d1, d2 = tr(t)
        return np.array([np.zeros_like(t), d1, d2, np.zeros_like(t)])

    return ParameterPath(model.period_T, sampler, derivative, True, model.g, name="no_crossing",
                         meta={"y3": y3})


def _ramp(s):
    return 0.5 * (1 - np.cos(np.pi * s))


def _ramp_dot(s):
    return 0.5 * np.pi * np.sin(np.pi * s)


def shrink_rotate_return_path(theta: float, phi: float, r_start: float, r_small: float, T: float,
                              g: float = 1.0, split: Sequence[float] = (0.25, 0.5, 0.25),
                              r_min: float = R_MIN) -> ParameterPath:
    """Closed three-leg path: shrink radially, turn phi by 2 pi, grow back.

    The radial legs use a cosine ramp; the rotation runs at constant rate.
    """
    split = np.asarray(split, dtype=float)
    if split.shape != (3,) or np.any(split < 0) or not math.isclose(split.sum(), 1.0, rel_tol=1e-12):
        raise ContractError(f"split must be three nonnegative fractions summing to 1, got {split.tolist()}")
    if split[1] <= 0:
        raise ContractError("rotation leg must have positive duration")
    if r_small <= r_min:
        raise DegeneracyError(f"r_small={r_small:.3e} at or below the degeneracy threshold", r=r_small)
    t1 = split[0] * T
    t2 = t1 + split[1] * T
    st, ct = math.sin(theta), math.cos(theta)

    def radius(t):
        r = np.empty_like(t)
        rd = np.zeros_like(t)
        a = t < t1
        c = t > t2
        b = ~(a | c)
        if t1 > 0:
            s = t[a] / t1
            r[a] = r_start + (r_small - r_start) * _ramp(s)
            rd[a] = (r_small - r_start) * _ramp_dot(s) / t1
        r[b] = r_small
        if T - t2 > 0:
            s = (t[c] - t2) / (T - t2)
            r[c] = r_small + (r_start - r_small) * _ramp(s)
            rd[c] = (r_start - r_small) * _ramp_dot(s) / (T - t2)
        return r, rd

    def azimuth(t):
        s = np.clip((t - t1) / (t2 - t1), 0.0, 1.0)
        inside = (t >= t1) & (t <= t2)
        return phi + TWO_PI * s, np.where(inside, TWO_PI / (t2 - t1), 0.0)

    def sampler(t):
        r, _ = radius(t)
        ph, _ = azimuth(t)
        return np.array([np.zeros_like(t), r * st * np.cos(ph), r * st * np.sin(ph), r * ct])

    def derivative(t):
        r, rd = radius(t)
        ph, pd = azimuth(t)
        return np.array([
            np.zeros_like(t),
            st * (rd * np.cos(ph) - r * pd * np.sin(ph)),
            st * (rd * np.sin(ph) + r * pd * np.cos(ph)),
            rd * ct,
        ])

    return ParameterPath(T, sampler, derivative, True, g, smoothness_hint="piecewise-C1",
                         name="shrink_rotate_return",
                         meta={"theta": theta, "phi": phi, "r_start": r_start, "r_small": r_small,
                               "split": split.tolist()},
                         breakpoints=tuple(float(b) for b in (t1, t2) if 0 < b < T))


@dataclass(frozen=True)
class RunReport:
    decomposition: PhaseDecomposition
    result: EvolutionResult
    transition_probability: float
    adiabatic_geometric_phase: Optional[float]


def run_cycle(path: ParameterPath, cfg: Optional[EvolutionConfig] = None,
              fidelity_floor: float = 0.98) -> RunReport:
    """Evolve from ``v-(y(0))`` around the closed path and decompose the phase."""
    cfg = cfg or EvolutionConfig()
    psi0 = eigensystem(hamiltonian_at(path, 0.0), r_min=cfg.r_min).v_minus
    result = evolve_exact(path, psi0, cfg)
    dec = decompose_phase(result, psi0, path, fidelity_floor=fidelity_floor, hbar=cfg.hbar)
    try:
        adiabatic = evolve_adiabatic(path, "minus", cfg)[1]
    except BerryCrossError:
        adiabatic = None
    return RunReport(dec, result, transition_probability(result, path, cfg.r_min), adiabatic)


def scenario_shrink_rotate_return(theta: float, phi: float, r_start: float, r_small: float, T: float,
                                  cfg: Optional[EvolutionConfig] = None, g: float = 1.0,
                                  split: Sequence[float] = (0.25, 0.5, 0.25)) -> PhaseDecomposition:
    cfg = cfg or EvolutionConfig()
    path = shrink_rotate_return_path(theta, phi, r_start, r_small, T, g, split, cfg.r_min)
    return run_cycle(path, cfg).decomposition


@dataclass(frozen=True)
class SweepRecord:
    index: int
    B0: float
    omega: float
    drive_ratio: float
    adiabaticity_ratio: float
    geometric_phase: float
    cyclicity_fidelity: float
    transition_probability: float
    runtime_ms: float
    status: str = "ok"


SWEEP_COLUMNS = tuple(SweepRecord.__dataclass_fields__)


def _sweep_point(index: int, B0: float, omega: float, base: FieldSweepModel, cfg: EvolutionConfig) -> SweepRecord:
    start = time.perf_counter()
    nan = float("nan")
    try:
        model = FieldSweepModel(B0, omega, base.mu, base.b1, base.Bz, base.periods, base.y0, base.E0)
        report = run_cycle(build_field_path(model), cfg)
    except BerryCrossError as exc:
        return SweepRecord(index, B0, omega, nan, nan, nan, nan, nan,
                           (time.perf_counter() - start) * 1e3, f"error: {type(exc).__name__}: {exc}")
    d = report.decomposition
    return SweepRecord(
        index, B0, omega, model.drive_ratio(cfg.hbar), d.adiabaticity_ratio, d.geometric_phase,
        d.cyclicity_fidelity, report.transition_probability, (time.perf_counter() - start) * 1e3,
    )


def sweep_phase_map(B0_values: Sequence[float], omega_values: Sequence[float], base: FieldSweepModel,
                    cfg: Optional[EvolutionConfig] = None, threads: int = 1) -> list[SweepRecord]:
    """One record per (B0, omega) grid point, ordered B0-major.

    Failing points are recorded with a status message; the sweep continues.
    """
    cfg = cfg or EvolutionConfig()
    grid = [(b, w) for b in B0_values for w in omega_values]
    if not grid:
        raise ContractError("sweep grid is empty")
    jobs = [(i, float(b), float(w)) for i, (b, w) in enumerate(grid)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda j: _sweep_point(*j, base, cfg), jobs))
    else:
        records = [_sweep_point(*j, base, cfg) for j in jobs]
    records.sort(key=lambda r: r.index)
    return records


def custom_path(spec: dict) -> ParameterPath:
    """Fourier-series path from a JSON-style mapping (see the scenario schema)."""
    T = float(spec["period_T"])
    n = len(spec.get("cos", [[]])[0]) if spec.get("cos") else 0
    cos = spec.get("cos") or np.zeros((4, n))
    sin = spec.get("sin") or np.zeros((4, n))
    return fourier_path(T, spec["mean"], cos, sin, coupling_g=float(spec.get("g", 1.0)),
                        energy_offset=float(spec.get("E0", 0.0)), name="custom")
