"""JSON scenario and sweep files: validation and translation to model objects."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import jsonschema
import numpy as np

from .errors import ContractError
from .evolution import EvolutionConfig
from .model import ParameterPath
from .scenarios import (
    FieldSweepModel,
    NoCrossingModel,
    build_field_path,
    build_no_crossing_path,
    custom_path,
    shrink_rotate_return_path,
)

SCHEMA_VERSION = 1


def load_schema(name: str) -> dict:
    text = resources.files("berrycross").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(document: Any, name: str) -> None:
    """Raise ``ContractError`` naming the offending key if ``document`` is invalid."""
    validator = jsonschema.Draft202012Validator(load_schema(name))
    errors = sorted(validator.iter_errors(document), key=lambda e: (len(e.absolute_path), list(e.absolute_path)))
    if errors:
        err = max(errors, key=lambda e: len(e.absolute_path))
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ContractError(f"{name} config invalid at '{where}': {err.message}")


def _read(source) -> Any:
    if isinstance(source, dict):
        return source
    try:
        with open(source) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ContractError(f"{source}: not valid JSON ({exc})") from exc


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    hbar: float
    model: dict
    evolution: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def build_path(self) -> ParameterPath:
        m = self.model
        if self.kind == "field_sweep":
            return build_field_path(FieldSweepModel(**m))
        if self.kind == "no_crossing":
            return build_no_crossing_path(NoCrossingModel(**m))
        if self.kind == "shrink_rotate_return":
            return shrink_rotate_return_path(
                m["theta"], m["phi"], m["r_start"], m["r_small"], m["T"], m["g"],
                tuple(m.get("split", (0.25, 0.5, 0.25))),
            )
        if self.kind == "custom":
            return custom_path(m)
        raise ContractError(f"unknown scenario kind {self.kind!r}")

    def evolution_config(self, **overrides) -> EvolutionConfig:
        opts = {**self.evolution, **{k: v for k, v in overrides.items() if v is not None}}
        return EvolutionConfig(hbar=self.hbar, **opts)

    @property
    def fidelity_floor(self) -> float:
        return float(self.outputs.get("fidelity_floor", 0.98))


def load_scenario(source) -> ScenarioSpec:
    doc = _read(source)
    validate(doc, "scenario")
    return ScenarioSpec(doc["kind"], float(doc["hbar"]), dict(doc["model"]),
                        dict(doc.get("evolution", {})), dict(doc.get("outputs", {})))


def _axis(spec) -> list[float]:
    if isinstance(spec, list):
        return [float(v) for v in spec]
    if "logspace" in spec:
        lo, hi, n = spec["logspace"]
        return np.geomspace(lo, hi, int(n)).tolist()
    lo, hi, n = spec["linspace"]
    return np.linspace(lo, hi, int(n)).tolist()


@dataclass(frozen=True)
class SweepSpec:
    hbar: float
    base: dict
    B0_values: list
    omega_values: list
    evolution: dict = field(default_factory=dict)
    threads: int = 1

    def base_model(self) -> FieldSweepModel:
        # B0 and omega are placeholders; every grid point overrides them
        return FieldSweepModel(B0=1.0, omega=1.0, **self.base)

    def evolution_config(self, **overrides) -> EvolutionConfig:
        opts = {**self.evolution, **{k: v for k, v in overrides.items() if v is not None}}
        return EvolutionConfig(hbar=self.hbar, **opts)


def load_sweep(source) -> SweepSpec:
    doc = _read(source)
    validate(doc, "sweep")
    return SweepSpec(
        float(doc["hbar"]), dict(doc["base"]), _axis(doc["grid"]["B0"]), _axis(doc["grid"]["omega"]),
        dict(doc.get("evolution", {})), int(doc.get("threads", 1)),
    )
