"""Scenario configuration: a strict JSON schema plus two builtin scenarios.

A scenario fixes the potential, the spectral point, the six metric
parameters, the default grid, geodesic initial data and tolerances.  Every
value that was not given explicitly is filled from the defaults and the
merged result goes into output manifests.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import jsonschema
import numpy as np

from .elliptic import lattice_from_invariants
from .errors import ConfigError
from .metrize import MetricParams
from .schrodinger import (SolutionBasis, Tabulated, lame_basis,
                          numerical_basis, rational_basis)

DEFAULT_SEED = 20240917
SEED_ENV = "GEOGAP_SEED"

_num = {"type": "number"}
_pair = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "potential": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["rational", "lame-g1", "tabulated"]},
                "gamma": _num,
                "g2": _num,
                "g3": _num,
                "table": {"type": "string"},
            },
        },
        "spectral": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"z_unif": _num, "z_affine": _num},
        },
        "metric": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _num for k in ("r0", "a1", "a2", "b1", "b2", "b3")},
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"x": _pair, "y": _pair,
                           "nx": {"type": "integer", "minimum": 1},
                           "ny": {"type": "integer", "minimum": 1}},
        },
        "geodesic": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"x0": _num, "y0": _num, "dx0": _num, "dy0": _num,
                           "t_end": _num, "x_end": _num, "beta": _pair},
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"rtol": _num, "atol": _num, "delta_min": _num},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}},
        },
        "seed": {"type": "integer"},
    },
}

_COMMON = {
    "tolerances": {"rtol": 1e-10, "atol": 1e-12, "delta_min": 1e-8},
    "output": {"dir": "."},
}

BUILTINS = {
    "rational": {
        "name": "rational",
        "potential": {"kind": "rational", "gamma": 0.0},
        "spectral": {"z_unif": 1.0},
        "metric": {"r0": 1.0, "a1": 0.0, "a2": 0.0, "b1": 0.0, "b2": -1.0, "b3": 0.0},
        "grid": {"x": [1.2, 3.0], "y": [-1.0, 1.0], "nx": 50, "ny": 50},
        # y0, dy0 = phi(2), phi'(2): the decaying geodesic stays inside the chart
        "geodesic": {"x0": 2.0, "y0": 0.20300292485491905, "dx0": 1.0,
                     "dy0": -0.23683674566407223, "t_end": 10.0, "x_end": 3.0,
                     "beta": [1.0, 0.0]},
    },
    "lame-g1": {
        "name": "lame-g1",
        "potential": {"kind": "lame-g1", "gamma": 0.3, "g2": 4.0, "g3": -1.0},
        "spectral": {"z_unif": 0.6},
        "metric": {"r0": 0.5, "a1": 0.3, "a2": -0.2, "b1": 0.4, "b2": 1.0, "b3": -0.3},
        "grid": {"x": [0.5, 1.3], "y": [-0.5, 0.5], "nx": 40, "ny": 40},
        "geodesic": {"x0": 0.8, "y0": 0.1, "dx0": 0.2, "dy0": 1.0, "t_end": 0.5,
                     "x_end": 1.3, "beta": [1.0, 0.0]},
    },
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_seed(explicit: int | None = None) -> int:
    if explicit is not None:
        return int(explicit)
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from exc


@dataclass(frozen=True)
class Scenario:
    data: dict

    @classmethod
    def from_dict(cls, raw: dict, base: str | None = None) -> "Scenario":
        try:
            jsonschema.validate(raw, SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid scenario: {exc.message}") from exc
        kind = raw.get("potential", {}).get("kind")
        if base is None:
            base = kind if kind in BUILTINS else ("rational" if kind is None else None)
        start = _merge(_COMMON, BUILTINS[base]) if base else copy.deepcopy(_COMMON)
        if base and kind and BUILTINS[base]["potential"]["kind"] != kind:
            start.pop("potential")
        merged = _merge(start, raw)
        sc = cls(merged)
        sc.validate()
        return sc

    @classmethod
    def builtin(cls, name: str) -> "Scenario":
        if name not in BUILTINS:
            raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(BUILTINS)}")
        return cls.from_dict({}, base=name)

    @classmethod
    def load(cls, path, base: str | None = None) -> "Scenario":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("scenario file must hold a JSON object")
        return cls.from_dict(raw, base)

    def with_overrides(self, over: dict) -> "Scenario":
        clean = {k: {kk: vv for kk, vv in v.items() if vv is not None}
                 if isinstance(v, dict) else v for k, v in over.items() if v is not None}
        clean = {k: v for k, v in clean.items() if v != {}}
        try:
            jsonschema.validate(clean, SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid override: {exc.message}") from exc
        sc = Scenario(_merge(self.data, clean))
        sc.validate()
        return sc

    def validate(self) -> None:
        d = self.data
        pot = d.get("potential")
        if not pot:
            raise ConfigError("scenario needs a potential")
        if pot["kind"] == "lame-g1" and ("g2" not in pot or "g3" not in pot):
            raise ConfigError("lame-g1 potential needs g2 and g3")
        if pot["kind"] == "tabulated" and "table" not in pot:
            raise ConfigError("tabulated potential needs a table path")
        spectral = d.get("spectral", {})
        if pot["kind"] == "tabulated":
            if "z_affine" not in spectral:
                raise ConfigError("tabulated potential needs spectral.z_affine")
        elif "z_unif" not in spectral:
            raise ConfigError("spectral.z_unif is required for closed-form potentials")
        if not any(d.get("metric", {}).get(k, 0.0) for k in ("r0", "a1", "a2", "b1", "b2", "b3")):
            raise ConfigError("all six metric parameters are zero")
        g = d.get("grid", {})
        for ax in ("x", "y"):
            if ax in g and not g[ax][0] < g[ax][1]:
                raise ConfigError(f"grid.{ax} must be an increasing pair")

    # derived objects

    @property
    def name(self) -> str:
        return self.data.get("name", self.data["potential"]["kind"])

    @property
    def kind(self) -> str:
        return self.data["potential"]["kind"]

    @property
    def tol(self) -> dict:
        return self.data["tolerances"]

    @cached_property
    def lattice(self):
        pot = self.data["potential"]
        if pot["kind"] != "lame-g1":
            return None
        return lattice_from_invariants(pot["g2"], pot["g3"])

    @cached_property
    def basis(self) -> SolutionBasis:
        pot = self.data["potential"]
        gamma = float(pot.get("gamma", 0.0))
        spectral = self.data["spectral"]
        if pot["kind"] == "rational":
            return rational_basis(gamma, float(spectral["z_unif"]))
        if pot["kind"] == "lame-g1":
            return lame_basis(gamma, self.lattice, float(spectral["z_unif"]))
        table = Tabulated.from_csv(pot["table"])
        lo, hi = table.domain
        return numerical_basis(table, float(spectral["z_affine"]), lo, hi)

    @property
    def potential(self):
        return self.basis.potential

    def params(self, **override) -> MetricParams:
        m = dict(self.data["metric"])
        m.update({k: v for k, v in override.items() if v is not None})
        return MetricParams(self.basis, **{k: float(m.get(k, 0.0))
                                           for k in ("r0", "a1", "a2", "b1", "b2", "b3")})

    def grid(self, nx: int | None = None, ny: int | None = None):
        g = self.data.get("grid", {})
        if "x" not in g or "y" not in g:
            raise ConfigError("scenario has no grid ranges")
        xs = np.linspace(*g["x"], int(nx or g.get("nx", 50)))
        ys = np.linspace(*g["y"], int(ny or g.get("ny", 50)))
        return np.meshgrid(xs, ys, indexing="ij")

    def manifest(self) -> dict:
        return {"scenario": copy.deepcopy(self.data),
                "z_affine": float(np.real(self.basis.z_affine)),
                "potential": self.potential.describe()}

