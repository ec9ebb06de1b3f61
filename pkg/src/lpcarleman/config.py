"""Run configurations: schema validation and construction of run objects."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
from referencing import Registry, Resource

from .errors import ConfigError
from .grid import GridFunction, load_grid_function
from .modulus import ModulusSpec, modulus_from_dict

SCHEMA_VERSION = 1
SCHEMAS = ("carleman", "bernstein", "commutator", "mollifier", "remainder", "modulus_spec")


@lru_cache(maxsize=None)
def _registry() -> Registry:
    reg = Registry()
    for name in SCHEMAS:
        text = resources.files("lpcarleman.schemas").joinpath(f"{name}.json").read_text()
        reg = reg.with_resource(f"{name}.json", Resource.from_contents(json.loads(text)))
    return reg


def load_schema(name: str) -> dict:
    if name not in SCHEMAS:
        raise ConfigError(f"no schema named {name!r}")
    return _registry().contents(f"{name}.json")


def validate(doc: Any, name: str) -> None:
    """Validate ``doc`` against a shipped schema; raise ConfigError with the first problem."""
    validator = jsonschema.Draft202012Validator(load_schema(name), registry=_registry())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config does not match the {name} schema at {where}: {e.message}")


def read_json(path: str | Path) -> Any:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc


@dataclass
class RunConfig:
    """A validated parameter map for one subcommand."""

    subcommand: str
    params: dict[str, Any]
    seed: int = 0
    outputs: dict[str, str | None] = field(default_factory=dict)
    threads: int = 1

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def rng(self, stream: int = 0) -> np.random.Generator:
        """Independent generator per stream; the seed alone fixes every sample."""
        return np.random.default_rng([int(self.seed), int(stream)])

    def echo(self) -> dict:
        return {"subcommand": self.subcommand, "params": self.params, "seed": int(self.seed)}


def load_run_config(subcommand: str, schema: str, path: str | Path | None, seed: int | None,
                    defaults: dict | None = None, outputs: dict | None = None,
                    threads: int = 1) -> RunConfig:
    params = dict(defaults or {})
    if path is not None:
        doc = read_json(path)
        validate(doc, schema)
        params.update(doc)
    else:
        validate(params, schema)
    if seed is None:
        seed = int(params.pop("seed", 0))
    else:
        params.pop("seed", None)
    return RunConfig(subcommand, params, int(seed), outputs or {}, threads)


# -- carleman run construction -----------------------------------------------------

def _modes(raw) -> list:
    out = []
    for m in raw:
        k = m["k"]
        c = m.get("amplitude", 1.0)
        if isinstance(c, (list, tuple)):
            c = complex(c[0], c[1])
        out.append((k, c))
    return out


def build_carleman(doc: dict, base_dir: str | Path = ".", seed: int | None = None):
    """(CarlemanConfig, CoefficientField, extras) from a validated carleman document."""
    from . import carleman as C
    from .weight import build_weight_table

    validate(doc, "carleman")
    base = Path(base_dir)
    mu = modulus_from_dict(doc["mu"])
    T = float(doc["T"])
    g = doc["grid"]
    n, N, M = int(g.get("n", 1)), int(g["N"]), int(g["M"])
    L = float(g.get("L", 2 * np.pi))
    gammas = [float(x) for x in doc["gamma"]]
    seed = int(doc.get("seed", 0) if seed is None else seed)
    rng = np.random.default_rng([seed, 1])

    vk, vp = doc["v"]["kind"], doc["v"].get("params", {})
    try:
        if vk == "bump-mode":
            modes = _modes(vp.get("modes", [{"k": 8 if n == 1 else [8, 0]}]))
            v = C.bump_mode_field(N, M, T, modes, n=n, L=L, real=bool(vp.get("real", False)))
        elif vk == "random":
            v = C.bump_random_field(N, M, T, rng, n=n, L=L, k_band=float(vp.get("k_band", 8.0)))
        else:
            v = load_grid_function(base / vp["path"])
    except KeyError as exc:
        raise ConfigError(f"v params missing key {exc}") from exc

    ck, cp = doc["coeffs"]["kind"], doc["coeffs"].get("params", {})
    try:
        if ck == "constant":
            coeffs = C.constant_coefficients(cp.get("matrix", np.eye(n)), N, M, T, L=L, a0=cp.get("a0"))
        elif ck == "sinusoidal":
            prof = modulus_from_dict(cp["profile"]) if "profile" in cp else mu
            coeffs = C.sinusoidal_coefficients(N, M, T, prof, n=n, L=L,
                                               amplitude=float(cp.get("amplitude", 0.5)),
                                               t0=float(cp.get("t0", 0.25)))
        else:
            a = [[load_grid_function(base / p) for p in row] for row in cp["paths"]]
            coeffs = C.CoefficientField(a, float(cp["a0"]))
    except KeyError as exc:
        raise ConfigError(f"coeffs params missing key {exc}") from exc

    zero_order = None
    if "zero_order" in doc:
        amp = float(doc["zero_order"]["amplitude"])
        x = np.arange(N) * (L / N)
        c = amp * np.cos(x)
        shape = (M,) + (N,) * n
        cvals = (c.reshape((1, N) + (1,) * (n - 1)) * np.ones(shape))
        zero_order = GridFunction(cvals, n=n, L=L, T=T)

    wt = build_weight_table(mu, max(gammas) * T)
    cfg = C.CarlemanConfig(float(doc["s"]), mu, wt, gammas, T, v,
                           floor=float(doc.get("floor", C.RATIO_FLOOR)),
                           fd_order=int(doc.get("fd_order", 4)), zero_order=zero_order)
    extras = {"diagnostics_gamma": [float(x) for x in doc.get("diagnostics_gamma", [])]}
    return cfg, coeffs, extras


def modulus_arg(text: str | None, family: str | None, alpha: float | None) -> ModulusSpec:
    """Modulus from either a compact spec string or --family/--alpha."""
    from .modulus import parse_modulus

    if text:
        return parse_modulus(text)
    if family is None:
        raise ConfigError("a modulus is required (--family/--alpha or a spec string)")
    d = {"family": family}
    if alpha is not None:
        d["alpha"] = alpha
    return modulus_from_dict(d)
