"""Configuration loading: one strict JSON schema shared by every command.

Unknown keys are rejected by name, values are type-checked, and the
material / norm / source they describe is constructed eagerly so that
admissibility failures surface before any compute, phrased in terms of
the library's numbered hypotheses.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ConfigError
from .finsler import FinslerNorm
from .material import MaterialProfile, SourceTerm
from .mesh import DomainSpec
from .solver import SolveOptions

_TOP_KEYS = {"domain", "material", "norm", "source", "h", "tol_solve",
             "max_iter", "seed", "radial", "verify", "wulff"}

DEFAULTS = {
    "domain": {"kind": "disk", "radius": 1.0},
    "material": {"p": 2.0, "k": 0.0, "kind": "power"},
    "norm": {"kind": "euclidean"},
    "source": {"f": {"kind": "constant", "value": 1.0}, "g": {"kind": "zero"}},
    "h": 0.1,
    "tol_solve": 1e-8,
    "max_iter": 100,
    "seed": 0,
    "radial": {"mode": "barrier", "radius": 1.0, "m": 1.0, "n": 2, "target": 0.0},
    "verify": {"beta": 0.0, "gamma": 0.0, "t": 0.5, "q_grid": [1.4, 1.6],
               "levels": 3, "hopf": {"radius": 0.5, "m": 0.1}},
    "wulff": {"radius": 1.0, "samples": 512, "side": "H_dual"},
}


def _reject_unknown(section, allowed, where):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(repr(k) for k in unknown)} "
                          f"in {where}; allowed: {', '.join(sorted(allowed))}")


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return float(value)


def _merge(base, override, where):
    if not isinstance(override, dict):
        raise ConfigError(f"{where} must be an object, got {override!r}")
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value, f"{where}.{key}")
        else:
            merged[key] = value
    return merged


def parse_overrides(pairs):
    """Turn repeatable ``--set a.b=value`` flags into a nested dict.

    Values parse as JSON when possible (numbers, lists, booleans) and
    fall back to plain strings (so ``norm.kind=lp`` needs no quoting).
    """
    tree = {}
    for pair in pairs or ():
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = tree
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {pair!r} descends into a non-object")
        node[parts[-1]] = value
    return tree


def load_config(path, overrides=None, seed=None):
    """Read, override, validate, and default-fill a configuration file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        document = json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} "
                          f"column {exc.colno}: {exc.msg}") from exc
    if not isinstance(document, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    _reject_unknown(document, _TOP_KEYS, "the top level")
    merged = _merge(DEFAULTS, document, "config")
    if overrides:
        merged = _merge(merged, overrides, "overrides")
    if seed is not None:
        merged["seed"] = seed
    _reject_unknown(merged, _TOP_KEYS, "the top level")
    _validate(merged)
    return merged, raw


def _validate(cfg):
    dom = cfg["domain"]
    _reject_unknown(dom, {"kind", "a", "b", "radius", "center"}, "domain")
    mat = cfg["material"]
    _reject_unknown(mat, {"p", "k", "kind"}, "material")
    norm = cfg["norm"]
    _reject_unknown(norm, {"kind", "a", "q"}, "norm")
    src = cfg["source"]
    _reject_unknown(src, {"f", "g"}, "source")
    for name in ("f", "g"):
        spec = src.get(name, {"kind": "zero"})
        _reject_unknown(spec, {"kind", "value", "exponent", "scale", "offset"},
                        f"source.{name}")
        if spec.get("kind") not in {"zero", "constant", "power", "linear"}:
            raise ConfigError(f"source.{name}.kind must be one of zero, constant, "
                              f"power, linear; got {spec.get('kind')!r}")
    rad = cfg["radial"]
    _reject_unknown(rad, {"mode", "radius", "m", "n", "target"}, "radial")
    ver = cfg["verify"]
    _reject_unknown(ver, {"beta", "gamma", "t", "q_grid", "levels", "hopf"}, "verify")
    if ver.get("hopf") is not None:
        _reject_unknown(ver["hopf"], {"radius", "m"}, "verify.hopf")
    wul = cfg["wulff"]
    _reject_unknown(wul, {"radius", "samples", "side"}, "wulff")
    for key in ("h", "tol_solve"):
        if _number(cfg[key], key) <= 0:
            raise ConfigError(f"{key} must be positive")
    if not isinstance(cfg["max_iter"], int) or cfg["max_iter"] < 1:
        raise ConfigError("max_iter must be a positive integer")
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")


def _source_callable(spec):
    kind = spec["kind"]
    if kind == "zero":
        return lambda s: np.zeros_like(np.asarray(s, dtype=float))
    if kind == "constant":
        value = _number(spec.get("value", 1.0), "source value")
        return lambda s: np.full_like(np.asarray(s, dtype=float), value)
    if kind == "power":
        exponent = _number(spec.get("exponent", 1.0), "source exponent")
        scale = _number(spec.get("scale", 1.0), "source scale")
        return lambda s: scale * np.asarray(s, dtype=float) ** exponent
    scale = _number(spec.get("scale", 1.0), "source scale")
    offset = _number(spec.get("offset", 0.0), "source offset")
    return lambda s: scale * np.asarray(s, dtype=float) + offset


def build_norm(cfg):
    spec = cfg["norm"]
    kind = spec["kind"]
    if kind == "euclidean":
        return FinslerNorm.euclidean(2)
    if kind == "ellipsoidal":
        if "a" not in spec:
            raise ConfigError("norm.a (SPD matrix) is required for ellipsoidal norms")
        return FinslerNorm.ellipsoidal(np.asarray(spec["a"], dtype=float))
    if kind == "lp":
        return FinslerNorm.lp(_number(spec.get("q", 4.0), "norm.q"), 2)
    raise ConfigError(f"norm.kind must be euclidean, ellipsoidal, or lp; got {kind!r}")


def build_material(cfg):
    spec = cfg["material"]
    return MaterialProfile(p=_number(spec["p"], "material.p"),
                           k=_number(spec.get("k", 0.0), "material.k"),
                           kind=spec.get("kind", "power"))


def build_source(cfg):
    return SourceTerm(f=_source_callable(cfg["source"]["f"]),
                      g=_source_callable(cfg["source"]["g"]))


def build_domain_spec(cfg, norm):
    spec = cfg["domain"]
    return DomainSpec(kind=spec["kind"],
                      a=_number(spec.get("a", 1.0), "domain.a"),
                      b=_number(spec.get("b", 1.0), "domain.b"),
                      radius=_number(spec.get("radius", 1.0), "domain.radius"),
                      norm=norm,
                      center=tuple(spec.get("center", (0.0, 0.0))))


def build_solve_options(cfg):
    return SolveOptions(tol_solve=float(cfg["tol_solve"]),
                        max_iter=int(cfg["max_iter"]),
                        seed=int(cfg["seed"]))
