"""JSON documents -> domain objects, with field-naming validation errors.

Unknown fields are rejected everywhere; every error message carries the
dotted path of the offending field so configs can be fixed without reading
tracebacks.
"""

from __future__ import annotations

from .bounds import BoundFunction, LinearBound, PowerBound, TableBound
from .dist import Atom, Distribution, PowerPart, UniformPart
from .errors import ConfigError, DomainError
from .weights import (ConstantWeight, CosineWeight, PolynomialWeight, PowerWeight,
                      SineWeight, TableWeight, WeightFunction)


def _require(obj: dict, path: str, allowed: dict[str, bool]):
    """allowed maps field name -> required?"""
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown field")
    for key, required in allowed.items():
        if required and key not in obj:
            raise ConfigError(f"{path}.{key}: missing required field")


def _number(obj, path):
    if not isinstance(obj, (int, float)) or isinstance(obj, bool):
        raise ConfigError(f"{path}: expected a number")
    return float(obj)


def _number_list(obj, path):
    if not isinstance(obj, list) or not obj:
        raise ConfigError(f"{path}: expected a non-empty array of numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(obj)]


def parse_distribution(obj, path: str = "distribution") -> Distribution:
    _require(obj, path, {"continuous": False, "atoms": False})
    parts = []
    for i, raw in enumerate(obj.get("continuous", [])):
        p = f"{path}.continuous[{i}]"
        if not isinstance(raw, dict) or "family" not in raw:
            raise ConfigError(f"{p}.family: missing required field")
        family = raw["family"]
        if family == "uniform":
            _require(raw, p, {"family": True, "lo": True, "hi": True, "weight": True})
            parts.append(_build(UniformPart, p, lo=_number(raw["lo"], f"{p}.lo"),
                                hi=_number(raw["hi"], f"{p}.hi"),
                                weight=_number(raw["weight"], f"{p}.weight")))
        elif family == "power":
            _require(raw, p, {"family": True, "beta": True, "hi": True, "weight": True})
            parts.append(_build(PowerPart, p, beta=_number(raw["beta"], f"{p}.beta"),
                                hi=_number(raw["hi"], f"{p}.hi"),
                                weight=_number(raw["weight"], f"{p}.weight")))
        else:
            raise ConfigError(f"{p}.family: unknown family {family!r}")
    atoms = []
    for i, raw in enumerate(obj.get("atoms", [])):
        p = f"{path}.atoms[{i}]"
        _require(raw, p, {"at": True, "mass": True})
        atoms.append(_build(Atom, p, at=_number(raw["at"], f"{p}.at"),
                            mass=_number(raw["mass"], f"{p}.mass")))
    try:
        return Distribution(parts, atoms)
    except DomainError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _build(cls, path, **kwargs):
    try:
        return cls(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_weight(obj, path: str = "weight") -> WeightFunction:
    if not isinstance(obj, dict) or "family" not in obj:
        raise ConfigError(f"{path}.family: missing required field")
    family = obj["family"]
    if family == "constant":
        _require(obj, path, {"family": True, "value": True})
        return ConstantWeight(_number(obj["value"], f"{path}.value"))
    if family == "power":
        _require(obj, path, {"family": True, "alpha": True})
        return _build(PowerWeight, path, alpha=_number(obj["alpha"], f"{path}.alpha"))
    if family == "polynomial":
        _require(obj, path, {"family": True, "coeffs": True})
        return _build(PolynomialWeight, path,
                      coeffs=tuple(_number_list(obj["coeffs"], f"{path}.coeffs")))
    if family == "cosine":
        _require(obj, path, {"family": True})
        return CosineWeight()
    if family == "sine":
        _require(obj, path, {"family": True})
        return SineWeight()
    if family == "table":
        _require(obj, path, {"family": True, "breakpoints": True, "values": True})
        return _build(TableWeight, path,
                      breakpoints=tuple(_number_list(obj["breakpoints"], f"{path}.breakpoints")),
                      values=tuple(_number_list(obj["values"], f"{path}.values")))
    raise ConfigError(f"{path}.family: unknown family {family!r}")


def parse_bound(obj, path: str = "bound") -> BoundFunction:
    if not isinstance(obj, dict) or "family" not in obj:
        raise ConfigError(f"{path}.family: missing required field")
    family = obj["family"]
    if family == "linear":
        _require(obj, path, {"family": True, "coeff": True})
        return _build(LinearBound, path, coeff=_number(obj["coeff"], f"{path}.coeff"))
    if family == "power":
        _require(obj, path, {"family": True, "coeff": True, "exponent": True})
        return _build(PowerBound, path, coeff=_number(obj["coeff"], f"{path}.coeff"),
                      exponent=_number(obj["exponent"], f"{path}.exponent"))
    if family == "table":
        _require(obj, path, {"family": True, "xs": True, "values": True})
        return _build(TableBound, path, xs=tuple(_number_list(obj["xs"], f"{path}.xs")),
                      values=tuple(_number_list(obj["values"], f"{path}.values")))
    raise ConfigError(f"{path}.family: unknown family {family!r}")


def require_seed(obj: dict) -> int:
    if "seed" not in obj:
        raise ConfigError("seed: missing required field (seeds are mandatory)")
    seed = obj["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed: expected a non-negative integer")
    return seed


def positive_int(obj, path, minimum=1):
    if not isinstance(obj, int) or isinstance(obj, bool) or obj < minimum:
        raise ConfigError(f"{path}: expected an integer >= {minimum}")
    return obj


def grid_list(obj, path):
    g = _number_list(obj, path)
    if any(b <= a for a, b in zip(g[:-1], g[1:])):
        raise ConfigError(f"{path}: grid points must be strictly increasing")
    if any(not (0.0 <= x <= 1.0) for x in g):
        raise ConfigError(f"{path}: grid points must lie in [0, 1]")
    return g
