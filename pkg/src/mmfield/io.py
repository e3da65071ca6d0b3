"""JSON (de)serialization of fields, couplings and extension candidates.

Field format::

    {"metric":  {"kind": "explicit", "d": [[...]]}
              | {"kind": "euclidean" | "sup", "points": [[...]]},
     "measure": [...] | "uniform",
     "target":  {"kind": "euclidean" | "sup", "dim": k}
              | {"kind": "finite", "d": [[...]]}
              | {"kind": "hamming", "len": l},
     "values":  [...]}

Serialization always writes an explicit metric, a list measure and fixed
key order. Floats are written with ``repr`` so that parsing the output
gives back bit-identical arrays.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InputFormatError
from .metric import FiniteMetric, MMField, TargetSpace
from .transport import Coupling


def loads(text: str, source: str = "<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputFormatError(f"{source}: {e.msg}", e.lineno, e.colno) from None


def load_json(path) -> object:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise InputFormatError(f"{path}: {e.strerror}") from None
    except UnicodeDecodeError as e:
        raise InputFormatError(f"{path}: not UTF-8 ({e.reason})") from None
    return loads(text, str(path))


def _require(obj, key: str, where: str):
    if not isinstance(obj, dict):
        raise InputFormatError(f"{where} must be an object")
    if key not in obj:
        raise InputFormatError(f"{where} is missing {key!r}")
    return obj[key]


def _matrix(x, where: str) -> np.ndarray:
    try:
        a = np.asarray(x, dtype=np.float64)
    except (TypeError, ValueError):
        raise InputFormatError(f"{where} must be a numeric matrix") from None
    if a.ndim != 2:
        raise InputFormatError(f"{where} must be a 2-d array")
    return a


def parse_metric(obj) -> FiniteMetric:
    if isinstance(obj, list):
        return FiniteMetric.from_points(_points(obj, "points"), "euclidean")
    kind = _require(obj, "kind", "metric")
    has_d, has_pts = "d" in obj, "points" in obj
    if has_d and has_pts:
        raise InputFormatError("metric gives both 'd' and 'points'; ambiguous input")
    if kind == "explicit":
        if not has_d:
            raise InputFormatError("explicit metric needs 'd'")
        return FiniteMetric(_matrix(obj["d"], "metric.d"))
    if kind in ("euclidean", "sup"):
        if not has_pts:
            raise InputFormatError(f"{kind} metric needs 'points'")
        return FiniteMetric.from_points(_points(obj["points"], "metric.points"), kind)
    raise InputFormatError(f"unknown metric kind {kind!r}")


def _points(x, where: str) -> np.ndarray:
    try:
        a = np.asarray(x, dtype=np.float64)
    except (TypeError, ValueError):
        raise InputFormatError(f"{where} must be numeric") from None
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < 1:
        raise InputFormatError(f"{where} must be a non-empty list of points")
    return a


def parse_target(obj) -> TargetSpace:
    kind = _require(obj, "kind", "target")
    if kind in ("euclidean", "sup"):
        return TargetSpace(kind, int(obj.get("dim", 1)))
    if kind == "finite":
        return TargetSpace.finite(_matrix(_require(obj, "d", "target"), "target.d"))
    if kind == "hamming":
        return TargetSpace.hamming(int(_require(obj, "len", "target")))
    raise InputFormatError(f"unknown target kind {kind!r}")


def parse_field(obj) -> MMField:
    metric = parse_metric(_require(obj, "metric", "field"))
    target = parse_target(_require(obj, "target", "field"))
    values = _require(obj, "values", "field")
    measure = obj.get("measure", "uniform")
    if measure == "uniform":
        mu = np.full(metric.n, 1.0 / metric.n)
    else:
        try:
            mu = np.asarray(measure, dtype=np.float64)
        except (TypeError, ValueError):
            raise InputFormatError("measure must be a list of numbers or \"uniform\"") from None
    try:
        vals = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError):
        raise InputFormatError("values are not numeric") from None
    return MMField(metric, mu, target, vals)


def load_field(path) -> MMField:
    return parse_field(load_json(path))


def target_to_dict(t: TargetSpace) -> dict:
    if t.kind == "finite":
        return {"kind": "finite", "d": t.metric.d.tolist()}
    if t.kind == "hamming":
        return {"kind": "hamming", "len": t.dim}
    return {"kind": t.kind, "dim": t.dim}


def field_to_dict(f: MMField) -> dict:
    if f.target.kind == "finite":
        values = f.values[:, 0].tolist()
    elif f.target.kind != "hamming" and f.target.dim == 1:
        values = f.values[:, 0].tolist()
    else:
        values = f.values.tolist()
    return {
        "metric": {"kind": "explicit", "d": f.d.tolist()},
        "measure": f.measure.tolist(),
        "target": target_to_dict(f.target),
        "values": values,
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def serialize_field(f: MMField) -> str:
    return dumps(field_to_dict(f))


def parse_coupling(obj) -> Coupling:
    P = obj["coupling"] if isinstance(obj, dict) and "coupling" in obj else obj
    return Coupling(_matrix(P, "coupling"))


def parse_candidate(obj, target: TargetSpace):
    from .lipschitz import OnePointCandidate

    f = _require(obj, "f", "candidate")
    b = _require(obj, "b", "candidate")
    try:
        fv = np.asarray(f, dtype=np.float64)
        bv = np.asarray(b, dtype=np.float64)
    except (TypeError, ValueError):
        raise InputFormatError("candidate 'f' and 'b' must be numeric") from None
    return OnePointCandidate.make(fv, bv, target)
