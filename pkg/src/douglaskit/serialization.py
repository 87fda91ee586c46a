"""JSON wire formats.

Complex entries are ``[re, im]`` pairs and matrices are row-major nested
lists, so every finite double survives a round trip bit for bit (``json``
writes floats with ``repr``).

* algebra element: ``{"shape": [n1, ...], "blocks": [matrix, ...]}``
* module shape:    ``{"algebra": [n1, ...], "rows": [p1, ...]}``
* module element:  ``{"shape": module-shape, "blocks": [matrix, ...]}``
* operator:        ``{"domain": module-shape, "codomain": module-shape, "mats": [...]}``
* submodule:       ``{"ambient": module-shape, "bases": [matrix, ...]}``
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .cstar_core import AlgebraElement, AlgebraShape, State
from .errors import FormatError
from .hilbert_module import AdjointableOperator, ModuleElement, ModuleShape, Submodule


def _num(v: Any) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError(f"expected a number, got {v!r}")
    if not math.isfinite(v):
        raise FormatError(f"non-finite entry {v!r}")
    return float(v)


def matrix_to_json(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(data: Any, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    if not isinstance(data, list):
        raise FormatError("a matrix must be a list of rows")
    if rows is not None and len(data) != rows:
        raise FormatError(f"matrix has {len(data)} rows, expected {rows}")
    if not data:
        return np.zeros((0, cols or 0), dtype=complex)
    width = None
    out = []
    for row in data:
        if not isinstance(row, list):
            raise FormatError("matrix rows must be lists")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise FormatError("ragged matrix rows")
        vals = []
        for z in row:
            if not (isinstance(z, list) and len(z) == 2):
                raise FormatError(f"complex entries must be [re, im] pairs, got {z!r}")
            vals.append(complex(_num(z[0]), _num(z[1])))
        out.append(vals)
    if cols is not None and width != cols:
        raise FormatError(f"matrix has {width} columns, expected {cols}")
    return np.array(out, dtype=complex).reshape(len(data), width)


def _int_list(data: Any, what: str) -> list[int]:
    if not isinstance(data, list) or not all(isinstance(v, int) and not isinstance(v, bool)
                                             for v in data):
        raise FormatError(f"{what} must be a list of integers")
    return data


def algebra_to_json(x: AlgebraElement) -> dict:
    return {"shape": list(x.shape.block_dims), "blocks": [matrix_to_json(b) for b in x.blocks]}


def algebra_from_json(data: dict) -> AlgebraElement:
    try:
        dims = _int_list(data["shape"], "shape")
        blocks = data["blocks"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"algebra element needs 'shape' and 'blocks': {exc}") from None
    if not isinstance(blocks, list) or len(blocks) != len(dims):
        raise FormatError("number of blocks does not match shape")
    mats = [matrix_from_json(b, n, n) for b, n in zip(blocks, dims)]
    try:
        return AlgebraElement(AlgebraShape(tuple(dims)), tuple(mats))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def module_shape_to_json(s: ModuleShape) -> dict:
    return {"algebra": list(s.algebra.block_dims), "rows": list(s.row_dims)}


def module_shape_from_json(data: dict) -> ModuleShape:
    try:
        return ModuleShape.of(_int_list(data["algebra"], "algebra"), _int_list(data["rows"], "rows"))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"module shape needs 'algebra' and 'rows': {exc}") from None
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def module_element_to_json(x: ModuleElement) -> dict:
    return {"shape": module_shape_to_json(x.shape), "blocks": [matrix_to_json(b) for b in x.blocks]}


def module_element_from_json(data: dict) -> ModuleElement:
    shape = module_shape_from_json(data.get("shape"))
    blocks = data.get("blocks")
    if not isinstance(blocks, list) or len(blocks) != len(shape.row_dims):
        raise FormatError("number of blocks does not match shape")
    return ModuleElement(shape, tuple(matrix_from_json(b, p, n)
                                      for b, (p, n) in zip(blocks, shape.block_shapes())))


def operator_to_json(T: AdjointableOperator) -> dict:
    return {"domain": module_shape_to_json(T.domain),
            "codomain": module_shape_to_json(T.codomain),
            "mats": [matrix_to_json(m) for m in T.mats]}


def operator_from_json(data: dict) -> AdjointableOperator:
    if not isinstance(data, dict) or not {"domain", "codomain", "mats"} <= data.keys():
        raise FormatError("operator needs 'domain', 'codomain' and 'mats'")
    dom = module_shape_from_json(data["domain"])
    cod = module_shape_from_json(data["codomain"])
    mats = data["mats"]
    if not isinstance(mats, list) or len(mats) != len(dom.row_dims):
        raise FormatError("number of matrices does not match the module shapes")
    try:
        return AdjointableOperator(dom, cod, tuple(
            matrix_from_json(m, q, p) for m, p, q in zip(mats, dom.row_dims, cod.row_dims)))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def submodule_to_json(F: Submodule) -> dict:
    return {"ambient": module_shape_to_json(F.ambient), "bases": [matrix_to_json(b) for b in F.bases]}


def submodule_from_json(data: dict) -> Submodule:
    amb = module_shape_from_json(data.get("ambient"))
    bases = data.get("bases")
    if not isinstance(bases, list) or len(bases) != len(amb.row_dims):
        raise FormatError("number of bases does not match the ambient shape")
    mats = [matrix_from_json(b, q) for b, q in zip(bases, amb.row_dims)]
    try:
        return Submodule(amb, tuple(mats))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def state_to_json(rho: State) -> dict:
    return {"shape": list(rho.shape.block_dims), "block_index": rho.block_index,
            "vector": [[float(z.real), float(z.imag)] for z in rho.unit_vector]}


def finite_or_none(x: float) -> float | None:
    return None if math.isinf(x) or math.isnan(x) else float(x)


def report_to_json(rep) -> dict:
    """A :class:`~douglaskit.douglas.MajorizationReport` as JSON; infinite
    constants are written as null."""
    return {
        "holds": {"i": rep.holds_i, "ii": rep.holds_ii, "iii": rep.holds_iii, "iv": rep.holds_iv},
        "lambda_star": finite_or_none(rep.lambda_star),
        "mu_star": finite_or_none(rep.mu_star),
        "consistent": rep.consistency,
        "witness": module_element_to_json(rep.witness) if rep.witness is not None else None,
        "flags": list(rep.flags),
    }


def witness_bundle_to_json(w) -> dict:
    return {
        "a": algebra_to_json(w.a),
        "b": algebra_to_json(w.b),
        "c": algebra_to_json(w.c),
        "m": w.m,
        "scale": w.scale,
        "rho": state_to_json(w.rho) if w.rho is not None else None,
        "lhs_norm": w.lhs_norm,
        "rhs_norm": w.rhs_norm,
        "chain": {k: (bool(v) if isinstance(v, (bool, np.bool_)) else v) for k, v in w.chain.items()},
        "verified": w.verified,
    }


def from_json(data: Any):
    """Dispatch on the keys present to the matching reader."""
    if not isinstance(data, dict):
        raise FormatError("top-level JSON value must be an object")
    if "mats" in data:
        return operator_from_json(data)
    if "bases" in data:
        return submodule_from_json(data)
    if "blocks" in data:
        if isinstance(data.get("shape"), dict):
            return module_element_from_json(data)
        return algebra_from_json(data)
    raise FormatError("unrecognized object: expected an element, operator or submodule")


def to_json(obj) -> dict:
    if isinstance(obj, AlgebraElement):
        return algebra_to_json(obj)
    if isinstance(obj, ModuleElement):
        return module_element_to_json(obj)
    if isinstance(obj, AdjointableOperator):
        return operator_to_json(obj)
    if isinstance(obj, Submodule):
        return submodule_to_json(obj)
    raise TypeError(f"no JSON form for {type(obj).__name__}")


def _plain(o: Any):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"no JSON form for {type(o).__name__}")


def dumps(data: Any) -> str:
    return json.dumps(data, allow_nan=False, default=_plain) + "\n"


def load(path: str | Path):
    """Read and decode one JSON file.  Decode errors carry line and column."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from None
    return from_json(data)
