"""JSON file formats for states, channels and protocols.

One schema per object, no alternatives::

    matrix   {"rows": r, "cols": c, "data": [[re, im], ...]}        row-major
    pure     {"kind": "pure", "dims": [dA, dB], "amplitudes": [[re, im], ...]}
    density  {"kind": "density", "dims": [dA, dB], "matrix": <matrix>}
    channel  {"dims_in": [dA, dB], "dims_out": [dA, dB], "kraus": [<matrix>, ...]}
    protocol {"party": "alice" | "bob", "operators": [<matrix>, ...],
              "children": [<protocol> | null, ...]}

Floats are written with 17 significant digits, so every value survives a
write/read cycle bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .channels import KrausChannel
from .locc import Party, ProtocolNode
from .states import DensityOperator, PureState, StateError, make_density, make_pure
from .tensor import BipartiteDims, DimensionError


class FormatError(ValueError):
    """A file does not follow its schema; ``where`` names the file and field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where
        self.message = message


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    if x == 0:
        return "0.0" if math.copysign(1.0, x) > 0 else "-0.0"
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON: insertion-ordered keys, 17-digit floats."""
    out: list[str] = []
    _emit(obj, out, 0, indent)
    return "".join(out) + "\n"


def _is_leaf_list(items) -> bool:
    return all(not isinstance(v, (dict, list, tuple)) for v in items) and len(items) <= 4


def _emit(obj, out, level, indent):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(str(k))}: ")
            _emit(v, out, level + 1, indent)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        if _is_leaf_list(obj):
            out.append("[")
            for i, v in enumerate(obj):
                _emit(v, out, level + 1, indent)
                if i < len(obj) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, out, level + 1, indent)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, (complex, np.complexfloating)):
        _emit([float(obj.real), float(obj.imag)], out, level, indent)
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def complex_pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "data": [complex_pair(z) for z in m.reshape(-1)]}


def state_to_json(state) -> dict:
    if isinstance(state, PureState):
        return {"kind": "pure", "dims": state.dims.as_list(), "amplitudes": [complex_pair(z) for z in state.amplitudes]}
    if isinstance(state, DensityOperator):
        return {"kind": "density", "dims": state.dims.as_list(), "matrix": matrix_to_json(state.matrix)}
    raise TypeError(f"not a state: {type(state).__name__}")


def channel_to_json(ch: KrausChannel) -> dict:
    return {
        "dims_in": ch.dims_in.as_list(),
        "dims_out": ch.dims_out.as_list(),
        "kraus": [matrix_to_json(e) for e in ch.operators],
    }


def protocol_to_json(node: ProtocolNode) -> dict:
    return {
        "party": node.party.value,
        "operators": [matrix_to_json(m) for m in node.local_operators],
        "children": [None if c is None else protocol_to_json(c) for c in node.children],
    }


# ---------------------------------------------------------------- parsing


def _require(obj, key: str, where: str):
    if not isinstance(obj, dict):
        raise FormatError(where, "expected an object")
    if key not in obj:
        raise FormatError(where, f"missing field {key!r}")
    return obj[key]


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError(where, f"expected a number, got {type(v).__name__}")
    return float(v)


def _complex(v, where: str) -> complex:
    if not isinstance(v, list) or len(v) != 2:
        raise FormatError(where, "expected a [re, im] pair")
    return complex(_number(v[0], where + "[0]"), _number(v[1], where + "[1]"))


def _complex_vector(v, where: str) -> np.ndarray:
    if not isinstance(v, list):
        raise FormatError(where, "expected a list of [re, im] pairs")
    return np.array([_complex(z, f"{where}[{i}]") for i, z in enumerate(v)], dtype=complex)


def _dims(v, where: str) -> BipartiteDims:
    if not isinstance(v, list) or len(v) != 2 or not all(isinstance(d, int) and not isinstance(d, bool) for d in v):
        raise FormatError(where, "expected [dim_a, dim_b] integers")
    try:
        return BipartiteDims(v[0], v[1])
    except DimensionError as exc:
        raise FormatError(where, str(exc)) from exc


def matrix_from_json(obj, where: str = "matrix") -> np.ndarray:
    rows = _require(obj, "rows", where)
    cols = _require(obj, "cols", where)
    for name, val in (("rows", rows), ("cols", cols)):
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise FormatError(f"{where}.{name}", "expected a positive integer")
    data = _complex_vector(_require(obj, "data", where), where + ".data")
    if data.size != rows * cols:
        raise FormatError(where + ".data", f"expected {rows * cols} entries, got {data.size}")
    return data.reshape(rows, cols)


def state_from_json(obj, where: str = "state", tol: float = 1e-10):
    kind = _require(obj, "kind", where)
    dims = _dims(_require(obj, "dims", where), where + ".dims")
    try:
        if kind == "pure":
            amps = _complex_vector(_require(obj, "amplitudes", where), where + ".amplitudes")
            return make_pure(dims, amps, tol=tol)
        if kind == "density":
            m = matrix_from_json(_require(obj, "matrix", where), where + ".matrix")
            return make_density(dims, m, tol=tol)
    except (StateError, DimensionError) as exc:
        raise FormatError(where, str(exc)) from exc
    raise FormatError(where + ".kind", f"expected 'pure' or 'density', got {kind!r}")


def channel_from_json(obj, where: str = "channel") -> KrausChannel:
    dims_in = _dims(_require(obj, "dims_in", where), where + ".dims_in")
    dims_out = _dims(_require(obj, "dims_out", where), where + ".dims_out")
    kraus = _require(obj, "kraus", where)
    if not isinstance(kraus, list) or not kraus:
        raise FormatError(where + ".kraus", "expected a non-empty list of matrices")
    ops = [matrix_from_json(m, f"{where}.kraus[{i}]") for i, m in enumerate(kraus)]
    try:
        return KrausChannel(dims_in, dims_out, tuple(ops))
    except ValueError as exc:
        raise FormatError(where, str(exc)) from exc


def protocol_from_json(obj, where: str = "protocol") -> ProtocolNode:
    party = _require(obj, "party", where)
    try:
        party = Party(party)
    except ValueError as exc:
        raise FormatError(where + ".party", f"expected 'alice' or 'bob', got {party!r}") from exc
    raw_ops = _require(obj, "operators", where)
    if not isinstance(raw_ops, list) or not raw_ops:
        raise FormatError(where + ".operators", "expected a non-empty list of matrices")
    ops = [matrix_from_json(m, f"{where}.operators[{i}]") for i, m in enumerate(raw_ops)]
    raw_children = _require(obj, "children", where)
    if not isinstance(raw_children, list):
        raise FormatError(where + ".children", "expected a list")
    if len(raw_children) != len(ops):
        raise FormatError(where + ".children", f"expected {len(ops)} children, got {len(raw_children)}")
    children = [
        None if c is None else protocol_from_json(c, f"{where}.children[{i}]") for i, c in enumerate(raw_children)
    ]
    return ProtocolNode(party, ops, children)


def load_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(str(path), f"cannot read file ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(str(path), f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _with_path(path, fn, root: str):
    try:
        return fn(load_json(path), root)
    except FormatError as exc:
        if exc.where.startswith(str(path)):
            raise
        raise FormatError(f"{path}: {exc.where}", exc.message) from exc


def parse_state_file(path, tol: float = 1e-10):
    return _with_path(path, lambda obj, root: state_from_json(obj, root, tol), "state")


def parse_channel_file(path) -> KrausChannel:
    return _with_path(path, channel_from_json, "channel")


def parse_protocol_file(path) -> ProtocolNode:
    return _with_path(path, protocol_from_json, "protocol")


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")
