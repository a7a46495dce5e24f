"""Model and dataset files.

Both are UTF-8 JSON documents with ``format_version: 1``.  Floats are written
with 17 significant digits, which round-trips every double exactly; an
unbounded activation bound is written as the string ``"inf"``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .cells import CELL_MATRICES, ActivationSpec, ModelWeights
from .data import SequenceDataset
from .errors import (
    DimensionMismatchError,
    FormatError,
    InvalidInputError,
    MissingFieldError,
    TruncatedFileError,
    UnsupportedCellError,
    VersionError,
)

FORMAT_VERSION = 1


def _num(x) -> str:
    x = float(x)
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if math.isnan(x):
        raise InvalidInputError("cannot serialize NaN")
    return format(x, ".17g")


def _row(values) -> str:
    return "[" + ", ".join(_num(v) for v in values) + "]"


def _matrix(A, indent) -> str:
    pad = " " * indent
    rows = (",\n" + pad).join(_row(r) for r in np.atleast_2d(A))
    return "[\n" + pad + rows + "\n" + " " * (indent - 2) + "]"


def _activation(a: ActivationSpec) -> str:
    return f'{{"kind": {json.dumps(a.kind)}, "rho": {_num(a.rho)}, "b": {_num(a.b)}}}'


def dumps_model(w: ModelWeights) -> str:
    if w.cell_type == "conv":
        dims = {"d": w.d, "k": w.k, "K": w.K}
    else:
        dims = {"d_x": w.d_x, "d_h": w.d_h, "d_y": w.d_y}
    lines = [
        "{",
        f'  "format_version": {FORMAT_VERSION},',
        f'  "cell_type": {json.dumps(w.cell_type)},',
        f'  "dims": {json.dumps(dims)},',
        '  "activations": {'
        + ", ".join(f'"{slot}": {_activation(a)}' for slot, a in w.activations.items()) + "},",
        '  "matrices": {',
    ]
    blocks = [f'    "{n}": {_matrix(A, 6)}' for n, A in w.matrices.items()]
    lines.append(",\n".join(blocks))
    lines += ["  }", "}"]
    return "\n".join(lines) + "\n"


def _parse(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        if exc.pos >= len(text.rstrip()) or exc.msg.startswith("Unterminated string"):
            offset = len(text.encode("utf-8"))
            raise TruncatedFileError(f"file ends early at byte {offset}", offset=offset) from None
        raise FormatError(f"malformed file at byte {offset}: {exc.msg}", offset=offset) from None
    if not isinstance(doc, dict):
        raise FormatError("top level must be an object")
    if "format_version" not in doc:
        raise MissingFieldError("missing field 'format_version'", field="format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise VersionError(f"unsupported format_version {doc['format_version']!r}",
                           field="format_version")
    return doc


def _require(doc, key, where=""):
    if key not in doc:
        name = f"{where}{key}"
        raise MissingFieldError(f"missing field {name!r}", field=name)
    return doc[key]


def _float(v, field):
    if isinstance(v, str) and v in ("inf", "-inf"):
        return float(v)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError(f"field {field!r} must be numeric", field=field)
    return float(v)


def _array(v, field, ndim):
    try:
        A = np.array(v, dtype=np.float64)
    except (TypeError, ValueError):
        raise DimensionMismatchError(f"field {field!r} is not a rectangular numeric array",
                                     field=field) from None
    if A.ndim != ndim:
        raise DimensionMismatchError(f"field {field!r} must have {ndim} axes, got {A.ndim}",
                                     field=field)
    return A


def loads_model(text: str) -> ModelWeights:
    doc = _parse(text)
    cell = _require(doc, "cell_type")
    if cell not in CELL_MATRICES:
        raise UnsupportedCellError(f"unsupported cell_type {cell!r}", field="cell_type")
    dims = _require(doc, "dims")
    acts_doc = _require(doc, "activations")
    acts = {}
    for slot in ("h", "y"):
        a = _require(acts_doc, slot, "activations.")
        kind = _require(a, "kind", f"activations.{slot}.")
        try:
            acts[slot] = ActivationSpec.of(kind)
        except InvalidInputError:
            raise FormatError(f"unknown activation {kind!r}", field=f"activations.{slot}.kind") from None
    mats_doc = _require(doc, "matrices")
    mats = {n: _array(_require(mats_doc, n, "matrices."), n, 2) for n in CELL_MATRICES[cell]}
    extra = set(mats_doc) - set(CELL_MATRICES[cell])
    if extra:
        name = sorted(extra)[0]
        raise FormatError(f"unexpected matrix {name!r} for {cell}", field=name)
    if cell == "conv":
        d, k, K = (int(_require(dims, key, "dims.")) for key in ("d", "k", "K"))
        want = {n: (k, k) for n in mats}
    else:
        d_x, d_h, d_y = (int(_require(dims, key, "dims.")) for key in ("d_x", "d_h", "d_y"))
        want = {n: (d_h, d_h) if n.startswith("U") else (d_y, d_h) if n == "V" else (d_h, d_x)
                for n in mats}
        d = K = None
    for n, A in mats.items():
        if A.shape != want[n]:
            raise DimensionMismatchError(f"matrix {n!r} has shape {A.shape}, dims say {want[n]}",
                                         field=n)
    try:
        return ModelWeights(cell, mats, d=d, K=K, activations=acts)
    except InvalidInputError as exc:
        raise DimensionMismatchError(str(exc), field="dims") from None


def save_model(w: ModelWeights, path) -> None:
    Path(path).write_text(dumps_model(w), encoding="utf-8")


def load_model(path) -> ModelWeights:
    return loads_model(Path(path).read_text(encoding="utf-8"))


def dumps_dataset(data: SequenceDataset) -> str:
    seqs = []
    for X, z in zip(data.inputs, data.labels):
        rows = ",\n        ".join(_row(r) for r in X)
        labels = "[" + ", ".join(str(int(v)) for v in z) + "]"
        seqs.append(f'    {{"inputs": [\n        {rows}\n      ],\n      "labels": {labels}}}')
    head = [
        "{",
        f'  "format_version": {FORMAT_VERSION},',
        f'  "m": {data.m}, "T": {data.T}, "d_x": {data.d_x}, "K": {data.K}, "B_x": {_num(data.B_x)},',
        f'  "seed": {json.dumps(data.seed)},',
        '  "sequences": [',
    ]
    return "\n".join(head) + "\n" + ",\n".join(seqs) + "\n  ]\n}\n"


def loads_dataset(text: str) -> SequenceDataset:
    doc = _parse(text)
    m, T, d_x, K = (int(_require(doc, key)) for key in ("m", "T", "d_x", "K"))
    B_x = _float(_require(doc, "B_x"), "B_x")
    seqs = _require(doc, "sequences")
    if len(seqs) != m:
        raise DimensionMismatchError(f"m = {m} but {len(seqs)} sequences", field="sequences")
    X = np.empty((m, T, d_x))
    Z = np.empty((m, T), dtype=np.int64)
    for i, s in enumerate(seqs):
        x = _array(_require(s, "inputs", f"sequences[{i}]."), f"sequences[{i}].inputs", 2)
        z = _array(_require(s, "labels", f"sequences[{i}]."), f"sequences[{i}].labels", 1)
        if x.shape != (T, d_x) or z.shape != (T,):
            raise DimensionMismatchError(f"sequence {i} does not match T={T}, d_x={d_x}",
                                         field=f"sequences[{i}]")
        X[i], Z[i] = x, z
    try:
        return SequenceDataset(X, Z, K, B_x, doc.get("seed"))
    except InvalidInputError as exc:
        raise FormatError(str(exc), field="labels") from None


def save_dataset(data: SequenceDataset, path) -> None:
    Path(path).write_text(dumps_dataset(data), encoding="utf-8")


def load_dataset(path) -> SequenceDataset:
    return loads_dataset(Path(path).read_text(encoding="utf-8"))
