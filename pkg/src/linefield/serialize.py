"""JSON wire formats.

Every document is a JSON object with "schema": 1 and a "type" tag. Complex
numbers travel as [re, im] pairs; matrices as nested lists of those.
Encoders are total on valid in-memory objects; decoders validate and raise
InputError with a pointed message on malformed input.
"""

from __future__ import annotations

import json

import numpy as np

from .bundles import LineSection
from .errors import InputError
from .fibre import ElementaryRep
from .fields import OperatorField, field_from_matrices
from .telescope import GluingData
from .topology import Complex2

SCHEMA = 1


def _num(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _unnum(v):
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
        isinstance(x, (int, float)) for x in v
    ):
        return complex(v[0], v[1])
    raise InputError(f"expected a number or [re, im] pair, got {v!r}")


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise InputError("matrices must be 2-dimensional")
    return [[_num(z) for z in row] for row in m]


def decode_matrix(doc) -> np.ndarray:
    if not isinstance(doc, list) or not doc or not all(isinstance(r, list) for r in doc):
        raise InputError("expected a matrix as a list of rows")
    width = len(doc[0])
    if any(len(r) != width for r in doc):
        raise InputError("matrix rows have unequal lengths")
    return np.array([[_unnum(z) for z in row] for row in doc], dtype=complex)


def _expect(doc, typ):
    if not isinstance(doc, dict):
        raise InputError(f"expected a JSON object for {typ}")
    if doc.get("schema") != SCHEMA:
        raise InputError(f"unsupported schema {doc.get('schema')!r} (expected {SCHEMA})")
    if doc.get("type") != typ:
        raise InputError(f"expected type {typ!r}, got {doc.get('type')!r}")


def encode_complex2(cx: Complex2) -> dict:
    return {
        "schema": SCHEMA,
        "type": "complex",
        "n_vertices": cx.n_vertices,
        "edges": [[int(u), int(v)] for u, v in cx.edges],
        "triangles": [[int(a), int(b), int(c)] for a, b, c in cx.triangles],
        "marks": {k: [int(v) for v in vs] for k, vs in cx.marks.items()},
    }


def decode_complex2(doc) -> Complex2:
    _expect(doc, "complex")
    try:
        n = int(doc["n_vertices"])
        edges = tuple((int(u), int(v)) for u, v in doc.get("edges", []))
        tris = tuple((int(a), int(b), int(c)) for a, b, c in doc.get("triangles", []))
        marks = {
            str(k): tuple(int(v) for v in vs)
            for k, vs in doc.get("marks", {}).items()
        }
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed complex document: {e}") from None
    return Complex2(n, edges, tris, marks)


def encode_field(field: OperatorField) -> dict:
    return {
        "schema": SCHEMA,
        "type": "field",
        "dim": field.dim,
        "base": encode_complex2(field.base),
        "fibres": [encode_matrix(field.fibres[v]) for v in range(field.base.n_vertices)],
    }


def decode_field(doc) -> OperatorField:
    _expect(doc, "field")
    base = decode_complex2(doc.get("base"))
    try:
        dim = int(doc["dim"])
        fibres = [decode_matrix(m) for m in doc["fibres"]]
    except (KeyError, TypeError) as e:
        raise InputError(f"malformed field document: {e}") from None
    if len(fibres) != base.n_vertices:
        raise InputError("field needs exactly one fibre matrix per vertex")
    return field_from_matrices(base, dim, fibres)


def encode_section(section: LineSection) -> dict:
    return {
        "schema": SCHEMA,
        "type": "section",
        "dim": section.dim,
        "base": encode_complex2(section.base),
        "vectors": [encode_matrix(section.vectors[v]) for v in range(section.base.n_vertices)],
    }


def decode_section(doc) -> LineSection:
    _expect(doc, "section")
    base = decode_complex2(doc.get("base"))
    try:
        dim = int(doc["dim"])
        vecs = [decode_matrix(m) for m in doc["vectors"]]
    except (KeyError, TypeError) as e:
        raise InputError(f"malformed section document: {e}") from None
    if len(vecs) != base.n_vertices:
        raise InputError("section needs exactly one matrix per vertex")
    arr = np.stack(vecs)
    if arr.shape[1:] != (dim, dim):
        raise InputError("section matrices must be dim x dim")
    return LineSection(base, dim, arr)


def encode_rep(rep: ElementaryRep) -> dict:
    return {
        "schema": SCHEMA,
        "type": "rep",
        "dim": rep.dim,
        "pairs": [[encode_matrix(a), encode_matrix(b)] for a, b in rep.pairs],
    }


def decode_rep(doc) -> ElementaryRep:
    _expect(doc, "rep")
    try:
        dim = int(doc["dim"])
        pairs = [(decode_matrix(a), decode_matrix(b)) for a, b in doc["pairs"]]
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed rep document: {e}") from None
    return ElementaryRep(dim, tuple(pairs))


def encode_gluing(g: GluingData) -> dict:
    return {
        "schema": SCHEMA,
        "type": "gluing",
        "tail": [int(d) for d in g.tail],
        "relative": [int(k) for k in g.relative],
        "pattern": g.pattern,
    }


def decode_gluing(doc) -> GluingData:
    _expect(doc, "gluing")
    try:
        tail = tuple(int(d) for d in doc["tail"])
        rel = tuple(int(k) for k in doc["relative"])
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed gluing document: {e}") from None
    pattern = doc.get("pattern")
    if pattern is not None and not isinstance(pattern, str):
        raise InputError("gluing pattern must be a string or null")
    return GluingData(tail, rel, pattern=pattern)


_DECODERS = {
    "complex": decode_complex2,
    "field": decode_field,
    "section": decode_section,
    "rep": decode_rep,
    "gluing": decode_gluing,
}


def decode_any(doc):
    """Dispatch on the document's type tag."""
    if not isinstance(doc, dict):
        raise InputError("expected a JSON object")
    typ = doc.get("type")
    if typ not in _DECODERS:
        raise InputError(f"unknown document type {typ!r}")
    return _DECODERS[typ](doc)


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, complex):
            return _num(o)
        if isinstance(o, np.complexfloating):
            return _num(complex(o))
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, cls=_Encoder)


def save(path: str, obj) -> None:
    with open(path, "w") as f:
        f.write(dumps(obj))
        f.write("\n")


def load(path: str):
    try:
        with open(path) as f:
            return json.loads(f.read())
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not valid JSON: {e}") from None
