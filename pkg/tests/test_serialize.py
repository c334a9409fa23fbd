import json

import numpy as np
import pytest

from linefield import bundles as bd
from linefield import fibre as fb
from linefield import fields as fl
from linefield import meshes as ms
from linefield import serialize as sz
from linefield import telescope as tl
from linefield.errors import InputError


def rand_mat(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def test_complex_number_wire_format():
    doc = sz.encode_matrix(np.array([[1 + 2j]]))
    assert doc == [[[1.0, 2.0]]]
    back = sz.decode_matrix(doc)
    assert back[0, 0] == 1 + 2j
    # bare reals are accepted on decode
    row = sz.decode_matrix([[3, 4]])
    assert row[0, 0] == 3 + 0j and row[0, 1] == 4 + 0j


def test_matrix_decode_rejects_ragged_input():
    with pytest.raises(InputError):
        sz.decode_matrix([[1, 2], [3]])
    with pytest.raises(InputError):
        sz.decode_matrix("nope")


def test_complex2_roundtrip_with_marks():
    cx = ms.torus_grid(4, 4)
    cx2 = sz.decode_complex2(sz.encode_complex2(cx))
    assert cx2.n_vertices == cx.n_vertices
    assert cx2.edges == cx.edges
    assert cx2.triangles == cx.triangles
    tc = tl.build_truncation(2, kind="lean")
    back = sz.decode_complex2(sz.encode_complex2(tc.complex))
    assert back.marks == tc.complex.marks


def test_field_roundtrip():
    rng = np.random.default_rng(0)
    cx, _ = ms.disc_mesh(1, 5)
    mats = [rand_mat(rng, 4) for _ in range(cx.n_vertices)]
    field = fl.field_from_matrices(cx, 2, mats)
    back = sz.decode_field(sz.encode_field(field))
    assert back.dim == 2
    assert np.max(np.abs(back.fibres - field.fibres)) < 1e-15
    assert back.base.edges == cx.edges


def test_section_roundtrip():
    cx, pos = ms.sphere_mesh(0)
    sec = bd.section_from_states(cx, bd.coherent_states(pos))
    back = sz.decode_section(sz.encode_section(sec))
    assert np.max(np.abs(back.vectors - sec.vectors)) < 1e-15


def test_rep_roundtrip():
    rng = np.random.default_rng(1)
    rep = fb.ElementaryRep(3, ((rand_mat(rng, 3), rand_mat(rng, 3)),))
    back = sz.decode_rep(sz.encode_rep(rep))
    assert back.dim == 3
    assert np.allclose(back.pairs[0][0], rep.pairs[0][0])
    assert np.allclose(back.pairs[0][1], rep.pairs[0][1])


def test_gluing_roundtrip():
    gl = tl.canonical_gluing(3)
    back = sz.decode_gluing(sz.encode_gluing(gl))
    assert back.tail == gl.tail
    assert back.relative == gl.relative
    assert back.pattern == gl.pattern
    plain = tl.GluingData(tail=(2, 2), relative=(0, 1))
    assert sz.decode_gluing(sz.encode_gluing(plain)).pattern is None


def test_decode_any_dispatches_on_type():
    cx = ms.torus_grid(3, 3)
    doc = sz.encode_complex2(cx)
    obj = sz.decode_any(doc)
    assert obj.n_vertices == cx.n_vertices
    with pytest.raises(InputError):
        sz.decode_any({"schema": 1, "type": "widget"})
    with pytest.raises(InputError):
        sz.decode_any({"type": "complex"})  # missing schema


def test_schema_and_type_are_checked():
    cx = ms.torus_grid(3, 3)
    doc = sz.encode_complex2(cx)
    bad = dict(doc, schema=99)
    with pytest.raises(InputError):
        sz.decode_complex2(bad)
    with pytest.raises(InputError):
        sz.decode_field(doc)


def test_dumps_is_deterministic_and_sorted():
    rng = np.random.default_rng(2)
    cx, _ = ms.disc_mesh(1, 5)
    mats = [rand_mat(rng, 4) for _ in range(cx.n_vertices)]
    doc = sz.encode_field(fl.field_from_matrices(cx, 2, mats))
    s1, s2 = sz.dumps(doc), sz.dumps(doc)
    assert s1 == s2
    keys = list(json.loads(s1))
    assert keys == sorted(keys)


def test_dumps_handles_numpy_scalars():
    payload = {
        "i": np.int64(3),
        "x": np.float64(0.5),
        "z": np.complex128(1 + 1j),
        "arr": np.arange(3),
    }
    got = json.loads(sz.dumps(payload))
    assert got == {"i": 3, "x": 0.5, "z": [1.0, 1.0], "arr": [0, 1, 2]}


def test_save_and_load(tmp_path):
    cx = ms.torus_grid(3, 3)
    path = tmp_path / "complex.json"
    sz.save(path, sz.encode_complex2(cx))
    doc = sz.load(path)
    assert doc["type"] == "complex"
    with pytest.raises(InputError):
        sz.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InputError):
        sz.load(bad)
