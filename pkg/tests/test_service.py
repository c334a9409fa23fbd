import numpy as np
from fastapi.testclient import TestClient

from linefield import bundles as bd
from linefield import meshes as ms
from linefield import serialize as sz
from linefield import telescope as tl
from linefield.service import create_app

client = TestClient(create_app())


def small_field_doc():
    cx = ms.torus_grid(4, 4)
    states = np.zeros((cx.n_vertices, 2), dtype=complex)
    states[:, 0] = 1.0
    section = bd.section_from_states(cx, states)
    field, _ = bd.synthesize_operator(section)
    return sz.encode_field(field)


def test_health():
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_generate_and_analyze():
    r = client.post("/generate", json={"name": "disc", "seed": 2})
    assert r.status_code == 200
    field_doc = r.json()["field"]

    r = client.post("/analyze", json={"field": field_doc})
    assert r.status_code == 200
    rep = r.json()["report"]
    assert rep["rank_one"] is True
    assert rep["max_length"] <= 1


def test_extract_and_synthesize():
    doc = small_field_doc()
    r = client.post("/extract", json={"field": doc})
    assert r.status_code == 200
    body = r.json()
    assert body["max_residual"] < 1e-9

    r = client.post("/synthesize", json={"section": body["section"]})
    assert r.status_code == 200
    assert min(r.json()["profile"]) > 0


def test_chern_factorable_is_zero():
    doc = small_field_doc()
    r = client.post("/chern", json={"field": doc})
    assert r.status_code == 200
    assert r.json()["chern"]["class"]["is_zero"] is True


def test_trivialize_returns_gauge():
    doc = small_field_doc()
    r = client.post("/trivialize", json={"field": doc})
    assert r.status_code == 200
    body = r.json()
    assert len(body["gauge"]) == 16
    assert len(body["tree_edges"]) == 15


def test_factor_sphere_maps_to_409():
    r = client.post("/generate", json={"name": "sphere"})
    assert r.status_code == 200
    field_doc = r.json()["field"]

    r = client.post("/factor", json={"field": field_doc})
    assert r.status_code == 409
    body = r.json()
    assert body["status"] == "obstructed"
    assert body["kind"] == "obstruction"
    assert "certificate" in body


def test_factor_factorable_field():
    doc = small_field_doc()
    r = client.post("/factor", json={"field": doc})
    assert r.status_code == 200
    body = r.json()
    assert body["max_vertex_residual"] < 1e-9
    assert len(body["left"]) == 16


def test_approximate_disc():
    r = client.post("/generate", json={"name": "disc", "seed": 0})
    field_doc = r.json()["field"]
    r = client.post("/approximate", json={"field": field_doc, "n_stages": 3})
    assert r.status_code == 200
    body = r.json()
    assert len(body["stages"]) == 3
    for st in body["stages"]:
        assert st["measured_error"] <= st["bound"] + 1e-12


def test_verdict_endpoints():
    r = client.post("/generate", json={"name": "disc", "seed": 1})
    field_doc = r.json()["field"]
    r = client.post("/verdict", json={"field": field_doc})
    assert r.status_code == 200
    assert r.json()["verdict"]["in_closure"] is True


def test_telescope_build_decide_demo():
    r = client.post("/telescope/build", json={"depth": 3, "kind": "lean"})
    assert r.status_code == 200
    assert r.json()["depth"] == 3

    g = tl.canonical_gluing(4)
    r = client.post("/telescope/decide", json={"gluing": sz.encode_gluing(g)})
    assert r.status_code == 200
    body = r.json()
    assert body["tower"]["trivial"] is False
    assert body["truncation_gauges"][0] == 33

    r = client.post("/telescope/demo", json={"depth": 2, "seed": 0})
    assert r.status_code == 200
    assert r.json()["demo"]["recovered_relative_windings"] == [1, 1]


def test_haagerup_rank_one():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    from linefield.fibre import ElementaryRep

    rep = ElementaryRep(2, ((a, b),))
    r = client.post("/haagerup", json={"rep": sz.encode_rep(rep)})
    assert r.status_code == 200
    body = r.json()
    expect = np.linalg.norm(a, 2) * np.linalg.norm(b, 2)
    assert abs(body["value"] - expect) < 1e-6 * expect
    assert body["length"] == 1


def test_recover_endpoint():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    a /= np.linalg.norm(a, 2)
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b /= np.linalg.norm(b, 2)
    mu = np.exp(1.1j)
    payload = {
        "a": sz.encode_matrix(a),
        "b": sz.encode_matrix(b),
        "c": sz.encode_matrix(mu * a),
        "d": sz.encode_matrix(np.conj(mu) * b),
        "eps": 0.25,
    }
    r = client.post("/recover", json=payload)
    assert r.status_code == 200
    assert r.json()["bound"] < 6 * 0.25


def test_recover_precondition_maps_to_422():
    eye = sz.encode_matrix(np.eye(2))
    payload = {"a": eye, "b": eye, "c": eye, "d": eye, "eps": 0.5}
    r = client.post("/recover", json=payload)
    assert r.status_code == 422
    assert r.json()["kind"] == "precondition"


def test_bad_document_maps_to_400():
    r = client.post("/analyze", json={"field": {"type": "field", "schema": 1}})
    assert r.status_code == 400
    assert r.json()["kind"] == "input"


def test_unknown_generator_maps_to_400():
    r = client.post("/generate", json={"name": "nonsense"})
    assert r.status_code == 400


def test_cohomology_endpoint():
    cx = ms.klein_grid(6, 6)
    r = client.post("/cohomology", json={"complex": sz.encode_complex2(cx)})
    assert r.status_code == 200
    body = r.json()
    assert body["cohomology"]["h2"] == {"free": 0, "torsion": [2]}


def test_experiment_endpoint():
    r = client.post(
        "/experiment/length-limits",
        json={"dim": 2, "target_length": 2, "trials": 2, "steps": 4, "seed": 3},
    )
    assert r.status_code == 200
    body = r.json()
    assert len(body["trials"]) == 2
    assert "note" in body
