import filecmp
import json

import numpy as np

from linefield import bundles as bd
from linefield import meshes as ms
from linefield import serialize as sz
from linefield.cli import main


def run(argv, capsys):
    rc = main(argv)
    out = capsys.readouterr().out
    return rc, json.loads(out) if out.strip() else None


def test_verdict_disc_exits_zero(capsys):
    rc, doc = run(["verdict", "--generate", "disc", "--seed", "3"], capsys)
    assert rc == 0
    assert doc["status"] == "ok"
    assert doc["verdict"]["in_closure"] is True


def test_analyze_generate_torus(capsys):
    rc, doc = run(["analyze", "--generate", "torus", "--seed", "5"], capsys)
    assert rc == 0
    assert doc["status"] == "ok"
    assert doc["report"]["n_vertices"] == 64
    assert doc["report"]["rank_one"] is True
    assert doc["report"]["sup_norm"] > 0


def test_factor_sphere_is_obstructed(capsys):
    rc, doc = run(["factor", "--generate", "sphere"], capsys)
    assert rc == 4
    assert doc["status"] == "obstructed"
    assert doc["kind"] == "obstruction"
    assert "certificate" in doc


def test_missing_input_file_exits_two(tmp_path, capsys):
    rc, doc = run(["analyze", "--in", str(tmp_path / "nope.json")], capsys)
    assert rc == 2
    assert doc["kind"] == "input"


def test_malformed_json_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc, doc = run(["analyze", "--in", str(bad)], capsys)
    assert rc == 2
    assert doc["kind"] == "input"


def test_unknown_generator_exits_two(capsys):
    rc, doc = run(["analyze", "--generate", "mystery"], capsys)
    assert rc == 2
    assert doc["kind"] == "input"


def test_threads_must_be_positive(capsys):
    rc = main(["analyze", "--generate", "disc", "--threads", "0"])
    capsys.readouterr()
    assert rc == 2


def _unit(m):
    return m / np.linalg.norm(m, 2)


def test_recover_phase_twin(tmp_path, capsys):
    rng = np.random.default_rng(11)
    a = _unit(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    b = _unit(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    mu = np.exp(0.4j)
    doc = {
        "a": sz.encode_matrix(a),
        "b": sz.encode_matrix(b),
        "c": sz.encode_matrix(mu * a),
        "d": sz.encode_matrix(np.conj(mu) * b),
    }
    p = tmp_path / "pair.json"
    p.write_text(json.dumps(doc))
    rc, out = run(["recover", "--in", str(p), "--eps", "0.2"], capsys)
    assert rc == 0
    assert out["bound"] < 6 * 0.2
    assert abs(abs(complex(out["mu"][0], out["mu"][1])) - 1.0) < 1e-9


def test_recover_eps_out_of_range_exits_three(tmp_path, capsys):
    a = np.eye(2)
    doc = {k: sz.encode_matrix(a) for k in ("a", "b", "c", "d")}
    p = tmp_path / "pair.json"
    p.write_text(json.dumps(doc))
    rc, out = run(["recover", "--in", str(p), "--eps", "0.5"], capsys)
    assert rc == 3
    assert out["kind"] == "precondition"


def test_extract_then_synthesize_chain(tmp_path, capsys):
    cx = ms.torus_grid(4, 4)
    states = np.zeros((cx.n_vertices, 2), dtype=complex)
    states[:, 0] = 1.0
    section = bd.section_from_states(cx, states)
    field, _ = bd.synthesize_operator(section)

    fpath = tmp_path / "field.json"
    sz.save(fpath, sz.encode_field(field))

    spath = tmp_path / "section.json"
    rc, doc = run(["extract", "--in", str(fpath), "--out", str(spath)], capsys)
    assert rc == 0
    saved = json.loads(spath.read_text())
    assert saved["status"] == "ok"
    assert saved["max_residual"] < 1e-9

    rc, doc = run(["synthesize", "--in", str(spath)], capsys)
    assert rc == 0
    assert doc["status"] == "ok"
    assert min(doc["profile"]) > 0
    rebuilt = sz.decode_field(doc["field"])
    assert rebuilt.fibres.shape == field.fibres.shape


def test_telescope_build_and_decide(tmp_path, capsys):
    rc, doc = run(["telescope", "build", "--depth", "3", "--kind", "lean"], capsys)
    assert rc == 0
    assert doc["depth"] == 3
    assert doc["kind"] == "lean"

    rc, doc = run(["telescope", "decide", "--depth", "4", "--constant", "1"], capsys)
    assert rc == 0
    assert doc["tower"]["trivial"] is False
    assert doc["truncation_gauges"][0] == 33

    rc, doc = run(["telescope", "decide", "--depth", "3", "--constant", "0"], capsys)
    assert rc == 0
    assert doc["tower"]["trivial"] is True


def test_telescope_demo(capsys):
    rc, doc = run(["telescope", "demo", "--depth", "2", "--seed", "1"], capsys)
    assert rc == 0
    assert doc["demo"]["recovered_relative_windings"] == [1, 1]
    assert doc["demo"]["class_is_zero"] is True


def test_cohomology_generate_klein(capsys):
    rc, doc = run(["cohomology", "--generate", "klein"], capsys)
    assert rc == 0
    assert doc["cohomology"]["h2"] == {"free": 0, "torsion": [2]}
    assert doc["euler"] == 0


def test_cohomology_accepts_build_report(tmp_path, capsys):
    bpath = tmp_path / "build.json"
    rc, _ = run(
        ["telescope", "build", "--depth", "2", "--kind", "lean", "--out", str(bpath)],
        capsys,
    )
    assert rc == 0
    rc, doc = run(["cohomology", "--in", str(bpath)], capsys)
    assert rc == 0
    assert doc["cohomology"]["h2"] == {"free": 0, "torsion": []}


def test_question33_experiment_reports_measurements(capsys):
    rc, doc = run(
        [
            "question33-experiment",
            "--dim", "2",
            "--length", "2",
            "--trials", "2",
            "--steps", "4",
            "--seed", "9",
        ],
        capsys,
    )
    assert rc == 0
    assert doc["dim"] == 2
    assert len(doc["trials"]) == 2
    assert "note" in doc


def test_same_seed_runs_are_byte_identical(tmp_path, capsys):
    f1, f2 = tmp_path / "a.json", tmp_path / "b.json"
    for f in (f1, f2):
        rc, _ = run(
            ["analyze", "--generate", "torus", "--seed", "7", "--out", str(f)],
            capsys,
        )
        assert rc == 0
    assert filecmp.cmp(f1, f2, shallow=False)
