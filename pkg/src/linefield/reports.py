"""Shared handlers behind the command line and the HTTP service.

Each handler takes decoded JSON documents plus options, runs the library,
and returns a JSON-ready dict with "schema" and "status". Domain errors
propagate as the library's exception types; the frontends translate them
(bad input, failed precondition, obstruction) into exit codes or HTTP
statuses. Obstructions are the interesting case: they carry certificates,
and the frontends return those as payloads rather than bare messages.
"""

from __future__ import annotations

import numpy as np

from . import bundles as bd
from . import closure as cl
from . import fibre as fb
from . import meshes as ms
from . import serialize as sz
from . import telescope as tl
from .errors import InputError
from .fields import OperatorField, norm_profile, validate
from .topology import cohomology as _cohomology

SCHEMA = sz.SCHEMA


def _ok(result: dict) -> dict:
    return {"schema": SCHEMA, "status": "ok", **result}


# ---------------------------------------------------------------------------
# demo inputs


def generate(name: str, seed: int = 0) -> dict:
    """A named demonstration field document.

    sphere: the minimal-twist rank-one field on a subdivided icosahedron
    (obstructed: factoring it fails with a certificate). torus: a gently
    wobbling factorable field. klein: a constant rank-one field on the
    non-orientable grid. disc: a rank-one field with a decaying norm
    profile (approximation demos). telescope:N: the depth-N tower bundle.
    """
    if name == "sphere":
        cx, pos = ms.sphere_mesh(1)
        field = bd.monopole_field(cx, pos)
    elif name == "torus":
        rng = np.random.default_rng(seed)
        cx = ms.torus_grid(8, 8)
        ang = 2 * np.pi * np.arange(cx.n_vertices) / cx.n_vertices
        jitter = 0.05 * rng.standard_normal(cx.n_vertices)
        states = np.stack(
            [
                np.cos(0.4 + 0.1 * np.sin(ang) + jitter) + 0j,
                np.sin(0.4 + 0.1 * np.sin(ang) + jitter) * np.exp(0.2j * np.cos(ang)),
            ],
            axis=1,
        )
        field = bd.field_from_sections(cx, 2, bd.section_from_states(cx, states))
    elif name == "klein":
        cx = ms.klein_grid(6, 6)
        states = np.tile(np.array([1.0 + 0j, 0j]), (cx.n_vertices, 1))
        field = bd.field_from_sections(cx, 2, bd.section_from_states(cx, states))
    elif name == "disc":
        cx, pos = ms.disc_mesh(4, 10)
        d = np.linalg.norm(pos, axis=1)
        states = np.stack(
            [np.cos(0.3 * d) + 0j, np.sin(0.3 * d) * np.exp(1j * 0.4 * d)],
            axis=1,
        )
        field = bd.field_from_sections(
            cx, 2, bd.section_from_states(cx, states), scale=np.exp(-6.0 * d)
        )
    elif name.startswith("telescope:"):
        try:
            depth = int(name.split(":", 1)[1])
        except ValueError:
            raise InputError("telescope depth must be an integer, e.g. telescope:3") from None
        tc = tl.build_truncation(depth, kind="section")
        field = tl.field_from_gluing(tc, tl.canonical_gluing(depth))
    else:
        raise InputError(
            f"unknown generator {name!r}; choose sphere, torus, klein, disc, "
            "or telescope:N"
        )
    return sz.encode_field(field)


def _field(doc) -> OperatorField:
    return sz.decode_field(doc)


# ---------------------------------------------------------------------------
# field handlers


def analyze(
    field_doc,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
    continuity_budget: float | None = None,
    seed: int = 0,
    edge_variation: bool = True,
) -> dict:
    field = _field(field_doc)
    rep = validate(
        field,
        rank_tol=rank_tol,
        continuity_budget=continuity_budget,
        seed=seed,
        edge_variation=edge_variation,
    )
    return _ok({"report": rep.as_dict()})


def extract(field_doc, rank_tol: float = fb.DEFAULT_RANK_TOL) -> dict:
    field = _field(field_doc)
    bundle = bd.extract(field, rank_tol)
    return _ok(
        {
            "section": sz.encode_section(bundle.left_section()),
            "weights": [float(x) for x in bundle.weights()],
            "max_residual": float(bundle.residuals.max()) if len(bundle.residuals) else 0.0,
        }
    )


def chern(
    field_doc,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
    rho: float = bd.DEFAULT_OVERLAP_FLOOR,
    margin: float = bd.DEFAULT_MARGIN_FLOOR,
) -> dict:
    field = _field(field_doc)
    report = bd.chern_class(field, rank_tol, rho, margin)
    return _ok({"chern": report.as_dict()})


def trivialize(
    field_doc,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
    rho: float = bd.DEFAULT_OVERLAP_FLOOR,
    margin: float = bd.DEFAULT_MARGIN_FLOOR,
) -> dict:
    field = _field(field_doc)
    bundle = bd.extract(field, rank_tol)
    tri = bd.trivialize(bundle.left_section(), rho, margin)
    return _ok(
        {
            "gauge": [sz._num(g) for g in tri.gauge],
            "twist": [int(x) for x in tri.twist],
            "corrected_phases": [float(x) for x in tri.corrected_phases],
            "tree_edges": [int(x) for x in np.nonzero(tri.tree_edges)[0]],
            "max_tree_residual": float(tri.max_tree_residual),
            "max_holonomy": float(tri.max_holonomy),
        }
    )


def factor(
    field_doc,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
    rho: float = bd.DEFAULT_OVERLAP_FLOOR,
    margin: float = bd.DEFAULT_MARGIN_FLOOR,
) -> dict:
    field = _field(field_doc)
    gf = bd.factor_field(field, rank_tol, rho, margin)
    return _ok(
        {
            "left": [sz.encode_matrix(m) for m in gf.left],
            "right": [sz.encode_matrix(m) for m in gf.right],
            "max_vertex_residual": float(gf.max_vertex_residual),
            "max_edge_jump": float(gf.max_edge_jump),
            "max_holonomy": float(gf.trivialization.max_holonomy),
        }
    )


def synthesize(section_doc, zero_tol: float = 1e-12) -> dict:
    section = sz.decode_section(section_doc)
    field, profile = bd.synthesize_operator(section, zero_tol=zero_tol)
    return _ok(
        {
            "field": sz.encode_field(field),
            "profile": [float(x) for x in profile],
        }
    )


def approximate(
    field_doc,
    n_stages: int | None = None,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
    seed: int = 0,
    include_factors: bool = False,
) -> dict:
    field = _field(field_doc)
    ex, stages = cl.approximate_by_multiplications(
        field, n_stages=n_stages, rank_tol=rank_tol, seed=seed
    )
    out = []
    for st in stages:
        entry = {
            "index": st.index,
            "threshold": float(st.threshold),
            "bound": float(st.bound),
            "measured_error": float(st.measured_error),
            "core_vertices": [int(v) for v in st.core_vertices],
        }
        if include_factors:
            entry["left"] = [sz.encode_matrix(m) for m in st.left]
            entry["right"] = [sz.encode_matrix(m) for m in st.right]
        out.append(entry)
    return _ok({"sup_norm": float(ex.sup_norm), "stages": out})


def verdict(field_doc, rank_tol: float = fb.DEFAULT_RANK_TOL, seed: int = 0) -> dict:
    field = _field(field_doc)
    v = cl.closure_verdict(field, rank_tol=rank_tol, seed=seed)
    return _ok({"verdict": v.as_dict()})


# ---------------------------------------------------------------------------
# fibre handlers


def haagerup(rep_doc, rank_tol: float = fb.DEFAULT_RANK_TOL, iters: int = 80, seed: int = 0) -> dict:
    rep = sz.decode_rep(rep_doc)
    est = fb.haagerup_norm(rep, tol=rank_tol, iters=iters, seed=seed)
    return _ok(
        {
            "value": float(est.value),
            "upper": float(est.upper),
            "gap": float(est.gap),
            "length": int(est.length),
        }
    )


def recover(
    a, b, c, d, eps: float, norm_tol: float = 1e-9
) -> dict:
    cert = fb.recover_pair(
        sz.decode_matrix(a),
        sz.decode_matrix(b),
        sz.decode_matrix(c),
        sz.decode_matrix(d),
        eps=eps,
        norm_tol=norm_tol,
    )
    return _ok(
        {
            "mu": sz._num(cert.mu),
            "bound_a": float(cert.bound_a),
            "bound_b": float(cert.bound_b),
            "bound": float(cert.bound),
            "epsilon": float(cert.epsilon),
        }
    )


def cohomology(complex_doc) -> dict:
    cx = sz.decode_complex2(complex_doc)
    return _ok({"cohomology": _cohomology(cx).as_dict(), "euler": cx.euler_characteristic()})


# ---------------------------------------------------------------------------
# telescope handlers


def telescope_build(
    depth: int,
    tail=None,
    far_size: int = tl.DEFAULT_FAR_SIZE,
    kind: str = "lean",
) -> dict:
    tc = tl.build_truncation(depth, tail=tail, far_size=far_size, kind=kind)
    return _ok(
        {
            "truncation": sz.encode_complex2(tc.complex),
            "depth": tc.depth,
            "tail": [int(d) for d in tc.tail],
            "sizes": [int(s) for s in tc.sizes],
            "kind": tc.kind,
            "circles": [[int(v) for v in circ] for circ in tc.circles],
        }
    )


def telescope_decide(gluing_doc, bound: int = 10**6) -> dict:
    gl = sz.decode_gluing(gluing_doc)
    out = {
        "truncation_gauges": [int(m) for m in tl.truncation_trivialization(gl)],
        "level_windings": [int(p) for p in gl.level_windings()],
    }
    out["tower"] = tl.is_globally_trivial(gl, bound=bound).as_dict()
    return _ok(out)


def telescope_demo(depth: int = 4, bound: int = 10**6, seed: int = 0) -> dict:
    return _ok({"demo": tl.phantom_demo(depth=depth, bound=bound, seed=seed)})


# ---------------------------------------------------------------------------
# exploratory: sequences of bounded-length operators and their limits


def length_limit_experiment(
    dim: int = 3,
    target_length: int = 2,
    trials: int = 20,
    steps: int = 6,
    seed: int = 0,
) -> dict:
    """Sample sequences of length-l fields collapsing onto shorter ones.

    For each trial, a random length-l representation is dragged toward a
    random length-(l-1) operator along a straight line; at each step the
    measured length and the distance to the nearest shorter operator
    (reshuffle truncation) are recorded. Exploratory: the output makes no
    claim beyond what was measured.
    """
    if target_length < 1 or dim < 2:
        raise InputError("need dim >= 2 and target_length >= 1")
    if target_length > dim * dim:
        raise InputError("target length cannot exceed dim^2")
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(trials):
        pairs = [
            (
                rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)),
                rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)),
            )
            for _ in range(target_length)
        ]
        f = fb.to_fibre_matrix(fb.ElementaryRep(dim, pairs)).matrix
        # nearest shorter operator by reshuffle truncation
        r = fb.reshuffle_matrix(f, dim)
        u, s, vh = np.linalg.svd(r)
        short = (u[:, : target_length - 1] * s[: target_length - 1]) @ vh[: target_length - 1]
        short_f = fb.reshuffle_matrix(short.reshape(dim * dim, dim * dim), dim)
        path = []
        for k in range(steps + 1):
            lam = k / steps
            g = (1 - lam) * f + lam * short_f
            gl = fb.length(fb.FibreOperator(dim, g))
            gap = float(s[target_length - 1] * (1 - lam))
            path.append({"lambda": lam, "length": int(gl), "tail_singular_value": gap})
        rows.append({"trial": t, "path": path})
    return _ok(
        {
            "dim": dim,
            "target_length": target_length,
            "note": (
                "lengths along straight lines from random length-l operators "
                "to their reshuffle truncations; measurements only"
            ),
            "trials": rows,
        }
    )
