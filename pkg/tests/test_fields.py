import numpy as np
import pytest

from linefield import fibre as fb
from linefield import fields as fl
from linefield import meshes as ms
from linefield import topology as tp
from linefield.errors import (
    IndependenceLost,
    InputError,
    LengthMismatch,
    PreconditionViolated,
    ValidationError,
)


def rand_mat(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def rank_one_field(cx, rng, n=2):
    mats = []
    for _ in range(cx.n_vertices):
        a, b = rand_mat(rng, n), rand_mat(rng, n)
        mats.append(np.kron(a, b.T))
    return fl.field_from_matrices(cx, n, mats)


def test_field_shape_validation():
    cx = ms.torus_grid(3, 3)
    with pytest.raises(InputError):
        fl.field_from_matrices(cx, 2, [np.eye(4)] * (cx.n_vertices - 1))
    with pytest.raises(InputError):
        fl.field_from_matrices(cx, 2, [np.eye(3)] * cx.n_vertices)


def test_validate_reports_lengths_and_norms():
    rng = np.random.default_rng(0)
    cx = ms.torus_grid(3, 3)
    field = rank_one_field(cx, rng)
    rep = fl.validate(field)
    assert rep.max_length == 1
    assert rep.rank_one
    assert rep.n_vertices == cx.n_vertices
    assert len(rep.norms) == cx.n_vertices
    assert rep.sup_norm == max(rep.norms)
    assert rep.zero_vertices == ()
    d = rep.as_dict()
    assert d["max_length"] == 1 and d["rank_one"] is True


def test_validate_budget_flags_jumpy_edges():
    rng = np.random.default_rng(1)
    cx = ms.torus_grid(3, 3)
    mats = [np.kron(np.eye(2), np.eye(2)) for _ in range(cx.n_vertices)]
    mats[4] = 50.0 * mats[4]
    field = fl.field_from_matrices(cx, 2, mats)
    with pytest.raises(ValidationError) as exc:
        fl.validate(field, continuity_budget=1.0)
    assert all(4 in e for e in exc.value.edges)
    # without the sweep the budget cannot be checked
    with pytest.raises(InputError):
        fl.validate(field, continuity_budget=1.0, edge_variation=False)
    rep = fl.validate(field, edge_variation=False)
    assert rep.max_edge_variation == 0.0 and rep.worst_edge is None


def test_matrix_unit_decomposition_reassembles():
    rng = np.random.default_rng(2)
    for n in (2, 3, 4):
        for _ in range(10):
            f = fb.FibreOperator(n, rand_mat(rng, n * n))
            pairs = fl.matrix_unit_pairs(f)
            g = fl.reassemble_matrix_units(n, pairs)
            assert np.max(np.abs(g.matrix - f.matrix)) < 1e-10


def test_matrix_unit_pairs_drop_zero_rows():
    n = 3
    f = fb.to_fibre_matrix(fb.ElementaryRep(n, ((np.eye(n), np.eye(n)),)))
    full = fl.matrix_unit_pairs(f)
    trimmed = fl.matrix_unit_pairs(f, zero_tol=1e-12)
    assert len(trimmed) <= len(full)
    g = fl.reassemble_matrix_units(n, trimmed)
    assert np.max(np.abs(g.matrix - f.matrix)) < 1e-10


def test_norm_profile_matches_validate():
    rng = np.random.default_rng(3)
    cx, _ = ms.disc_mesh(1, 6)
    field = rank_one_field(cx, rng)
    prof = fl.norm_profile(field)
    rep = fl.validate(field)
    assert np.allclose(prof, rep.norms, atol=1e-9)


def test_normalize_scales_to_unit_sup():
    rng = np.random.default_rng(4)
    cx, _ = ms.disc_mesh(1, 6)
    field = rank_one_field(cx, rng)
    scaled, factor = fl.normalize(field)
    assert factor > 0
    assert abs(fl.validate(scaled).sup_norm - 1.0) < 1e-9


def test_local_length_factorization_roundtrip_length_two():
    rng = np.random.default_rng(5)
    cx = ms.torus_grid(3, 3)
    a1, b1 = rand_mat(rng, 2), rand_mat(rng, 2)
    a2, b2 = rand_mat(rng, 2), rand_mat(rng, 2)
    mats = []
    for v in range(cx.n_vertices):
        t = v / cx.n_vertices
        mats.append(
            np.kron((1 + 0.2 * t) * a1, b1.T) + np.kron(a2, (1 - 0.1 * t) * b2.T)
        )
    field = fl.field_from_matrices(cx, 2, mats)
    ff = fl.local_length_factorization(field)
    assert ff.length == 2
    back = fl.reassemble_factors(2, cx, ff)
    assert np.max(np.abs(back.fibres - field.fibres)) < 1e-8
    assert ff.max_residual < 1e-8


def test_local_length_factorization_rejects_longer_fibres():
    rng = np.random.default_rng(6)
    cx = ms.torus_grid(3, 3)
    mats = [rand_mat(rng, 4) for _ in range(cx.n_vertices)]
    field = fl.field_from_matrices(cx, 2, mats)
    with pytest.raises(LengthMismatch):
        fl.local_length_factorization(field, target_length=2)


def test_local_length_factorization_needs_constant_length():
    rng = np.random.default_rng(7)
    cx = ms.torus_grid(3, 3)
    a, b = rand_mat(rng, 2), rand_mat(rng, 2)
    mats = [np.kron(a, b.T) for _ in range(cx.n_vertices)]
    mats[3] = mats[3] + np.kron(b, a.T)
    field = fl.field_from_matrices(cx, 2, mats)
    # the basepoint fibre must carry the full length
    with pytest.raises(PreconditionViolated):
        fl.local_length_factorization(field, basepoint=0, target_length=2)
    # and a shorter fibre along the walk collapses the frame
    with pytest.raises(IndependenceLost):
        fl.local_length_factorization(field, basepoint=3)


def test_restrict_keeps_fibres():
    rng = np.random.default_rng(8)
    cx = ms.torus_grid(4, 4)
    field = rank_one_field(cx, rng)
    sub, smap = tp.subcomplex(cx, range(6))
    small = fl.restrict(field, sub, smap)
    assert small.base is sub
    for new_v, old_v in enumerate(smap.vertex_old):
        assert np.array_equal(small.fibres[new_v], field.fibres[old_v])


def test_field_from_pairs_matches_matrices():
    rng = np.random.default_rng(9)
    cx, _ = ms.disc_mesh(1, 5)
    pair_lists = []
    mats = []
    for _ in range(cx.n_vertices):
        a, b = rand_mat(rng, 2), rand_mat(rng, 2)
        pair_lists.append([(a, b)])
        mats.append(np.kron(a, b.T))
    f1 = fl.field_from_pairs(cx, 2, pair_lists)
    f2 = fl.field_from_matrices(cx, 2, mats)
    assert np.max(np.abs(f1.fibres - f2.fibres)) < 1e-12
