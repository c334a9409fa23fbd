import numpy as np
import pytest

from linefield import bundles as bd
from linefield import closure as cl
from linefield import fields as fl
from linefield import meshes as ms
from linefield.errors import (
    EpsTooLarge,
    InnerProductVanished,
    NotRankOne,
    ObstructedOnCompact,
    VanishingFibre,
)


def decaying_disc_field(rings=4, sectors=10, rate=6.0):
    cx, pos = ms.disc_mesh(rings, sectors)
    d = np.linalg.norm(pos, axis=1)
    states = np.stack(
        [np.cos(0.3 * d) + 0j, np.sin(0.3 * d) * np.exp(1j * 0.4 * d)], axis=1
    )
    sec = bd.section_from_states(cx, states)
    return bd.field_from_sections(cx, 2, sec, scale=np.exp(-rate * d))


def test_sublevel_exhaustion_is_nested_and_covers():
    field = decaying_disc_field()
    ex = cl.sublevel_exhaustion(field)
    assert ex.sup_norm > 0
    prev = set()
    norms = fl.norm_profile(field)
    for k, stage in enumerate(ex.stages):
        core = set(int(v) for v in stage.core_map.vertex_old)
        assert prev <= core
        assert abs(stage.threshold - ex.sup_norm * 2.0 ** (-(k + 1))) < 1e-12
        for v in core:
            assert norms[v] >= stage.threshold - 1e-12
        prev = core
    assert prev == {v for v in range(field.base.n_vertices) if norms[v] > 1e-12}


def test_stage_errors_meet_halving_bounds():
    field = decaying_disc_field()
    ex, stages = cl.approximate_by_multiplications(field)
    for k, st in enumerate(stages):
        assert st.measured_error <= st.bound + 1e-12
        assert abs(st.bound - 2.0 * st.threshold) < 1e-12
        if k:
            assert abs(stages[k].bound - stages[k - 1].bound / 2.0) < 1e-12
    # approximants are exact on the measured core
    last = stages[-1]
    core = set(last.core_vertices)
    for v in core:
        got = np.kron(last.left[v], last.right[v].T)
        assert np.max(np.abs(got - field.fibres[v])) < 1e-8


def test_stage_factors_are_rank_one_everywhere():
    from linefield import fibre as fb

    field = decaying_disc_field(rings=2, sectors=8)
    _, stages = cl.approximate_by_multiplications(field, n_stages=3)
    st = stages[-1]
    for v in range(field.base.n_vertices):
        approx = np.kron(st.left[v], st.right[v].T)
        assert fb.length(fb.FibreOperator(2, approx)) <= 1


def test_approximation_needs_rank_one():
    rng = np.random.default_rng(0)
    cx, _ = ms.disc_mesh(1, 6)
    mats = [rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)) for _ in range(cx.n_vertices)]
    field = fl.field_from_matrices(cx, 2, mats)
    with pytest.raises(NotRankOne):
        cl.approximate_by_multiplications(field)


def test_obstructed_core_carries_certificate():
    cx, pos = ms.sphere_mesh(1)
    field = bd.monopole_field(cx, pos)
    with pytest.raises(ObstructedOnCompact) as exc:
        cl.approximate_by_multiplications(field, n_stages=2)
    assert exc.value.stage is not None
    cert = exc.value.certificate
    assert sum(map(abs, cert["free"])) == 1


def test_reconstruct_global_from_phase_twisted_factors():
    rng = np.random.default_rng(1)
    field = decaying_disc_field(rings=2, sectors=8)
    bundle = bd.extract(field)
    noise = np.exp(1j * rng.uniform(0, 2 * np.pi, field.base.n_vertices))
    approx = bundle.left * noise[:, None, None]
    rec = cl.reconstruct_global(field, approx)
    # pure phase error is absorbed exactly
    assert rec.eps < 1e-9
    assert rec.min_inner > 1 - 1e-9
    for v in range(field.base.n_vertices):
        got = np.kron(rec.left[v], rec.right[v].T)
        assert np.max(np.abs(got - field.fibres[v])) < 1e-8


def test_reconstruct_global_measures_additive_noise():
    rng = np.random.default_rng(2)
    field = decaying_disc_field(rings=2, sectors=8)
    bundle = bd.extract(field)
    scale = np.linalg.norm(bundle.left.reshape(len(bundle.left), -1), axis=1)
    bump = 0.02 * scale[:, None, None] * (
        rng.standard_normal(bundle.left.shape) + 1j * rng.standard_normal(bundle.left.shape)
    )
    rec = cl.reconstruct_global(field, bundle.left + bump)
    n = field.dim
    assert 0 < rec.eps < 1.0 / np.sqrt(18 * n)
    assert rec.min_inner > 1 - 18 * n * rec.eps**2 - 1e-12


def test_reconstruct_global_rejects_distant_approximants():
    rng = np.random.default_rng(3)
    field = decaying_disc_field(rings=2, sectors=8)
    wild = rng.standard_normal((field.base.n_vertices, 2, 2)) + 1j * rng.standard_normal(
        (field.base.n_vertices, 2, 2)
    )
    with pytest.raises((EpsTooLarge, InnerProductVanished)):
        cl.reconstruct_global(field, wild)


def test_reconstruct_global_rejects_vanishing_field():
    field = decaying_disc_field(rings=2, sectors=8)
    fibres = field.fibres.copy()
    fibres[0] = 0.0
    zeroed = fl.field_from_matrices(field.base, 2, fibres)
    approx = np.ones((field.base.n_vertices, 2, 2), dtype=complex)
    with pytest.raises(VanishingFibre):
        cl.reconstruct_global(zeroed, approx)


def test_verdict_trivial_disc_field_is_in_closure():
    field = decaying_disc_field()
    v = cl.closure_verdict(field)
    assert v.in_closure
    assert v.factors_globally
    d = v.as_dict()
    assert d["in_closure"] is True and d["factors_globally"] is True
    assert d["length_witnesses"] == []


def test_verdict_rejects_length_two_field():
    rng = np.random.default_rng(4)
    cx, _ = ms.disc_mesh(1, 6)
    a1, b1 = (rng.standard_normal((2, 2)) for _ in range(2))
    mats = []
    for _ in range(cx.n_vertices):
        a, b, c, d = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(4))
        mats.append(np.kron(a, b.T) + np.kron(c, d.T))
    field = fl.field_from_matrices(cx, 2, mats)
    v = cl.closure_verdict(field)
    assert not v.in_closure
    assert v.length_witnesses
    assert v.max_length == 2
    assert v.factors_globally is None


def test_verdict_zero_field_is_the_zero_multiplication():
    cx, _ = ms.disc_mesh(1, 6)
    field = fl.field_from_matrices(cx, 2, [np.zeros((4, 4))] * cx.n_vertices)
    v = cl.closure_verdict(field)
    assert v.in_closure
    assert "zero" in v.reason


def test_verdict_obstructed_sphere_is_outside():
    cx, pos = ms.sphere_mesh(1)
    v = cl.closure_verdict(bd.monopole_field(cx, pos))
    assert v.in_closure is False
    assert v.factors_globally is False
    assert v.obstructed_stage is not None
    assert v.certificate is not None
