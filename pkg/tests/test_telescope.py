import math

import numpy as np
import pytest

from linefield import bundles as bd
from linefield import fields as fl
from linefield import telescope as tl
from linefield import topology as tp
from linefield.errors import (
    InputError,
    PreconditionViolated,
    SizeCap,
    UnsupportedTail,
)


def test_canonical_tail_and_sizes():
    assert tl.canonical_tail(4) == (2, 3, 4, 5)
    assert tl.circle_sizes((2, 3, 4, 5), 6) == (720, 360, 120, 30, 6)
    assert tl.circle_sizes((3,), 4) == (12, 4)
    with pytest.raises(InputError):
        tl.circle_sizes((0, 2), 6)
    with pytest.raises(InputError):
        tl.circle_sizes((2,), 2)


def test_lean_truncations_look_like_circles():
    for depth in (1, 2, 3):
        tc = tl.build_truncation(depth, kind="lean")
        rep = tp.cohomology(tc.complex)
        assert rep.h0 == (1, ())
        assert rep.h1 == (1, ())
        assert rep.h2 == (0, ())
        assert tc.complex.euler_characteristic() == 0
        assert len(tc.circles) == depth + 1
        assert "open_end" in tc.complex.marks and "far_end" in tc.complex.marks


def test_truncation_size_cap():
    with pytest.raises(SizeCap):
        tl.build_truncation(6, kind="section")


def test_gluing_recurrence_and_level_windings():
    gl = tl.GluingData(tail=(2, 3, 4), relative=(1, 1, 1))
    assert gl.depth == 3
    # p_n = k_n + d_n p_{n+1} with p at the far end equal to zero
    assert gl.level_windings() == (9, 4, 1, 0)
    with pytest.raises(InputError):
        tl.GluingData(tail=(2, 3), relative=(1,))


def test_section_extraction_recovers_the_designed_gluing():
    depth = 3
    tc = tl.build_truncation(depth, kind="section")
    gl = tl.canonical_gluing(depth)
    sec = tl.section_from_gluing(tc, gl)
    got = tl.extract_gluing(tc, sec)
    assert got.relative == gl.relative
    assert got.level_windings() == gl.level_windings()
    # extraction also works on the factors produced from the field itself
    field = tl.field_from_gluing(tc, gl)
    gf = bd.factor_field(field)
    left = bd.LineSection(tc.complex, 2, gf.left / np.linalg.norm(
        gf.left.reshape(len(gf.left), -1), axis=1)[:, None, None])
    got2 = tl.extract_gluing(tc, left)
    assert got2.relative == gl.relative


def test_section_needs_a_section_mesh():
    tc = tl.build_truncation(2, kind="lean")
    with pytest.raises(PreconditionViolated):
        tl.section_from_gluing(tc, tl.canonical_gluing(2))


def test_truncation_trivialization_sums_factorials():
    gl = tl.GluingData(tail=(2, 3, 4, 5), relative=(1, 1, 1, 1))
    m = tl.truncation_trivialization(gl)
    assert m == (33, 16, 5, 1, 0)
    assert m[0] == sum(math.factorial(j) for j in range(1, 5))
    # stage gauges grow without stabilizing as the telescope deepens
    gauges = [tl.truncation_trivialization(tl.canonical_gluing(n))[0] for n in range(1, 6)]
    assert gauges == [1, 3, 9, 33, 153]
    assert all(b > a for a, b in zip(gauges, gauges[1:]))


def test_trivialization_really_trivializes():
    # m_n - d_n m_{n+1} = k_n is the defining relation of the gauge
    for depth in (2, 4, 5):
        gl = tl.canonical_gluing(depth)
        m = tl.truncation_trivialization(gl)
        for n in range(depth):
            assert m[n] - gl.tail[n] * m[n + 1] == gl.relative[n]


def test_residue_windows_follow_factorial_sums():
    gl = tl.canonical_gluing(4)
    s4, p4 = tl.residue_window(gl, 4)
    assert (s4, p4) == (33, 120)
    s5, p5 = tl.residue_window(gl, 5)
    assert (s5, p5) == (153, 720)
    s8, p8 = tl.residue_window(gl, 8)
    assert s8 == sum(math.factorial(j) for j in range(1, 9)) == 46233
    assert p8 == math.factorial(9) == 362880
    # windows are nested: the deeper residue reduces to the shallower one
    assert s5 % p4 == s4
    assert s8 % p5 == s5 % p5


def test_residue_window_needs_a_pattern_beyond_data():
    gl = tl.GluingData(tail=(2, 3), relative=(1, 1))
    with pytest.raises(UnsupportedTail):
        tl.residue_window(gl, 5)


def test_survivors_shrink_with_depth():
    gl = tl.canonical_gluing(4)
    (s, p), vals = tl.survivors_at_depth(gl, bound=10**6, depth=8)
    assert (s, p) == (46233, 362880)
    assert len(vals) == 5
    assert all(v % p == s % p for v in vals)
    assert all(abs(v) <= 10**6 for v in vals)
    assert 46233 in vals
    (_, _), vals9 = tl.survivors_at_depth(gl, bound=10**6, depth=9)
    assert vals9 == [409113]
    (_, _), vals10 = tl.survivors_at_depth(gl, bound=10**6, depth=10)
    assert vals10 == []


def test_phantom_verdict_for_constant_tail():
    verdict = tl.is_globally_trivial(tl.canonical_gluing(4), bound=10**6)
    assert verdict.phantom and not verdict.trivial
    assert verdict.conclusive_depth == 10
    assert verdict.witness is None
    windows = {w[0]: (w[1], w[2]) for w in verdict.windows}
    assert windows[4] == (33, 120)
    assert windows[5] == (153, 720)
    assert "contracts" in verdict.proof or "no integer" in verdict.proof
    d = verdict.as_dict()
    assert d["phantom"] is True and d["trivial"] is False


def test_trivial_verdict_for_finite_support():
    gl = tl.GluingData(tail=(2, 3, 4, 5), relative=(0, 0, 0, 0), pattern="factorial-constant")
    verdict = tl.is_globally_trivial(gl)
    assert verdict.trivial and not verdict.phantom
    assert verdict.witness == 0


def test_trivial_verdict_for_nonzero_finite_support():
    # prefix (1,1,1,1) then a constant-zero tail: decided by back-substitution
    gl = tl.GluingData(
        tail=(2, 3, 4, 5, 6, 7),
        relative=(1, 1, 1, 1, 0, 0),
        pattern="factorial-constant",
    )
    verdict = tl.is_globally_trivial(gl)
    assert verdict.trivial and not verdict.phantom
    assert verdict.witness == 33
    # the witness sits in every residue window, stored and extended depths alike
    for depth in (1, 2, 3, 4, 5, 6, 8, 12):
        s, p = tl.residue_window(gl, depth)
        assert (verdict.witness - s) % p == 0


def test_phantom_verdict_for_varying_prefix():
    # prefix differs from the constant continuation c = 1: still decidable
    gl = tl.GluingData(
        tail=(2, 3, 4),
        relative=(3, -2, 1),
        pattern="factorial-constant",
    )
    verdict = tl.is_globally_trivial(gl, bound=10**4)
    assert verdict.phantom and not verdict.trivial
    assert verdict.conclusive_depth is not None
    for n, s, p, count, example in verdict.windows:
        assert (s, p) == tl.residue_window(gl, n)
        if example is not None:
            assert (example - s) % p == 0 and abs(example) <= 10**4


def test_verdict_needs_supported_tail():
    gl = tl.GluingData(tail=(2, 3, 4), relative=(1, 1, 1))
    with pytest.raises(UnsupportedTail):
        tl.is_globally_trivial(gl)


def test_gluing_field_is_rank_one_and_covering_consistent():
    depth = 2
    tc = tl.build_truncation(depth, kind="section")
    field = tl.field_from_gluing(tc, tl.canonical_gluing(depth))
    rep = fl.validate(field, edge_variation=False)
    assert rep.max_length == 1
    assert rep.rank_one
    assert rep.zero_vertices == ()
    report = bd.chern_class(field)
    assert report.as_dict()["class"]["is_zero"]


def test_phantom_demo_summary():
    demo = tl.phantom_demo(depth=2, bound=10**4)
    assert demo["depth"] == 2
    assert demo["class_is_zero"] is True
    assert demo["designed_cocycle_is_zero"] is True
    assert demo["min_overlap"] > 0.5
    assert demo["min_margin"] > 1.0
    assert demo["recovered_relative_windings"] == [1, 1]
    assert demo["stage_gauges_by_depth"] == [1, 3]
    assert demo["tower"]["phantom"] is True
