"""Mapping telescopes of circle coverings and phantom line bundles.

A truncation of depth N stacks N mapping cylinders: level-n circles of
L_n = d_n * L_{n+1} vertices, each mapped onto the next by the simplicial
covering j -> j mod L_{n+1}. Every truncation is homotopy equivalent to a
circle, so every line bundle on it is trivial; the phantom phenomenon lives
in the tower: per-truncation trivializations exist at every depth but their
defining integers satisfy a division chain that can have no common solution.

Two meshes serve different purposes. The lean mesh (two rows per cylinder)
is the smallest correct model of the topology. Sections with genuinely
moving lines need room: a fibre line sitting at a pole of the state sphere
cannot change its axis winding across a single band without tearing the
overlap phases, so the section mesh inserts three interior rows per
cylinder whose middle row parks the line at the opposite pole. All relative
winding is paid through that row while every triangle keeps a small phase
sum, which is what makes the winding cocycle vanish identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundles import LineSection, field_from_sections, section_from_states
from .errors import InputError, PreconditionViolated, SizeCap, UnsupportedTail
from .fields import OperatorField
from .topology import Complex2

MAX_VERTICES = 100_000
DEFAULT_FAR_SIZE = 6


def canonical_tail(depth: int) -> tuple:
    """Covering degrees d_n = n + 1 (the factorial tower)."""
    if depth < 1:
        raise InputError("depth must be at least 1")
    return tuple(n + 1 for n in range(1, depth + 1))


def circle_sizes(tail, far_size: int = DEFAULT_FAR_SIZE) -> tuple:
    """L_1 .. L_{N+1} with L_{N+1} = far_size and L_n = d_n * L_{n+1}."""
    tail = tuple(int(d) for d in tail)
    if any(d < 1 for d in tail):
        raise InputError("covering degrees must be positive")
    if far_size < 3:
        raise InputError("the far circle needs at least 3 vertices")
    sizes = [far_size]
    for d in reversed(tail):
        sizes.append(sizes[-1] * d)
    return tuple(reversed(sizes))


@dataclass
class TelescopeComplex:
    """A depth-N truncation with its level structure.

    kind "lean" has two rows per cylinder (topology checks); kind "section"
    adds three interior rows per cylinder and carries per-vertex state
    templates (angle, amplitudes, winding slot) so sections can be laid
    down for any compatible winding vector.
    """

    complex: Complex2
    depth: int
    tail: tuple
    sizes: tuple           # L_1 .. L_{N+1}
    circles: tuple         # per level, tuple of vertex ids in angular order
    kind: str
    angles: np.ndarray | None = None       # per-vertex angle
    amp: np.ndarray | None = None          # (V, 2) state amplitudes
    wind_ref: np.ndarray | None = None     # (V,) level whose winding applies
    wind_mult: np.ndarray | None = None    # (V,) multiplier on that winding
    probe_rows: tuple = ()                 # per cylinder, (entry_row, exit_row) ids


def _band(edges, tris, upper, lower):
    """Triangulate the band between a row and the (possibly smaller) row it
    covers; upper and lower are vertex id sequences in angular order."""
    lu, ll = len(upper), len(lower)
    if lu % ll:
        raise InputError("band rows must have compatible sizes")
    for j in range(lu):
        a = upper[j]
        b = upper[(j + 1) % lu]
        c = lower[j % ll]
        d = lower[(j + 1) % ll]
        for x, y in ((a, b), (a, c), (a, d), (c, d)):
            if x != y:
                edges.add((min(x, y), max(x, y)))
        tris.append((a, b, d))
        if c != d:
            tris.append((a, d, c))


def build_truncation(
    depth: int,
    tail=None,
    far_size: int = DEFAULT_FAR_SIZE,
    kind: str = "lean",
) -> TelescopeComplex:
    """Assemble a depth-N truncation mesh.

    kind "lean": rows are exactly the level circles. kind "section": each
    cylinder n runs through five rows of states
        (1,0) at winding p_n          level circle
        (.8,.6) at winding p_n        entry probe row
        (0,1), no winding             polar row: the line leaves the axis pole
        (.8,.6) at winding d_n p_{n+1}  exit probe row
        (1,0) at winding p_{n+1}      next level circle (via the covering band)
    where the winding slots are filled later by a concrete winding vector.
    """
    if kind not in ("lean", "section"):
        raise InputError("kind must be 'lean' or 'section'")
    tail = canonical_tail(depth) if tail is None else tuple(int(d) for d in tail)
    if len(tail) != depth:
        raise InputError("tail length must equal the depth")
    sizes = circle_sizes(tail, far_size)
    rows_per_cyl = 1 if kind == "lean" else 4
    total = sum(sizes[:-1]) * rows_per_cyl + sizes[-1]
    if total > MAX_VERTICES:
        raise SizeCap(
            f"truncation would need {total} vertices (cap {MAX_VERTICES}); "
            "reduce the depth or the far circle"
        )
    ids = iter(range(total))
    circles = []
    interiors = []  # per cylinder, list of interior rows (section kind)
    for n in range(depth):
        circles.append(tuple(next(ids) for _ in range(sizes[n])))
        if kind == "section":
            interiors.append(
                [tuple(next(ids) for _ in range(sizes[n])) for _ in range(3)]
            )
    circles.append(tuple(next(ids) for _ in range(sizes[-1])))

    edges = set()
    tris = []
    angles = np.zeros(total)
    amp = np.zeros((total, 2))
    wind_ref = np.zeros(total, dtype=np.int64)
    wind_mult = np.zeros(total, dtype=np.int64)
    probe_rows = []

    def set_row(row, level_idx, c1, c2, ref, mult):
        ln = len(row)
        for j, v in enumerate(row):
            angles[v] = 2 * np.pi * j / ln
            amp[v] = (c1, c2)
            wind_ref[v] = ref
            wind_mult[v] = mult

    for n in range(depth):
        set_row(circles[n], n, 1.0, 0.0, n, 1)
        if kind == "lean":
            _band(edges, tris, circles[n], circles[n + 1])
        else:
            r2, r3, r4 = interiors[n]
            set_row(r2, n, 0.8, 0.6, n, 1)
            set_row(r3, n, 0.0, 1.0, n, 0)
            set_row(r4, n, 0.8, 0.6, n + 1, tail[n])
            _band(edges, tris, circles[n], r2)
            _band(edges, tris, r2, r3)
            _band(edges, tris, r3, r4)
            _band(edges, tris, r4, circles[n + 1])
            probe_rows.append((r2, r4))
    set_row(circles[depth], depth, 1.0, 0.0, depth, 1)
    marks = {"open_end": circles[0], "far_end": circles[depth]}
    cx = Complex2(total, tuple(sorted(edges)), tuple(tris), marks)
    return TelescopeComplex(
        complex=cx,
        depth=depth,
        tail=tail,
        sizes=sizes,
        circles=tuple(circles),
        kind=kind,
        angles=angles,
        amp=amp,
        wind_ref=wind_ref,
        wind_mult=wind_mult,
        probe_rows=tuple(probe_rows),
    )


@dataclass
class GluingData:
    """Relative windings across the cylinders of a tower.

    tail holds the covering degrees d_n; relative[n] is the winding paid
    inside cylinder n+1 (0-based), so level windings obey
    p_n = relative_n + d_n * p_{n+1} with p_{N+1} = 0. pattern marks a
    recognized infinite continuation ("factorial-constant": d_n = n + 1 and
    the relative winding stays constant beyond the stored depth).
    """

    tail: tuple
    relative: tuple
    pattern: str | None = None

    def __post_init__(self):
        if len(self.tail) != len(self.relative):
            raise InputError("tail and relative windings must have equal length")

    @property
    def depth(self) -> int:
        return len(self.tail)

    def level_windings(self) -> tuple:
        """p_1 .. p_{N+1} with the far circle unwound."""
        p = [0]
        for d, k in zip(reversed(self.tail), reversed(self.relative)):
            p.append(int(k) + int(d) * p[-1])
        return tuple(reversed(p))


def canonical_gluing(depth: int, relative: int = 1) -> GluingData:
    return GluingData(
        canonical_tail(depth),
        tuple(int(relative) for _ in range(depth)),
        pattern="factorial-constant",
    )


def section_from_gluing(tc: TelescopeComplex, gluing: GluingData) -> LineSection:
    """Lay the winding states onto a section-kind truncation."""
    if tc.kind != "section":
        raise PreconditionViolated("sections need a section-kind truncation mesh")
    if gluing.depth != tc.depth or tuple(gluing.tail) != tuple(tc.tail):
        raise InputError("gluing data does not match the truncation")
    p = gluing.level_windings()
    winds = np.array([tc.wind_mult[v] * p[tc.wind_ref[v]] for v in range(tc.complex.n_vertices)])
    states = np.stack(
        [
            tc.amp[:, 0] * np.exp(1j * winds * tc.angles),
            tc.amp[:, 1].astype(complex),
        ],
        axis=1,
    )
    return section_from_states(tc.complex, states, dim=2)


def field_from_gluing(tc: TelescopeComplex, gluing: GluingData) -> OperatorField:
    """The completely positive rank-one field carrying the tower bundle."""
    sec = section_from_gluing(tc, gluing)
    return field_from_sections(tc.complex, 2, sec)


def _axis_ratio_winding(vectors, row) -> int:
    """Winding of the fibre line around the state-sphere axis along a row.

    Uses the phase of the second/first component ratio of the embedded
    states, which no gauge can touch. The row must stay away from both
    poles; level circles sit at a pole on purpose and are not probed.
    """
    r = []
    for v in row:
        m = np.asarray(vectors[v])
        z1, z2 = m[0, 0], m[0, 1]
        if abs(z1) < 1e-9 or abs(z2) < 1e-9:
            raise PreconditionViolated(
                "axis winding probe hit a polar state; probe an interior row"
            )
        r.append(np.angle(z2 / z1))
    r = np.asarray(r)
    steps = np.diff(np.concatenate([r, r[:1]]))
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    total = steps.sum() / (2 * np.pi)
    w = int(np.round(total))
    if abs(total - w) > 0.25:
        raise PreconditionViolated(
            f"axis winding {total:.3f} is too far from an integer to trust"
        )
    return w


def extract_gluing(tc: TelescopeComplex, section: LineSection) -> GluingData:
    """Measure the relative windings of a section over a section-kind mesh.

    The entry probe row of cylinder n reads p_n and the exit probe row
    reads d_n * p_{n+1}; their difference is the relative winding. The far
    circle is taken unwound, matching the construction convention.
    """
    if tc.kind != "section":
        raise PreconditionViolated("gluing extraction needs a section-kind mesh")
    if section.base is not tc.complex and section.base.n_vertices != tc.complex.n_vertices:
        raise InputError("section does not live on this truncation")
    vec = section.vectors
    entries = []
    exits = []
    for r2, r4 in tc.probe_rows:
        entries.append(_axis_ratio_winding(vec, r2))
        exits.append(_axis_ratio_winding(vec, r4))
    # the axis ratio z2/z1 un-winds as the state winds: flip the sign
    p_meas = [-w for w in entries]
    x_meas = [-w for w in exits]
    rel = []
    for n in range(tc.depth):
        if n + 1 < tc.depth and x_meas[n] != tc.tail[n] * p_meas[n + 1]:
            # the exit row must read d_n times the next level winding
            raise PreconditionViolated(
                f"cylinder {n + 1} exit winding {x_meas[n]} does not match "
                f"{tc.tail[n]} times the next level winding {p_meas[n + 1]}"
            )
        rel.append(p_meas[n] - x_meas[n])
    return GluingData(tc.tail, tuple(rel))


def truncation_trivialization(gluing: GluingData) -> tuple:
    """Integer gauges removing all windings of one truncation.

    m_{N+1} = 0 at the far circle, then m_n = k_n + d_n m_{n+1} walking
    back. m_1 is the single residue that matters for tower coherence.
    """
    m = [0]
    for d, k in zip(reversed(gluing.tail), reversed(gluing.relative)):
        m.append(int(k) + int(d) * m[-1])
    return tuple(reversed(m))


def residue_window(gluing: GluingData, depth: int | None = None):
    """(S_N, P_N): every depth-N trivialization has m_1 = S_N + P_N * t."""
    n = gluing.depth if depth is None else depth
    if n > gluing.depth and gluing.pattern != "factorial-constant":
        raise UnsupportedTail("cannot extend an unrecognized tail beyond its data")
    s, p = 0, 1
    for j in range(n):
        d = gluing.tail[j] if j < gluing.depth else j + 2
        k = gluing.relative[j] if j < gluing.depth else gluing.relative[-1]
        s += p * int(k)
        p *= int(d)
    return s, p


@dataclass
class TrivialityVerdict:
    """Decision on a single coherent trivialization for the whole tower."""

    trivial: bool
    phantom: bool
    witness: int | None
    conclusive_depth: int | None
    bound: int
    windows: tuple        # (depth, S_N, P_N, survivors_in_bound, example)
    proof: str

    def as_dict(self):
        return {
            "trivial": self.trivial,
            "phantom": self.phantom,
            "witness": self.witness,
            "conclusive_depth": self.conclusive_depth,
            "bound": self.bound,
            "windows": [list(w) for w in self.windows],
            "proof": self.proof,
        }


def is_globally_trivial(
    gluing: GluingData, bound: int = 10**6, max_depth: int = 40
) -> TrivialityVerdict:
    """Whether one integer gauge trivializes every truncation at once.

    A global trivialization is an integer m_1 with m_1 = S_N (mod P_N) for
    every depth N. The decidable normal form is a stored finite prefix of
    relative windings continued by the constant c = relative[-1]. With
    c = 0 the windings have finite support: back-substituting from beyond
    the support gives an eventually-zero gauge whose m_1 works at every
    depth, so the bundle is trivial. With c != 0 candidates inside
    |m_1| <= bound are walked through the residue windows until none
    survive (conclusive) or the cap is hit; past the prefix the division
    chain m_{n+1} = (m_n - c) / d_n contracts any candidate to zero and
    then fails once d_n exceeds |c|, so the verdict is a proof, not just
    a search.
    """
    if gluing.pattern != "factorial-constant":
        raise UnsupportedTail(
            "a tower verdict needs a recognized infinite tail pattern; "
            "finite gluing data only supports truncation gauges"
        )
    c = int(gluing.relative[-1])
    if c == 0:
        witness = truncation_trivialization(gluing)[0]
        return TrivialityVerdict(
            trivial=True,
            phantom=False,
            witness=witness,
            conclusive_depth=None,
            bound=bound,
            windows=(),
            proof=(
                f"the relative windings have finite support; m_1 = {witness} "
                "back-substituted from a zero gauge beyond the support "
                "trivializes every depth"
            ),
        )
    windows = []
    conclusive = None
    for n in range(1, max_depth + 1):
        s, p = residue_window(gluing, n)
        # integers congruent to s mod p inside [-bound, bound]
        lo = -((bound + s) // p)
        hi = (bound - s) // p
        count = max(0, hi - lo + 1)
        example = s + p * lo if count else None
        windows.append((n, s, p, count, example))
        if count == 0:
            conclusive = n
            break
    proof = (
        f"no integer with |m| <= {bound} satisfies the depth-{conclusive} window; "
        "and for any bound: the division chain m -> (m - c) / d contracts any "
        f"candidate to 0, after which (0 - {c}) / d_n must stay integral while "
        f"d_n = n + 1 grows past |{c}|, which is impossible"
        if conclusive
        else "search hit the depth cap; the contraction argument still excludes "
        "every integer candidate"
    )
    return TrivialityVerdict(
        trivial=False,
        phantom=True,
        witness=None,
        conclusive_depth=conclusive,
        bound=bound,
        windows=tuple(windows),
        proof=proof,
    )


def survivors_at_depth(gluing: GluingData, bound: int, depth: int):
    """The candidates inside |m| <= bound passing the depth-N window, with
    the window itself. Useful for showing how slowly the net closes."""
    s, p = residue_window(gluing, depth)
    lo = -((bound + s) // p)
    hi = (bound - s) // p
    vals = [s + p * t for t in range(lo, hi + 1)]
    return (s, p), [v for v in vals if abs(v) <= bound]


def phantom_demo(depth: int = 4, bound: int = 10**6, seed: int = 0) -> dict:
    """Build the factorial tower's bundle, check it is unobstructed on the
    truncation, recover its gluing data, and decide the tower.

    The headline: the truncation factors (its winding cocycle is zero and
    the mesh is homotopy-circle), the per-depth gauges exist at every depth,
    and still no single integer survives all residue windows: a phantom.
    """
    from .bundles import chern_class, factor_field, winding_cocycle

    gl = canonical_gluing(depth)
    tc = build_truncation(depth, kind="section")
    sec = section_from_gluing(tc, gl)
    field = field_from_gluing(tc, gl)
    ch = chern_class(field)
    w_designed, _ = winding_cocycle(sec)
    gf = factor_field(field)
    back = extract_gluing(tc, LineSection(tc.complex, 2, gf.left))
    m = truncation_trivialization(gl)
    verdict = is_globally_trivial(gl, bound=bound)
    stage_gauges = [truncation_trivialization(canonical_gluing(n))[0] for n in range(1, depth + 1)]
    return {
        "depth": depth,
        "mesh": {
            "vertices": tc.complex.n_vertices,
            "edges": tc.complex.n_edges,
            "triangles": tc.complex.n_triangles,
            "sizes": list(tc.sizes),
        },
        "class_is_zero": bool(ch.cls.is_zero),
        "designed_cocycle_is_zero": int(np.abs(w_designed).max(initial=0)) == 0,
        "min_overlap": ch.min_overlap,
        "min_margin": ch.min_margin,
        "truncation_factors": {
            "max_vertex_residual": gf.max_vertex_residual,
            "max_edge_jump": gf.max_edge_jump,
        },
        "recovered_relative_windings": list(back.relative),
        "level_windings": list(gl.level_windings()),
        "truncation_gauges": list(m),
        "stage_gauges_by_depth": stage_gauges,
        "tower": verdict.as_dict(),
    }
