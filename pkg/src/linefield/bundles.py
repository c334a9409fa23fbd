"""Line bundles carried by fibrewise rank-one operator fields.

A nowhere-vanishing field of two-sided multiplications x -> a(t) x b(t)
determines a line in M_n at every vertex (the span of the left factor).
Transition phases along edges, their winding around triangles, and the
resulting integer class decide whether one continuous choice of factors
exists globally. The class is computed against the base's degree-2
cohomology; when it vanishes, an explicit gauge produces the global factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fibre as fb
from .errors import (
    InputError,
    LengthExceeded,
    MarginTooSmall,
    NontrivialClass,
    NotRankOne,
    OverlapTooSmall,
    PreconditionViolated,
    SpanNotLine,
    VanishingFibre,
)
from .fields import OperatorField, field_from_matrices
from .topology import (
    CocycleClass,
    Complex2,
    apply_coboundary1,
    cocycle_class,
    is_coboundary,
    spanning_forest,
)

DEFAULT_OVERLAP_FLOOR = 0.1
DEFAULT_MARGIN_FLOOR = np.pi / 6.0


@dataclass
class LineSection:
    """A choice of unit vector (Hilbert-Schmidt norm one) in each fibre line."""

    base: Complex2
    dim: int
    vectors: np.ndarray  # (V, n, n)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        if v.shape != (self.base.n_vertices, self.dim, self.dim):
            raise InputError("section stack has wrong shape")
        object.__setattr__(self, "vectors", v)


@dataclass
class BundleData:
    """Balanced rank-one factors of a field, one pair per vertex.

    left[v], right[v] satisfy phi_v = (x -> left[v] x right[v]) exactly, with
    equal spectral norms. The left line determines the bundle; the per-vertex
    phase of the factors is the gauge freedom.
    """

    base: Complex2
    dim: int
    left: np.ndarray    # (V, n, n)
    right: np.ndarray   # (V, n, n)
    residuals: np.ndarray  # (V,)

    def left_section(self) -> LineSection:
        norms = np.linalg.norm(self.left.reshape(len(self.left), -1), axis=1)
        return LineSection(self.base, self.dim, self.left / norms[:, None, None])

    def weights(self) -> np.ndarray:
        """Per-vertex spectral norm shared by both balanced factors."""
        return np.array([fb.op_norm(a) for a in self.left])


def extract(field: OperatorField, rank_tol: float = fb.DEFAULT_RANK_TOL) -> BundleData:
    """Balanced rank-one factors at every vertex.

    The field must be fibrewise rank one and nowhere vanishing: a zero fibre
    raises VanishingFibre, a fibre of length two or more raises NotRankOne
    naming the vertex.
    """
    cx = field.base
    n = field.dim
    left = np.zeros((cx.n_vertices, n, n), dtype=complex)
    right = np.zeros((cx.n_vertices, n, n), dtype=complex)
    res = np.zeros(cx.n_vertices)
    for v in range(cx.n_vertices):
        f = field.fibre(v)
        try:
            a, b, r = fb.rank_one_factor(f, rank_tol)
        except VanishingFibre:
            raise VanishingFibre(f"field vanishes at vertex {v}") from None
        except LengthExceeded:
            raise NotRankOne(f"fibre at vertex {v} has length >= 2", vertex=v) from None
        left[v], right[v], res[v] = a, b, r
    return BundleData(cx, n, left, right, res)


def section_overlaps(section: LineSection):
    """Per-edge inner products of consecutive section vectors.

    Returns (phases, magnitudes): for a stored edge (u, v), the phase is
    Arg<s_u, s_v> so that s_u ~ e^{i phase} s_v on a perfect overlap.
    """
    cx = section.base
    s = section.vectors
    phases = np.zeros(cx.n_edges)
    mags = np.zeros(cx.n_edges)
    for i, (u, v) in enumerate(cx.edges):
        z = fb.hs_inner(s[u], s[v])
        phases[i] = float(np.angle(z))
        mags[i] = abs(z)
    return phases, mags


def check_overlaps(section: LineSection, rho: float = DEFAULT_OVERLAP_FLOOR):
    phases, mags = section_overlaps(section)
    if cxe := [e for e, m in zip(section.base.edges, mags) if m < rho]:
        raise OverlapTooSmall(
            f"{len(cxe)} edge overlap(s) fall below the floor {rho}; "
            f"first offender {cxe[0]}",
            edge=cxe[0],
        )
    return phases, mags


def _wrap(x):
    return (np.asarray(x) + np.pi) % (2 * np.pi) - np.pi


def winding_cocycle(
    section: LineSection,
    rho: float = DEFAULT_OVERLAP_FLOOR,
    margin: float = DEFAULT_MARGIN_FLOOR,
):
    """Integer winding of the transition phases around each triangle.

    The signed phase sum around a triangle is within pi of a unique multiple
    of 2 pi; that multiple is the cocycle value. The distance pi - |residue|
    is the rounding margin; triangles below the margin floor are refused
    (refine the mesh rather than guess a winding). Returns (w, margins).
    """
    cx = section.base
    phases, _ = check_overlaps(section, rho)
    idx, sgn = cx.tri_edge_data
    if cx.n_triangles == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    sums = (phases[idx] * sgn).sum(axis=1)
    w = np.round(sums / (2 * np.pi)).astype(np.int64)
    residues = sums - 2 * np.pi * w
    margins = np.pi - np.abs(residues)
    bad = np.nonzero(margins < margin)[0]
    if bad.size:
        t = int(bad[np.argmin(margins[bad])])
        raise MarginTooSmall(
            f"winding margin {margins[t]:.4f} below floor {margin:.4f} "
            f"at triangle {cx.triangles[t]}",
            triangle=cx.triangles[t],
        )
    return w, margins


@dataclass
class ChernReport:
    """The obstruction class of a rank-one field's line bundle."""

    cocycle: np.ndarray
    total: int
    cls: CocycleClass
    min_overlap: float
    min_margin: float

    def as_dict(self):
        return {
            "cocycle": [int(x) for x in self.cocycle],
            "total": self.total,
            "class": {
                "torsion": [[int(r), int(d)] for r, d in self.cls.torsion],
                "free": [int(x) for x in self.cls.free],
                "is_zero": self.cls.is_zero,
            },
            "min_overlap": self.min_overlap,
            "min_margin": self.min_margin,
        }


def chern_class(
    field: OperatorField,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
    rho: float = DEFAULT_OVERLAP_FLOOR,
    margin: float = DEFAULT_MARGIN_FLOOR,
) -> ChernReport:
    """Winding cocycle and its cohomology class for a rank-one field.

    total is the plain sum of the cocycle: against a coherently oriented
    closed surface this is the pairing with the fundamental class.
    """
    bundle = extract(field, rank_tol)
    section = bundle.left_section()
    _, mags = section_overlaps(section)
    w, margins = winding_cocycle(section, rho, margin)
    cls = cocycle_class(field.base, w)
    return ChernReport(
        cocycle=w,
        total=int(w.sum()),
        cls=cls,
        min_overlap=float(mags.min()) if mags.size else 1.0,
        min_margin=float(margins.min()) if margins.size else float(np.pi),
    )


@dataclass
class Trivialization:
    """A gauge making the transition phases small, plus what remains.

    gauge[v] multiplies the section at v. Tree edges end up with zero
    twisted phase; the remaining edges carry the holonomies that no gauge
    can remove (they are reported, not forced to zero).
    """

    gauge: np.ndarray            # (V,) unimodular
    twist: np.ndarray            # (E,) integer cochain with d(twist) = cocycle
    corrected_phases: np.ndarray  # (E,) phases after twisting and gauging
    tree_edges: np.ndarray       # (E,) bool
    max_tree_residual: float
    max_holonomy: float


def trivialize(
    section: LineSection,
    rho: float = DEFAULT_OVERLAP_FLOOR,
    margin: float = DEFAULT_MARGIN_FLOOR,
) -> Trivialization:
    """Gauge the section so transition phases vanish on a spanning forest.

    Requires the winding cocycle to bound; otherwise NontrivialClass carries
    the class certificate. The integer witness shifts each phase by a
    multiple of 2 pi (changing nothing pointwise) so the shifted phases form
    an honest approximate potential; the forest integrates it to a gauge.
    """
    cx = section.base
    phases, _ = check_overlaps(section, rho)
    w, _ = winding_cocycle(section, rho, margin)
    ok, m = is_coboundary(cx, w)
    if not ok:
        cls = cocycle_class(cx, w)
        raise NontrivialClass(
            "winding class is nonzero; no global phase alignment exists",
            certificate={
                "cocycle": [int(x) for x in w],
                "torsion": [[int(r), int(d)] for r, d in cls.torsion],
                "free": [int(x) for x in cls.free],
            },
        )
    theta = phases - 2 * np.pi * m
    pv, pe, roots, order = spanning_forest(cx)
    gam = np.zeros(cx.n_vertices)
    tree = np.zeros(cx.n_edges, dtype=bool)
    for v in order:
        if pv[v] < 0:
            continue
        e = int(pe[v])
        tree[e] = True
        u0, v0 = cx.edges[e]
        # phase of the stored edge runs u0 -> v0; integrate toward the child
        step = theta[e] if v0 == v else -theta[e]
        gam[v] = gam[pv[v]] + step
    gauge = np.exp(1j * gam)
    ends = cx.edge_ends
    # gauged overlap phase of stored (u, v) is theta + gamma_u - gamma_v
    corrected = _wrap(theta + gam[ends[:, 0]] - gam[ends[:, 1]]) if cx.n_edges else np.zeros(0)
    tree_res = float(np.abs(corrected[tree]).max()) if tree.any() else 0.0
    holo = float(np.abs(corrected[~tree]).max()) if (~tree).any() else 0.0
    return Trivialization(
        gauge=gauge,
        twist=m.astype(np.int64),
        corrected_phases=corrected,
        tree_edges=tree,
        max_tree_residual=tree_res,
        max_holonomy=holo,
    )


def apply_gauge(section: LineSection, gauge) -> LineSection:
    gauge = np.asarray(gauge, dtype=complex)
    if gauge.shape != (section.base.n_vertices,):
        raise InputError("gauge has wrong length")
    return LineSection(section.base, section.dim, gauge[:, None, None] * section.vectors)


@dataclass
class GlobalFactorization:
    """Continuous global factors for a rank-one field."""

    left: np.ndarray    # (V, n, n)
    right: np.ndarray   # (V, n, n)
    max_vertex_residual: float
    max_edge_jump: float
    trivialization: Trivialization


def factor_field(
    field: OperatorField,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
    rho: float = DEFAULT_OVERLAP_FLOOR,
    margin: float = DEFAULT_MARGIN_FLOOR,
) -> GlobalFactorization:
    """One continuous pair of factor fields for a fibrewise rank-one field.

    Succeeds exactly when the winding class vanishes; the factors reproduce
    every fibre exactly (the gauge is unimodular, so the per-vertex products
    are untouched) and the edge jump measures their discrete continuity.
    """
    bundle = extract(field, rank_tol)
    section = bundle.left_section()
    tri = trivialize(section, rho, margin)
    g = tri.gauge
    left = g[:, None, None] * bundle.left
    right = np.conj(g)[:, None, None] * bundle.right
    cx = field.base
    jump = 0.0
    for u, v in cx.edges:
        jump = max(jump, fb.op_norm(left[u] - left[v]), fb.op_norm(right[u] - right[v]))
    return GlobalFactorization(
        left=left,
        right=right,
        max_vertex_residual=float(bundle.residuals.max()) if len(bundle.residuals) else 0.0,
        max_edge_jump=jump,
        trivialization=tri,
    )


# ---------------------------------------------------------------------------
# building fields from sections


def embed_c2(z, dim: int = 2) -> np.ndarray:
    """Isometric embedding of a 2-component state into M_dim: the state's
    components fill the first row."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.shape != (2,):
        raise InputError("expected a 2-component state")
    if dim < 2:
        raise InputError("embedding needs dim >= 2")
    m = np.zeros((dim, dim), dtype=complex)
    m[0, 0], m[0, 1] = z[0], z[1]
    return m


def section_from_states(base: Complex2, states, dim: int = 2) -> LineSection:
    """Lift unit states in C^2 to a section of matrix lines."""
    states = np.asarray(states, dtype=complex)
    if states.shape != (base.n_vertices, 2):
        raise InputError("expected one 2-component state per vertex")
    norms = np.linalg.norm(states, axis=1)
    off = np.nonzero(np.abs(norms - 1.0) > 1e-6)[0]
    if off.size:
        raise InputError(
            f"states must be unit vectors; vertex {int(off[0])} has norm {norms[off[0]]:.6f}"
        )
    vecs = np.stack([embed_c2(z, dim) for z in states])
    return LineSection(base, dim, vecs)


def field_from_sections(
    base: Complex2,
    dim: int,
    left: LineSection,
    right: LineSection | None = None,
    scale=None,
) -> OperatorField:
    """The field x -> c(v) * s_left(v) x s_right(v) per vertex.

    With right omitted, the adjoint section is used, giving the completely
    positive fibres x -> s x s*.
    """
    sl = left.vectors
    sr = right.vectors if right is not None else np.conj(np.transpose(sl, (0, 2, 1)))
    if scale is None:
        scale = np.ones(base.n_vertices)
    scale = np.asarray(scale, dtype=complex).reshape(-1)
    if scale.shape != (base.n_vertices,):
        raise InputError("scale profile has wrong length")
    mats = [scale[v] * np.kron(sl[v], sr[v].T) for v in range(base.n_vertices)]
    return field_from_matrices(base, dim, mats)


def coherent_states(positions) -> np.ndarray:
    """Spin-1/2 coherent states for points on the unit sphere.

    The state at (theta, phi) is (cos(theta/2), sin(theta/2) e^{i phi});
    its line winds once around the sphere, the minimal nontrivial twist.
    """
    p = np.asarray(positions, dtype=float)
    if p.ndim != 2 or p.shape[1] != 3:
        raise InputError("expected (V, 3) sphere positions")
    r = np.linalg.norm(p, axis=1)
    if np.any(np.abs(r - 1.0) > 1e-6):
        raise InputError("positions must lie on the unit sphere")
    theta = np.arccos(np.clip(p[:, 2], -1.0, 1.0))
    phi = np.arctan2(p[:, 1], p[:, 0])
    return np.stack([np.cos(theta / 2.0), np.sin(theta / 2.0) * np.exp(1j * phi)], axis=1)


def monopole_field(cx: Complex2, positions, dim: int = 2) -> OperatorField:
    """The canonical obstructed field on a sphere mesh: completely positive,
    fibrewise rank one, nowhere vanishing, with unit total winding."""
    states = coherent_states(positions)
    section = section_from_states(cx, states, dim)
    return field_from_sections(cx, dim, section)


def synthesize_operator(section: LineSection, zero_tol: float = 1e-12):
    """Assemble a globally defined rank-one field from local line data alone.

    Every vertex star is a patch; on patch i the section is expanded in the
    matrix-unit frame, each frame coefficient field is paired with itself,
    and the patches are summed with weights 2^-i. All the products have the
    form x -> (lambda s) x (lambda s)*, so the result only depends on the
    line, never on the phase choices: this is the bundle-to-operator
    direction. The output fibre at v is (sum of patch weights covering v)
    times x -> s_v x s_v*, which keeps the field nowhere vanishing.

    Returns (field, profile) with profile the positive scalar per vertex.
    """
    cx = section.base
    n = section.dim
    nv = cx.n_vertices
    if nv >= 1 and 2.0 ** (-(nv - 1)) <= zero_tol:
        raise PreconditionViolated(
            f"patch weights 2^-i underflow the zero tolerance for {nv} vertices; "
            "use a coarser mesh or a larger tolerance"
        )
    s = section.vectors
    norms = np.linalg.norm(s.reshape(nv, -1), axis=1)
    if np.any(norms < 1e-12):
        v = int(np.argmin(norms))
        raise SpanNotLine(f"section vanishes at vertex {v}", vertex=v)
    from .topology import vertex_star

    profile = np.zeros(nv)
    mats = [np.zeros((n * n, n * n), dtype=complex) for _ in range(nv)]
    frame = [np.zeros((n, n), dtype=complex) for _ in range(n * n)]
    for j in range(n * n):
        frame[j][j // n, j % n] = 1.0
    for i in range(nv):
        wt = 2.0 ** (-i)
        for v in vertex_star(cx, i):
            acc = np.zeros((n * n, n * n), dtype=complex)
            for e in frame:
                coeff = fb.hs_inner(e, s[v])
                if coeff == 0:
                    continue
                f = coeff * s[v]
                # x -> f x f* has matrix kron(f, (f*)^T) = kron(f, conj(f))
                acc += np.kron(f, np.conj(f))
            mats[v] += wt * acc
            profile[v] += wt
    field = field_from_matrices(cx, n, mats)
    return field, profile
