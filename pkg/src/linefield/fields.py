"""Operator fields: one elementary operator per vertex of a base complex.

A field assigns to every vertex an operator on M_n, stored as the stacked
(V, n^2, n^2) array of fibre matrices. Continuity is discretized as
variation across edges, measured with the same norm protocol used for
single fibres (exact for length <= 1, estimated otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fibre as fb
from .errors import (
    IndependenceLost,
    InputError,
    LengthMismatch,
    PreconditionViolated,
    ValidationError,
    VanishingFibre,
)
from .topology import Complex2, SubcomplexMap

DEFAULT_ZERO_TOL = 1e-12


@dataclass
class OperatorField:
    """Fibre matrices over the vertices of a base complex."""

    base: Complex2
    dim: int
    fibres: np.ndarray  # (V, n^2, n^2) complex

    def __post_init__(self):
        nn = self.dim * self.dim
        f = np.asarray(self.fibres, dtype=complex)
        if f.shape != (self.base.n_vertices, nn, nn):
            raise InputError(
                f"fibre stack must have shape {(self.base.n_vertices, nn, nn)}, got {f.shape}"
            )
        object.__setattr__(self, "fibres", f)

    def fibre(self, v: int) -> fb.FibreOperator:
        if not (0 <= v < self.base.n_vertices):
            raise InputError(f"vertex {v} out of range")
        return fb.FibreOperator(self.dim, self.fibres[v])

    def scaled(self, c: complex) -> "OperatorField":
        return OperatorField(self.base, self.dim, c * self.fibres)


def field_from_matrices(base: Complex2, dim: int, mats) -> OperatorField:
    stack = np.stack([np.asarray(m, dtype=complex) for m in mats])
    return OperatorField(base, dim, stack)


def field_from_pairs(base: Complex2, dim: int, pair_lists) -> OperatorField:
    """Build a field from per-vertex coefficient pair lists [(a_i, b_i), ...]."""
    if len(pair_lists) != base.n_vertices:
        raise InputError("one coefficient list per vertex is required")
    mats = [
        fb.to_fibre_matrix(fb.ElementaryRep(dim, tuple(pl))).matrix for pl in pair_lists
    ]
    return field_from_matrices(base, dim, mats)


def norm_profile(field: OperatorField, seed: int = 0) -> np.ndarray:
    """Per-vertex fibre norms under the standard protocol."""
    return np.array(
        [fb.fibre_norm(field.fibre(v), seed=seed) for v in range(field.base.n_vertices)]
    )


@dataclass
class FieldReport:
    """Structural and numeric summary of an operator field."""

    dim: int
    n_vertices: int
    lengths: tuple
    norms: tuple
    sup_norm: float
    max_length: int
    zero_vertices: tuple
    rank_one: bool            # every nonzero fibre has length exactly 1
    max_edge_variation: float
    worst_edge: tuple | None

    def as_dict(self):
        return {
            "dim": self.dim,
            "n_vertices": self.n_vertices,
            "lengths": list(self.lengths),
            "norms": list(self.norms),
            "sup_norm": self.sup_norm,
            "max_length": self.max_length,
            "zero_vertices": list(self.zero_vertices),
            "rank_one": self.rank_one,
            "max_edge_variation": self.max_edge_variation,
            "worst_edge": list(self.worst_edge) if self.worst_edge else None,
        }


def validate(
    field: OperatorField,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
    zero_tol: float = DEFAULT_ZERO_TOL,
    continuity_budget: float | None = None,
    seed: int = 0,
    edge_variation: bool = True,
) -> FieldReport:
    """Per-fibre lengths and norms plus edge variation.

    Edge variation of (u, v) is the fibre norm of the difference operator.
    With a continuity budget set, edges exceeding it make the field invalid
    and are reported in the raised error. Passing edge_variation=False skips
    the per-edge sweep (the costly part on large meshes); the budget then
    has nothing to check against and must be None.
    """
    if not edge_variation and continuity_budget is not None:
        raise InputError("a continuity budget needs the edge variation sweep")
    cx = field.base
    lengths = []
    norms = []
    zeros = []
    for v in range(cx.n_vertices):
        f = field.fibre(v)
        lengths.append(fb.length(f, rank_tol))
        nv = fb.fibre_norm(f, rank_tol, seed=seed)
        norms.append(nv)
        if nv <= zero_tol:
            zeros.append(v)
    sup = max(norms) if norms else 0.0
    max_var = 0.0
    worst = None
    bad_edges = []
    if edge_variation:
        for u, v in cx.edges:
            diff = fb.FibreOperator(field.dim, field.fibres[u] - field.fibres[v])
            var = fb.fibre_norm(diff, rank_tol, seed=seed)
            if var > max_var:
                max_var, worst = var, (u, v)
            if continuity_budget is not None and var > continuity_budget:
                bad_edges.append((u, v))
    if bad_edges:
        raise ValidationError(
            f"{len(bad_edges)} edge(s) exceed the continuity budget {continuity_budget}",
            edges=tuple(bad_edges),
        )
    rank_one = all(
        l == 1 for v, l in enumerate(lengths) if v not in set(zeros)
    ) and len(zeros) < cx.n_vertices
    return FieldReport(
        dim=field.dim,
        n_vertices=cx.n_vertices,
        lengths=tuple(lengths),
        norms=tuple(norms),
        sup_norm=sup,
        max_length=max(lengths) if lengths else 0,
        zero_vertices=tuple(zeros),
        rank_one=rank_one,
        max_edge_variation=max_var,
        worst_edge=worst,
    )


def normalize(field: OperatorField, seed: int = 0):
    """Scale a field to unit sup norm. Returns (field, applied_scale)."""
    sup = float(norm_profile(field, seed=seed).max()) if field.base.n_vertices else 0.0
    if sup == 0.0:
        raise VanishingFibre("cannot normalize the zero field")
    return field.scaled(1.0 / sup), 1.0 / sup


def matrix_unit_decomposition(f: fb.FibreOperator):
    """Write an arbitrary operator on M_n as sum_{k,i} of terms
    x -> e_{ki} x c_{ki}: a pure reindexing of the fibre matrix.

    Returns the (n, n, n, n) array c with c[k, i] the right coefficient of
    the matrix unit e_{ki}. Exact; no rank assumptions.
    """
    n = f.dim
    f4 = f.matrix.reshape(n, n, n, n)  # indices (k, l, i, j)
    return np.ascontiguousarray(f4.transpose(0, 2, 3, 1))


def matrix_unit_pairs(f: fb.FibreOperator, zero_tol: float = 0.0):
    """The decomposition as explicit (e_ki, c_ki) pairs, optionally dropping
    coefficients with Hilbert-Schmidt norm <= zero_tol."""
    n = f.dim
    c = matrix_unit_decomposition(f)
    pairs = []
    for k in range(n):
        for i in range(n):
            if np.linalg.norm(c[k, i]) > zero_tol:
                e = np.zeros((n, n), dtype=complex)
                e[k, i] = 1.0
                pairs.append((e, np.ascontiguousarray(c[k, i])))
    return pairs


def reassemble_matrix_units(dim: int, pairs) -> fb.FibreOperator:
    return fb.to_fibre_matrix(fb.ElementaryRep(dim, tuple(pairs)))


@dataclass
class FactorFields:
    """Per-vertex coefficient fields from a constant-length factorization."""

    length: int
    left: np.ndarray    # (V, l, n, n)
    right: np.ndarray   # (V, l, n, n)
    max_residual: float
    max_edge_jump: float

    def pairs_at(self, v: int):
        return tuple((self.left[v, i], self.right[v, i]) for i in range(self.length))


def local_length_factorization(
    field: OperatorField,
    target_length: int | None = None,
    basepoint: int = 0,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
    cond_tol: float = 1e-8,
) -> FactorFields:
    """Factor a field of length-l fibres with coefficient fields that vary
    across edges, propagating a right-factor frame outward from a basepoint.

    At the basepoint a minimal representation fixes an initial frame for the
    right factors. The frame walks the complex breadth-first: at each vertex
    it is projected onto that fibre's right-factor space and the left
    factors are re-solved exactly by least squares. Freezing dual
    functionals at the basepoint instead can silently degenerate while the
    length stays constant, so each vertex gets its own solve; if the
    projected frame itself loses independence, IndependenceLost identifies
    the vertex.

    The length must be constant at l along the walk: a fibre of length
    above l raises LengthMismatch, and one below l collapses the projected
    frame, raising IndependenceLost there.
    """
    cx = field.base
    n = field.dim
    nn = n * n
    if not (0 <= basepoint < cx.n_vertices):
        raise InputError(f"basepoint {basepoint} out of range")
    lengths = [fb.length(field.fibre(v), rank_tol) for v in range(cx.n_vertices)]
    l = max(lengths) if target_length is None else int(target_length)
    if l < 1:
        raise PreconditionViolated("factorization needs length at least 1")
    offenders = [v for v, lv in enumerate(lengths) if lv > l]
    if offenders:
        raise LengthMismatch(
            f"fibre length exceeds {l} at vertices {offenders[:8]}"
        )
    if lengths[basepoint] != l:
        raise PreconditionViolated(
            f"basepoint fibre must have the full length {l}, found {lengths[basepoint]}"
        )

    def row_frame(v):
        """Orthonormal basis (columns) for the right-factor space of fibre v."""
        r = fb.reshuffle(field.fibre(v))
        u_, s_, vh_ = np.linalg.svd(r)
        if s_[0] == 0.0:
            return np.zeros((nn, 0)), r
        k = int(np.sum(s_ >= rank_tol * s_[0]))
        # right-factor vectors vec(b^T) live in the span of the conjugated
        # right singular vectors, i.e. the columns of vh^T
        return vh_[:k, :].T, r

    left = np.zeros((cx.n_vertices, l, n, n), dtype=complex)
    right = np.zeros((cx.n_vertices, l, n, n), dtype=complex)
    frame_at = {}

    base_rep = fb.minimal_rep(field.fibre(basepoint), rank_tol)
    frame0 = np.stack([np.asarray(b).T.reshape(-1) for _, b in base_rep.pairs], axis=1)
    frame_at[basepoint] = frame0

    from collections import deque

    order = deque([basepoint])
    seen = {basepoint}
    parents = {basepoint: None}
    adj = cx.adjacency
    max_res = 0.0
    max_jump = 0.0
    visited_order = []
    while order:
        v = order.popleft()
        visited_order.append(v)
        for w, _ in adj.get(v, ()):
            if w not in seen:
                seen.add(w)
                parents[w] = v
                order.append(w)
    if len(seen) < cx.n_vertices:
        raise PreconditionViolated(
            "base complex is disconnected; factor each component separately"
        )
    for v in visited_order:
        par = parents[v]
        if par is None:
            frame = frame_at[v]
        else:
            basis, _ = row_frame(v)
            proj = basis @ (np.conj(basis).T @ frame_at[par])
            frame = proj
            sv = np.linalg.svd(frame, compute_uv=False)
            if sv.size < l or sv[-1] <= cond_tol * max(sv[0], 1e-300):
                raise IndependenceLost(
                    f"propagated right-factor frame degenerates at vertex {v}",
                    vertex=v,
                )
            jump = fb.op_norm(frame - frame_at[par])
            max_jump = max(max_jump, jump)
            frame_at[v] = frame
        # solve R^T = Y X^T exactly for the left factors
        r = fb.reshuffle(field.fibre(v))
        y = frame
        xt, res, _, _ = np.linalg.lstsq(y, r.T, rcond=None)
        x = xt.T
        resid = np.linalg.norm(r - x @ y.T)
        max_res = max(max_res, float(resid))
        for i in range(l):
            left[v, i] = x[:, i].reshape(n, n)
            right[v, i] = y[:, i].reshape(n, n).T
    return FactorFields(l, left, right, max_res, max_jump)


def reassemble_factors(field_dim: int, base: Complex2, ff: FactorFields) -> OperatorField:
    mats = []
    for v in range(base.n_vertices):
        rep = fb.ElementaryRep(field_dim, ff.pairs_at(v))
        mats.append(fb.to_fibre_matrix(rep).matrix)
    return field_from_matrices(base, field_dim, mats)


def restrict(field: OperatorField, sub: Complex2, smap: SubcomplexMap) -> OperatorField:
    """The field induced on a subcomplex."""
    return OperatorField(sub, field.dim, field.fibres[smap.vertex_old])
