"""Membership in the closure of two-sided multiplications.

A fibrewise length <= 1 field need not be a single two-sided multiplication
globally, but it can often be approximated by them to any accuracy. The
approximation runs over a compact exhaustion of the nonvanishing locus:
factor exactly on the sublevel core, then damp the factors to zero outside
it. Each stage halves the guaranteed error; a stage whose core carries a
nonzero winding class is a genuine obstruction and is surfaced as such.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fibre as fb
from .bundles import NontrivialClass, factor_field
from .errors import (
    EpsTooLarge,
    InnerProductVanished,
    BoundViolated,
    NotRankOne,
    ObstructedOnCompact,
    PreconditionViolated,
    VanishingFibre,
)
from .fields import OperatorField, norm_profile, restrict, validate
from .topology import Complex2, SubcomplexMap, graph_distance, subcomplex


@dataclass
class ExhaustionStage:
    index: int
    threshold: float
    core: Complex2
    core_map: SubcomplexMap


@dataclass
class Exhaustion:
    """Nested sublevel cores of the nonvanishing locus."""

    sup_norm: float
    stages: tuple


def sublevel_exhaustion(field: OperatorField, n_stages: int | None = None, seed: int = 0) -> Exhaustion:
    """Cores K_n = {norm >= 2^-n * sup}, n = 1, 2, ...

    Without an explicit count, stages stop once every vertex with a nonzero
    fibre is inside the core (further stages would repeat it).
    """
    norms = norm_profile(field, seed=seed)
    sup = float(norms.max()) if norms.size else 0.0
    if sup == 0.0:
        raise VanishingFibre("the zero field has no nonvanishing locus to exhaust")
    nonzero = norms > 0.0
    stages = []
    n = 1
    while True:
        delta = sup * 2.0 ** (-n)
        keep = np.nonzero(norms >= delta)[0]
        core, cmap = subcomplex(field.base, keep)
        stages.append(ExhaustionStage(n, delta, core, cmap))
        covered = np.zeros(field.base.n_vertices, dtype=bool)
        covered[keep] = True
        if n_stages is not None and n >= n_stages:
            break
        if n_stages is None and bool(np.all(covered[nonzero])):
            break
        n += 1
        if n > 60:
            break
    return Exhaustion(sup, tuple(stages))


@dataclass
class ApproximationStage:
    """A global length-one field within a guaranteed distance of the target."""

    index: int
    threshold: float
    left: np.ndarray      # (V, n, n)
    right: np.ndarray     # (V, n, n)
    ramp: np.ndarray      # (V,)
    bound: float          # guaranteed sup error: 2 * threshold
    measured_error: float
    core_vertices: np.ndarray


def _aligned_offcore_factors(field, core_mask, rank_tol):
    """Balanced factors outside the core, phases chained along a breadth
    first walk so the damped tail varies as slowly as the field allows."""
    cx = field.base
    n = field.dim
    left = np.zeros((cx.n_vertices, n, n), dtype=complex)
    right = np.zeros((cx.n_vertices, n, n), dtype=complex)
    for v in range(cx.n_vertices):
        if core_mask[v]:
            continue
        left[v], right[v], _ = fb.rank_one_factor(field.fibre(v), rank_tol, allow_zero=True)
    from collections import deque

    seen = core_mask.copy()
    q = deque(np.nonzero(core_mask)[0].tolist())
    adj = cx.adjacency
    anchor = {int(v): None for v in q}
    while q:
        u = q.popleft()
        for w, _ in adj.get(int(u), ()):
            if not seen[w]:
                seen[w] = True
                anchor[w] = int(u)
                q.append(w)
    return left, right, anchor


def approximate_stage(
    field: OperatorField,
    stage: ExhaustionStage,
    factors_on_core=None,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
    ramp_width: int = 3,
    seed: int = 0,
) -> ApproximationStage:
    """A single two-sided multiplication field within 2 * threshold of the target.

    On the core the field factors exactly (a nonzero winding class there
    raises ObstructedOnCompact with the stage index and certificate). Off
    the core the pointwise balanced factors are phase-aligned to their
    nearest core anchor and damped along graph distance, which bounds the
    error off-core by the threshold itself.
    """
    cx = field.base
    n = field.dim
    core, cmap = stage.core, stage.core_map
    if core.n_vertices == 0:
        raise PreconditionViolated("stage core is empty")
    if factors_on_core is None:
        try:
            factors_on_core = factor_field(restrict(field, core, cmap), rank_tol)
        except NontrivialClass as e:
            raise ObstructedOnCompact(
                f"winding class obstructs stage {stage.index}",
                stage=stage.index,
                certificate=e.certificate,
            ) from None
    core_mask = np.zeros(cx.n_vertices, dtype=bool)
    core_mask[cmap.vertex_old] = True
    left = np.zeros((cx.n_vertices, n, n), dtype=complex)
    right = np.zeros((cx.n_vertices, n, n), dtype=complex)
    left[cmap.vertex_old] = factors_on_core.left
    right[cmap.vertex_old] = factors_on_core.right
    off_left, off_right, anchor = _aligned_offcore_factors(field, core_mask, rank_tol)
    dist = graph_distance(cx, cmap.vertex_old.tolist())
    ramp = np.ones(cx.n_vertices)
    order = sorted(
        (int(v) for v in range(cx.n_vertices) if not core_mask[v]),
        key=lambda v: dist[v] if dist[v] >= 0 else np.iinfo(np.int64).max,
    )
    for v in order:
        d = dist[v]
        ramp[v] = max(0.0, 1.0 - d / float(ramp_width)) if d >= 0 else 0.0
        a, b = off_left[v], off_right[v]
        anc = anchor.get(v)
        if anc is not None and np.linalg.norm(a) > 0:
            z = fb.hs_inner(a, left[anc])
            if abs(z) > 1e-12:
                mu = np.conj(z / abs(z))
                a = mu * a
                b = np.conj(mu) * b
        left[v] = ramp[v] * a
        right[v] = ramp[v] * b
    # the stagewise error operator at v is (ramp^2 - 1) * phi_v plus nothing
    # on the core, so its fibre norm is exact
    err = 0.0
    for v in range(cx.n_vertices):
        diff = fb.FibreOperator(n, field.fibres[v] - np.kron(left[v], right[v].T))
        err = max(err, fb.fibre_norm(diff, rank_tol, seed=seed))
    return ApproximationStage(
        index=stage.index,
        threshold=stage.threshold,
        left=left,
        right=right,
        ramp=ramp,
        bound=2.0 * stage.threshold,
        measured_error=float(err),
        core_vertices=cmap.vertex_old.copy(),
    )


def approximate_by_multiplications(
    field: OperatorField,
    n_stages: int | None = None,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
    seed: int = 0,
):
    """The full approximating sequence over the sublevel exhaustion.

    The field must be fibrewise length <= 1. Returns (exhaustion, stages);
    the guaranteed bounds halve stage by stage.
    """
    rep = validate(field, rank_tol, seed=seed)
    bad = [v for v, l in enumerate(rep.lengths) if l > 1]
    if bad:
        raise NotRankOne(
            f"approximation needs fibre length <= 1; violated at {bad[:8]}",
            vertex=bad[0],
        )
    ex = sublevel_exhaustion(field, n_stages, seed=seed)
    out = []
    for stage in ex.stages:
        out.append(approximate_stage(field, stage, rank_tol=rank_tol, seed=seed))
    return ex, out


@dataclass
class ReconstructionResult:
    """Exact factors recovered by phase transport from an approximate pair."""

    left: np.ndarray
    right: np.ndarray
    min_inner: float
    eps: float
    max_residual: float


def reconstruct_global(
    field: OperatorField,
    approx_left,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
) -> ReconstructionResult:
    """Turn an approximate left factor field into exact continuous factors.

    The target must be fibrewise rank one and nowhere vanishing, and the
    supplied approximants must be uniformly closer than (18 n)^{-1/2} to the
    true factor lines (measured after unit normalization and optimal
    phase). Then each inner product z_v between the approximant and the
    local unit factor has modulus above 1 - 18 n eps^2 > 0, the local
    factor's phase is steered by z_v / |z_v|, and the resulting pair is an
    exact factorization inheriting the approximant's continuity.
    """
    cx = field.base
    n = field.dim
    al = np.asarray(approx_left, dtype=complex)
    if al.shape != (cx.n_vertices, n, n):
        raise PreconditionViolated("approximate left factors have wrong shape")
    eps_cap = 1.0 / np.sqrt(18.0 * n)
    left = np.zeros((cx.n_vertices, n, n), dtype=complex)
    right = np.zeros((cx.n_vertices, n, n), dtype=complex)
    eps_seen = 0.0
    min_inner = np.inf
    max_res = 0.0
    for v in range(cx.n_vertices):
        try:
            a, b, res = fb.rank_one_factor(field.fibre(v), rank_tol)
        except VanishingFibre:
            raise VanishingFibre(
                f"reconstruction needs a nowhere vanishing field; zero at vertex {v}"
            ) from None
        max_res = max(max_res, res)
        na = np.linalg.norm(a)
        ref = al[v]
        nref = np.linalg.norm(ref)
        if nref < 1e-12:
            raise InnerProductVanished(
                f"approximate factor vanishes at vertex {v}", vertex=v
            )
        z = fb.hs_inner(ref / nref, a / na)
        if abs(z) < 1e-12:
            raise InnerProductVanished(
                f"approximate factor is orthogonal to the true line at vertex {v}",
                vertex=v,
            )
        mu = z / abs(z)
        # distance from the reference to the phase-aligned unit factor
        eps_v = float(np.linalg.norm(ref / nref - mu * a / na))
        eps_seen = max(eps_seen, eps_v)
        min_inner = min(min_inner, abs(z))
        left[v] = mu * a
        right[v] = np.conj(mu) * b
    if eps_seen >= eps_cap:
        raise EpsTooLarge(
            f"approximants stray {eps_seen:.4f} from the factor lines; "
            f"the phase transport guarantee needs < {eps_cap:.4f}"
        )
    floor = 1.0 - 18.0 * n * eps_seen**2
    if min_inner <= floor - 1e-12:
        raise BoundViolated(
            f"inner product {min_inner:.6f} under the guaranteed floor {floor:.6f}"
        )
    return ReconstructionResult(
        left=left,
        right=right,
        min_inner=float(min_inner),
        eps=float(eps_seen),
        max_residual=float(max_res),
    )


@dataclass
class ClosureVerdict:
    """Whether a field lies in the closure of two-sided multiplications."""

    in_closure: bool
    reason: str
    max_length: int
    length_witnesses: tuple
    stages_checked: int
    obstructed_stage: int | None
    certificate: dict | None
    factors_globally: bool | None

    def as_dict(self):
        return {
            "in_closure": self.in_closure,
            "reason": self.reason,
            "max_length": self.max_length,
            "length_witnesses": list(self.length_witnesses),
            "stages_checked": self.stages_checked,
            "obstructed_stage": self.obstructed_stage,
            "certificate": self.certificate,
            "factors_globally": self.factors_globally,
        }


def closure_verdict(
    field: OperatorField,
    rank_tol: float = fb.DEFAULT_RANK_TOL,
    seed: int = 0,
) -> ClosureVerdict:
    """Decide closure membership over the finite base.

    In the closure iff every fibre has length <= 1 and every exhaustion core
    factors. Also reports whether one global factorization exists over the
    whole nonvanishing locus (a strictly stronger property; the difference
    is exactly the phantom phenomenon when the base grows).
    """
    rep = validate(field, rank_tol, seed=seed)
    bad = tuple(v for v, l in enumerate(rep.lengths) if l > 1)
    if bad:
        return ClosureVerdict(
            in_closure=False,
            reason=f"fibre length exceeds 1 at {len(bad)} vertex(es)",
            max_length=rep.max_length,
            length_witnesses=bad[:16],
            stages_checked=0,
            obstructed_stage=None,
            certificate=None,
            factors_globally=None,
        )
    if rep.sup_norm == 0.0:
        return ClosureVerdict(
            in_closure=True,
            reason="zero field: the zero multiplication",
            max_length=0,
            length_witnesses=(),
            stages_checked=0,
            obstructed_stage=None,
            certificate=None,
            factors_globally=True,
        )
    ex = sublevel_exhaustion(field, seed=seed)
    for stage in ex.stages:
        try:
            approximate_stage(field, stage, rank_tol=rank_tol, seed=seed)
        except ObstructedOnCompact as e:
            return ClosureVerdict(
                in_closure=False,
                reason=f"winding class obstructs the stage-{e.stage} core",
                max_length=rep.max_length,
                length_witnesses=(),
                stages_checked=e.stage,
                obstructed_stage=e.stage,
                certificate=e.certificate,
                factors_globally=False,
            )
    nz = [v for v in range(field.base.n_vertices) if rep.norms[v] > 0.0]
    core, cmap = subcomplex(field.base, nz)
    try:
        factor_field(restrict(field, core, cmap), rank_tol)
        glob = True
    except NontrivialClass:
        glob = False
    return ClosureVerdict(
        in_closure=True,
        reason="all fibres have length <= 1 and every core factors",
        max_length=rep.max_length,
        length_witnesses=(),
        stages_checked=len(ex.stages),
        obstructed_stage=None,
        certificate=None,
        factors_globally=glob,
    )
