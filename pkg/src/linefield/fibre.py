"""Single-fibre analysis of elementary operators on M_n.

An elementary operator is a finite sum x -> sum_i a_i x b_i. Everything here
works with its n^2 x n^2 matrix in the matrix-unit basis e_{ij}, ordered
row-major (basis index i*n + j), so that the matrix of x -> a x b is
kron(a, b.T). The reshuffle of that matrix is the rank-revealing form: the
operator's length (minimal number of terms) equals the rank of the reshuffle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundViolated,
    InputError,
    LengthExceeded,
    NotCauchy,
    PreconditionViolated,
    VanishingFibre,
)

DEFAULT_RANK_TOL = 1e-9


def as_cmat(m, n=None) -> np.ndarray:
    """Coerce to a square complex matrix, checking shape."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    if n is not None and a.shape[0] != n:
        raise InputError(f"expected a {n}x{n} matrix, got {a.shape[0]}x{a.shape[0]}")
    return a


def op_norm(m) -> float:
    """Largest singular value."""
    a = np.asarray(m, dtype=complex)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def hs_inner(a, b) -> complex:
    """Trace inner product tr(a b*)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return complex(np.sum(a * np.conj(b)))


def hs_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=complex)))


@dataclass
class ElementaryRep:
    """A represented elementary operator: ordered coefficient pairs (a_i, b_i)."""

    dim: int
    pairs: tuple

    def __post_init__(self):
        pairs = tuple((as_cmat(a, self.dim), as_cmat(b, self.dim)) for a, b in self.pairs)
        object.__setattr__(self, "pairs", pairs)

    def scale(self, c: complex) -> "ElementaryRep":
        return ElementaryRep(self.dim, tuple((c * a, b) for a, b in self.pairs))

    def __len__(self):
        return len(self.pairs)


@dataclass
class FibreOperator:
    """An operator on M_n as its n^2 x n^2 matrix in the lexicographic e_{ij} basis."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        nn = self.dim * self.dim
        if m.shape != (nn, nn):
            raise InputError(f"fibre matrix must be {nn}x{nn}, got {m.shape}")
        object.__setattr__(self, "matrix", m)


def apply_rep(rep: ElementaryRep, x) -> np.ndarray:
    """Evaluate sum_i a_i x b_i."""
    x = as_cmat(x, rep.dim)
    out = np.zeros((rep.dim, rep.dim), dtype=complex)
    for a, b in rep.pairs:
        out += a @ x @ b
    return out


def to_fibre_matrix(rep: ElementaryRep) -> FibreOperator:
    """Matrix of the represented operator; agrees with apply_rep on every e_{ij}."""
    n = rep.dim
    m = np.zeros((n * n, n * n), dtype=complex)
    for a, b in rep.pairs:
        m += np.kron(a, b.T)
    return FibreOperator(n, m)


def apply_fibre(f: FibreOperator, x) -> np.ndarray:
    x = as_cmat(x, f.dim)
    return (f.matrix @ x.reshape(-1)).reshape(f.dim, f.dim)


def reshuffle(f: FibreOperator) -> np.ndarray:
    """Index swap R[(i,k),(j,l)] = F[(i,j),(k,l)].

    Sends the matrix of x -> a x b to the outer product vec(a) vec(b^T)^T,
    so the rank of the reshuffle is the operator's length. An involution.
    """
    n = f.dim
    return np.ascontiguousarray(
        f.matrix.reshape(n, n, n, n).transpose(0, 2, 1, 3).reshape(n * n, n * n)
    )


def reshuffle_matrix(m: np.ndarray, n: int) -> np.ndarray:
    return reshuffle(FibreOperator(n, m))


def choi_matrix(f: FibreOperator) -> np.ndarray:
    """Block matrix [phi(e_ij)]_{ij}; permutation-similar to the reshuffle."""
    n = f.dim
    return np.ascontiguousarray(
        f.matrix.reshape(n, n, n, n).transpose(2, 0, 3, 1).reshape(n * n, n * n)
    )


def is_completely_positive(f: FibreOperator, tol: float = 1e-10) -> bool:
    """Positivity of the Choi block matrix."""
    c = choi_matrix(f)
    if op_norm(c - c.conj().T) > tol * max(1.0, op_norm(c)):
        return False
    w = np.linalg.eigvalsh((c + c.conj().T) / 2.0)
    return bool(w.min() >= -tol * max(1.0, abs(w).max()))


def length(f: FibreOperator, tol: float = DEFAULT_RANK_TOL) -> int:
    """Minimal number of two-sided terms: numerical rank of the reshuffle.

    Singular values below tol * sigma_max are treated as zero; the zero
    operator has length 0.
    """
    s = np.linalg.svd(reshuffle(f), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s >= tol * s[0]))


def rep_length(rep: ElementaryRep, tol: float = DEFAULT_RANK_TOL) -> int:
    return length(to_fibre_matrix(rep), tol)


def _unvec(v: np.ndarray, n: int) -> np.ndarray:
    return v.reshape(n, n)


def minimal_rep(f: FibreOperator, tol: float = DEFAULT_RANK_TOL) -> ElementaryRep:
    """A length-minimal representation from the reshuffle SVD."""
    n = f.dim
    r = reshuffle(f)
    u, s, vh = np.linalg.svd(r)
    if s.size == 0 or s[0] == 0.0:
        return ElementaryRep(n, ())
    keep = s >= tol * s[0]
    pairs = []
    for i in np.nonzero(keep)[0]:
        c = np.sqrt(s[i])
        a = _unvec(c * u[:, i], n)
        # rows of vh are already the conjugated right singular vectors
        bt = _unvec(c * vh[i, :], n)
        pairs.append((a, bt.T))
    return ElementaryRep(n, tuple(pairs))


def rank_one_factor(f: FibreOperator, tol: float = DEFAULT_RANK_TOL, allow_zero: bool = False):
    """Factor a length-one operator as x -> a x b with balanced factors.

    The factors carry equal spectral norms, op_norm(a) = op_norm(b) =
    sqrt(||f||). Raises LengthExceeded when a second reshuffle singular value
    survives the rank tolerance, VanishingFibre on the zero operator unless
    allow_zero is set (then returns zero factors). Returns (a, b, residual)
    with the residual measured as the spectral norm of the matrix difference.
    """
    n = f.dim
    r = reshuffle(f)
    u, s, vh = np.linalg.svd(r)
    if s.size == 0 or s[0] == 0.0:
        if allow_zero:
            z = np.zeros((n, n), dtype=complex)
            return z, z, 0.0
        raise VanishingFibre("cannot factor the zero operator")
    if s.size > 1 and s[1] >= tol * s[0]:
        raise LengthExceeded(
            f"operator has length >= 2 (second singular value {s[1]:.3e} vs leading {s[0]:.3e})"
        )
    c = np.sqrt(s[0])
    a0 = _unvec(c * u[:, 0], n)
    b0 = _unvec(c * vh[0, :], n).T
    na, nb = op_norm(a0), op_norm(b0)
    # balance so both factors carry sqrt of the fibre norm
    t = np.sqrt(nb / na)
    a, b = a0 * t, b0 / t
    residual = op_norm(f.matrix - np.kron(a, b.T))
    return a, b, residual


def fibre_norm(f: FibreOperator, tol: float = DEFAULT_RANK_TOL, seed: int = 0) -> float:
    """Operator norm of the fibre as a map on (M_n, spectral norm).

    Exact (product of factor norms) for length <= 1; otherwise a seeded
    alternating-maximization estimate, a certified lower bound that is tight
    in practice at these dimensions.
    """
    n = f.dim
    s = np.linalg.svd(reshuffle(f), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    if s.size == 1 or s[1] < tol * s[0]:
        a, b, _ = rank_one_factor(f, tol)
        return op_norm(a) * op_norm(b)
    return _est_map_norm(f.matrix, n, seed=seed)


def _polar_maximizer(g: np.ndarray):
    """argmax_{||x||<=1} Re tr(x g) and the value (the nuclear norm of g)."""
    u, s, vh = np.linalg.svd(g)
    return (u @ vh).conj().T, float(s.sum())


def _est_map_norm(m: np.ndarray, n: int, iters: int = 60, starts: int = 4, seed: int = 0) -> float:
    """Alternating maximization of |u^H phi(x) v| over unit u, v and ||x|| <= 1."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(starts):
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        val = 0.0
        for _ in range(iters):
            # g[j,i] entries: phi applied column-linearly; J = tr(x G) with
            # G = unvec(M^H vec(u v^H)) conjugated appropriately
            g = (m.conj().T @ np.outer(u, v.conj()).reshape(-1)).reshape(n, n)
            x, _ = _polar_maximizer(g.conj().T)
            y = (m @ x.reshape(-1)).reshape(n, n)
            uu, ss, vvh = np.linalg.svd(y)
            new = float(ss[0])
            u, v = uu[:, 0], vvh[0, :].conj()
            if new <= val * (1 + 1e-13):
                val = max(val, new)
                break
            val = new
        best = max(best, val)
    return best


def _amplified_pairs(rep: ElementaryRep, level: int):
    eye = np.eye(level)
    return [(np.kron(eye, a), np.kron(eye, b)) for a, b in rep.pairs]


def amplification_norm(rep: ElementaryRep, level: int, iters: int = 80, starts: int = 6, seed: int = 0) -> float:
    """Estimate the norm of the level-fold amplification (entrywise action on
    level x level block matrices).

    Alternating maximization over unit vectors u, v and a contraction X:
    fixing (u, v) the optimal X is the polar factor of the induced bilinear
    form (value = its nuclear norm); fixing X the optimal (u, v) is the top
    singular pair. Levels are laddered from 1 upward with the previous
    maximizer embedded as a warm start, which makes the estimate monotone
    nondecreasing in the level. Always a lower bound on the true norm.
    """
    if level < 1:
        raise InputError("amplification level must be >= 1")
    if len(rep.pairs) == 0:
        return 0.0
    n = rep.dim
    rng = np.random.default_rng(seed)
    warm = None  # (u, v, x) from the previous level
    val_prev = 0.0
    for l in range(1, level + 1):
        pairs = _amplified_pairs(rep, l)
        d = l * n
        best = val_prev
        best_state = None
        starts_list = []
        for _ in range(starts):
            u = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            starts_list.append((u / np.linalg.norm(u), v / np.linalg.norm(v), None))
        if warm is not None:
            u0 = np.zeros(d, dtype=complex)
            v0 = np.zeros(d, dtype=complex)
            x0 = np.zeros((d, d), dtype=complex)
            dp = (l - 1) * n
            u0[:dp], v0[:dp], x0[:dp, :dp] = warm[0], warm[1], warm[2]
            starts_list.append((u0, v0, x0))
        for u, v, x in starts_list:
            val = 0.0
            if x is not None:
                y = sum(a @ x @ b for a, b in pairs)
                uu, ss, vvh = np.linalg.svd(y)
                val, u, v = float(ss[0]), uu[:, 0], vvh[0, :].conj()
            for _ in range(iters):
                g = np.zeros((d, d), dtype=complex)
                for a, b in pairs:
                    g += np.outer(b @ v, (a.conj().T @ u).conj())
                x, _ = _polar_maximizer(g)
                y = sum(a @ x @ b for a, b in pairs)
                uu, ss, vvh = np.linalg.svd(y)
                new = float(ss[0])
                u, v = uu[:, 0], vvh[0, :].conj()
                if new <= val * (1 + 1e-13):
                    val = max(val, new)
                    break
                val = new
            if val > best:
                best = val
                best_state = (u, v, x)
        if best_state is not None:
            warm = best_state
        elif warm is not None:
            u0, v0, x0 = warm
            pad_u = np.zeros(d, dtype=complex)
            pad_v = np.zeros(d, dtype=complex)
            pad_x = np.zeros((d, d), dtype=complex)
            dp = (l - 1) * n
            pad_u[:dp], pad_v[:dp], pad_x[:dp, :dp] = u0, v0, x0
            warm = (pad_u, pad_v, pad_x)
        val_prev = best
    return val_prev


@dataclass
class HaagerupEstimate:
    """Two-sided tensor-norm estimate: amplification lower bound and
    representation-minimization upper bound."""

    value: float
    upper: float
    gap: float
    length: int

    def __float__(self):
        return self.value


def _rep_factor_bound(pairs) -> float:
    """The representation's row/column bound ||sum a a*||^(1/2) ||sum b* b||^(1/2)."""
    sa = sum(a @ a.conj().T for a, _ in pairs)
    sb = sum(b.conj().T @ b for _, b in pairs)
    return float(np.sqrt(op_norm(sa) * op_norm(sb)))


def representation_upper_bound(rep: ElementaryRep, tol: float = DEFAULT_RANK_TOL, seed: int = 0) -> float:
    """Minimize the representation bound over invertible recombinations.

    A length-l representation stays length-l under (a_i) -> (sum_j a_j S_ji),
    (b_i) -> (sum_j (S^-1)_ij b_j); the bound is minimized over S = exp(Z)
    by gradient-free descent. Upper-bounds the completely bounded norm.
    """
    from scipy.linalg import expm
    from scipy.optimize import minimize

    base = minimal_rep(to_fibre_matrix(rep), tol)
    l = len(base.pairs)
    if l == 0:
        return 0.0
    if l == 1:
        return _rep_factor_bound(base.pairs)
    a_list = [a for a, _ in base.pairs]
    b_list = [b for _, b in base.pairs]

    def bound_for(z_flat):
        z = (z_flat[: l * l] + 1j * z_flat[l * l:]).reshape(l, l)
        s_mat = expm(z)
        s_inv = expm(-z)
        new_a = [sum(a_list[j] * s_mat[j, i] for j in range(l)) for i in range(l)]
        new_b = [sum(s_inv[i, j] * b_list[j] for j in range(l)) for i in range(l)]
        return _rep_factor_bound(list(zip(new_a, new_b)))

    rng = np.random.default_rng(seed)
    best = bound_for(np.zeros(2 * l * l))
    for scale in (0.0, 0.3):
        x0 = np.zeros(2 * l * l) if scale == 0.0 else rng.normal(0.0, scale, 2 * l * l)
        res = minimize(bound_for, x0, method="Powell",
                       options={"maxiter": 2000, "xtol": 1e-8, "ftol": 1e-10})
        best = min(best, float(res.fun))
    return best


def haagerup_norm(rep: ElementaryRep, tol: float = DEFAULT_RANK_TOL, iters: int = 80, seed: int = 0) -> HaagerupEstimate:
    """Two-sided estimate of the minimal-representation tensor norm.

    value: amplification estimate at level = length (lower route).
    upper: representation-minimization bound (upper route).
    The routes are independent; their gap is reported, never hidden.
    """
    l = rep_length(rep, tol)
    if l == 0:
        return HaagerupEstimate(0.0, 0.0, 0.0, 0)
    lower = amplification_norm(rep, l, iters=iters, seed=seed)
    upper = representation_upper_bound(rep, tol, seed=seed)
    return HaagerupEstimate(lower, upper, max(0.0, upper - lower), l)


def _batch_op_norms(stack) -> np.ndarray:
    return np.linalg.svd(stack, compute_uv=False)[..., 0]


def pair_distance(a, b, c, d, tol: float = DEFAULT_RANK_TOL, seed: int = 0) -> float:
    """Certified upper estimate of the tensor-norm distance ||a (x) b - c (x) d||.

    Splits along a unimodular phase: for every mu the difference equals
    (a - mu c) (x) b + mu c (x) (b - conj(mu) d), so
    ||a - mu c|| ||b|| + ||c|| ||b - conj(mu) d|| upper-bounds the distance.
    Every candidate phase certifies, so the grid-plus-golden minimum is
    always >= the true distance: safe for gating hypotheses that need the
    distance to be small.
    """
    a, b, c, d = (as_cmat(m) for m in (a, b, c, d))
    nb, nc = op_norm(b), op_norm(c)

    def h(theta):
        mu = np.exp(1j * theta)
        return op_norm(a - mu * c) * nb + nc * op_norm(b - np.conj(mu) * d)

    thetas = np.linspace(-np.pi, np.pi, 512, endpoint=False)
    mus = np.exp(1j * thetas)
    left = _batch_op_norms(a[None, :, :] - mus[:, None, None] * c[None, :, :])
    right = _batch_op_norms(b[None, :, :] - np.conj(mus)[:, None, None] * d[None, :, :])
    vals = left * nb + nc * right
    k = int(np.argmin(vals))
    step = 2 * np.pi / 512
    theta = _golden_min(h, thetas[k] - step, thetas[k] + step)
    return min(float(vals[k]), h(theta))


@dataclass
class RecoveryCertificate:
    """Witness that a unimodular mu aligns two nearby rank-one products."""

    mu: complex
    bound_a: float
    bound_b: float
    epsilon: float

    @property
    def bound(self) -> float:
        return max(self.bound_a, self.bound_b)


def _phase_objective(a, c, b, d):
    def g(theta):
        mu = np.exp(1j * theta)
        return max(op_norm(a - mu * c), op_norm(b - np.conj(mu) * d))
    return g


def _golden_min(g, lo, hi, tol=1e-12):
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    f1, f2 = g(x1), g(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = g(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = g(x2)
    return (lo + hi) / 2.0


def recover_pair(a, b, c, d, eps: float, norm_tol: float = 1e-9) -> RecoveryCertificate:
    """Align two nearly equal rank-one products by a unimodular phase.

    Preconditions: all four matrices have unit spectral norm (within
    norm_tol), 0 < eps <= 1/3, and the measured tensor distance
    ||a (x) b - c (x) d|| is below eps. Produces mu with
    max(||a - mu c||, ||b - conj(mu) d||) < 6 eps, certified; a failure of
    that bound after the preconditions held raises BoundViolated (a bug
    signal, not a data condition).

    The phase search seeds at the phase of <a, c> and refines by coarse grid
    plus golden-section; the certificate makes the search method irrelevant.
    """
    a, b, c, d = (as_cmat(m) for m in (a, b, c, d))
    for name, m in (("a", a), ("b", b), ("c", c), ("d", d)):
        if abs(op_norm(m) - 1.0) > norm_tol:
            raise PreconditionViolated(f"factor {name} must have unit spectral norm")
    if not (0.0 < eps <= 1.0 / 3.0):
        raise PreconditionViolated("eps must lie in (0, 1/3]")
    dist = pair_distance(a, b, c, d)
    if dist >= eps:
        raise PreconditionViolated(
            f"measured tensor distance {dist:.6e} is not below eps={eps:.6e}"
        )
    g = _phase_objective(a, c, b, d)
    z = hs_inner(a, c)
    theta0 = float(np.angle(z)) if z != 0 else 0.0
    thetas = theta0 + np.linspace(-np.pi, np.pi, 256, endpoint=False)
    mus = np.exp(1j * thetas)
    left = _batch_op_norms(a[None, :, :] - mus[:, None, None] * c[None, :, :])
    right = _batch_op_norms(b[None, :, :] - np.conj(mus)[:, None, None] * d[None, :, :])
    vals = np.maximum(left, right)
    k = int(np.argmin(vals))
    step = 2 * np.pi / 256
    theta = _golden_min(g, thetas[k] - step, thetas[k] + step)
    if g(theta0) < g(theta):
        theta = theta0
    mu = complex(np.exp(1j * theta))
    bound_a = op_norm(a - mu * c)
    bound_b = op_norm(b - np.conj(mu) * d)
    if max(bound_a, bound_b) >= 6.0 * eps:
        raise BoundViolated(
            f"recovered phase misses the certified bound: {max(bound_a, bound_b):.6e} >= 6*{eps:.6e}"
        )
    return RecoveryCertificate(mu, bound_a, bound_b, eps)


def stabilize_sequence(pairs, tol: float = DEFAULT_RANK_TOL, seed: int = 0):
    """Phase-correct a geometrically converging sequence of rank-one pairs.

    Precondition: after some initial index s, consecutive measured tensor
    distances satisfy d_k <= 1/(6 * 2^(k-s)); otherwise NotCauchy. Each
    corrected pair represents the same product operator while consecutive
    corrected factors satisfy ||a'_k - a'_{k+1}|| <= 1/2^(k-s). Returns
    (corrected_pairs, tail_bound).
    """
    ps = [(as_cmat(a), as_cmat(b)) for a, b in pairs]
    if len(ps) < 2:
        return list(ps), 0.0
    dists = [
        pair_distance(ps[k][0], ps[k][1], ps[k + 1][0], ps[k + 1][1], tol, seed=seed)
        for k in range(len(ps) - 1)
    ]
    shift = None
    for s in range(len(dists)):
        if all(dists[k] <= 1.0 / (6.0 * 2 ** (k - s + 1)) for k in range(s, len(dists))):
            shift = s
            break
    if shift is None:
        raise NotCauchy("consecutive tensor distances do not decay like 1/(6*2^k)")
    corrected = list(ps[: shift + 1])
    a_cur, b_cur = corrected[-1]
    for k in range(shift, len(dists)):
        eps_k = 1.0 / (6.0 * 2 ** (k - shift + 1))
        cert = recover_pair(a_cur, b_cur, ps[k + 1][0], ps[k + 1][1], eps=min(eps_k, 1.0 / 3.0))
        a_cur = cert.mu * ps[k + 1][0]
        b_cur = np.conj(cert.mu) * ps[k + 1][1]
        corrected.append((a_cur, b_cur))
    tail = 2.0 ** (-(len(dists) - shift) + 1)
    return corrected, tail


def classify_special(f: FibreOperator, tol: float = 1e-8):
    """Tag a fibre operator with the special families it belongs to.

    TM: a single two-sided term. TM_cp: the completely positive ones
    x -> a x a*. InnAut_alg: x -> a x a^{-1}. InnAut: both, i.e. unitary
    conjugations. Operators of length >= 2 receive no tags. Tags are decided
    on balanced factors, where each relation is invariant under the residual
    unimodular phase freedom.
    """
    tags = set()
    try:
        a, b, _ = rank_one_factor(f, allow_zero=True)
    except LengthExceeded:
        return tags
    tags.add("TM")
    na = op_norm(a)
    if na == 0.0:
        tags.add("TM_cp")
        return tags
    scale = max(na, op_norm(b))
    if op_norm(b - a.conj().T) <= tol * scale:
        tags.add("TM_cp")
    # inverse relation needs a well-conditioned factor
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[-1] > tol * sv[0]:
        a_inv = np.linalg.inv(a)
        if op_norm(b - a_inv) <= tol * max(scale, op_norm(a_inv)):
            tags.add("InnAut_alg")
    if "TM_cp" in tags and "InnAut_alg" in tags:
        tags.add("InnAut")
    return tags
