"""Simplicial 2-complexes and integer cohomology.

A base space is a finite simplicial complex of dimension <= 2: vertices
0..n-1, edges stored as sorted pairs (u, v) with u < v, triangles stored as
oriented triples (a, b, c) whose three edges must all be present. Cochains
are plain arrays indexed by the stored order; an edge used against its
stored direction contributes with a minus sign.

Integer cohomology is computed from Smith normal forms of the coboundary
matrices. Two engines: a sparse elimination that only tracks invariant
factors (used for ranks and torsion on large complexes), and a dense
transform-tracking form U A V = D (used for cocycle classes and coboundary
witnesses on small complexes).
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property
from math import gcd

import numpy as np

from .errors import InputError

# ---------------------------------------------------------------------------
# complexes


@dataclass
class Complex2:
    """A finite simplicial complex with vertices, edges and oriented triangles.

    Treated as immutable after construction. marks holds optional named
    vertex sets (e.g. a "boundary" mark on a disc).
    """

    n_vertices: int
    edges: tuple
    triangles: tuple = ()
    marks: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.n_vertices
        if n < 0:
            raise InputError("vertex count must be nonnegative")
        seen = set()
        edges = []
        for e in self.edges:
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge {e} references a vertex out of range")
            if u == v:
                raise InputError(f"edge {e} is degenerate")
            if u > v:
                u, v = v, u
            if (u, v) in seen:
                raise InputError(f"duplicate edge {(u, v)}")
            seen.add((u, v))
            edges.append((u, v))
        object.__setattr__(self, "edges", tuple(edges))
        eidx = {e: i for i, e in enumerate(edges)}
        tris = []
        tseen = set()
        for t in self.triangles:
            a, b, c = (int(x) for x in t)
            if len({a, b, c}) != 3:
                raise InputError(f"triangle {t} is degenerate")
            key = frozenset((a, b, c))
            if key in tseen:
                raise InputError(f"duplicate triangle on vertices {sorted(key)}")
            tseen.add(key)
            for x, y in ((a, b), (b, c), (c, a)):
                if (min(x, y), max(x, y)) not in eidx:
                    raise InputError(f"triangle {t} is missing edge {(min(x, y), max(x, y))}")
            tris.append((a, b, c))
        object.__setattr__(self, "triangles", tuple(tris))
        marks = {str(k): tuple(int(v) for v in vs) for k, vs in self.marks.items()}
        for k, vs in marks.items():
            if any(not (0 <= v < n) for v in vs):
                raise InputError(f"mark {k!r} references a vertex out of range")
        object.__setattr__(self, "marks", marks)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def edge_index(self) -> dict:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def edge_ends(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array(self.edges, dtype=np.int64)

    @cached_property
    def tri_edge_data(self):
        """(T, 3) edge indices and (T, 3) signs for the cyclic boundary of
        each oriented triangle (a,b,c): edges (a,b), (b,c), (c,a)."""
        idx = np.zeros((self.n_triangles, 3), dtype=np.int64)
        sgn = np.zeros((self.n_triangles, 3), dtype=np.int64)
        ei = self.edge_index
        for t, (a, b, c) in enumerate(self.triangles):
            for k, (x, y) in enumerate(((a, b), (b, c), (c, a))):
                if x < y:
                    idx[t, k], sgn[t, k] = ei[(x, y)], 1
                else:
                    idx[t, k], sgn[t, k] = ei[(y, x)], -1
        return idx, sgn

    @cached_property
    def adjacency(self) -> dict:
        nb = defaultdict(list)
        for i, (u, v) in enumerate(self.edges):
            nb[u].append((v, i))
            nb[v].append((u, i))
        return dict(nb)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles


def apply_coboundary0(cx: Complex2, f) -> np.ndarray:
    """Vertex cochain to edge cochain: (df)(u, v) = f(v) - f(u)."""
    f = np.asarray(f)
    if f.shape != (cx.n_vertices,):
        raise InputError("vertex cochain has wrong length")
    if cx.n_edges == 0:
        return np.zeros(0, dtype=f.dtype)
    ends = cx.edge_ends
    return f[ends[:, 1]] - f[ends[:, 0]]


def apply_coboundary1(cx: Complex2, g) -> np.ndarray:
    """Edge cochain to triangle cochain: cyclic signed sum around each triangle."""
    g = np.asarray(g)
    if g.shape != (cx.n_edges,):
        raise InputError("edge cochain has wrong length")
    if cx.n_triangles == 0:
        return np.zeros(0, dtype=g.dtype)
    idx, sgn = cx.tri_edge_data
    return (g[idx] * sgn).sum(axis=1)


def coboundary0_rows(cx: Complex2) -> dict:
    """Sparse integer rows of the edge-by-vertex coboundary matrix."""
    return {i: {u: -1, v: 1} for i, (u, v) in enumerate(cx.edges)}


def coboundary1_rows(cx: Complex2) -> dict:
    """Sparse integer rows of the triangle-by-edge coboundary matrix."""
    idx, sgn = cx.tri_edge_data
    rows = {}
    for t in range(cx.n_triangles):
        r = {}
        for k in range(3):
            e = int(idx[t, k])
            r[e] = r.get(e, 0) + int(sgn[t, k])
        rows[t] = {e: v for e, v in r.items() if v}
    return rows


def rows_to_dense(rows: dict, shape) -> np.ndarray:
    m = np.zeros(shape, dtype=np.int64)
    for r, cs in rows.items():
        for c, v in cs.items():
            m[r, c] = v
    return m


def connected_components(cx: Complex2):
    """(count, labels). Isolated vertices are their own components."""
    labels = np.full(cx.n_vertices, -1, dtype=np.int64)
    adj = cx.adjacency
    count = 0
    for start in range(cx.n_vertices):
        if labels[start] >= 0:
            continue
        q = deque([start])
        labels[start] = count
        while q:
            u = q.popleft()
            for v, _ in adj.get(u, ()):
                if labels[v] < 0:
                    labels[v] = count
                    q.append(v)
        count += 1
    return count, labels


def graph_distance(cx: Complex2, sources) -> np.ndarray:
    """BFS hop count from a vertex set; unreachable vertices get -1."""
    dist = np.full(cx.n_vertices, -1, dtype=np.int64)
    q = deque()
    for s in sources:
        s = int(s)
        if not (0 <= s < cx.n_vertices):
            raise InputError(f"source vertex {s} out of range")
        if dist[s] < 0:
            dist[s] = 0
            q.append(s)
    adj = cx.adjacency
    while q:
        u = q.popleft()
        for v, _ in adj.get(u, ()):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def spanning_forest(cx: Complex2):
    """BFS forest: (parent_vertex, parent_edge, roots, order).

    parent_vertex[v] is -1 at roots; parent_edge[v] is the index of the edge
    joining v to its parent; order lists vertices so parents come first.
    """
    pv = np.full(cx.n_vertices, -1, dtype=np.int64)
    pe = np.full(cx.n_vertices, -1, dtype=np.int64)
    seen = np.zeros(cx.n_vertices, dtype=bool)
    roots = []
    order = []
    adj = cx.adjacency
    for start in range(cx.n_vertices):
        if seen[start]:
            continue
        roots.append(start)
        seen[start] = True
        q = deque([start])
        while q:
            u = q.popleft()
            order.append(u)
            for v, ei in adj.get(u, ()):
                if not seen[v]:
                    seen[v] = True
                    pv[v] = u
                    pe[v] = ei
                    q.append(v)
    return pv, pe, roots, order


def vertex_star(cx: Complex2, v: int):
    """The vertex together with its edge neighbours."""
    if not (0 <= v < cx.n_vertices):
        raise InputError(f"vertex {v} out of range")
    out = {v}
    for u, _ in cx.adjacency.get(v, ()):
        out.add(u)
    return sorted(out)


@dataclass
class SubcomplexMap:
    """Relabelling data for an induced subcomplex."""

    vertex_old: np.ndarray    # new vertex id -> old vertex id
    vertex_new: np.ndarray    # old vertex id -> new id or -1
    edge_old: np.ndarray      # new edge index -> old edge index
    triangle_old: np.ndarray  # new triangle index -> old triangle index


def subcomplex(cx: Complex2, keep) -> tuple:
    """Induced subcomplex on a vertex subset. Returns (complex, map)."""
    keep_mask = np.zeros(cx.n_vertices, dtype=bool)
    for v in keep:
        v = int(v)
        if not (0 <= v < cx.n_vertices):
            raise InputError(f"vertex {v} out of range")
        keep_mask[v] = True
    old_ids = np.nonzero(keep_mask)[0]
    new_of_old = np.full(cx.n_vertices, -1, dtype=np.int64)
    new_of_old[old_ids] = np.arange(len(old_ids))
    edges = []
    edge_old = []
    for i, (u, v) in enumerate(cx.edges):
        if keep_mask[u] and keep_mask[v]:
            edges.append((int(new_of_old[u]), int(new_of_old[v])))
            edge_old.append(i)
    tris = []
    tri_old = []
    for i, (a, b, c) in enumerate(cx.triangles):
        if keep_mask[a] and keep_mask[b] and keep_mask[c]:
            tris.append((int(new_of_old[a]), int(new_of_old[b]), int(new_of_old[c])))
            tri_old.append(i)
    marks = {}
    for k, vs in cx.marks.items():
        kept = tuple(int(new_of_old[v]) for v in vs if keep_mask[v])
        if kept:
            marks[k] = kept
    sub = Complex2(len(old_ids), tuple(edges), tuple(tris), marks)
    m = SubcomplexMap(
        vertex_old=old_ids.astype(np.int64),
        vertex_new=new_of_old,
        edge_old=np.array(edge_old, dtype=np.int64),
        triangle_old=np.array(tri_old, dtype=np.int64),
    )
    return sub, m


# ---------------------------------------------------------------------------
# Smith normal form


def _divisibility_normalize(factors):
    fs = [abs(int(f)) for f in factors if f]
    changed = True
    while changed:
        changed = False
        for i in range(len(fs)):
            for j in range(i + 1, len(fs)):
                if fs[j] % fs[i]:
                    g = gcd(fs[i], fs[j])
                    l = fs[i] * fs[j] // g
                    fs[i], fs[j] = g, l
                    changed = True
    return sorted(fs)


def _dense_snf_factors(mat):
    """Invariant factors of a small integer matrix given as list rows."""
    m = [[int(x) for x in row] for row in mat]
    R = len(m)
    C = len(m[0]) if R else 0
    t = 0
    factors = []
    while t < R and t < C:
        # locate a smallest nonzero entry in the trailing block
        piv = None
        for i in range(t, R):
            row = m[i]
            for j in range(t, C):
                v = row[j]
                if v and (piv is None or abs(v) < piv[0]):
                    piv = (abs(v), i, j)
        if piv is None:
            break
        _, pi, pj = piv
        m[t], m[pi] = m[pi], m[t]
        for row in m:
            row[t], row[pj] = row[pj], row[t]
        while True:
            if m[t][t] < 0:
                m[t] = [-x for x in m[t]]
            p = m[t][t]
            dirty = False
            for i in range(t + 1, R):
                v = m[i][t]
                if v:
                    q = v // p
                    if q:
                        mt = m[t]
                        m[i] = [a - q * b for a, b in zip(m[i], mt)]
                    if m[i][t]:
                        m[t], m[i] = m[i], m[t]
                        dirty = True
                        break
            if dirty:
                continue
            for j in range(t + 1, C):
                v = m[t][j]
                if v:
                    q = v // p
                    if q:
                        for row in m:
                            row[j] -= q * row[t]
                    if m[t][j]:
                        for row in m:
                            row[t], row[j] = row[j], row[t]
                        dirty = True
                        break
            if dirty:
                continue
            # pivot row/col clear; enforce divisibility into the pivot
            p = m[t][t]
            offender = None
            for i in range(t + 1, R):
                row = m[i]
                for j in range(t + 1, C):
                    if row[j] % p:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            mt = m[t]
            mo = m[offender]
            m[t] = [a + b for a, b in zip(mt, mo)]
        factors.append(m[t][t])
        t += 1
    return _divisibility_normalize(factors)


class _Transforms:
    """Row/column operation log as explicit unimodular matrices."""

    def __init__(self, R, C):
        self.u = [[1 if i == j else 0 for j in range(R)] for i in range(R)]
        self.v = [[1 if i == j else 0 for j in range(C)] for i in range(C)]
        self.vinv = [[1 if i == j else 0 for j in range(C)] for i in range(C)]

    def row_swap(self, i, j):
        self.u[i], self.u[j] = self.u[j], self.u[i]

    def row_negate(self, i):
        self.u[i] = [-x for x in self.u[i]]

    def row_add(self, i, j, q):
        uj = self.u[j]
        self.u[i] = [a + q * b for a, b in zip(self.u[i], uj)]

    def col_swap(self, i, j):
        for row in self.v:
            row[i], row[j] = row[j], row[i]
        self.vinv[i], self.vinv[j] = self.vinv[j], self.vinv[i]

    def col_negate(self, i):
        for row in self.v:
            row[i] = -row[i]
        self.vinv[i] = [-x for x in self.vinv[i]]

    def col_add(self, i, j, q):
        # column i += q * column j;  inverse: row j of vinv -= q * row i
        for row in self.v:
            row[i] += q * row[j]
        vi = self.vinv[i]
        self.vinv[j] = [a - q * b for a, b in zip(self.vinv[j], vi)]


@dataclass
class SmithForm:
    """U A V = D with U, V unimodular; factors are the nonzero diagonal."""

    shape: tuple
    factors: tuple
    u: list
    v: list
    vinv: list

    @property
    def rank(self) -> int:
        return len(self.factors)


def smith_normal_form(mat, check: bool = True) -> SmithForm:
    """Smith normal form with transform tracking, for small matrices.

    The diagonal is divisibility-ordered and positive. With check=True the
    identity U A V = D is re-verified exactly over the integers.
    """
    shp = np.shape(mat)
    if len(shp) != 2:
        raise InputError("expected a 2-d integer matrix")
    R, C = int(shp[0]), int(shp[1])
    arr = np.asarray(mat, dtype=object)
    a0 = [[int(arr[i, j]) for j in range(C)] for i in range(R)]
    m = [row[:] for row in a0]
    tr = _Transforms(R, C)
    t = 0
    while t < R and t < C:
        piv = None
        for i in range(t, R):
            row = m[i]
            for j in range(t, C):
                v = row[j]
                if v and (piv is None or abs(v) < piv[0]):
                    piv = (abs(v), i, j)
        if piv is None:
            break
        _, pi, pj = piv
        if pi != t:
            m[t], m[pi] = m[pi], m[t]
            tr.row_swap(t, pi)
        if pj != t:
            for row in m:
                row[t], row[pj] = row[pj], row[t]
            tr.col_swap(t, pj)
        while True:
            if m[t][t] < 0:
                m[t] = [-x for x in m[t]]
                tr.row_negate(t)
            p = m[t][t]
            dirty = False
            for i in range(t + 1, R):
                v = m[i][t]
                if v:
                    q = v // p
                    if q:
                        mt = m[t]
                        m[i] = [a - q * b for a, b in zip(m[i], mt)]
                        tr.row_add(i, t, -q)
                    if m[i][t]:
                        m[t], m[i] = m[i], m[t]
                        tr.row_swap(t, i)
                        dirty = True
                        break
            if dirty:
                continue
            for j in range(t + 1, C):
                v = m[t][j]
                if v:
                    q = v // p
                    if q:
                        for row in m:
                            row[j] -= q * row[t]
                        tr.col_add(j, t, -q)
                    if m[t][j]:
                        for row in m:
                            row[t], row[j] = row[j], row[t]
                        tr.col_swap(t, j)
                        dirty = True
                        break
            if dirty:
                continue
            p = m[t][t]
            offender = None
            for i in range(t + 1, R):
                row = m[i]
                for j in range(t + 1, C):
                    if row[j] % p:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            mo = m[offender]
            m[t] = [a + b for a, b in zip(m[t], mo)]
            tr.row_add(t, offender, 1)
        t += 1
    factors = tuple(m[i][i] for i in range(t) if m[i][i])
    res = SmithForm((R, C), factors, tr.u, tr.v, tr.vinv)
    if check:
        _verify_smith(a0, res, m)
    return res


def _verify_smith(a, res: SmithForm, d):
    R, C = res.shape
    u, v, vinv = res.u, res.v, res.vinv
    # V Vinv = I
    for i in range(C):
        for j in range(C):
            s = sum(v[i][k] * vinv[k][j] for k in range(C))
            if s != (1 if i == j else 0):
                raise AssertionError("transform inverse failed")
    # U A V = D
    av = [[sum(a[i][k] * v[k][j] for k in range(C)) for j in range(C)] for i in range(R)]
    for i in range(R):
        for j in range(C):
            s = sum(u[i][k] * av[k][j] for k in range(R))
            if s != d[i][j]:
                raise AssertionError("transform identity failed")
    for i in range(min(R, C)):
        for j in range(min(R, C)):
            if i != j and d[i][j] != 0:
                raise AssertionError("off-diagonal residue in normal form")


def sparse_invariant_factors(rows, shape):
    """Invariant factors of a sparse integer matrix, without transforms.

    rows maps row index to {column: value}. Unit entries are eliminated with
    a minimum-fill heuristic and removed from play; whatever remains is
    finished by the dense routine. Returns (factors, rank).
    """
    R, C = shape
    work = {}
    for r, cs in rows.items():
        cs = {c: int(v) for c, v in cs.items() if v}
        if cs:
            work[r] = cs
    col_rows = defaultdict(set)
    for r, cs in work.items():
        for c in cs:
            col_rows[c].add(r)
    by_nnz = defaultdict(set)
    for r, cs in work.items():
        by_nnz[len(cs)].add(r)

    def reclass(r, old, new):
        if old == new:
            return
        by_nnz[old].discard(r)
        if not by_nnz[old]:
            del by_nnz[old]
        if new:
            by_nnz[new].add(r)

    unit_count = 0
    while work:
        best = None
        for nnz in sorted(by_nnz):
            scanned = 0
            for r in list(by_nnz[nnz]):
                for c, v in work[r].items():
                    if v == 1 or v == -1:
                        score = (nnz - 1) * (len(col_rows[c]) - 1)
                        if best is None or score < best[0]:
                            best = (score, r, c)
                scanned += 1
                if best is not None and (best[0] == 0 or scanned >= 64):
                    break
            if best is not None:
                break
        if best is None:
            break
        _, pr, pc = best
        prow = work.pop(pr)
        reclass(pr, len(prow), 0)
        for c in prow:
            col_rows[c].discard(pr)
        p = prow[pc]
        for r in list(col_rows[pc]):
            rr = work[r]
            f = rr[pc] * p
            old = len(rr)
            for c, v in prow.items():
                nv = rr.get(c, 0) - f * v
                if nv:
                    if c not in rr:
                        col_rows[c].add(r)
                    rr[c] = nv
                elif c in rr:
                    del rr[c]
                    col_rows[c].discard(r)
            if rr:
                reclass(r, old, len(rr))
            else:
                del work[r]
                reclass(r, old, 0)
        if pc in col_rows:
            del col_rows[pc]
        unit_count += 1
    factors = [1] * unit_count
    if work:
        live_cols = sorted({c for cs in work.values() for c in cs})
        cmap = {c: i for i, c in enumerate(live_cols)}
        dense = [[0] * len(live_cols) for _ in work]
        for i, (_, cs) in enumerate(sorted(work.items())):
            for c, v in cs.items():
                dense[i][cmap[c]] = v
        factors += _dense_snf_factors(dense)
    factors = _divisibility_normalize(factors)
    return tuple(factors), len(factors)


def integer_rank(rows, shape) -> int:
    return sparse_invariant_factors(rows, shape)[1]


# ---------------------------------------------------------------------------
# cohomology


@dataclass
class CohomologyReport:
    """Integer cohomology of a 2-complex: (free rank, torsion orders) per degree."""

    h0: tuple
    h1: tuple
    h2: tuple

    def as_dict(self):
        return {
            "h0": {"free": self.h0[0], "torsion": list(self.h0[1])},
            "h1": {"free": self.h1[0], "torsion": list(self.h1[1])},
            "h2": {"free": self.h2[0], "torsion": list(self.h2[1])},
        }


def cohomology(cx: Complex2) -> CohomologyReport:
    """Integer cohomology in degrees 0..2.

    Degree 0 counts components. Degree 1 is free (its torsion would be an
    extension of the free group H0, which cannot exist), so only ranks of
    the two coboundaries are needed. Degree 2 is the cokernel of the
    triangle coboundary: free rank plus its invariant factors above 1.
    """
    comp, _ = connected_components(cx)
    r0 = cx.n_vertices - comp  # rank of the vertex coboundary
    if cx.n_triangles:
        f1, r1 = sparse_invariant_factors(coboundary1_rows(cx), (cx.n_triangles, cx.n_edges))
    else:
        f1, r1 = (), 0
    h1_free = cx.n_edges - r1 - r0
    h2_free = cx.n_triangles - r1
    h2_tors = tuple(f for f in f1 if f > 1)
    return CohomologyReport(
        h0=(comp, ()),
        h1=(h1_free, ()),
        h2=(h2_free, h2_tors),
    )


def h1_torsion_direct(cx: Complex2) -> tuple:
    """Torsion of degree-1 cohomology computed honestly via the kernel
    quotient; exists to cross-check the structural zero. Small complexes only."""
    if cx.n_edges > 400:
        raise InputError("direct degree-1 torsion check is for small complexes")
    d1 = rows_to_dense(coboundary1_rows(cx), (cx.n_triangles, cx.n_edges)) if cx.n_triangles else np.zeros((0, cx.n_edges), dtype=np.int64)
    sf = smith_normal_form(d1, check=False)
    r = sf.rank
    # kernel basis = last E - r columns of V; express image of the vertex
    # coboundary in those coordinates via Vinv
    vinv = np.array(sf.vinv, dtype=object)[r:, :]
    d0 = rows_to_dense(coboundary0_rows(cx), (cx.n_edges, cx.n_vertices))
    y = vinv @ d0.astype(object)
    if y.size == 0:
        return ()
    fs = _dense_snf_factors([[int(x) for x in row] for row in y])
    return tuple(f for f in fs if f > 1)


@dataclass
class CocycleClass:
    """Coordinates of a triangle cocycle in degree-2 cohomology.

    torsion is a tuple of (residue, order) with 0 <= residue < order;
    free is a tuple of integers. Coordinates depend on a basis chosen by the
    normal form; vanishing and torsion orders are canonical.
    """

    torsion: tuple
    free: tuple

    @property
    def is_zero(self) -> bool:
        return all(r == 0 for r, _ in self.torsion) and all(f == 0 for f in self.free)


def _smith_of_d1(cx: Complex2) -> SmithForm:
    d1 = rows_to_dense(coboundary1_rows(cx), (cx.n_triangles, cx.n_edges))
    return smith_normal_form(d1, check=False)


# transform-tracking normal forms are dense; past this many matrix entries
# the peeling solver and the factors-only engine must carry the load
DENSE_WITNESS_CAP = 600_000


def _peel_witness(cx: Complex2, w):
    """Solve dm = w by free-edge peeling; exact, or None when it cannot.

    A triangle whose edge lies in no other unprocessed triangle can always
    be satisfied by setting that edge alone, so such triangles are peeled
    until none remain. Closed components have no free edge to start from;
    one triangle is then deferred and its equation is checked at the end
    (the final verification covers all deferred equations at once). The
    peel is linear in the mesh size; a verified witness is exact.
    """
    t_count, e_count = cx.n_triangles, cx.n_edges
    idx, sgn = cx.tri_edge_data
    incident = [[] for _ in range(e_count)]
    for t in range(t_count):
        for e in idx[t]:
            incident[int(e)].append(t)
    remaining = [len(x) for x in incident]
    alive = [True] * t_count
    order = []  # (triangle, local index of the edge it owns)
    ready = deque(
        t for t in range(t_count)
        if any(remaining[int(e)] == 1 for e in idx[t])
    )
    n_alive = t_count
    scan = 0  # deferral cursor, advances monotonically
    while n_alive:
        while ready:
            t = ready.popleft()
            if not alive[t]:
                continue
            pick = -1
            for j in range(3):
                if remaining[int(idx[t][j])] == 1:
                    pick = j
                    break
            if pick < 0:
                continue
            order.append((t, pick))
            alive[t] = False
            n_alive -= 1
            for j in range(3):
                ee = int(idx[t][j])
                remaining[ee] -= 1
                if remaining[ee] == 1:
                    for t2 in incident[ee]:
                        if alive[t2]:
                            ready.append(t2)
        if n_alive:
            while not alive[scan]:
                scan += 1
            t0 = scan
            alive[t0] = False
            n_alive -= 1
            for j in range(3):
                ee = int(idx[t0][j])
                remaining[ee] -= 1
                if remaining[ee] == 1:
                    for t2 in incident[ee]:
                        if alive[t2]:
                            ready.append(t2)
    # back-substitute newest first: an owned edge shared with triangle t
    # was necessarily claimed after t was peeled (while t lived, that edge
    # had two users and could not be free), so reverse order sees every
    # non-owned value already final
    m = [0] * e_count
    for t, pick in reversed(order):
        acc = int(w[t])
        for j in range(3):
            if j != pick:
                acc -= int(sgn[t][j]) * m[int(idx[t][j])]
        m[int(idx[t][pick])] = int(sgn[t][pick]) * acc
    try:
        out = np.array(m, dtype=np.int64)
    except OverflowError:
        return None
    if not np.array_equal(apply_coboundary1(cx, out), np.asarray(w, dtype=np.int64)):
        return None
    return out


def _zero_class(cx: Complex2) -> CocycleClass:
    rep = cohomology(cx)
    return CocycleClass(tuple((0, d) for d in rep.h2[1]), (0,) * rep.h2[0])


def cocycle_class(cx: Complex2, w) -> CocycleClass:
    """Class of an integer triangle cochain in the degree-2 group."""
    w = np.asarray(w)
    if w.shape != (cx.n_triangles,):
        raise InputError("triangle cochain has wrong length")
    if not np.issubdtype(w.dtype, np.integer):
        raise InputError("cocycle classes need integer cochains")
    if cx.n_triangles == 0:
        return CocycleClass((), ())
    if not w.any():
        # the zero cochain is a coboundary; skip the normal form entirely
        return _zero_class(cx)
    if _peel_witness(cx, w) is not None:
        return _zero_class(cx)
    if cx.n_triangles * cx.n_edges > DENSE_WITNESS_CAP:
        raise InputError(
            "exact class coordinates of a non-bounding cochain need the "
            "dense normal form; this mesh is too large for it"
        )
    sf = _smith_of_d1(cx)
    y = [sum(sf.u[i][k] * int(w[k]) for k in range(cx.n_triangles)) for i in range(cx.n_triangles)]
    torsion = []
    for i, d in enumerate(sf.factors):
        if d > 1:
            torsion.append((y[i] % d, d))
    free = tuple(int(y[i]) for i in range(sf.rank, cx.n_triangles))
    return CocycleClass(tuple(torsion), free)


def is_coboundary(cx: Complex2, w):
    """Whether an integer triangle cochain bounds; returns (flag, witness).

    The witness is an integer edge cochain m with dm = w, or None. The
    peeling solver settles almost every mesh in linear time; when it
    cannot, equality of the invariant factors of the coboundary matrix and
    its augmentation by w decides existence exactly (the image lattice and
    its extension by w have isomorphic quotients only when they coincide,
    finitely generated abelian groups being Hopfian), and the dense normal
    form reconstructs the witness while the mesh is small enough for it.
    """
    w = np.asarray(w)
    if w.shape != (cx.n_triangles,):
        raise InputError("triangle cochain has wrong length")
    if not np.issubdtype(w.dtype, np.integer):
        raise InputError("coboundary tests need integer cochains")
    if cx.n_triangles == 0 or not w.any():
        return True, np.zeros(cx.n_edges, dtype=np.int64)
    m = _peel_witness(cx, w)
    if m is not None:
        return True, m
    rows = coboundary1_rows(cx)
    shape = (cx.n_triangles, cx.n_edges)
    plain = sparse_invariant_factors(rows, shape)
    aug_rows = {t: dict(r) for t, r in rows.items()}
    for t in range(cx.n_triangles):
        if int(w[t]):
            aug_rows.setdefault(t, {})[cx.n_edges] = int(w[t])
    aug = sparse_invariant_factors(aug_rows, (cx.n_triangles, cx.n_edges + 1))
    if plain != aug:
        return False, None
    if cx.n_triangles * cx.n_edges > DENSE_WITNESS_CAP:
        raise InputError(
            "the cochain bounds, but this mesh is too large for the dense "
            "witness reconstruction and too tangled for the peeling solver"
        )
    sf = _smith_of_d1(cx)
    y = [sum(sf.u[i][k] * int(w[k]) for k in range(cx.n_triangles)) for i in range(cx.n_triangles)]
    coeff = [0] * cx.n_edges
    for i in range(cx.n_triangles):
        if i < sf.rank:
            d = sf.factors[i]
            if y[i] % d:
                return False, None
            coeff[i] = y[i] // d
        elif y[i]:
            return False, None
    m = [sum(sf.v[i][k] * coeff[k] for k in range(cx.n_edges)) for i in range(cx.n_edges)]
    m = np.array(m, dtype=np.int64)
    if not np.array_equal(apply_coboundary1(cx, m), w.astype(np.int64)):
        raise AssertionError("coboundary witness failed to reproduce the cochain")
    return True, m
