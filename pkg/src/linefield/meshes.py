"""Canonical base meshes.

Builders return a Complex2, plus vertex positions where the mesh has a
natural geometric realization (unit sphere, planar disc). Closed-surface
builders orient triangles coherently where the surface is orientable.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .topology import Complex2


def icosahedron():
    """The regular icosahedron on the unit sphere, outward-oriented.

    Returns (complex, positions) with positions of shape (12, 3).
    """
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    raw = []
    for a in (-1.0, 1.0):
        for b in (-phi, phi):
            raw.append((0.0, a, b))
            raw.append((a, b, 0.0))
            raw.append((b, 0.0, a))
    pos = np.array(raw)
    pos /= np.linalg.norm(pos, axis=1, keepdims=True)
    # adjacency at the minimal chord distance
    d2 = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(axis=2)
    off = d2[d2 > 1e-9]
    thresh = off.min() * 1.5
    edges = sorted(
        (i, j) for i in range(12) for j in range(i + 1, 12) if d2[i, j] < thresh
    )
    eset = set(edges)
    tris = []
    for i in range(12):
        for j in range(i + 1, 12):
            if (i, j) not in eset:
                continue
            for k in range(j + 1, 12):
                if (i, k) in eset and (j, k) in eset:
                    a, b, c = pos[i], pos[j], pos[k]
                    n = np.cross(b - a, c - a)
                    if np.dot(n, a + b + c) > 0:
                        tris.append((i, j, k))
                    else:
                        tris.append((i, k, j))
    cx = Complex2(12, tuple(edges), tuple(tris))
    return cx, pos


def barycentric_subdivision(cx: Complex2):
    """Barycentric subdivision of a 2-complex.

    Returns (subdivided, supports) where supports[new_vertex] is the tuple
    of original vertices it averages (1 for a corner, 2 for an edge point,
    3 for a face point). Small-triangle orientations follow the parent.
    Vertex marks carry to corners, and to an edge point when both ends of
    its edge carry the mark.
    """
    nv, ne = cx.n_vertices, cx.n_edges
    supports = [(v,) for v in range(nv)]
    supports += [tuple(e) for e in cx.edges]
    supports += [tuple(t) for t in cx.triangles]

    def mid(e):
        return nv + cx.edge_index[e]

    def bary(t):
        return nv + ne + t

    edges = set()
    for e in cx.edges:
        u, v = e
        edges.add((min(u, mid(e)), max(u, mid(e))))
        edges.add((min(v, mid(e)), max(v, mid(e))))
    tris = []
    for t, (a, b, c) in enumerate(cx.triangles):
        g = bary(t)
        corners = (a, b, c)
        mids = []
        for x, y in ((a, b), (b, c), (c, a)):
            m = mid((min(x, y), max(x, y)))
            mids.append(m)
        for k in range(3):
            x, y, m = corners[k], corners[(k + 1) % 3], mids[k]
            edges.add((min(g, x), max(g, x)))
            edges.add((min(g, m), max(g, m)))
            tris.append((x, m, g))
            tris.append((m, y, g))
    marks = {}
    for k, vs in cx.marks.items():
        vset = set(vs)
        new_vs = sorted(vset | {mid(e) for e in cx.edges if e[0] in vset and e[1] in vset})
        marks[k] = tuple(new_vs)
    sub = Complex2(nv + ne + cx.n_triangles, tuple(sorted(edges)), tuple(tris), marks)
    return sub, supports


def sphere_mesh(subdivisions: int = 0):
    """Icosahedral sphere, optionally barycentrically refined and reprojected.

    Returns (complex, positions).
    """
    if subdivisions < 0:
        raise InputError("subdivision count must be nonnegative")
    cx, pos = icosahedron()
    for _ in range(subdivisions):
        cx, sup = barycentric_subdivision(cx)
        new_pos = np.array([pos[list(s)].mean(axis=0) for s in sup])
        new_pos /= np.linalg.norm(new_pos, axis=1, keepdims=True)
        pos = new_pos
    return cx, pos


def torus_grid(p: int = 6, q: int = 6) -> Complex2:
    """A p-by-q triangulated torus, coherently oriented."""
    if p < 3 or q < 3:
        raise InputError("torus grid needs p, q >= 3")
    def vid(i, j):
        return (i % p) * q + (j % q)
    edges = set()
    tris = []
    for i in range(p):
        for j in range(q):
            a = vid(i, j)
            b = vid(i, j + 1)
            c = vid(i + 1, j)
            d = vid(i + 1, j + 1)
            for x, y in ((a, b), (a, c), (a, d)):
                edges.add((min(x, y), max(x, y)))
            tris.append((a, b, d))
            tris.append((a, d, c))
    return Complex2(p * q, tuple(sorted(edges)), tuple(tris))


def klein_grid(p: int = 6, q: int = 6) -> Complex2:
    """A p-by-q triangulated Klein bottle.

    The second circle direction reverses on wraparound in the first, so the
    surface is closed and non-orientable; triangle orientations are per-cell.
    """
    if p < 3 or q < 4:
        raise InputError("klein grid needs p >= 3, q >= 4")
    def vid(i, j):
        j = j % q
        if i == p:
            return (q - j) % q
        return (i % p) * q + j
    edges = set()
    tris = []
    for i in range(p):
        for j in range(q):
            a = vid(i, j)
            b = vid(i, j + 1)
            c = vid(i + 1, j)
            d = vid(i + 1, j + 1)
            for x, y in ((a, b), (a, c), (a, d)):
                edges.add((min(x, y), max(x, y)))
            tris.append((a, b, d))
            tris.append((a, d, c))
    return Complex2(p * q, tuple(sorted(edges)), tuple(tris))


def disc_mesh(rings: int = 2, sectors: int = 8):
    """A triangulated planar disc: a centre vertex and concentric rings.

    Returns (complex, positions) with 2-d positions; the outermost ring is
    marked "boundary". Counterclockwise orientation throughout.
    """
    if rings < 1 or sectors < 3:
        raise InputError("disc needs rings >= 1 and sectors >= 3")
    def vid(r, s):
        return 1 + (r - 1) * sectors + (s % sectors)
    pos = [(0.0, 0.0)]
    for r in range(1, rings + 1):
        for s in range(sectors):
            ang = 2 * np.pi * s / sectors
            rho = r / rings
            pos.append((rho * np.cos(ang), rho * np.sin(ang)))
    edges = set()
    tris = []
    for s in range(sectors):
        a, b = vid(1, s), vid(1, s + 1)
        edges.add((min(a, b), max(a, b)))
        edges.add((0, a))
        tris.append((0, a, b))
    for r in range(1, rings):
        for s in range(sectors):
            a = vid(r, s)
            b = vid(r, s + 1)
            c = vid(r + 1, s)
            d = vid(r + 1, s + 1)
            for x, y in ((a, c), (a, d), (c, d), (b, d)):
                edges.add((min(x, y), max(x, y)))
            tris.append((a, d, c))
            tris.append((a, b, d))
    boundary = tuple(vid(rings, s) for s in range(sectors))
    cx = Complex2(
        1 + rings * sectors, tuple(sorted(edges)), tuple(tris), {"boundary": boundary}
    )
    return cx, np.array(pos)


def cycle_complex(m: int) -> Complex2:
    """An m-gon circle: m vertices, m edges, no triangles."""
    if m < 3:
        raise InputError("a cycle needs at least 3 vertices")
    edges = tuple(sorted((i, (i + 1) % m) if i < (i + 1) % m else ((i + 1) % m, i) for i in range(m)))
    return Complex2(m, edges, ())


def path_complex(m: int) -> Complex2:
    """An m-vertex path: contractible 1-complex."""
    if m < 1:
        raise InputError("a path needs at least one vertex")
    return Complex2(m, tuple((i, i + 1) for i in range(m - 1)), ())
