"""Conforming triangulations of polygonal domains.

A :class:`Mesh` holds node coordinates, counterclockwise triangles and the
boundary edge loops (the trace mesh used by the boundary element part).
Meshes are immutable; refinement and scaling return new objects.

The mesh-size parameter ``h`` used throughout the package is the largest
element size ``sqrt(2|T|)``, i.e. the leg length for the right isosceles
triangles produced on lattice polygons.  Element diameters are available
separately through :attr:`Mesh.diameters`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from pathlib import Path
from typing import NamedTuple

import numpy as np

__all__ = [
    "Mesh",
    "ScaleRecord",
    "Violation",
    "build_polygon_mesh",
    "refine_uniform",
    "scale_to_unit",
    "validate_regularity",
    "unit_square",
    "lshape",
    "read_mesh",
    "write_mesh",
    "SQUARE",
    "LSHAPE",
]

SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
LSHAPE = [(0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.5, 0.5), (0.5, 1.0), (0.0, 1.0)]

#: radius of the admissible disc after :func:`scale_to_unit` (diameter 1/2)
ADMISSIBLE_RADIUS = 0.25


class Violation(NamedTuple):
    kind: str
    detail: str


def _signed_areas(nodes, triangles):
    p = nodes[triangles]
    a = p[:, 1] - p[:, 0]
    b = p[:, 2] - p[:, 0]
    return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])


def _directed_edges(triangles):
    t = np.asarray(triangles)
    return np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])


def _order_loops(edges):
    """Chain directed edges into closed loops; deterministic start node."""
    succ = {}
    for a, b in edges:
        succ[int(a)] = int(b)
    loops = []
    remaining = set(succ)
    while remaining:
        start = min(remaining)
        loop = []
        cur = start
        while True:
            nxt = succ[cur]
            loop.append((cur, nxt))
            remaining.discard(cur)
            cur = nxt
            if cur == start or cur not in remaining:
                break
        loops.append(loop)
    return [e for loop in loops for e in loop]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation of a polygonal domain.

    Attributes
    ----------
    nodes : ndarray, shape (n, 2)
    triangles : ndarray of int, shape (t, 3)
        Node indices, counterclockwise.
    boundary_edges : ndarray of int, shape (b, 2)
        Directed boundary edges chained into closed loops; the domain lies to
        the left of each edge.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray

    def __post_init__(self):
        for name, dtype in (("nodes", float), ("triangles", np.intp), ("boundary_edges", np.intp)):
            arr = np.array(getattr(self, name), dtype=dtype)
            if name == "boundary_edges":
                arr = arr.reshape(-1, 2)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_triangles(cls, nodes, triangles) -> "Mesh":
        """Build a mesh, deriving the boundary loops from the triangles."""
        triangles = np.asarray(triangles, dtype=np.intp)
        directed = _directed_edges(triangles)
        key = np.sort(directed, axis=1)
        _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        single = directed[counts[inv.ravel()] == 1]
        return cls(nodes, triangles, np.array(_order_loops(single), dtype=np.intp).reshape(-1, 2))

    # -- sizes -----------------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def areas(self) -> np.ndarray:
        return _signed_areas(self.nodes, self.triangles)

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def diameters(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        lens = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)
        return lens.max(axis=1)

    @property
    def h(self) -> float:
        """Largest element size ``sqrt(2|T|)``."""
        return float(np.sqrt(2.0 * np.abs(self.areas)).max())

    @property
    def diameter(self) -> float:
        """Diameter of the node cloud."""
        d = self.nodes[:, None, :] - self.nodes[None, :, :]
        if self.n_nodes > 2000:
            hull = self.nodes[np.unique(self.boundary_edges)]
            d = hull[:, None, :] - hull[None, :, :]
        return float(np.sqrt((d**2).sum(axis=2)).max())

    # -- topology --------------------------------------------------------
    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges, each stored with ascending node indices."""
        key = np.sort(_directed_edges(self.triangles), axis=1)
        return np.unique(key, axis=0)

    @cached_property
    def edge_to_triangle(self) -> dict:
        """Map ``(i, j)`` with ``i < j`` to the tuple of adjacent triangles."""
        adj: dict = {}
        for k, tri in enumerate(self.triangles):
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                adj.setdefault((min(a, b), max(a, b)), []).append(k)
        return {e: tuple(v) for e, v in adj.items()}

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        """Boundary node indices in order of first appearance along the loops."""
        seen = []
        mark = set()
        for a, _ in self.boundary_edges:
            if a not in mark:
                mark.add(int(a))
                seen.append(int(a))
        return np.array(seen, dtype=np.intp)

    @property
    def boundary_length(self) -> float:
        p = self.nodes[self.boundary_edges]
        return float(np.linalg.norm(p[:, 1] - p[:, 0], axis=1).sum())

    def __repr__(self):
        return (f"Mesh(n_nodes={self.n_nodes}, n_triangles={self.n_triangles}, "
                f"n_boundary_edges={len(self.boundary_edges)}, h={self.h:.4g})")


@dataclass(frozen=True)
class ScaleRecord:
    """Affine length rescaling ``x -> factor * (x - center)``.

    Displacements scale like lengths, so strains and stresses are invariant:
    this keeps nonlinear material laws untouched by the rescaling.
    """

    factor: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("scale factor must be positive")

    def forward(self, x):
        return self.factor * (np.asarray(x, dtype=float) - np.asarray(self.center))

    def inverse(self, y):
        return np.asarray(y, dtype=float) / self.factor + np.asarray(self.center)

    # data transforms for the transmission problem
    def volume_force(self, f):
        """Scaled volume force ``f'(x') = f(x) / factor``."""
        return lambda y: np.asarray(f(self.inverse(y))) / self.factor

    def displacement(self, u):
        """Scaled displacement field ``u'(x') = factor * u(x)``."""
        return lambda y: self.factor * np.asarray(u(self.inverse(y)))

    def traction(self, phi):
        """Tractions are invariant: ``phi'(x') = phi(x)``."""
        return lambda y: np.asarray(phi(self.inverse(y)))

    def unscale_displacement(self, u_coef):
        return np.asarray(u_coef) / self.factor


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _segments_intersect(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 < 0 and d3 * d4 < 0:
        return True

    def on_seg(a, b, c):
        return (min(a[0], b[0]) - 1e-14 <= c[0] <= max(a[0], b[0]) + 1e-14
                and min(a[1], b[1]) - 1e-14 <= c[1] <= max(a[1], b[1]) + 1e-14)

    return ((abs(d1) < 1e-14 and on_seg(q1, q2, p1)) or (abs(d2) < 1e-14 and on_seg(q1, q2, p2))
            or (abs(d3) < 1e-14 and on_seg(p1, p2, q1)) or (abs(d4) < 1e-14 and on_seg(p1, p2, q2)))


def _check_polygon(poly):
    n = len(poly)
    if n < 3:
        raise ValueError("polygon needs at least three vertices")
    area = 0.5 * np.sum(poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1])
    if area <= 0:
        raise ValueError("polygon must be counterclockwise with positive area")
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]):
                raise ValueError(f"polygon is not simple: edges {i} and {j} intersect")
    if len({tuple(p) for p in poly}) != n:
        raise ValueError("polygon is not simple: repeated vertex")


def _lattice_spacing(poly):
    """Common lattice spacing of an axis-parallel polygon, or None."""
    nxt = np.roll(poly, -1, axis=0)
    if not np.all((np.abs(poly[:, 0] - nxt[:, 0]) < 1e-12) | (np.abs(poly[:, 1] - nxt[:, 1]) < 1e-12)):
        return None
    fracs = []
    for v in (poly - poly.min(axis=0)).ravel():
        f = Fraction(float(v)).limit_denominator(1 << 12)
        if abs(float(f) - v) > 1e-12:
            return None
        fracs.append(f)
    nums = [f for f in fracs if f != 0]
    if not nums:
        return None
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (f.denominator for f in nums))
    g = reduce(math.gcd, (int(f * den) for f in nums))
    return Fraction(g, den)


def _point_in_polygon(pt, poly):
    x, y = pt
    inside = False
    n = len(poly)
    for i in range(n):
        (x1, y1), (x2, y2) = poly[i], poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


def _grid_mesh(poly, g):
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    nx = int(round((hi[0] - lo[0]) / g))
    ny = int(round((hi[1] - lo[1]) / g))
    index = {}
    nodes = []
    tris = []

    def node(i, j):
        if (i, j) not in index:
            index[(i, j)] = len(nodes)
            nodes.append((lo[0] + i * g, lo[1] + j * g))
        return index[(i, j)]

    for j in range(ny):
        for i in range(nx):
            c = (lo[0] + (i + 0.5) * g, lo[1] + (j + 0.5) * g)
            if _point_in_polygon(c, poly):
                a, b, cc, d = node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)
                tris.append((a, b, cc))
                tris.append((a, cc, d))
    return Mesh.from_triangles(np.array(nodes), np.array(tris))


def _ear_clip(poly):
    idx = list(range(len(poly)))
    tris = []

    def convex(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) > 1e-14

    def contains(a, b, c, p):
        d1 = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        d2 = (c[0] - b[0]) * (p[1] - b[1]) - (c[1] - b[1]) * (p[0] - b[0])
        d3 = (a[0] - c[0]) * (p[1] - c[1]) - (a[1] - c[1]) * (p[0] - c[0])
        return d1 >= 0 and d2 >= 0 and d3 >= 0

    while len(idx) > 3:
        for k in range(len(idx)):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            a, b, c = poly[i0], poly[i1], poly[i2]
            if not convex(a, b, c):
                continue
            if any(contains(a, b, c, poly[m]) for m in idx if m not in (i0, i1, i2)):
                continue
            tris.append((i0, i1, i2))
            idx.pop(k)
            break
        else:
            raise ValueError("ear clipping failed; polygon may be degenerate")
    tris.append(tuple(idx))
    return Mesh.from_triangles(poly, np.array(tris))


def build_polygon_mesh(polygon, target_h: float) -> Mesh:
    """Triangulate a simple counterclockwise polygon down to ``h <= target_h``.

    Axis-parallel polygons whose vertices sit on a common lattice are split
    into lattice squares (two triangles each); other polygons are ear-clipped.
    The coarse mesh is then refined uniformly.
    """
    poly = np.asarray(polygon, dtype=float)
    _check_polygon(poly)
    if not target_h > 0:
        raise ValueError("target_h must be positive")
    g = _lattice_spacing(poly)
    m = _grid_mesh(poly, float(g)) if g is not None else _ear_clip(poly)
    while m.h > target_h * (1 + 1e-12):
        m = refine_uniform(m)
    return m


def refine_uniform(m: Mesh) -> Mesh:
    """Red refinement: split every triangle into four similar children."""
    edges = m.edges
    n = m.n_nodes
    mid = 0.5 * (m.nodes[edges[:, 0]] + m.nodes[edges[:, 1]])
    lookup = {(int(a), int(b)): n + k for k, (a, b) in enumerate(edges)}

    def e(a, b):
        return lookup[(a, b) if a < b else (b, a)]

    tris = []
    for a, b, c in m.triangles.tolist():
        ab, bc, ca = e(a, b), e(b, c), e(c, a)
        tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    return Mesh.from_triangles(np.vstack([m.nodes, mid]), np.array(tris))


def scale_to_unit(m: Mesh) -> tuple[Mesh, ScaleRecord]:
    """Shift and shrink ``m`` into the disc of diameter 1/2 about the origin."""
    radius0 = np.linalg.norm(m.nodes, axis=1).max()
    if radius0 <= ADMISSIBLE_RADIUS:
        return m, ScaleRecord(1.0, (0.0, 0.0))
    center = 0.5 * (m.nodes.min(axis=0) + m.nodes.max(axis=0))
    radius = np.linalg.norm(m.nodes - center, axis=1).max()
    if radius == 0:
        raise ValueError("degenerate mesh with zero diameter")
    rec = ScaleRecord(min(1.0, ADMISSIBLE_RADIUS / radius), (float(center[0]), float(center[1])))
    return Mesh(rec.forward(m.nodes), m.triangles, m.boundary_edges), rec


def validate_regularity(m: Mesh) -> list[Violation]:
    """Report every violated mesh invariant; an empty list means valid."""
    out: list[Violation] = []
    nodes, tris = m.nodes, m.triangles
    if tris.size and (tris.min() < 0 or tris.max() >= len(nodes)):
        return [Violation("index", "triangle refers to a missing node")]
    areas = _signed_areas(nodes, tris) if tris.size else np.zeros(0)
    for k in np.flatnonzero(areas <= 0):
        out.append(Violation("negative-area", f"triangle {k} has signed area {areas[k]:.3e}"))

    directed = _directed_edges(tris)
    count: dict = {}
    oriented: dict = {}
    for a, b in directed.tolist():
        key = (min(a, b), max(a, b))
        count[key] = count.get(key, 0) + 1
        oriented[key] = (a, b)
    for key, c in count.items():
        if c > 2:
            out.append(Violation("non-manifold", f"edge {key} shared by {c} triangles"))

    listed = set()
    for a, b in m.boundary_edges.tolist():
        key = (min(a, b), max(a, b))
        listed.add(key)
        c = count.get(key, 0)
        if c == 0:
            out.append(Violation("non-manifold", f"dangling boundary edge {key} belongs to no triangle"))
        elif c == 2:
            out.append(Violation("boundary-mismatch", f"interior edge {key} listed as boundary"))
        elif c == 1 and oriented[key] != (a, b):
            out.append(Violation("orientation", f"boundary edge {(a, b)} is clockwise"))
    for key, c in count.items():
        if c == 1 and key not in listed:
            out.append(Violation("boundary-mismatch", f"edge {key} lies on the boundary but is not listed"))

    outdeg: dict = {}
    indeg: dict = {}
    for a, b in m.boundary_edges.tolist():
        outdeg[a] = outdeg.get(a, 0) + 1
        indeg[b] = indeg.get(b, 0) + 1
    for v in set(outdeg) | set(indeg):
        if outdeg.get(v, 0) != 1 or indeg.get(v, 0) != 1:
            out.append(Violation("open-loop", f"boundary node {v} is not on a simple closed loop"))

    if len(m.boundary_edges):
        p = nodes[m.boundary_edges]
        loop_area = 0.5 * np.sum(p[:, 0, 0] * p[:, 1, 1] - p[:, 1, 0] * p[:, 0, 1])
        total = float(np.abs(areas).sum())
        if abs(loop_area - total) > 1e-10 * max(total, 1e-300):
            out.append(Violation("orientation", f"boundary loops enclose {loop_area:.6g}, triangles cover {total:.6g}"))
    elif len(tris):
        out.append(Violation("open-loop", "mesh has no boundary"))
    return out


# ---------------------------------------------------------------------------
# presets and IO
# ---------------------------------------------------------------------------

def unit_square(h: float = 1.0) -> Mesh:
    return build_polygon_mesh(SQUARE, h)


def lshape(h: float = 0.5) -> Mesh:
    """L-shaped domain ``(0,1)^2 minus [1/2,1)^2``."""
    return build_polygon_mesh(LSHAPE, h)


def write_mesh(path, mesh) -> None:
    """Write a 2D mesh (``mesh2d``) or closed surface (``mesh3d-surface``)."""
    from .surface import SurfaceMesh3

    header = "mesh3d-surface" if isinstance(mesh, SurfaceMesh3) else "mesh2d"
    lines = [f"{header} {len(mesh.nodes)} {len(mesh.triangles)}"]
    lines += [" ".join(repr(float(c)) for c in p) for p in mesh.nodes]
    lines += [" ".join(str(int(i)) for i in t) for t in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path):
    """Read a file written by :func:`write_mesh`."""
    from .surface import SurfaceMesh3

    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        kind, nn, nt = rows[0][0], int(rows[0][1]), int(rows[0][2])
    except (IndexError, ValueError):
        raise ValueError(f"{path}: expected a header 'kind n_nodes n_triangles'") from None
    if len(rows) != 1 + nn + nt:
        raise ValueError(f"{path}: expected {nn} nodes and {nt} triangles")
    nodes = np.array(rows[1:1 + nn], dtype=float)
    tris = np.array(rows[1 + nn:], dtype=np.intp).reshape(-1, 3)
    if kind == "mesh2d":
        return Mesh.from_triangles(nodes, tris)
    if kind == "mesh3d-surface":
        return SurfaceMesh3(nodes, tris)
    raise ValueError(f"{path}: unknown mesh header {kind!r}")
