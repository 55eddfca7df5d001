"""Closed triangulated surfaces in 3D.

These carry no boundary element assembly; they feed the rigid-body and
centroid checkers in :mod:`lamecouple.analysis`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from importlib import resources

import numpy as np

__all__ = [
    "SurfaceMesh3",
    "closed_surface_violations",
    "tetrahedron",
    "cube",
    "icosahedron",
    "refine_surface",
    "shipped_surfaces",
]


@dataclass(frozen=True, eq=False)
class SurfaceMesh3:
    """Triangulated surface with ``nodes`` of shape (n, 3)."""

    nodes: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1, 3)
        tris = np.array(self.triangles, dtype=np.intp).reshape(-1, 3)
        nodes.setflags(write=False)
        tris.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", tris)

    @cached_property
    def _cross(self):
        p = self.nodes[self.triangles]
        return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._cross, axis=1)

    @property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @property
    def scale(self) -> float:
        """Diameter of the bounding box, used to make tolerances unit-free."""
        return float(np.linalg.norm(self.nodes.max(axis=0) - self.nodes.min(axis=0)))

    def __repr__(self):
        return f"SurfaceMesh3(n_nodes={len(self.nodes)}, n_triangles={len(self.triangles)})"


def closed_surface_violations(sm: SurfaceMesh3, rtol: float = 1e-12) -> list[str]:
    """Describe every breach of the closed-surface invariant."""
    out = []
    count: dict = {}
    for t in sm.triangles.tolist():
        if len(set(t)) < 3:
            out.append(f"triangle {t} repeats a node")
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            key = (min(a, b), max(a, b))
            count[key] = count.get(key, 0) + 1
    for key, c in count.items():
        if c != 2:
            out.append(f"edge {key} shared by {c} triangles")
    tiny = sm.areas <= rtol * max(sm.scale, 1e-300) ** 2
    for k in np.flatnonzero(tiny):
        out.append(f"triangle {k} is degenerate")
    return out


def tetrahedron() -> SurfaceMesh3:
    nodes = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    tris = [(0, 2, 1), (0, 1, 3), (0, 3, 2), (1, 2, 3)]
    return SurfaceMesh3(nodes, tris)


def cube() -> SurfaceMesh3:
    """Unit cube surface, two triangles per face."""
    nodes = [(x, y, z) for z in (0, 1) for y in (0, 1) for x in (0, 1)]
    quads = [(0, 2, 3, 1), (4, 5, 7, 6), (0, 1, 5, 4), (2, 6, 7, 3), (0, 4, 6, 2), (1, 3, 7, 5)]
    tris = [t for a, b, c, d in quads for t in ((a, b, c), (a, c, d))]
    return SurfaceMesh3(nodes, tris)


def icosahedron() -> SurfaceMesh3:
    p = (1 + 5**0.5) / 2
    nodes = np.array([
        (-1, p, 0), (1, p, 0), (-1, -p, 0), (1, -p, 0),
        (0, -1, p), (0, 1, p), (0, -1, -p), (0, 1, -p),
        (p, 0, -1), (p, 0, 1), (-p, 0, -1), (-p, 0, 1),
    ], dtype=float)
    tris = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return SurfaceMesh3(nodes / np.linalg.norm(nodes[0]), tris)


def refine_surface(sm: SurfaceMesh3, project_to_sphere: bool = False) -> SurfaceMesh3:
    """Split each triangle into four; optionally push new nodes onto the unit sphere."""
    lookup: dict = {}
    nodes = list(map(tuple, sm.nodes))

    def mid(a, b):
        key = (min(a, b), max(a, b))
        if key not in lookup:
            m = 0.5 * (sm.nodes[a] + sm.nodes[b])
            if project_to_sphere:
                m = m / np.linalg.norm(m)
            lookup[key] = len(nodes)
            nodes.append(tuple(m))
        return lookup[key]

    tris = []
    for a, b, c in sm.triangles.tolist():
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    return SurfaceMesh3(np.array(nodes), tris)


def shipped_surfaces() -> dict:
    """Surface meshes distributed in the package data directory."""
    from .mesh import read_mesh

    out = {}
    for name in ("tetra", "cube"):
        with resources.as_file(resources.files("lamecouple.data") / f"{name}.mesh") as path:
            out[name] = read_mesh(path)
    return out
