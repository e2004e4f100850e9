"""Closed triangulated surfaces and the RWG edge basis built over them.

Mesh files are plain text::

    # comment
    v x y z        (meters)
    f i j k        (1-based vertex indices, counterclockwise seen from outside)
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

#: Triangles with an area below this (m^2) are rejected as collapsed.
MIN_TRIANGLE_AREA = 1e-12


class MeshError(ValueError):
    """Raised for unparsable, degenerate, open or non-manifold meshes."""

    def __init__(self, message: str, edge: tuple[int, int] | None = None):
        if edge is not None:
            message = f"{message} (edge between vertices {edge[0]} and {edge[1]}, 0-based)"
        super().__init__(message)
        self.edge = edge


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _edge_table(triangles: np.ndarray):
    """Directed half-edges grouped by undirected edge.

    Returns the sorted undirected edge keys, the inverse index of every
    half-edge into them, and the per-edge use count.
    """
    nt = len(triangles)
    # half-edge k of triangle t goes triangles[t, (k+1)%3] -> triangles[t, (k+2)%3],
    # i.e. it is the edge opposite local vertex k
    tails = triangles[:, [1, 2, 0]].ravel()
    heads = triangles[:, [2, 0, 1]].ravel()
    lo = np.minimum(tails, heads)
    hi = np.maximum(tails, heads)
    keys, inverse, counts = np.unique(np.stack([lo, hi], axis=1), axis=0,
                                      return_inverse=True, return_counts=True)
    inverse = inverse.reshape(nt, 3)
    return keys, inverse, counts, tails.reshape(nt, 3), heads.reshape(nt, 3)


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """A closed, consistently oriented triangle surface.

    Construction validates every invariant; instances are immutable.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    name: str = "mesh"

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        t = np.asarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must have shape (n, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
            raise MeshError(f"triangles must have shape (m, 3), got {t.shape}")
        if t.min() < 0 or t.max() >= len(v):
            raise MeshError("triangle vertex index out of range")
        if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
            bad = int(np.flatnonzero((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2])
                                     | (t[:, 0] == t[:, 2]))[0])
            raise MeshError(f"triangle {bad} repeats a vertex")

        p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        cross = np.cross(p1 - p0, p2 - p0)
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        if np.any(areas <= MIN_TRIANGLE_AREA):
            bad = int(np.argmin(areas))
            raise MeshError(f"triangle {bad} is degenerate (area {areas[bad]:.3e} m^2)")

        keys, inverse, counts, tails, heads = _edge_table(t)
        if np.any(counts != 2):
            k = int(np.flatnonzero(counts != 2)[0])
            kind = "open (boundary)" if counts[k] == 1 else "non-manifold"
            raise MeshError(f"{kind} edge shared by {counts[k]} triangles",
                            edge=(int(keys[k, 0]), int(keys[k, 1])))
        # each undirected edge must be traversed once in each direction
        forward = (tails < heads).ravel()
        n_forward = np.bincount(inverse.ravel(), weights=forward, minlength=len(keys))
        if np.any(n_forward != 1):
            k = int(np.flatnonzero(n_forward != 1)[0])
            raise MeshError("inconsistent triangle orientation",
                            edge=(int(keys[k, 0]), int(keys[k, 1])))

        # signed volume < 0 means the whole surface is oriented inward
        volume = np.einsum("ij,ij->", p0, np.cross(p1, p2)) / 6.0
        if volume < 0:
            log.info("%s: triangles oriented inward, flipping to outward", self.name)
            t = t[:, [0, 2, 1]]
            cross = -cross

        object.__setattr__(self, "vertices", _readonly(v))
        object.__setattr__(self, "triangles", _readonly(t))
        object.__setattr__(self, "_areas", _readonly(areas))
        object.__setattr__(self, "_normals", _readonly(cross / (2.0 * areas[:, None])))
        object.__setattr__(self, "_n_edges", len(keys))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        """Number of undirected edges."""
        return self._n_edges

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    @property
    def areas(self) -> np.ndarray:
        return self._areas

    @property
    def normals(self) -> np.ndarray:
        """Outward unit normals, one per triangle."""
        return self._normals

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def total_area(self) -> float:
        return float(self._areas.sum())

    def mean_edge_length(self) -> float:
        keys, *_ = _edge_table(self.triangles)
        return float(np.linalg.norm(self.vertices[keys[:, 0]] - self.vertices[keys[:, 1]],
                                    axis=1).mean())


@dataclass(frozen=True, eq=False)
class RwgBasisSet:
    """RWG functions, one per interior edge of a closed mesh.

    On the plus triangle f(r) = l/(2A+) (r - r_free+); on the minus triangle
    f(r) = l/(2A-) (r_free- - r).  ``tri_edge[t, i]`` is the basis index of the
    edge opposite local vertex ``i`` of triangle ``t`` and ``tri_sign[t, i]``
    is +1 when ``t`` is that function's plus triangle, -1 otherwise.
    """

    mesh: TriangleMesh
    edge_vertices: np.ndarray
    lengths: np.ndarray
    plus_triangle: np.ndarray
    minus_triangle: np.ndarray
    plus_free_vertex: np.ndarray
    minus_free_vertex: np.ndarray
    plus_area: np.ndarray
    minus_area: np.ndarray
    tri_edge: np.ndarray = field(repr=False)
    tri_sign: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.lengths)

    @property
    def n_edges(self) -> int:
        return len(self.lengths)


def build_rwg(mesh: TriangleMesh) -> RwgBasisSet:
    """Build the RWG basis over every interior edge of ``mesh``.

    Edges are ordered by their sorted vertex-index pair; the triangle with the
    lower index is the plus triangle.
    """
    tris = mesh.triangles
    keys, inverse, counts, _, _ = _edge_table(tris)
    if np.any(counts != 2):
        k = int(np.flatnonzero(counts != 2)[0])
        raise MeshError("non-manifold edge", edge=(int(keys[k, 0]), int(keys[k, 1])))

    ne = len(keys)
    flat_edge = inverse.ravel()
    flat_tri = np.repeat(np.arange(len(tris)), 3)
    flat_local = np.tile(np.arange(3), len(tris))
    # sort half-edges by (edge, triangle): first of each pair has the lower triangle index
    order = np.lexsort((flat_tri, flat_edge))
    first, second = order[0::2], order[1::2]

    plus_t, minus_t = flat_tri[first], flat_tri[second]
    plus_free = tris[plus_t, flat_local[first]]
    minus_free = tris[minus_t, flat_local[second]]

    tri_sign = np.empty(len(tris) * 3, dtype=np.int8)
    tri_sign[first] = 1
    tri_sign[second] = -1

    lengths = np.linalg.norm(mesh.vertices[keys[:, 1]] - mesh.vertices[keys[:, 0]], axis=1)
    return RwgBasisSet(
        mesh=mesh,
        edge_vertices=_readonly(keys),
        lengths=_readonly(lengths),
        plus_triangle=_readonly(plus_t),
        minus_triangle=_readonly(minus_t),
        plus_free_vertex=_readonly(plus_free),
        minus_free_vertex=_readonly(minus_free),
        plus_area=_readonly(mesh.areas[plus_t]),
        minus_area=_readonly(mesh.areas[minus_t]),
        tri_edge=_readonly(inverse.reshape(-1, 3)),
        tri_sign=_readonly(tri_sign.reshape(-1, 3)),
    )


def load_mesh(path: str | os.PathLike) -> TriangleMesh:
    """Read a ``v``/``f`` text mesh and validate it."""
    verts, faces = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tag, *rest = line.split()
            try:
                if tag == "v":
                    if len(rest) != 3:
                        raise ValueError("expected 3 coordinates")
                    verts.append([float(x) for x in rest])
                elif tag == "f":
                    if len(rest) != 3:
                        raise ValueError("expected 3 vertex indices")
                    faces.append([int(x) - 1 for x in rest])
                else:
                    raise ValueError(f"unknown record {tag!r}")
            except ValueError as exc:
                raise MeshError(f"{path}:{lineno}: {exc}") from None
    if not faces:
        raise MeshError(f"{path}: no faces")
    return TriangleMesh(np.array(verts, dtype=float).reshape(-1, 3),
                        np.array(faces, dtype=np.int64),
                        name=os.path.basename(os.fspath(path)))


def save_mesh(mesh: TriangleMesh, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {mesh.name}: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles\n")
        for x, y, z in mesh.vertices:
            fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for i, j, k in mesh.triangles + 1:
            fh.write(f"f {i} {j} {k}\n")


_PHI = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTICES = np.array([
    [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
    [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
    [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
])
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
])


def generate_sphere(radius: float, subdivision_level: int) -> TriangleMesh:
    """Icosphere: the icosahedron subdivided ``subdivision_level`` times.

    Each level splits every triangle into four at the edge midpoints, so the
    mesh has ``20 * 4**level`` triangles.  Vertices lie on the sphere.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if subdivision_level < 0:
        raise ValueError("subdivision_level must be >= 0")

    verts = [v / np.linalg.norm(v) for v in _ICO_VERTICES]
    faces = _ICO_FACES.tolist()
    for _ in range(subdivision_level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new_faces

    return TriangleMesh(radius * np.array(verts), np.array(faces),
                        name=f"icosphere-r{radius:g}-L{subdivision_level}")


def generate_uv_sphere(radius: float, n_longitude: int, n_bands: int) -> TriangleMesh:
    """Latitude/longitude sphere with triangle fans at the poles.

    Gives ``2 * n_longitude * (n_bands - 1)`` triangles; ``n_longitude=71``
    and ``n_bands=22`` yields 2982 triangles, 1493 nodes and 4473 edges.
    """
    if radius <= 0 or n_longitude < 3 or n_bands < 2:
        raise ValueError("need radius > 0, n_longitude >= 3, n_bands >= 2")
    polar = np.linspace(0.0, np.pi, n_bands + 1)[1:-1]
    azim = 2 * np.pi * np.arange(n_longitude) / n_longitude
    th, ph = np.meshgrid(polar, azim, indexing="ij")
    ring = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
    verts = np.vstack([[0, 0, 1], ring.reshape(-1, 3), [0, 0, -1]]) * radius

    def idx(r, k):
        return 1 + r * n_longitude + (k % n_longitude)

    south = len(verts) - 1
    faces = []
    for k in range(n_longitude):
        faces.append([0, idx(0, k), idx(0, k + 1)])
        for r in range(n_bands - 2):
            a, b = idx(r, k), idx(r, k + 1)
            c, d = idx(r + 1, k), idx(r + 1, k + 1)
            faces += [[a, c, d], [a, d, b]]
        faces.append([south, idx(n_bands - 2, k + 1), idx(n_bands - 2, k)])
    return TriangleMesh(verts, np.array(faces),
                        name=f"uvsphere-r{radius:g}-{n_longitude}x{n_bands}")
