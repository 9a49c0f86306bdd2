"""Triangle meshes from heightfields, and STL reading/writing.

The intact surface is the plane z = 0 and material lies below it, so a
column of depth ``p`` becomes a vertex at ``z = -p`` and outward normals
of the top surface point up.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError
from .pitgen import HeightField

DEGENERATE_AREA = 1e-6  # um^2

STL_RECORD = np.dtype([
    ("normal", "<f4", (3,)),
    ("v", "<f4", (3, 3)),
    ("attr", "<u2"),
])
assert STL_RECORD.itemsize == 50


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray  # (V, 3) float64, um
    triangles: np.ndarray  # (T, 3) int64

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise DimensionError("triangle index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        """(T, 3, 3) array of triangle corner coordinates."""
        return self.vertices[self.triangles]

    def normals(self) -> np.ndarray:
        c = self.corners()
        n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        length = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, length, out=np.zeros_like(n), where=length > 0)

    def areas(self) -> np.ndarray:
        c = self.corners()
        return 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)

    def degenerate(self) -> np.ndarray:
        """Indices of triangles whose area is at or below ``DEGENERATE_AREA``."""
        return np.flatnonzero(self.areas() <= DEGENERATE_AREA)

    def signed_volume(self) -> float:
        c = self.corners()
        return float(np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])).sum() / 6.0)


def _grid_triangles(nx: int, ny: int, offset: int = 0, flip: bool = False) -> np.ndarray:
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    v00 = (i * ny + j).ravel() + offset
    v10 = v00 + ny
    v11 = v10 + 1
    v01 = v00 + 1
    # every cell is split along its (i, j) -> (i+1, j+1) diagonal
    a = np.stack([v00, v10, v11], axis=1)
    b = np.stack([v00, v11, v01], axis=1)
    tris = np.stack([a, b], axis=1).reshape(-1, 3)
    return tris[:, ::-1] if flip else tris


def _boundary_loop(nx: int, ny: int) -> list[int]:
    """Grid indices around the patch, counter-clockwise seen from +z."""
    loop = [i * ny for i in range(nx)]
    loop += [(nx - 1) * ny + j for j in range(1, ny)]
    loop += [i * ny + ny - 1 for i in range(nx - 2, -1, -1)]
    loop += [j for j in range(ny - 2, 0, -1)]
    return loop


def field_to_mesh(field: HeightField, thickness: float | None = None) -> TriangleMesh:
    """Surface-only mesh, or a closed slab of the given thickness when ``thickness`` is set."""
    nx, ny = field.nx, field.ny
    X, Y = np.meshgrid(field.x, field.y, indexing="ij")
    top = np.column_stack([X.ravel(), Y.ravel(), -field.depth.ravel()])
    tris = _grid_triangles(nx, ny)
    if thickness is None:
        return TriangleMesh(top, tris)
    max_depth = float(field.depth.max())
    if not thickness > max_depth:
        raise DimensionError(f"slab thickness {thickness} must exceed the maximum pit depth {max_depth}")
    n = nx * ny
    bottom = np.column_stack([X.ravel(), Y.ravel(), np.full(n, -float(thickness))])
    loop = _boundary_loop(nx, ny)
    a = np.array(loop)
    b = np.roll(a, -1)
    sides = np.concatenate([
        np.stack([a, b + n, b], axis=1),
        np.stack([a, a + n, b + n], axis=1),
    ])
    all_tris = np.concatenate([tris, _grid_triangles(nx, ny, offset=n, flip=True), sides])
    return TriangleMesh(np.vstack([top, bottom]), all_tris)


def edge_incidence(mesh: TriangleMesh) -> dict:
    """Number of triangles sharing each undirected edge."""
    counts: dict = {}
    for t in mesh.triangles:
        for k in range(3):
            e = tuple(sorted((int(t[k]), int(t[(k + 1) % 3]))))
            counts[e] = counts.get(e, 0) + 1
    return counts


def is_watertight(mesh: TriangleMesh) -> bool:
    counts = edge_incidence(mesh)
    return bool(counts) and all(c == 2 for c in counts.values())


def write_stl(mesh: TriangleMesh, binary: bool = True, name: str = "pit2crack") -> bytes:
    if binary:
        rec = np.zeros(mesh.n_triangles, dtype=STL_RECORD)
        rec["normal"] = mesh.normals()
        rec["v"] = mesh.corners()
        header = name.encode("ascii", "replace")[:80].ljust(80, b" ")
        return header + struct.pack("<I", mesh.n_triangles) + rec.tobytes()
    lines = [f"solid {name}"]
    for nrm, c in zip(mesh.normals().astype(np.float32), mesh.corners().astype(np.float32)):
        lines.append(f"  facet normal {nrm[0]:.9e} {nrm[1]:.9e} {nrm[2]:.9e}")
        lines.append("    outer loop")
        for v in c:
            lines.append(f"      vertex {v[0]:.9e} {v[1]:.9e} {v[2]:.9e}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {name}")
    return ("\n".join(lines) + "\n").encode("ascii")


_VERTEX = re.compile(rb"vertex\s+(\S+)\s+(\S+)\s+(\S+)")


def read_stl(data: bytes) -> np.ndarray:
    """Triangle corners ``(T, 3, 3)`` from binary or ASCII STL bytes."""
    if len(data) >= 84:
        (count,) = struct.unpack_from("<I", data, 80)
        if len(data) == 84 + 50 * count:
            rec = np.frombuffer(data, dtype=STL_RECORD, count=count, offset=84)
            return rec["v"].astype(np.float64)
    if data.lstrip().startswith(b"solid"):
        coords = np.array([[float(x) for x in m.groups()] for m in _VERTEX.finditer(data)],
                          dtype=np.float32).astype(np.float64)
        if len(coords) % 3:
            raise DimensionError("ASCII STL vertex count is not a multiple of 3")
        return coords.reshape(-1, 3, 3)
    raise DimensionError("not a binary or ASCII STL stream")
