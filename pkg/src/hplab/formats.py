"""Versioned text formats for meshes and nodal fields."""

from __future__ import annotations

import hashlib
import io
import os

import numpy as np

from .mesh import GAMMA, GAMMA_R, Mesh1D, Mesh2D, TAG_NAMES

__all__ = ["mesh_to_text", "mesh_from_text", "write_mesh", "read_mesh", "mesh_checksum",
           "field_to_text", "field_from_text", "write_field", "read_field", "FormatError"]

MESH_MAGIC = "HPL-MESH v1"
FIELD_MAGIC = "HPL-FIELD v1"
_TAG_IDS = {v: k for k, v in TAG_NAMES.items()}


class FormatError(ValueError):
    """Malformed or mismatched file."""


def _g(x: float) -> str:
    return "%.17g" % x


def mesh_to_text(mesh) -> str:
    out = io.StringIO()
    if isinstance(mesh, Mesh1D):
        out.write(f"{MESH_MAGIC} d=1\n")
        out.write(f"nodes {mesh.node_count}\n")
        for x in mesh.nodes:
            out.write(_g(x) + "\n")
        return out.getvalue()
    out.write(f"{MESH_MAGIC} d=2\n")
    out.write(f"geometry {_g(mesh.a)} {_g(mesh.R)} {_g(mesh.boundary_h)}\n")
    out.write(f"vertices {mesh.n_vertices}\n")
    for x, y in mesh.vertices:
        out.write(f"{_g(x)} {_g(y)}\n")
    out.write(f"triangles {mesh.n_triangles}\n")
    for a, b, c in mesh.triangles:
        out.write(f"{a} {b} {c}\n")
    out.write(f"edges {len(mesh.boundary_edges)}\n")
    for (a, b), t in zip(mesh.boundary_edges, mesh.edge_tags):
        out.write(f"{a} {b} {TAG_NAMES[int(t)]}\n")
    return out.getvalue()


def _expect(lines, i, key):
    parts = lines[i].split()
    if not parts or parts[0] != key:
        raise FormatError(f"line {i + 1}: expected '{key}'")
    return parts


def mesh_from_text(text: str):
    lines = text.splitlines()
    if not lines or not lines[0].startswith(MESH_MAGIC):
        raise FormatError("missing HPL-MESH v1 header")
    dim = lines[0][len(MESH_MAGIC):].strip()
    try:
        if dim == "d=1":
            n = int(_expect(lines, 1, "nodes")[1])
            return Mesh1D(np.array([float(s) for s in lines[2: 2 + n]]))
        if dim != "d=2":
            raise FormatError(f"unsupported dimension {dim!r}")
        _, a, R, bh = _expect(lines, 1, "geometry")
        nv = int(_expect(lines, 2, "vertices")[1])
        i = 3
        verts = np.array([[float(v) for v in lines[j].split()] for j in range(i, i + nv)])
        i += nv
        nt = int(_expect(lines, i, "triangles")[1])
        i += 1
        tris = np.array([[int(v) for v in lines[j].split()] for j in range(i, i + nt)], dtype=np.int64)
        i += nt
        ne = int(_expect(lines, i, "edges")[1])
        i += 1
        edges, tags = [], []
        for j in range(i, i + ne):
            p, q, tag = lines[j].split()
            edges.append((int(p), int(q)))
            tags.append(_TAG_IDS[tag])
    except (IndexError, ValueError, KeyError) as exc:
        raise FormatError(f"malformed mesh file: {exc}") from exc
    return Mesh2D(verts.reshape(nv, 2), tris.reshape(nt, 3),
                  np.asarray(edges, dtype=np.int64).reshape(ne, 2),
                  np.asarray(tags, dtype=np.int64), float(a), float(R), float(bh))


def mesh_checksum(mesh) -> str:
    return hashlib.sha256(mesh_to_text(mesh).encode()).hexdigest()


def write_mesh(mesh, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(mesh_to_text(mesh))


def read_mesh(path):
    with open(path, encoding="ascii") as fh:
        return mesh_from_text(fh.read())


def field_to_text(field) -> str:
    out = io.StringIO()
    out.write(f"{FIELD_MAGIC}\n")
    out.write(f"mesh_sha256 {mesh_checksum(field.mesh)}\n")
    out.write(f"degree {field.degree}\n")
    vals = field.nodal
    out.write(f"values {len(vals)}\n")
    for v in vals:
        out.write(f"{_g(v.real)} {_g(v.imag)}\n")
    return out.getvalue()


def field_from_text(text: str, mesh):
    from .fem import DiscreteField

    lines = text.splitlines()
    if not lines or lines[0].strip() != FIELD_MAGIC:
        raise FormatError("missing HPL-FIELD v1 header")
    try:
        checksum = _expect(lines, 1, "mesh_sha256")[1]
        degree = int(_expect(lines, 2, "degree")[1])
        n = int(_expect(lines, 3, "values")[1])
        vals = np.array([complex(*map(float, lines[j].split())) for j in range(4, 4 + n)])
    except (IndexError, ValueError) as exc:
        raise FormatError(f"malformed field file: {exc}") from exc
    if checksum != mesh_checksum(mesh):
        raise FormatError("field was written for a different mesh")
    return DiscreteField.from_nodal(mesh, degree, vals)


def write_field(field, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(field_to_text(field))


def read_field(path, mesh):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, encoding="ascii") as fh:
        return field_from_text(fh.read(), mesh)
