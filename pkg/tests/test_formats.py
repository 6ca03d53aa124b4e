import numpy as np
import pytest

from hplab.fem import DiscreteField
from hplab.formats import (FormatError, field_from_text, field_to_text, mesh_checksum,
                           mesh_from_text, mesh_to_text, read_field, read_mesh, write_field,
                           write_mesh)
from hplab.mesh import mesh_annulus, mesh_interval


def test_mesh_round_trip_2d(tmp_path):
    m = mesh_annulus(1.0, 2.0, 0.3)
    path = tmp_path / "m.txt"
    write_mesh(m, path)
    back = read_mesh(path)
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)
    assert np.array_equal(back.boundary_edges, m.boundary_edges)
    assert np.array_equal(back.edge_tags, m.edge_tags)
    assert (back.a, back.R, back.boundary_h) == (m.a, m.R, m.boundary_h)
    assert mesh_to_text(back) == mesh_to_text(m)


def test_mesh_round_trip_1d():
    m = mesh_interval(7)
    back = mesh_from_text(mesh_to_text(m))
    assert np.array_equal(back.nodes, m.nodes)


def test_field_round_trip(tmp_path):
    m = mesh_annulus(1.0, 2.0, 0.3)
    rng = np.random.default_rng(1)
    vals = rng.standard_normal(m.n_vertices) + 1j * rng.standard_normal(m.n_vertices)
    f = DiscreteField.from_nodal(m, 1, vals)
    path = tmp_path / "f.txt"
    write_field(f, path)
    back = read_field(path, m)
    assert np.array_equal(back.nodal, vals) and back.degree == 1


def test_field_on_other_mesh_rejected():
    m = mesh_annulus(1.0, 2.0, 0.3)
    other = mesh_annulus(1.0, 2.0, 0.25)
    f = DiscreteField.from_nodal(m, 1, np.zeros(m.n_vertices, complex))
    assert mesh_checksum(m) != mesh_checksum(other)
    with pytest.raises(FormatError, match="different mesh"):
        field_from_text(field_to_text(f), other)


def test_missing_field_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_field(tmp_path / "nope.txt", mesh_interval(2))


@pytest.mark.parametrize("text", ["", "garbage\n", "HPL-MESH v1 d=3\n",
                                  "HPL-MESH v1 d=2\ngeometry 1 2 0.1\nvertices 2\n0 0\n",
                                  "HPL-MESH v1 d=1\nnodes 2\n0\nx\n"])
def test_malformed_mesh(text):
    with pytest.raises(FormatError):
        mesh_from_text(text)


def test_malformed_field():
    m = mesh_interval(2)
    with pytest.raises(FormatError):
        field_from_text("HPL-FIELD v1\nmesh_sha256 x\ndegree one\n", m)
    with pytest.raises(FormatError):
        field_from_text("nonsense", m)
