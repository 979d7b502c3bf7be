import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
import pytest

from sispec.exceptions import (
    DegenerateFace,
    InvalidMesh,
    ParseError,
    SeedOutOfRange,
    UnsupportedFormat,
)
from sispec.geometry.deform import falloff_weights, local_scale_deform
from sispec.geometry.mesh import (
    TriMesh,
    graph_distances,
    triangle_areas,
    validate,
)
from sispec.geometry.mesh_io import (
    infer_format,
    load_mesh,
    read_ground_truth,
    write_ground_truth,
    write_off,
)
from sispec.geometry.primitives import (
    bumpy_sphere,
    grid,
    icosphere,
    permute_vertices,
)
from sispec.tests import mock_meshes


def test_right_triangle_geometry():
    mesh = mock_meshes.right_triangle()
    assert_allclose(triangle_areas(mesh), [0.5])
    assert_allclose(mesh.corner_angles[0], [np.pi / 2, np.pi / 4, np.pi / 4])
    assert_allclose(mesh.corner_cotangents[0], [0.0, 1.0, 1.0], atol=1e-15)
    assert_allclose(mesh.face_normals[0], [0.0, 0.0, 1.0])
    assert mesh.boundary_vertex_mask.all()


def test_edge_opposite_angles_of_square():
    mesh = mock_meshes.unit_square()
    angles = mesh.edge_opposite_angles()
    diagonal = np.flatnonzero((mesh.edges == [0, 2]).all(axis=1))[0]
    assert_allclose(angles[diagonal], [np.pi / 2, np.pi / 2])
    boundary = mesh.edge_face_counts == 1
    assert np.isnan(angles[boundary, 1]).all()
    assert_allclose(angles[boundary, 0], np.pi / 4)


def test_tetrahedron_is_closed_and_valid():
    mesh = mock_meshes.tetrahedron()
    report = validate(mesh)
    assert report.accepted
    assert report.n_boundary_edges == 0
    assert mesh.euler_characteristic == 2
    assert_array_equal(mesh.valence, [3, 3, 3, 3])
    # Outward normals point away from the centroid
    centres = mesh.vertices[mesh.faces].mean(axis=1)
    assert (np.einsum("fx,fx->f", centres, mesh.face_normals) > 0).all()


@pytest.mark.parametrize("subdivisions", [0, 1, 2, 3])
def test_icosphere_counts(subdivisions):
    mesh = icosphere(subdivisions)
    assert mesh.n_vertices == 10 * 4**subdivisions + 2
    assert mesh.n_faces == 20 * 4**subdivisions
    assert mesh.euler_characteristic == 2
    assert validate(mesh).accepted
    assert_allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0)


def test_grid_boundary():
    mesh = grid(4, 5)
    assert mesh.n_vertices == 20
    assert mesh.n_faces == 2 * 3 * 4
    assert mesh.euler_characteristic == 1
    assert mesh.boundary_vertex_mask.sum() == 2 * (4 + 5) - 4
    assert validate(mesh).accepted


@pytest.mark.parametrize(
    "factory, field",
    [
        (mock_meshes.non_manifold_fan, "non_manifold_edges"),
        (mock_meshes.flipped_square, "inconsistent_orientation"),
        (mock_meshes.with_isolated_vertex, "isolated_vertices"),
        (mock_meshes.sliver, "degenerate_faces"),
    ],
)
def test_validate_reports_violations(factory, field):
    report = validate(factory())
    assert not report.accepted
    assert getattr(report, field)
    assert report.n_violations >= 1
    assert "vertices" in report.summary()


def test_non_manifold_edge_is_named():
    report = validate(mock_meshes.non_manifold_fan())
    assert report.non_manifold_edges == [(0, 1)]


@pytest.mark.parametrize(
    "vertices, faces",
    [
        ([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]]),
        ([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 1]]),
        ([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]]),
        ([[0, 0, 0], [1, 0, np.nan], [0, 1, 0]], [[0, 1, 2]]),
    ],
)
def test_invalid_mesh_construction(vertices, faces):
    with pytest.raises(InvalidMesh):
        TriMesh(vertices, faces)


def test_degenerate_face_is_reported_by_index():
    with pytest.raises(DegenerateFace) as info:
        triangle_areas(mock_meshes.sliver())
    assert info.value.faces == [2]


def test_mesh_arrays_are_frozen():
    mesh = mock_meshes.unit_square()
    with pytest.raises(ValueError):
        mesh.vertices[0, 0] = 3.0


def test_graph_distances_on_square():
    mesh = mock_meshes.unit_square()
    assert_allclose(graph_distances(mesh, 0), [0, 1, np.sqrt(2), 1])


def test_off_round_trip_is_exact(tmp_path):
    mesh = bumpy_sphere(1, seed=3)
    path = write_off(mesh, tmp_path / "bumpy.off")
    loaded = load_mesh(path)
    assert_array_equal(loaded.vertices, mesh.vertices)
    assert_array_equal(loaded.faces, mesh.faces)
    assert loaded.name == "bumpy"


@pytest.mark.parametrize(
    "name, text",
    [
        ("quad.off", mock_meshes.OFF_QUAD),
        ("square.obj", mock_meshes.OBJ_SQUARE),
        ("square.ply", mock_meshes.PLY_SQUARE),
    ],
)
def test_readers_agree_on_unit_square(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    mesh = load_mesh(path)
    assert_array_equal(mesh.vertices, mock_meshes.unit_square().vertices)
    assert_array_equal(mesh.faces, [[0, 1, 2], [0, 2, 3]])


def test_parse_error_carries_line_number(tmp_path):
    path = tmp_path / "broken.off"
    path.write_text("OFF\n3 1 0\n0 0 0\n1 0 zero\n0 1 0\n3 0 1 2\n")
    with pytest.raises(ParseError) as info:
        load_mesh(path)
    assert info.value.line == 4
    assert str(info.value).startswith(f"{path}:4:")


def test_face_index_out_of_range(tmp_path):
    path = tmp_path / "bad.off"
    path.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n")
    with pytest.raises(ParseError) as info:
        load_mesh(path)
    assert info.value.line == 6


def test_binary_ply_is_unsupported(tmp_path):
    path = tmp_path / "binary.ply"
    path.write_text(
        "ply\nformat binary_little_endian 1.0\nelement vertex 0\n"
        "end_header\n"
    )
    with pytest.raises(UnsupportedFormat):
        load_mesh(path)


def test_unknown_extension():
    with pytest.raises(UnsupportedFormat):
        infer_format("mesh.stl")


def test_missing_file_raises_os_error(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_mesh(tmp_path / "absent.off")


def test_ground_truth_files(tmp_path):
    mapping = np.array([2, 0, 1, 1])
    path = write_ground_truth(mapping, tmp_path / "gt.txt")
    assert path.read_text() == "2\n0\n1\n1\n"
    assert_array_equal(read_ground_truth(path), mapping)

    path.write_text("0\nseven\n")
    with pytest.raises(ParseError) as info:
        read_ground_truth(path)
    assert info.value.line == 2


def test_permute_vertices_relabels():
    mesh = icosphere(1)
    permutation = np.random.default_rng(0).permutation(mesh.n_vertices)
    permuted = permute_vertices(mesh, permutation)
    assert_array_equal(permuted.vertices, mesh.vertices[permutation])
    # Faces describe the same triangles
    original = {tuple(sorted(f)) for f in mesh.faces.tolist()}
    relabelled = {
        tuple(sorted(permutation[f])) for f in permuted.faces.tolist()
    }
    assert original == relabelled
    assert validate(permuted).accepted


def test_bumpy_sphere_is_deterministic():
    assert_array_equal(
        bumpy_sphere(2, seed=4).vertices, bumpy_sphere(2, seed=4).vertices
    )
    assert not np.array_equal(
        bumpy_sphere(2, seed=4).vertices, bumpy_sphere(2, seed=5).vertices
    )


def test_falloff_weights_profile():
    distances = np.array([0.0, 0.25, 0.5, 1.0, 2.0])
    assert_allclose(
        falloff_weights(distances, 1.0), [1.0, 0.5 + 0.5**1.5, 0.5, 0, 0]
    )
    plateau = falloff_weights(distances, 1.0, falloff=0.5)
    assert_allclose(plateau[:3], 1.0)
    assert_allclose(plateau[3:], 0.0)


def test_deform_with_unit_factor_is_identity():
    mesh = icosphere(2)
    deformed = local_scale_deform(mesh, 0, 0.5, 1.0)
    assert_array_equal(deformed.vertices, mesh.vertices)
    assert_array_equal(deformed.faces, mesh.faces)


def test_deform_sphere_pole_stays_valid():
    mesh = icosphere(3)
    pole = int(np.argmax(mesh.vertices[:, 2]))
    radius = 0.25 * mesh.bounding_box_diagonal
    deformed = local_scale_deform(mesh, pole, radius, 1.5)
    assert validate(deformed).accepted

    distances = graph_distances(mesh, pole)
    outside = distances >= radius
    assert_array_equal(deformed.vertices[outside], mesh.vertices[outside])
    assert not np.allclose(
        deformed.vertices[~outside], mesh.vertices[~outside]
    )


def test_deform_plateau_scales_rigidly():
    mesh = icosphere(3)
    radius = 0.6
    deformed = local_scale_deform(mesh, 0, radius, 2.0, falloff=0.5)
    plateau = np.flatnonzero(graph_distances(mesh, 0) <= 0.5 * radius)
    assert len(plateau) > 3
    before = mesh.vertices[plateau] - mesh.vertices[plateau[0]]
    after = deformed.vertices[plateau] - deformed.vertices[plateau[0]]
    assert_allclose(after, 2.0 * before, atol=1e-12)


@pytest.mark.parametrize("seed", [-1, 42])
def test_deform_rejects_bad_seed(seed):
    mesh = icosphere(0)
    with pytest.raises(SeedOutOfRange):
        local_scale_deform(mesh, seed, 0.5, 1.5)
