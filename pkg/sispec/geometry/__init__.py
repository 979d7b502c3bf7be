from .mesh import (
    TriMesh as TriMesh,
    ValidationReport as ValidationReport,
    graph_distances as graph_distances,
    triangle_areas as triangle_areas,
    validate as validate,
)
from .mesh_io import (
    MeshFormat as MeshFormat,
    load_mesh as load_mesh,
    read_ground_truth as read_ground_truth,
    write_ground_truth as write_ground_truth,
    write_off as write_off,
)
from .deform import local_scale_deform as local_scale_deform
from .curvature import (
    CurvatureField as CurvatureField,
    angle_defect as angle_defect,
    clip_curvature as clip_curvature,
    curvature_field as curvature_field,
    gaussian_curvature as gaussian_curvature,
    laplacian_smooth as laplacian_smooth,
)
