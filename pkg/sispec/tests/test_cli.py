import json

import numpy as np
from numpy.testing import assert_array_equal
import pytest

from sispec.__main__ import build_parser, main
from sispec.correspondence.fusion import Correspondence
from sispec.defaults import PipelineConfig
from sispec.exceptions import EXIT_IO, EXIT_VALIDATION
from sispec.geometry.mesh_io import (
    load_mesh,
    read_ground_truth,
    write_ground_truth,
    write_off,
)
from sispec.geometry.primitives import bumpy_sphere, permute_vertices
from sispec.selftest import PERMUTATION_RECOVERY


@pytest.fixture
def mesh_file(tmp_path):
    return write_off(bumpy_sphere(2), tmp_path / "shape.off")


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_config_prints_effective_settings(tmp_path, capsys):
    assert main(["config", "--k", "12", "--alphas", "non-isometric"]) == 0
    out = capsys.readouterr().out
    assert "k = 12" in out
    assert "alphas = [0.5, 0.6, 0.8]" in out

    path = tmp_path / "sispec.toml"
    path.write_text(out)
    assert PipelineConfig.from_toml(path).k == 12


def test_config_errors_exit_with_validation_code(tmp_path):
    path = tmp_path / "sispec.toml"
    path.write_text("eigenpairs = 12\n")
    assert main(["config", "--config", str(path)]) == EXIT_VALIDATION
    assert main(["config", "--alphas", "0.2,2"]) == EXIT_VALIDATION


def test_spectra_with_empty_alphas(mesh_file):
    assert main(["spectra", str(mesh_file), "--alphas", ""]) == (
        EXIT_VALIDATION
    )


def test_spectra_are_cached_between_runs(mesh_file, tmp_path, capsys):
    args = [
        "spectra",
        str(mesh_file),
        "--k",
        "8",
        "--alphas",
        "0,1",
        "--cache-dir",
        str(tmp_path / "cache"),
    ]
    assert main(args) == 0
    assert "computed 2 of 2" in capsys.readouterr().out
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "computed 0 of 2" in out
    assert out.count("alpha=") == 2
    assert len(list((tmp_path / "cache").glob("*.sisb"))) == 2


def test_missing_input_exits_with_io_code(mesh_file, tmp_path):
    missing = tmp_path / "absent.gt.txt"
    assert (
        main(
            [
                "match",
                str(mesh_file),
                str(mesh_file),
                "--ground-truth",
                str(missing),
            ]
        )
        == EXIT_IO
    )
    assert main(["spectra", str(tmp_path / "absent.off")]) == EXIT_IO


def test_deform_writes_mesh_and_identity_ground_truth(mesh_file, tmp_path):
    out = tmp_path / "out"
    code = main(
        [
            "deform",
            str(mesh_file),
            "--seed-vertex",
            "3",
            "--factor",
            "1.5",
            "--out-dir",
            str(out),
        ]
    )
    assert code == 0
    original = load_mesh(mesh_file)
    deformed = load_mesh(out / "shape-scaled.off")
    assert_array_equal(deformed.faces, original.faces)
    assert not np.array_equal(deformed.vertices, original.vertices)
    assert_array_equal(
        read_ground_truth(out / "shape-scaled.gt.txt"),
        np.arange(original.n_vertices),
    )


def test_deform_rejects_bad_seed(mesh_file, tmp_path):
    assert (
        main(
            [
                "deform",
                str(mesh_file),
                "--seed-vertex",
                "100000",
                "--out-dir",
                str(tmp_path),
            ]
        )
        == EXIT_VALIDATION
    )


def test_match_writes_every_artifact(tmp_path):
    mesh = bumpy_sphere(2)
    permutation = np.random.default_rng(1).permutation(mesh.n_vertices)
    source = write_off(mesh, tmp_path / "source.off")
    target = write_off(
        permute_vertices(mesh, permutation), tmp_path / "target.off"
    )
    ground_truth = write_ground_truth(permutation, tmp_path / "gt.txt")
    out = tmp_path / "run"
    code = main(
        [
            "match",
            str(source),
            str(target),
            "--k",
            "20",
            "--alphas",
            "0,0.6",
            "--cache-dir",
            str(tmp_path / "cache"),
            "--ground-truth",
            str(ground_truth),
            "--out-dir",
            str(out),
        ]
    )
    assert code == 0

    summary = json.loads((out / "run.json").read_text())
    assert summary["artifacts"] == sorted(
        [
            "correspondence.txt",
            "descriptors_source.sisd",
            "descriptors_target.sisd",
            "error_curve-sispec.csv",
            "error_curve.svg",
            "fmap_0p000_xy.sisf",
            "fmap_0p000_yx.sisf",
            "fmap_0p600_xy.sisf",
            "fmap_0p600_yx.sisf",
            "fmaps.svg",
            "loss_trace.csv",
        ]
    )
    for name in summary["artifacts"]:
        assert (out / name).exists()
    assert summary["config"]["alphas"] == [0.0, 0.6]
    assert summary["config_digest"] == PipelineConfig(
        k=20, alphas=(0.0, 0.6), cache_dir=str(tmp_path / "cache")
    ).digest()
    assert summary["loss_final"] <= summary["loss_initial"]
    assert sum(summary["winning_domains"]) == mesh.n_vertices
    assert summary["mean_geodesic_error"] >= 0.0

    correspondence = Correspondence.read(out / "correspondence.txt")
    assert len(correspondence) == mesh.n_vertices
    recovered = np.mean(correspondence.mapping == permutation)
    assert recovered >= PERMUTATION_RECOVERY


def test_eval_compares_correspondence_files(tmp_path, capsys):
    mesh = bumpy_sphere(1)
    source = write_off(mesh, tmp_path / "source.off")
    identity = np.arange(mesh.n_vertices)
    ground_truth = write_ground_truth(identity, tmp_path / "gt.txt")
    zeros = np.zeros(mesh.n_vertices)
    perfect = Correspondence(identity, identity * 0, zeros).write(
        tmp_path / "perfect.txt"
    )
    shifted = Correspondence(np.roll(identity, 1), identity * 0, zeros)
    shifted = shifted.write(tmp_path / "shifted.txt")

    out = tmp_path / "eval"
    args = [
        "eval",
        str(source),
        str(ground_truth),
        str(perfect),
        str(shifted),
        "--out-dir",
        str(out),
    ]
    assert main(args) == 0
    printed = capsys.readouterr().out
    assert "perfect: mean geodesic error 0" in printed
    assert (out / "error_curve-perfect.csv").exists()
    assert (out / "error_curve-shifted.csv").exists()
    assert (out / "error_curve.svg").exists()

    assert main([*args, "--labels", "only-one"]) == EXIT_VALIDATION
