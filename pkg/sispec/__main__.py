import argparse
from dataclasses import asdict
import json
import logging
from pathlib import Path
import sys

import numpy as np

from ._version import __version__
from .correspondence.fusion import Correspondence
from .correspondence.refine import write_loss_trace
from .defaults import PRESETS, PipelineConfig, parse_alphas
from .exceptions import EXIT_IO, SispecError
from .geometry.deform import local_scale_deform
from .geometry.mesh import validate
from .geometry.mesh_io import (
    load_mesh,
    read_ground_truth,
    write_ground_truth,
    write_off,
)
from .evaluation.error_curve import geodesic_error
from .evaluation.geodesics import GeodesicOracle
from .evaluation.plots import emit_curves, plot_functional_maps
from .match import compute_spectra, match
from .spectral.cache import write_descriptors, write_functional_map

logger = logging.getLogger("sispec")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat TOML config file")
    common.add_argument(
        "--alphas",
        help=f"comma separated alphas or a preset ({', '.join(PRESETS)})",
    )
    common.add_argument("--k", type=int, help="eigenpairs per domain")
    common.add_argument(
        "--out-dir", type=Path, default=Path("."), help="output directory"
    )
    common.add_argument("--cache-dir", help="basis cache directory")
    common.add_argument("--seed", type=int, help="random seed")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument(
        "-v", "--verbose", action="store_true", help="debug logging"
    )
    verbosity.add_argument(
        "-q", "--quiet", action="store_true", help="warnings only"
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="sispec",
        description="Multispectral scale-invariant shape correspondence.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    spectra = commands.add_parser(
        "spectra", parents=[common], help="compute and cache spectral bases"
    )
    spectra.add_argument("mesh", type=Path)

    matching = commands.add_parser(
        "match", parents=[common], help="match a target mesh to a source"
    )
    matching.add_argument("source", type=Path)
    matching.add_argument("target", type=Path)
    matching.add_argument(
        "--ground-truth",
        "--eval-gt",
        type=Path,
        help="evaluate the result against this ground-truth map",
    )

    evaluate = commands.add_parser(
        "eval", parents=[common], help="geodesic error curves"
    )
    evaluate.add_argument("source", type=Path, help="source mesh")
    evaluate.add_argument("ground_truth", type=Path)
    evaluate.add_argument("correspondences", type=Path, nargs="+")
    evaluate.add_argument(
        "--labels", help="comma separated curve labels (default: file stems)"
    )
    evaluate.add_argument(
        "--name", default="error_curve", help="output file stem"
    )

    deform = commands.add_parser(
        "deform", parents=[common], help="locally scale a mesh region"
    )
    deform.add_argument("mesh", type=Path)
    deform.add_argument("--seed-vertex", type=int, default=0)
    deform.add_argument(
        "--radius",
        type=float,
        help="geodesic radius (default: 25%% of the bounding-box diagonal)",
    )
    deform.add_argument("--factor", type=float, default=1.5)
    deform.add_argument("--falloff", type=float, default=1.0)

    selftest = commands.add_parser(
        "selftest", parents=[common], help="run the invariant suite"
    )
    selftest.add_argument(
        "--experiments",
        action="store_true",
        help="also run the comparative experiments",
    )

    commands.add_parser(
        "config", parents=[common], help="print the effective configuration"
    )
    return parser


def load_config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {}
    if args.alphas is not None:
        overrides["alphas"] = parse_alphas(args.alphas)
    if args.k is not None:
        overrides["k"] = args.k
    if args.cache_dir is not None:
        overrides["cache_dir"] = args.cache_dir
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.config is not None:
        return PipelineConfig.from_toml(args.config, **overrides)
    return PipelineConfig.from_dict(overrides)


def cmd_spectra(args, config: PipelineConfig) -> int:
    mesh = load_mesh(args.mesh)
    result = compute_spectra(mesh, config, config.cache_dir)
    for alpha, basis in result.bases.items():
        print(
            f"alpha={alpha:g} k={basis.k} "
            f"lambda=[{basis.eigenvalues[1]:.6g} .. "
            f"{basis.eigenvalues[-1]:.6g}] {result.paths[alpha]}"
        )
    print(f"computed {result.computed} of {len(result.bases)}")
    return 0


def _alpha_tag(alpha: float) -> str:
    return f"{alpha:.3f}".replace(".", "p")


def cmd_match(args, config: PipelineConfig) -> int:
    source = load_mesh(args.source)
    target = load_mesh(args.target)
    ground_truth = (
        read_ground_truth(args.ground_truth) if args.ground_truth else None
    )
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)

    result = match(source, target, config, config.cache_dir)
    artifacts = [result.correspondence.write(out / "correspondence.txt")]
    for pair in result.pairs:
        tag = _alpha_tag(pair.alpha)
        artifacts.append(
            write_functional_map(
                pair.C_xy, pair.alpha, "xy", out / f"fmap_{tag}_xy.sisf"
            )
        )
        artifacts.append(
            write_functional_map(
                pair.C_yx, pair.alpha, "yx", out / f"fmap_{tag}_yx.sisf"
            )
        )
    artifacts.append(
        write_loss_trace(result.refinement, out / "loss_trace.csv")
    )
    for role, descriptors in zip(("source", "target"), result.descriptors):
        artifacts.append(
            write_descriptors(descriptors, out / f"descriptors_{role}.sisd")
        )
    artifacts.append(
        plot_functional_maps(
            {pair.alpha: pair.C_xy for pair in result.pairs},
            out / "fmaps.svg",
        )
    )

    summary = {
        "source": str(args.source),
        "target": str(args.target),
        "config": asdict(config),
        "config_digest": config.digest(),
        "iterations": result.refinement.iterations,
        "stop_reason": result.refinement.stop_reason,
        "loss_initial": result.refinement.initial.total,
        "loss_final": result.refinement.final.total,
        "winning_domains": np.bincount(
            result.correspondence.winning_domain, minlength=len(result.pairs)
        ).tolist(),
    }
    if ground_truth is not None:
        curve = geodesic_error(
            result.correspondence,
            ground_truth,
            GeodesicOracle(source),
            label="sispec",
        )
        artifacts.extend(emit_curves([curve], out / "error_curve"))
        summary["mean_geodesic_error"] = curve.mean_error
        print(f"mean geodesic error {curve.mean_error:.6g}")

    summary["artifacts"] = sorted(p.name for p in artifacts)
    (out / "run.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {out / 'correspondence.txt'}")
    return 0


def cmd_eval(args, config: PipelineConfig) -> int:
    source = load_mesh(args.source)
    ground_truth = read_ground_truth(args.ground_truth)
    labels = (
        args.labels.split(",")
        if args.labels
        else [path.stem for path in args.correspondences]
    )
    if len(labels) != len(args.correspondences):
        raise SispecError(
            f"{len(labels)} labels for {len(args.correspondences)} "
            "correspondence files"
        )
    oracle = GeodesicOracle(source)
    curves = [
        geodesic_error(
            Correspondence.read(path), ground_truth, oracle, label=label
        )
        for path, label in zip(args.correspondences, labels)
    ]
    args.out_dir.mkdir(parents=True, exist_ok=True)
    emit_curves(curves, args.out_dir / args.name)
    for curve in curves:
        print(f"{curve.label}: mean geodesic error {curve.mean_error:.6g}")
    return 0


def cmd_deform(args, config: PipelineConfig) -> int:
    mesh = load_mesh(args.mesh)
    radius = (
        args.radius
        if args.radius is not None
        else 0.25 * mesh.bounding_box_diagonal
    )
    deformed = local_scale_deform(
        mesh, args.seed_vertex, radius, args.factor, args.falloff
    )
    report = validate(deformed)
    if not report.accepted:
        logger.warning(f"Deformed mesh: {report.summary()}")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{args.mesh.stem}-scaled"
    write_off(deformed, args.out_dir / f"{stem}.off")
    write_ground_truth(
        np.arange(deformed.n_vertices), args.out_dir / f"{stem}.gt.txt"
    )
    print(f"wrote {args.out_dir / f'{stem}.off'} ({report.summary()})")
    return 0


def cmd_selftest(args, config: PipelineConfig) -> int:
    from .selftest import format_results, run_selftest

    results = run_selftest(experiments=args.experiments, seed=config.seed)
    print(format_results(results))
    return 0 if all(r.passed for r in results) else 1


def cmd_config(args, config: PipelineConfig) -> int:
    print(config.to_toml(), end="")
    return 0


COMMANDS = {
    "spectra": cmd_spectra,
    "match": cmd_match,
    "eval": cmd_eval,
    "deform": cmd_deform,
    "selftest": cmd_selftest,
    "config": cmd_config,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s"
    )
    logging.captureWarnings(True)

    try:
        config = load_config(args)
        return COMMANDS[args.command](args, config)
    except SispecError as error:
        logger.error(str(error))
        return error.exit_code
    except OSError as error:
        logger.error(str(error))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
