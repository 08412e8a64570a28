"""Command-line interface.

Commands: space-info, validate, build, search, export-plot. Machine output
goes to stdout (or files), diagnostics to stderr. Exit codes: 0 success,
1 usage error, 2 validation failure, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from pathlib import Path

from . import evaluators as ev
from .blocks import matrix_from_ops, render_matrix, validate_structure
from .crs import CrsConfig, population_size, run_search
from .network import (
    ArchConfig,
    build_network,
    estimate_peak_memory,
    serialize_ir,
)
from .objective import (
    BuildSettings,
    read_trajectory_rows,
    write_trajectory_csv,
)
from .plotting import plot_evolution
from .spaces import (
    DecodedConfig,
    SearchSpace,
    canonical_key,
    load_space_file,
    preset_names,
    space_preset,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

OUT_DIR_ENV = "VOXNAS_OUT_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _shape(text: str) -> tuple[int, int, int]:
    parts = _int_list(text)
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"shape needs 1 or 3 extents, got {text!r}")
    return tuple(parts)


def _add_space_flags(parser):
    parser.add_argument("--space", choices=preset_names(), help="built-in space preset")
    parser.add_argument("--space-file", help="JSON space definition file")


def _resolve_space(args) -> SearchSpace:
    if args.space_file:
        return load_space_file(args.space_file)
    if args.space:
        return space_preset(args.space)
    raise ValueError("one of --space or --space-file is required")


def _add_build_flags(parser):
    parser.add_argument("--shape", type=_shape, default=(128, 128, 128),
                        help="input spatial extents, e.g. 128 or 128,128,128")
    parser.add_argument("--in-channels", type=int, default=1)
    parser.add_argument("--classes", type=int, default=20,
                        help="segmentation labels including background")
    parser.add_argument("--element-bytes", type=int, default=4)
    parser.add_argument("--batch", type=int, default=1,
                        help="samples per device for the memory gate")
    parser.add_argument("--budget-bytes", type=int, default=16 * 2 ** 30)


def _build_settings(args) -> BuildSettings:
    return BuildSettings(
        input_shape=args.shape,
        in_channels=args.in_channels,
        num_classes=args.classes,
        element_bytes=args.element_bytes,
        batch_per_device=args.batch,
        budget_bytes=args.budget_bytes,
    )


def _out_dir(args) -> Path:
    out = args.out_dir or os.environ.get(OUT_DIR_ENV) or "voxnas-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_space_info(args) -> int:
    space = _resolve_space(args)
    print(f"variant: {space.variant_name}")
    print(f"n_h: {space.n_h}")
    print(f"population: {population_size(space.n_h)}")
    print(f"cardinality: {space.cardinality()}")
    print("dimensions:")
    for spec in space.specs:
        if spec.is_fixed:
            print(f"  {spec.name}: fixed {spec.fixed_value}")
        else:
            print(f"  {spec.name}: [{spec.lower}, {spec.upper})")
    return EXIT_OK


def _cmd_validate(args) -> int:
    matrix = matrix_from_ops(args.ops, args.nodes)
    verdict = validate_structure(matrix)
    print(render_matrix(matrix))
    if verdict.legal:
        print("verdict: legal")
        return EXIT_OK
    print("verdict: illegal")
    for violation in verdict.violations:
        print(f"  node {violation.node}: {violation.kind}")
    return EXIT_VALIDATION


def _decoded_from_floors(space: SearchSpace, floors: list[int]) -> DecodedConfig:
    expected = len(space.specs)
    if len(floors) != expected:
        raise ValueError(f"--floors needs {expected} integers for this space")
    decoded = DecodedConfig(
        n=floors[0], p=floors[1], sup=floors[2], res=floors[3],
        nodes=floors[4], ops=tuple(floors[5:]),
    )
    for spec, value in zip(space.specs, floors):
        if value not in spec.values():
            raise ValueError(
                f"{spec.name} = {value} outside its value set {list(spec.values())}"
            )
    return decoded


def _cmd_build(args) -> int:
    space = _resolve_space(args)
    if (args.point is None) == (args.floors is None):
        raise ValueError("exactly one of --point or --floors is required")
    if args.point is not None:
        decoded = space.decode(args.point)
    else:
        decoded = _decoded_from_floors(space, args.floors)
    ir = build_network(ArchConfig(
        decoded=decoded,
        input_shape=args.shape,
        in_channels=args.in_channels,
        num_classes=args.classes,
    ))
    estimate = estimate_peak_memory(
        ir,
        element_bytes=args.element_bytes,
        batch_per_device=args.batch,
        budget_bytes=args.budget_bytes,
    )
    resources = json.dumps({
        "key": canonical_key(decoded),
        "parameters": estimate.trainable_parameters,
        "peak_activation_bytes": estimate.peak_activation_bytes,
        "oom": estimate.oom,
    }, sort_keys=True)
    document = serialize_ir(ir)
    if args.out:
        Path(args.out).write_text(document + "\n", encoding="utf-8")
        print(resources)
    else:
        print(document)
        print(resources, file=sys.stderr)
    return EXIT_OK


def _make_evaluator(args, space):
    proto = None
    train = None
    if args.evaluator == ev.EXTERNAL:
        if not args.trainer_cmd:
            raise ValueError("--trainer-cmd is required for the external evaluator")
        proto = ev.TrainerProtocolConfig(
            command=tuple(shlex.split(args.trainer_cmd)),
            timeout_seconds=args.trainer_timeout,
        )
        train = ev.TrainSettings(
            epochs=args.train_epochs,
            batch=args.train_batch,
            seed=args.train_seed,
            shape=args.shape,
            classes=args.classes,
            volumes=args.train_volumes,
            augment=args.train_augment,
        )
    return ev.make_evaluator(args.evaluator, space, proto=proto, train=train)


def _evaluator_manifest(args) -> dict:
    info = {"id": args.evaluator}
    if args.evaluator == ev.ARCH_SURROGATE:
        info["parameters"] = ev.SurrogateParams().as_dict()
    if args.evaluator == ev.EXTERNAL:
        info["command"] = args.trainer_cmd
        info["timeout_seconds"] = args.trainer_timeout
        info["train"] = {
            "epochs": args.train_epochs,
            "batch": args.train_batch,
            "seed": args.train_seed,
            "volumes": args.train_volumes,
            "augment": args.train_augment,
        }
    return info


def _cmd_search(args) -> int:
    space = _resolve_space(args)
    evaluator = _make_evaluator(args, space)
    settings = _build_settings(args)
    config = CrsConfig(
        population_multiplier=args.population_multiplier,
        max_iterations=args.iters,
        rng_seed=args.seed,
        mutation_enabled=not args.no_mutation,
    )
    result = run_search(space, evaluator, config, settings)

    out = _out_dir(args)
    write_trajectory_csv(result.trajectory, out / "trajectory.csv")

    best_ir_name = None
    try:
        ir = build_network(ArchConfig(
            decoded=result.best_decoded,
            input_shape=settings.input_shape,
            in_channels=settings.in_channels,
            num_classes=settings.num_classes,
        ))
        (out / "best_ir.json").write_text(serialize_ir(ir) + "\n", encoding="utf-8")
        best_ir_name = "best_ir.json"
    except ValueError as exc:
        print(f"note: best configuration is not buildable: {exc}", file=sys.stderr)

    manifest = {
        "space": space.describe(),
        "seed": args.seed,
        "iterations": args.iters,
        "population_multiplier": args.population_multiplier,
        "population_size": population_size(space.n_h, args.population_multiplier),
        "mutation_enabled": not args.no_mutation,
        "evaluator": _evaluator_manifest(args),
        "build": {
            "input_shape": list(settings.input_shape),
            "in_channels": settings.in_channels,
            "num_classes": settings.num_classes,
            "element_bytes": settings.element_bytes,
            "batch_per_device": settings.batch_per_device,
            "budget_bytes": settings.budget_bytes,
        },
        "outputs": {"trajectory": "trajectory.csv", "best_ir": best_ir_name},
        "result": {
            "best_key": canonical_key(result.best_decoded),
            "best_f": result.best_f,
            "best_dice": result.best_dice,
            "effective_evaluations": result.effective_evaluations,
            "evaluation_count": result.evaluation_count,
        },
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(json.dumps({
        "out_dir": str(out),
        "best_key": canonical_key(result.best_decoded),
        "best_f": result.best_f,
        "best_dice": result.best_dice,
        "effective_evaluations": result.effective_evaluations,
        "evaluation_count": result.evaluation_count,
    }, sort_keys=True))
    return EXIT_OK


def _cmd_export_plot(args) -> int:
    rows = read_trajectory_rows(args.trajectory)
    out = Path(args.out_dir) if args.out_dir else Path(args.trajectory).parent
    out.mkdir(parents=True, exist_ok=True)

    search_rows = [r for r in rows if r["phase"] == "search"]
    series_path = out / "series.csv"
    with open(series_path, "w", encoding="utf-8", newline="") as handle:
        handle.write("iteration,f,dice,outcome,cache_hit\n")
        for r in search_rows:
            dice = "" if r["dice"] is None else repr(r["dice"])
            hit = "true" if r["cache_hit"] else "false"
            handle.write(f"{r['iteration']},{r['f']!r},{dice},{r['outcome']},{hit}\n")

    best_path = out / "best.csv"
    best_f, best_dice = None, None
    with open(best_path, "w", encoding="utf-8", newline="") as handle:
        handle.write("iteration,best_f,best_dice\n")
        for r in search_rows:
            if best_f is None or r["f"] < best_f:
                best_f = r["f"]
            if r["dice"] is not None and (best_dice is None or r["dice"] > best_dice):
                best_dice = r["dice"]
            dice = "" if best_dice is None else repr(best_dice)
            handle.write(f"{r['iteration']},{best_f!r},{dice}\n")

    written = [str(series_path), str(best_path)]
    if not args.no_figure:
        figure_path = out / "evolution.png"
        plot_evolution(rows, str(figure_path))
        written.append(str(figure_path))
    print(json.dumps({"written": written}, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="voxnas", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("space-info", help="inspect a search space")
    _add_space_flags(p)
    p.set_defaults(func=_cmd_space_info)

    p = sub.add_parser("validate", help="check a block ops vector for legality")
    p.add_argument("--ops", type=_int_list, required=True)
    p.add_argument("--nodes", type=int, required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("build", help="decode a point and emit the network IR")
    _add_space_flags(p)
    p.add_argument("--point", type=_float_list,
                   help="relaxed coordinates for the free dimensions")
    p.add_argument("--floors", "--config", type=_int_list,
                   help="full decoded vector: n,p,sup,res,nodes,ops...")
    _add_build_flags(p)
    p.add_argument("--out", help="write the IR here instead of stdout")
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("search", help="run a controlled random search")
    _add_space_flags(p)
    p.add_argument("--evaluator", required=True,
                   choices=(*ev.ANALYTIC_KINDS, ev.ARCH_SURROGATE, ev.EXTERNAL))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=300)
    p.add_argument("--population-multiplier", type=int, default=10)
    p.add_argument("--no-mutation", action="store_true")
    p.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or ./voxnas-out)")
    _add_build_flags(p)
    p.add_argument("--trainer-cmd", help="external trainer command line")
    p.add_argument("--trainer-timeout", type=float, default=600.0)
    p.add_argument("--train-epochs", type=int, default=5)
    p.add_argument("--train-batch", type=int, default=3)
    p.add_argument("--train-seed", type=int, default=0)
    p.add_argument("--train-volumes", type=int, default=8)
    p.add_argument("--train-augment", action="store_true")
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("export-plot", help="export plot-ready series from a trajectory")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=_cmd_export_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
