"""Command-line entry point wiring the library into reproducible runs.

Each file-writing command records a ``manifest.json`` next to its
outputs: the command name, its fully resolved configuration, input file
digests and the tool version. ``votecast --from-manifest <path>``
repeats the recorded run; given unchanged inputs it reproduces every
output file byte for byte (the manifest itself also records wall-clock
time, which is why it is a run record rather than an output).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .dataio import (
    load_dataset,
    load_declarations,
    save_dataset,
    save_declarations,
)
from .evaluation import METRICS, deviation_summary, group_profile
from .ga import (
    GaConfig,
    OPERATOR_NAMES,
    chromosome_from_json_dict,
    chromosome_to_json_dict,
    config_from_dict,
    config_to_dict,
    kmeans_baseline,
    multirun_stats,
    run,
)
from .model import DataError, ValidationError
from .regression import NoDeclaredStationsError, assemble_forecast
from .scenario import make_scenario
from .synth import SynthSpec, generate_synthetic

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4


# ---------------------------------------------------------------------------
# Flag types: range errors surface as usage errors (exit 2), not late
# validation failures.
# ---------------------------------------------------------------------------


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def nonnegative_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def unit_float(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("must be in [0, 1]")
    return value


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_manifest(
    out_dir: Path,
    command: str,
    config: dict,
    seed,
    inputs,
    outputs,
    started: float,
) -> None:
    _write_json(
        out_dir / "manifest.json",
        {
            "command": command,
            "config": config,
            "seed": seed,
            "input_digests": {str(p): _sha256(p) for p in inputs},
            "output_paths": sorted(outputs),
            "version": __version__,
            "wall_clock_seconds": round(time.monotonic() - started, 3),
        },
    )


def _out_dir(options: dict) -> Path:
    out = Path(options["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _status(message: str) -> None:
    print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def synth_options(args: dict) -> dict:
    return {
        "groups": args["groups"],
        "stations_per_group": args["stations_per_group"],
        "ref_parties": args["ref_parties"],
        "cur_parties": args["cur_parties"],
        "electorate_min": args["electorate_min"],
        "electorate_max": args["electorate_max"],
        "noise_sd": args["noise_sd"],
        "seed": args["seed"],
        "output_dir": args["output_dir"],
    }


def cmd_synth(options: dict) -> None:
    started = time.monotonic()
    spec = SynthSpec(
        n_groups=options["groups"],
        stations_per_group=options["stations_per_group"],
        ref_party_count=options["ref_parties"],
        cur_party_count=options["cur_parties"],
        electorate_range=(options["electorate_min"], options["electorate_max"]),
        noise_sd=options["noise_sd"],
        seed=options["seed"],
    )
    dataset, labels, matrices = generate_synthetic(spec)
    out = _out_dir(options)
    save_dataset(dataset, out / "dataset.json")
    _write_json(out / "truth_labels.json", {"labels": list(labels)})
    _write_json(
        out / "truth_matrices.json",
        {
            "matrices": [
                {"group_id": m.group_id, "entries": m.entries.tolist()}
                for m in matrices
            ]
        },
    )
    outputs = ["dataset.json", "truth_labels.json", "truth_matrices.json"]
    write_manifest(out, "synth", options, options["seed"], [], outputs, started)
    _status(f"wrote {', '.join(outputs)} to {out} ({dataset.n_stations} stations)")


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------


def optimize_options(args: dict) -> dict:
    ga = GaConfig(
        population_size=args["initial_population_size"],
        generations=args["generations"],
        elite_fraction=args["elite_proportion"],
        eligible_fraction=args["reproduction_eligible_population_proportion"],
        mutation_prob=args["mutation_probability"],
        reseed_fraction=args["random_re_seeding_proportion"],
        n_groups=args["groups"],
        metric=args["metric"],
        min_declared_per_group=args["min_declared_per_group"],
        penalty_weight=args["penalty_weight"],
        seed=args["seed"],
        disabled_operators=frozenset(args["disable"] or ()),
        early_stop=args["early_stop"],
    )
    return {
        "dataset": str(Path(args["dataset"]).resolve()),
        "missing_electorate": args["missing_electorate"],
        "scenario_seed": args["scenario_seed"],
        "runs": args["runs"],
        "threads": args["threads"],
        "ga": config_to_dict(ga),
        "output_dir": args["output_dir"],
    }


def cmd_optimize(options: dict) -> None:
    started = time.monotonic()
    dataset = load_dataset(options["dataset"])
    config = config_from_dict(options["ga"])
    declarations = make_scenario(
        dataset, options["missing_electorate"], seed=options["scenario_seed"]
    )
    out = _out_dir(options)
    outputs = ["declarations.json"]
    save_declarations(declarations, out / "declarations.json")

    if options["runs"] > 1:
        summary = multirun_stats(
            dataset, declarations, config, n_runs=options["runs"]
        )
        _write_json(out / "summary.json", summary.to_json_dict())
        (out / "sd.csv").write_text(summary.sd_csv(), encoding="utf-8")
        outputs += ["summary.json", "sd.csv"]
    else:
        def progress(generation, best_fitness):
            if generation % 100 == 0:
                _status(f"generation {generation}: best {best_fitness:.4f}")

        best, trace = run(dataset, declarations, config, on_generation=progress)
        effective = replace(
            config,
            penalty_weight=trace.penalty_weight,
            min_declared_per_group=trace.min_declared_per_group,
        )
        _write_json(out / "grouping.json", chromosome_to_json_dict(best, effective))
        (out / "trace.csv").write_text(trace.to_csv(), encoding="utf-8")
        outputs += ["grouping.json", "trace.csv"]

    write_manifest(
        out,
        "optimize",
        options,
        options["ga"]["seed"],
        [options["dataset"]],
        outputs,
        started,
    )
    _status(f"wrote {', '.join(outputs)} to {out}")


# ---------------------------------------------------------------------------
# forecast
# ---------------------------------------------------------------------------


def forecast_options(args: dict) -> dict:
    return {
        "dataset": str(Path(args["dataset"]).resolve()),
        "grouping": str(Path(args["grouping"]).resolve()),
        "declarations": str(Path(args["declarations"]).resolve()),
        "metric": args["metric"],
        "output_dir": args["output_dir"],
    }


def cmd_forecast(options: dict) -> None:
    started = time.monotonic()
    dataset = load_dataset(options["dataset"])
    grouping_doc = json.loads(Path(options["grouping"]).read_text(encoding="utf-8"))
    grouping = chromosome_from_json_dict(grouping_doc)
    declarations = load_declarations(options["declarations"], dataset)
    forecast = assemble_forecast(dataset, declarations, grouping.genes)

    out = _out_dir(options)
    doc = forecast.to_json_dict()
    _write_json(out / "forecast.json", doc)
    metric = options["metric"]
    key = {"abs": "party_totals", "elec": "pct_elec", "vald": "pct_vald"}[metric]
    column = {"abs": "votes", "elec": "pct_elec", "vald": "pct_vald"}[metric]
    values = doc[key] or []
    print(f"party,{column}")
    for party, value in zip(doc["cur_parties"], values):
        print(f"{party},{value!r}")
    write_manifest(
        out,
        "forecast",
        options,
        None,
        [options["dataset"], options["grouping"], options["declarations"]],
        ["forecast.json"],
        started,
    )


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _parse_grouping_specs(specs) -> dict:
    named: dict = {}
    for spec in specs:
        name, sep, path = spec.partition("=")
        if not sep:
            path = spec
            name = Path(spec).stem
        if not name or not path:
            raise ValidationError(f"bad grouping argument {spec!r}; use NAME=PATH")
        if name in named:
            raise ValidationError(f"duplicate grouping name {name!r}")
        named[name] = str(Path(path).resolve())
    return named


def evaluate_options(args: dict) -> dict:
    return {
        "dataset": str(Path(args["dataset"]).resolve()),
        "groupings": _parse_grouping_specs(args["grouping"]),
        "with_baseline": args["with_baseline"],
        "baseline_groups": args["groups"],
        "metric": args["metric"],
        "declarations": (
            str(Path(args["declarations"]).resolve())
            if args["declarations"]
            else None
        ),
        "missing_electorate": args["missing_electorate"],
        "scenario_seed": args["scenario_seed"],
        "seed": args["seed"],
        "output_dir": args["output_dir"],
    }


def cmd_evaluate(options: dict) -> None:
    started = time.monotonic()
    dataset = load_dataset(options["dataset"])
    inputs = [options["dataset"], *options["groupings"].values()]
    if options["declarations"]:
        declarations = load_declarations(options["declarations"], dataset)
        inputs.append(options["declarations"])
    else:
        declarations = make_scenario(
            dataset, options["missing_electorate"], seed=options["scenario_seed"]
        )

    groupings: dict = {}
    for name, path in options["groupings"].items():
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        groupings[name] = list(chromosome_from_json_dict(doc).genes)
    if options["with_baseline"]:
        baseline = kmeans_baseline(
            dataset, options["baseline_groups"], seed=options["seed"]
        )
        groupings["kmeans"] = list(baseline.genes)

    summary = deviation_summary(dataset, declarations, groupings)
    lines = summary.to_csv().splitlines()
    if options["metric"] != "both":
        lines = [lines[0]] + [
            line for line in lines[1:] if line.split(",")[1] == options["metric"]
        ]
    out = _out_dir(options)
    (out / "deviations.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    outputs = ["deviations.csv"]
    for name, labels in groupings.items():
        profile = group_profile(dataset, labels)
        filename = f"profile_{name}.csv"
        (out / filename).write_text(profile.to_csv(), encoding="utf-8")
        outputs.append(filename)

    write_manifest(
        out, "evaluate", options, options["seed"], inputs, outputs, started
    )
    _status(f"wrote {', '.join(outputs)} to {out}")


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


def serve_options(args: dict) -> dict:
    return {"port": args["port"], "data_dir": args["data_dir"]}


def cmd_serve(options: dict) -> None:
    import uvicorn

    from .service import create_app

    port = options["port"] or int(os.environ.get("PORT", "8000"))
    data_dir = options["data_dir"] or os.environ.get("DATA_DIR", "votecast_data")
    app = create_app(data_dir=data_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


COMMANDS = {
    "synth": cmd_synth,
    "optimize": cmd_optimize,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "serve": cmd_serve,
}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="votecast",
        description="Election-night forecasting with optimized station groupings.",
    )
    parser.add_argument(
        "--from-manifest",
        metavar="PATH",
        help="repeat the run recorded in a manifest file",
    )
    parser.add_argument(
        "--output-dir",
        dest="rerun_output_dir",
        metavar="DIR",
        help="with --from-manifest: write outputs here instead",
    )
    parser.add_argument("--version", action="version", version=__version__)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=nonnegative_int, default=0)
    common.add_argument("--output-dir", default=".", metavar="DIR")
    common.add_argument(
        "--threads",
        type=positive_int,
        default=1,
        help="reserved for fitness-evaluation parallelism; never affects results",
    )

    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser(
        "synth", parents=[common], help="generate a synthetic dataset with known truth"
    )
    p.add_argument("--groups", type=positive_int, default=10)
    p.add_argument("--stations-per-group", type=positive_int, default=10)
    p.add_argument("--ref-parties", type=positive_int, default=5)
    p.add_argument("--cur-parties", type=positive_int, default=5)
    p.add_argument("--electorate-min", type=positive_int, default=500)
    p.add_argument("--electorate-max", type=positive_int, default=2000)
    p.add_argument("--noise-sd", type=nonnegative_float, default=0.0)
    p.set_defaults(func=cmd_synth, normalize=synth_options)

    p = sub.add_parser(
        "optimize", parents=[common], help="search for a station grouping"
    )
    p.add_argument("--dataset", required=True)
    p.add_argument("--missing-electorate", type=unit_float, default=0.9)
    p.add_argument("--scenario-seed", type=nonnegative_int, default=0)
    p.add_argument("--initial-population-size", type=positive_int, default=100)
    p.add_argument("--generations", type=positive_int, default=500)
    p.add_argument("--elite-proportion", type=unit_float, default=0.1)
    p.add_argument(
        "--reproduction-eligible-population-proportion",
        type=unit_float,
        default=0.7,
    )
    p.add_argument("--mutation-probability", type=unit_float, default=0.003)
    p.add_argument("--random-re-seeding-proportion", type=unit_float, default=0.1)
    p.add_argument("--groups", type=positive_int, default=10)
    p.add_argument("--metric", choices=["abs", "elec", "vald"], default="abs")
    p.add_argument("--min-declared-per-group", type=nonnegative_int, default=None)
    p.add_argument("--penalty-weight", type=nonnegative_float, default=None)
    p.add_argument(
        "--disable",
        action="append",
        choices=sorted(OPERATOR_NAMES),
        help="switch a genetic operator off (repeatable)",
    )
    p.add_argument("--early-stop", action="store_true")
    p.add_argument(
        "--runs",
        type=positive_int,
        default=1,
        help="with N > 1: run N times and write the spread summary instead",
    )
    p.set_defaults(func=cmd_optimize, normalize=optimize_options)

    p = sub.add_parser(
        "forecast", parents=[common], help="project undeclared stations"
    )
    p.add_argument("--dataset", required=True)
    p.add_argument("--grouping", required=True)
    p.add_argument("--declarations", required=True)
    p.add_argument("--metric", choices=["abs", "elec", "vald"], default="abs")
    p.set_defaults(func=cmd_forecast, normalize=forecast_options)

    p = sub.add_parser(
        "evaluate", parents=[common], help="compare groupings against the truth"
    )
    p.add_argument("--dataset", required=True)
    p.add_argument(
        "--grouping",
        action="append",
        required=True,
        metavar="NAME=PATH",
        help="named grouping file (repeatable)",
    )
    p.add_argument("--with-baseline", action="store_true")
    p.add_argument("--groups", type=positive_int, default=10)
    p.add_argument("--metric", choices=["elec", "vald", "both"], default="both")
    p.add_argument("--declarations", default=None)
    p.add_argument("--missing-electorate", type=unit_float, default=0.9)
    p.add_argument("--scenario-seed", type=nonnegative_int, default=0)
    p.set_defaults(func=cmd_evaluate, normalize=evaluate_options)

    p = sub.add_parser("serve", help="run the live election-session service")
    p.add_argument("--port", type=positive_int, default=None)
    p.add_argument("--data-dir", default=None)
    p.set_defaults(func=cmd_serve, normalize=serve_options)

    return parser


def _run_command(command: str, func, options_factory) -> int:
    try:
        func(options_factory())
        return EXIT_OK
    except (DataError, NoDeclaredStationsError) as exc:
        print(f"{command}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"{command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def _rerun(manifest_path: str, output_dir: str | None) -> int:
    try:
        doc = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
        command = doc["command"]
        options = dict(doc["config"])
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"rerun: unusable manifest {manifest_path!r}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if command not in COMMANDS or command == "serve":
        print(f"rerun: cannot repeat command {command!r}", file=sys.stderr)
        return EXIT_RUNTIME
    if output_dir:
        options["output_dir"] = output_dir
    return _run_command(command, COMMANDS[command], lambda: options)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.from_manifest:
        return _rerun(args.from_manifest, args.rerun_output_dir)
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    return _run_command(
        args.command, args.func, lambda: args.normalize(vars(args))
    )


if __name__ == "__main__":
    sys.exit(main())
