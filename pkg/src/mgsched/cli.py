"""Command-line front end.

Subcommands: run, sweep-solar, sweep-window, compare, export-mps, and
scenarios generate|reduce.  Runs are described by a JSON manifest
(--manifest) or assembled from flags; flags override manifest fields.
Exit codes: 0 optimal, 2 ingestion failure, 3 infeasible, 4 solver limit.
The MGS_LOG environment variable (debug/info/warning/error) controls
verbosity.
"""

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from . import scenario as scn
from .config_io import IngestError, load_config, load_generation_spec
from .experiments import (
    InfeasibleProblem,
    RunManifest,
    SolverLimit,
    load_manifest,
    prepare_scenarios,
    run_compare,
    run_single,
    run_solar_sweep,
    run_window_sweep,
)
from .formulation import build
from .lpcore import export_mps

log = logging.getLogger("mgsched")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INGEST = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT = 4


def _setup_logging():
    level = os.environ.get("MGS_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _add_run_flags(p):
    p.add_argument("--manifest", help="JSON run manifest")
    p.add_argument("--config", help="microgrid config JSON (overrides manifest)")
    p.add_argument("--genspec", help="generation spec JSON (overrides manifest)")
    p.add_argument("--seed", type=int, help="RNG seed override")
    p.add_argument("--out", help="output directory")
    p.add_argument("--generate", type=int, help="number of scenarios to generate")
    p.add_argument("--keep", type=int, help="scenarios to keep after reduction")
    p.add_argument("--stage-mode", choices=("fully-adaptive", "day-ahead-chp"))
    p.add_argument("--parking-mode", choices=("scenario-data", "decision-binary"))
    p.add_argument("--exclusivity", action="store_true",
                   help="forbid simultaneous charge and discharge via binaries")
    p.add_argument("--curtailment-penalty", type=float,
                   help="enable a penalized spill column at this price")
    p.add_argument("--write-mps", action="store_true", help="also write problem.mps")


def _manifest_from_args(args, experiment) -> RunManifest:
    if args.manifest:
        manifest = load_manifest(args.manifest)
    else:
        if not args.config or not args.genspec:
            raise IngestError("need --manifest, or both --config and --genspec")
        manifest = RunManifest(config_path=args.config, generation=args.genspec,
                               experiment="single")
    updates = {"experiment": experiment}
    if args.config:
        updates["config_path"] = args.config
    if args.genspec:
        updates["generation"] = args.genspec
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out:
        updates["out_dir"] = args.out
    if args.generate is not None:
        updates["generate_count"] = args.generate
    if args.keep is not None:
        updates["keep"] = args.keep
    if getattr(args, "levels", None):
        updates["levels"] = tuple(float(v) for v in args.levels.split(","))
    if getattr(args, "widths", None):
        updates["widths"] = tuple(int(v) for v in args.widths.split(","))
    opt_updates = {}
    if args.stage_mode:
        opt_updates["stage_mode"] = args.stage_mode
    if args.parking_mode:
        opt_updates["parking_mode"] = args.parking_mode
    if args.exclusivity:
        opt_updates["exclusivity_binaries"] = True
    if args.curtailment_penalty is not None:
        opt_updates["curtailment_penalty"] = args.curtailment_penalty
    if opt_updates:
        updates["options"] = dataclasses.replace(manifest.options, **opt_updates)
    if args.write_mps:
        updates["write_mps"] = True
    return dataclasses.replace(manifest, **updates)


def main(argv=None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(
        prog="mgs", description="Stochastic microgrid scheduling toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve one instance and write artifacts")
    _add_run_flags(p_run)

    p_solar = sub.add_parser("sweep-solar", help="cost versus solar penetration level")
    _add_run_flags(p_solar)
    p_solar.add_argument("--levels", help="comma-separated multipliers, ascending")

    p_window = sub.add_parser("sweep-window", help="cost versus serving-window width")
    _add_run_flags(p_window)
    p_window.add_argument("--widths", help="comma-separated widths, ascending")

    p_cmp = sub.add_parser("compare", help="stochastic versus deterministic baseline")
    _add_run_flags(p_cmp)

    p_mps = sub.add_parser("export-mps", help="write the problem in MPS format")
    _add_run_flags(p_mps)

    p_scen = sub.add_parser("scenarios", help="scenario utilities")
    scen_sub = p_scen.add_subparsers(dest="scen_command", required=True)
    p_gen = scen_sub.add_parser("generate", help="draw a Monte Carlo scenario set")
    p_gen.add_argument("--config", required=True)
    p_gen.add_argument("--genspec", required=True)
    p_gen.add_argument("--generate", type=int, default=3000)
    p_gen.add_argument("--seed", type=int)
    p_gen.add_argument("--out", required=True, help="output directory (CSV bundle + JSON)")
    p_red = scen_sub.add_parser("reduce", help="fast-forward reduce a scenario set")
    p_red.add_argument("--input", required=True, help="CSV bundle directory or JSON file")
    p_red.add_argument("--keep", type=int, required=True)
    p_red.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except IngestError as e:
        log.error("ingestion failed: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INGEST
    except InfeasibleProblem as e:
        log.error("%s", e)
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverLimit as e:
        print(f"solver limit: {e}", file=sys.stderr)
        return EXIT_LIMIT


def _dispatch(args) -> int:
    if args.command == "run":
        manifest = _manifest_from_args(args, "single")
        payload = run_single(manifest)
        print(f"status: {payload['status']}  objective: {payload['objective']:.6f}")
        print(f"artifacts in {manifest.out_dir}")
        return EXIT_OK

    if args.command == "sweep-solar":
        manifest = _manifest_from_args(args, "solar-sweep")
        rows = run_solar_sweep(manifest)
        for level, st, det in rows:
            print(f"level {level:g}: stochastic {st:.6f}  deterministic {det:.6f}")
        print(f"wrote {Path(manifest.out_dir) / 'solar_sweep.csv'}")
        return EXIT_OK

    if args.command == "sweep-window":
        manifest = _manifest_from_args(args, "window-sweep")
        rows = run_window_sweep(manifest)
        for width, cost, status in rows:
            label = f"{cost:.6f}" if status == "optimal" else status
            print(f"width {width}: {label}")
        print(f"wrote {Path(manifest.out_dir) / 'window_sweep.csv'}")
        return EXIT_OK

    if args.command == "compare":
        manifest = _manifest_from_args(args, "stochastic-vs-deterministic")
        result = run_compare(manifest)
        print(f"stochastic cost:           {result['stochastic_cost']:.6f}")
        print(f"deterministic policy cost: {result['deterministic_policy_cost']:.6f}")
        print(f"value of stochastic solution: {result['vss']:.6f}")
        return EXIT_OK

    if args.command == "export-mps":
        manifest = _manifest_from_args(args, "single")
        config = load_config(manifest.config_path)
        scenarios, _, _ = prepare_scenarios(manifest, config)
        problem, _ = build(config, scenarios, manifest.options)
        out = Path(manifest.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "problem.mps"
        path.write_text(export_mps(problem))
        print(f"wrote {path} ({problem.n_rows} rows, {problem.n_cols} cols)")
        return EXIT_OK

    if args.command == "scenarios":
        return _dispatch_scenarios(args)
    raise AssertionError(f"unhandled command {args.command}")


def _dispatch_scenarios(args) -> int:
    if args.scen_command == "generate":
        config = load_config(args.config)
        spec = load_generation_spec(args.genspec)
        if args.seed is not None:
            spec = dataclasses.replace(spec, rng_seed=args.seed)
        sset = scn.generate(spec, config, args.generate)
        out = Path(args.out)
        scn.save_csv_bundle(sset, out)
        scn.save_json(sset, out / "scenarios.json")
        print(f"wrote {len(sset)} scenarios to {out}")
        return EXIT_OK

    if args.scen_command == "reduce":
        p = Path(args.input)
        try:
            sset = scn.load_csv_bundle(p) if p.is_dir() else scn.load_json(p)
        except (OSError, KeyError, ValueError) as e:
            raise IngestError(f"cannot load scenario set from {p}: {e}") from e
        try:
            reduced, report = scn.reduce_fast_forward(sset, args.keep)
        except ValueError as e:
            raise IngestError(str(e)) from e
        out = Path(args.out)
        scn.save_csv_bundle(reduced, out)
        scn.save_json(reduced, out / "scenarios.json")
        (out / "reduction_report.json").write_text(report.to_json() + "\n")
        print(f"kept {len(reduced)} of {len(sset)} scenarios; "
              f"distance {report.kantorovich_distance:.6g}")
        return EXIT_OK
    raise AssertionError(f"unhandled scenarios subcommand {args.scen_command}")


if __name__ == "__main__":
    sys.exit(main())
