"""Experiment pipeline: wire config -> scenarios -> formulation -> solve
-> reports, plus the solar-penetration and serving-window sweeps and the
stochastic-versus-deterministic comparison.

In fully-adaptive mode without binary columns the deterministic
equivalent separates by scenario, so the pipeline solves one subproblem
per scenario and assembles the full schedule; the assembled point is
still verified against the full problem's rows.  The deterministic
baseline solves the probability-weighted mean scenario and its rigid
schedule is then priced under every scenario: grid exchange re-adjusts
within its caps, and anything the rigid plan cannot absorb (parking
shortfalls, storage excursions, energy mismatches, exchange overflow) is
charged at a penalty price and flagged.  Every artifact write is atomic
and timestamp-free, so identical manifests and seeds produce
byte-identical outputs.
"""

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import scenario as scn
from .config_io import IngestError, generation_spec_from_dict, load_config, load_generation_spec
from .formulation import FormulationOptions, build, extract_schedule, schedule_to_vector
from .lpcore import SolveSettings, check_point, export_mps, solve_lp, solve_milp
from .model import MicrogridConfig, Schedule, check_balance, derive_storage, evaluate_cost

log = logging.getLogger(__name__)

EXPERIMENTS = ("single", "solar-sweep", "window-sweep", "stochastic-vs-deterministic")


@dataclass
class RunManifest:
    """Everything one run needs; mirrors the JSON manifest document."""

    config_path: str
    generation: dict | str | None = None
    scenarios_path: str | None = None
    generate_count: int = 3000
    keep: int = 25
    options: FormulationOptions = field(default_factory=FormulationOptions)
    settings: SolveSettings = field(default_factory=SolveSettings)
    out_dir: str = "out"
    experiment: str = "single"
    levels: tuple = ()
    widths: tuple = ()
    seed: int | None = None
    write_mps: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise IngestError(f"unknown experiment {self.experiment!r}")
        if self.experiment == "solar-sweep":
            if not self.levels or list(self.levels) != sorted(self.levels):
                raise IngestError("solar-sweep needs a nonempty sorted 'levels' list")
        if self.experiment == "window-sweep":
            if not self.widths or list(self.widths) != sorted(self.widths):
                raise IngestError("window-sweep needs a nonempty sorted 'widths' list")

    @classmethod
    def from_dict(cls, data: dict, base_dir=".") -> "RunManifest":
        base = Path(base_dir)

        def resolve(p):
            p = Path(p)
            return str(p if p.is_absolute() else base / p)

        opts = data.get("formulation", {})
        try:
            options = FormulationOptions(**opts)
        except (TypeError, ValueError) as e:
            raise IngestError(f"formulation options: {e}") from e
        try:
            settings = SolveSettings(**data.get("solver", {}))
        except (TypeError, ValueError) as e:
            raise IngestError(f"solver settings: {e}") from e
        gen = data.get("generation")
        if isinstance(gen, str):
            gen = resolve(gen)
        if "config" not in data:
            raise IngestError("manifest: missing required field 'config'")
        return cls(
            config_path=resolve(data["config"]),
            generation=gen,
            scenarios_path=resolve(data["scenarios"]) if data.get("scenarios") else None,
            generate_count=int(data.get("generate", 3000)),
            keep=int(data.get("keep", 25)),
            options=options,
            settings=settings,
            out_dir=resolve(data.get("out", "out")),
            experiment=data.get("experiment", "single"),
            levels=tuple(data.get("levels", ())),
            widths=tuple(data.get("widths", ())),
            seed=data.get("seed"),
            write_mps=bool(data.get("write_mps", False)),
        )


def load_manifest(path) -> RunManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as e:
        raise IngestError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise IngestError(f"{path}: invalid JSON: {e}") from e
    return RunManifest.from_dict(data, base_dir=path.parent)


@dataclass
class SolveReport:
    status: str
    objective: float
    iterations: int
    nodes: int
    n_cols: int
    n_rows: int
    decomposed: bool
    max_row_violation: float = 0.0
    max_bound_violation: float = 0.0
    row_violations: dict = field(default_factory=dict)  # row name -> amount
    infeasible_rows: list = field(default_factory=list)

    def to_dict(self):
        return {
            "status": self.status,
            "objective": self.objective,
            "iterations": self.iterations,
            "nodes": self.nodes,
            "n_cols": self.n_cols,
            "n_rows": self.n_rows,
            "decomposed": self.decomposed,
            "max_row_violation": self.max_row_violation,
            "max_bound_violation": self.max_bound_violation,
            "row_violations": self.row_violations,
            "infeasible_rows": self.infeasible_rows,
        }


class InfeasibleProblem(RuntimeError):
    def __init__(self, rows):
        super().__init__(f"problem infeasible; violated rows: {rows[:20]}")
        self.rows = rows


class SolverLimit(RuntimeError):
    pass


# --------------------------------------------------------------------------
# scenario preparation


def prepare_scenarios(manifest: RunManifest, config: MicrogridConfig):
    """Load or generate scenarios, then fast-forward reduce to `keep`."""
    if manifest.scenarios_path:
        p = Path(manifest.scenarios_path)
        full = scn.load_csv_bundle(p) if p.is_dir() else scn.load_json(p)
    else:
        if manifest.generation is None:
            raise IngestError("manifest needs either 'generation' or 'scenarios'")
        if isinstance(manifest.generation, str):
            spec = load_generation_spec(manifest.generation)
        else:
            spec = generation_spec_from_dict(manifest.generation)
        if manifest.seed is not None:
            spec = dataclasses.replace(spec, rng_seed=int(manifest.seed))
        full = scn.generate(spec, config, manifest.generate_count)
    report = None
    reduced = full
    if manifest.keep < len(full):
        reduced, report = scn.reduce_fast_forward(full, manifest.keep)
    return reduced, full, report


# --------------------------------------------------------------------------
# solving


def _decomposable(options: FormulationOptions) -> bool:
    return (
        options.stage_mode == "fully-adaptive"
        and not options.exclusivity_binaries
        and options.parking_mode == "scenario-data"
    )


def solve_stochastic(config: MicrogridConfig, scenarios: scn.ScenarioSet,
                     options: FormulationOptions | None = None,
                     settings: SolveSettings | None = None):
    """Solve the deterministic equivalent; returns (schedule, report, problem, index).

    Decomposes by scenario whenever the formulation permits; the
    assembled point is checked against the full problem either way.
    """
    options = options or FormulationOptions()
    settings = settings or SolveSettings()
    problem, index = build(config, scenarios, options)
    S = len(scenarios.scenarios)
    T = config.horizon

    if _decomposable(options) and S > 1:
        chp = np.zeros((config.n_chp, T, S))
        charge = np.zeros((config.n_phev, T, S))
        discharge = np.zeros((config.n_phev, T, S))
        serve = np.zeros((config.n_deferrable, T, S))
        buy = np.zeros((T, S))
        sell = np.zeros((T, S))
        total = 0.0
        iters = 0
        probs = scenarios.probabilities
        for s in range(S):
            sub, sub_index = build(config, scenarios.single(s), options)
            sol = solve_lp(sub, settings)
            iters += sol.iterations
            if sol.status == "infeasible":
                rows = [_shift_scenario_name(sub.row_name(i), s) for i in sol.infeasible_rows]
                raise InfeasibleProblem(rows)
            if sol.status == "limit":
                raise SolverLimit(f"iteration limit in scenario {s}")
            if sol.status == "unbounded":
                raise RuntimeError(f"scenario {s} subproblem unbounded")
            sub_sched = extract_schedule(sol, sub_index, config, scenarios.single(s))
            chp[:, :, s] = sub_sched.chp_power[:, :, 0]
            charge[:, :, s] = sub_sched.charge[:, :, 0]
            discharge[:, :, s] = sub_sched.discharge[:, :, 0]
            serve[:, :, s] = sub_sched.serve[:, :, 0]
            buy[:, s] = sub_sched.grid_buy[:, 0]
            sell[:, s] = sub_sched.grid_sell[:, 0]
            total += probs[s] * sol.objective
        schedule = Schedule.from_decisions(config, chp, charge, discharge, serve, buy, sell)
        rep = check_point(problem, schedule_to_vector(schedule, index), settings.feasibility_tol)
        report = SolveReport(
            status="optimal", objective=total, iterations=iters, nodes=S,
            n_cols=problem.n_cols, n_rows=problem.n_rows, decomposed=True,
            max_row_violation=rep.max_row_violation,
            max_bound_violation=rep.max_bound_violation,
            row_violations={problem.row_name(i): v for i, v in rep.row_violations.items()},
        )
        return schedule, report, problem, index

    sol = solve_milp(problem, settings) if problem.binary_cols else solve_lp(problem, settings)
    if sol.status == "infeasible":
        raise InfeasibleProblem([problem.row_name(i) for i in sol.infeasible_rows])
    if sol.status == "limit":
        raise SolverLimit("node or iteration limit reached")
    if sol.status == "unbounded":
        raise RuntimeError("deterministic equivalent unbounded")
    schedule = extract_schedule(sol, index, config, scenarios)
    rep = check_point(problem, sol.x, settings.feasibility_tol)
    report = SolveReport(
        status=sol.status, objective=sol.objective, iterations=sol.iterations,
        nodes=sol.nodes, n_cols=problem.n_cols, n_rows=problem.n_rows,
        decomposed=False, max_row_violation=rep.max_row_violation,
        max_bound_violation=rep.max_bound_violation,
        row_violations={problem.row_name(i): v for i, v in rep.row_violations.items()},
    )
    return schedule, report, problem, index


def _shift_scenario_name(name: str, s: int) -> str:
    return name[: -len("_s0")] + f"_s{s}" if name.endswith("_s0") else name


def solve_deterministic(config: MicrogridConfig, scenarios: scn.ScenarioSet,
                        options: FormulationOptions | None = None,
                        settings: SolveSettings | None = None):
    """Expected-value baseline: one solve against the mean scenario."""
    mean_set = scn.ScenarioSet((scenarios.mean_scenario(),))
    return solve_stochastic(config, mean_set, options, settings)


def default_penalty(config: MicrogridConfig) -> float:
    """Recourse price for violations of a rigid schedule: well above any
    energy price so it is never preferred over normal operation."""
    return 10.0 * max(float(config.tariff.price_buy.max()), 0.1)


def evaluate_policy(config: MicrogridConfig, scenarios: scn.ScenarioSet,
                    policy: Schedule, penalty: float | None = None):
    """Price a rigid schedule under every scenario.

    The internal decisions (CHP, charge/discharge, serving) are kept as
    planned, except that charging or discharging while the vehicle is
    away simply does not happen.  Grid exchange re-optimizes each period
    within its caps; remaining imbalance, storage-bound excursions,
    terminal-energy mismatch, and unmet deferrable energy are charged at
    the penalty price and flag the scenario.  Returns (expected_cost,
    per_scenario list of dicts).
    """
    if policy.n_scenarios != 1:
        raise ValueError("policy must be a single-scenario schedule")
    penalty = default_penalty(config) if penalty is None else float(penalty)
    h = config.period_hours
    T = config.horizon
    chp = policy.chp_power[:, :, 0]
    serve = policy.serve[:, :, 0]
    c_chp = np.array([u.cost_per_kwh for u in config.chp_units])
    c_ev = np.array([ev.degradation_cost_per_kwh for ev in config.phevs])
    eta_c = np.array([ev.eta_charge for ev in config.phevs])
    eta_d = np.array([ev.eta_discharge for ev in config.phevs])
    e_min = np.array([ev.e_min for ev in config.phevs])
    e_max = np.array([ev.e_max for ev in config.phevs])
    e_init = np.array([ev.e_initial for ev in config.phevs])

    chp_cost = float(h * (c_chp @ chp).sum()) if config.n_chp else 0.0
    results = []
    expected = 0.0
    for s, scen in enumerate(scenarios.scenarios):
        charge = policy.charge[:, :, 0] * scen.parking
        discharge = policy.discharge[:, :, 0] * scen.parking
        violation = 0.0  # kWh of unabsorbable deviation

        if config.n_phev:
            storage = derive_storage(config, charge[:, :, None], discharge[:, :, None])[:, :, 0]
            violation += float(np.maximum(storage - e_max[:, None], 0.0).sum())
            violation += float(np.maximum(e_min[:, None] - storage, 0.0).sum())
            violation += float(np.abs(storage[:, -1] - e_init).sum())
        if config.n_deferrable:
            delivered = serve.sum(axis=1) * h
            violation += float(np.abs(delivered - scen.deferrable_energy).sum())

        demand = config.base_power + charge.sum(axis=0) + serve.sum(axis=0)
        supply = (chp.sum(axis=0) if config.n_chp else np.zeros(T)) \
            + discharge.sum(axis=0) + scen.solar
        net = demand - supply
        cap = config.tariff.exchange_cap
        buy = np.clip(net, 0.0, cap)
        sell = np.clip(-net, 0.0, cap)
        overflow = np.abs(net - (buy - sell))
        violation += float(overflow.sum() * h)

        ev_cost = float(h * (c_ev @ (eta_c[:, None] * charge + discharge / eta_d[:, None])).sum()) \
            if config.n_phev else 0.0
        grid_cost = float(h * (config.tariff.price_buy @ buy - config.tariff.price_sell @ sell))
        cost = chp_cost + ev_cost + grid_cost + penalty * violation
        expected += scen.probability * cost
        results.append({
            "scenario": s,
            "cost": cost,
            "violation_kwh": violation,
            "flagged": bool(violation > 1e-6),
        })
    return expected, results


def compare_policies(config, scenarios, options=None, settings=None):
    """Stochastic solve versus mean-scenario policy; VSS is their gap."""
    options = options or FormulationOptions()
    settings = settings or SolveSettings()
    sched, report, _, _ = solve_stochastic(config, scenarios, options, settings)
    stochastic_cost = report.objective
    det_sched, det_report, _, _ = solve_deterministic(config, scenarios, options, settings)
    penalty = options.curtailment_penalty
    policy_cost, per_scenario = evaluate_policy(config, scenarios, det_sched, penalty)
    return {
        "stochastic_cost": stochastic_cost,
        "ev_problem_cost": det_report.objective,
        "deterministic_policy_cost": policy_cost,
        "vss": policy_cost - stochastic_cost,
        "penalty": default_penalty(config) if penalty is None else penalty,
        "scenarios": per_scenario,
        "flagged_scenarios": [r["scenario"] for r in per_scenario if r["flagged"]],
    }


# --------------------------------------------------------------------------
# artifact writing


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_json(path: Path, payload: dict):
    _write_atomic(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row))
    _write_atomic(path, "\n".join(lines) + "\n")


def _verified_balance(config, scenarios, schedule, tol=1e-6):
    """Balance reports for every scenario; raises if any period is off."""
    reports = []
    for s, scen in enumerate(scenarios.scenarios):
        rep = check_balance(config, scen, schedule.scenario_slice(s), tol)
        if not rep.ok:
            raise RuntimeError(f"schedule fails balance check in scenario {s}: {rep.flags[:5]}")
        reports.append({"scenario": s, **rep.to_dict()})
    return reports


# --------------------------------------------------------------------------
# the experiment entry points


def run_single(manifest: RunManifest) -> dict:
    """Solve one instance and write solution.json / balance_report.json
    (and problem.mps on request) into the output directory."""
    config = load_config(manifest.config_path)
    scenarios, _, reduction = prepare_scenarios(manifest, config)
    out = Path(manifest.out_dir)

    try:
        schedule, report, problem, index = solve_stochastic(
            config, scenarios, manifest.options, manifest.settings
        )
    except InfeasibleProblem as e:
        _write_json(out / "solution.json", {
            "status": "infeasible",
            "infeasible_rows": e.rows,
        })
        raise

    balance = _verified_balance(config, scenarios, schedule)
    cost = evaluate_cost(config, scenarios, schedule)
    payload = {
        "status": report.status,
        "objective": report.objective,
        "evaluated_cost": cost,
        "solve": report.to_dict(),
        "schedule": schedule.to_dict(),
        "probabilities": scenarios.probabilities.tolist(),
    }
    if reduction is not None:
        payload["reduction"] = reduction.to_dict()
    _write_json(out / "solution.json", payload)
    _write_json(out / "balance_report.json", {"tol": 1e-6, "scenarios": balance})
    if manifest.write_mps:
        _write_atomic(out / "problem.mps", export_mps(problem))
    return payload


def _scale_solar(scenarios: scn.ScenarioSet, factor: float) -> scn.ScenarioSet:
    return scn.ScenarioSet(tuple(
        scn.Scenario(s.probability, s.solar * factor, s.parking, s.deferrable_energy)
        for s in scenarios.scenarios
    ))


def run_solar_sweep(manifest: RunManifest) -> list:
    """Average cost of both approaches over solar penetration levels.

    Each level scales installed capacity and every scenario's trajectory
    by the same factor.  Writes solar_sweep.csv with one row per level.
    """
    config = load_config(manifest.config_path)
    scenarios, _, _ = prepare_scenarios(manifest, config)
    rows = []
    for level in manifest.levels:
        lvl_config = dataclasses.replace(config, solar_capacity=config.solar_capacity * level)
        lvl_scen = _scale_solar(scenarios, level)
        _, report, _, _ = solve_stochastic(lvl_config, lvl_scen, manifest.options, manifest.settings)
        det_sched, _, _, _ = solve_deterministic(lvl_config, lvl_scen, manifest.options,
                                                 manifest.settings)
        det_cost, _ = evaluate_policy(lvl_config, lvl_scen, det_sched,
                                      manifest.options.curtailment_penalty)
        rows.append((float(level), float(report.objective), float(det_cost)))
        log.info("solar level %.3g: stochastic %.6g, deterministic %.6g",
                 level, report.objective, det_cost)
    _write_csv(Path(manifest.out_dir) / "solar_sweep.csv",
               ["level", "avg_cost_stochastic", "avg_cost_deterministic"], rows)
    return rows


def resize_window(load, width: int, horizon: int):
    """Symmetrically resize a deferrable window to `width` periods.

    Overhang at either horizon edge shifts to the other side, so the
    resulting window has exactly min(width, horizon) periods and windows
    stay nested as the width grows.
    """
    width = min(max(1, width), horizon)
    extra = width - load.window_length()
    ta = load.t_arrive - (extra // 2)
    ta = max(1, min(ta, horizon - width + 1))
    td = min(horizon, ta + width - 1)
    return dataclasses.replace(load, t_arrive=ta, t_depart=td)


def run_window_sweep(manifest: RunManifest) -> list:
    """Average stochastic cost as deferrable windows widen.

    Widths that make a load's energy undeliverable produce an error row
    and the sweep continues.  Writes window_sweep.csv.
    """
    config = load_config(manifest.config_path)
    scenarios, _, _ = prepare_scenarios(manifest, config)
    rows = []
    for width in manifest.widths:
        defs = tuple(resize_window(d, int(width), config.horizon) for d in config.deferrables)
        w_config = dataclasses.replace(config, deferrables=defs)
        try:
            _, report, _, _ = solve_stochastic(w_config, scenarios, manifest.options,
                                               manifest.settings)
            rows.append((int(width), float(report.objective), "optimal"))
        except (ValueError, InfeasibleProblem) as e:
            log.warning("width %d infeasible: %s", width, e)
            rows.append((int(width), "", "infeasible"))
    _write_csv(Path(manifest.out_dir) / "window_sweep.csv",
               ["width", "avg_cost", "status"], rows)
    return rows


def run_compare(manifest: RunManifest) -> dict:
    """VSS report: stochastic solution versus the expected-value policy."""
    config = load_config(manifest.config_path)
    scenarios, _, _ = prepare_scenarios(manifest, config)
    result = compare_policies(config, scenarios, manifest.options, manifest.settings)
    _write_json(Path(manifest.out_dir) / "compare.json", result)
    return result
