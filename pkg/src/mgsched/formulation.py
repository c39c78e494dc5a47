"""Deterministic-equivalent assembly: expand the stochastic schedule over
all scenarios into one sparse LP/MILP and map solutions back to schedules.

Column and row order is lexicographic in (kind, scenario, period, unit),
with the kind order fixed below, so problem files are byte-stable across
runs.  Per (m, t, s) the storage-linking equality couples stored energy
to charge/discharge rates scaled by the period length; CHP capacity,
storage limits, rate limits gated by parking, serving-rate windows, and
grid exchange caps are all column bounds.  The power balance is an
equality under the convention supply + buy = demand + sell, heat is an
inequality (surplus disposed freely), and the terminal rule pins each
vehicle's final stored energy to its initial value.
"""

from dataclasses import dataclass

import numpy as np

from .lpcore import LpProblem
from .model import MicrogridConfig, Schedule, derive_storage, validate_config

COLUMN_KINDS = ("chp", "charge", "discharge", "storage", "serve", "buy", "sell",
                "curtail", "mode")
ROW_KINDS = ("link", "terminal", "defer_sum", "balance", "heat",
             "excl_charge", "excl_discharge", "park_charge", "park_discharge",
             "nonanticipative")

STAGE_MODES = ("fully-adaptive", "day-ahead-chp")
PARKING_MODES = ("scenario-data", "decision-binary")


@dataclass(frozen=True)
class FormulationOptions:
    """Switches of the deterministic equivalent.

    stage_mode: 'fully-adaptive' lets every decision adapt per scenario;
    'day-ahead-chp' forces identical CHP trajectories across scenarios
    (a genuine first stage).  parking_mode: 'scenario-data' takes vehicle
    availability from the scenarios; 'decision-binary' promotes it to a
    binary column.  exclusivity_binaries adds a binary per (vehicle,
    period, scenario) forbidding simultaneous charge and discharge.
    curtailment_penalty, when set, adds a penalized spill column to the
    power balance.
    """

    stage_mode: str = "fully-adaptive"
    parking_mode: str = "scenario-data"
    exclusivity_binaries: bool = False
    curtailment_penalty: float | None = None

    def __post_init__(self):
        if self.stage_mode not in STAGE_MODES:
            raise ValueError(f"unknown stage_mode {self.stage_mode!r}")
        if self.parking_mode not in PARKING_MODES:
            raise ValueError(f"unknown parking_mode {self.parking_mode!r}")
        if self.exclusivity_binaries and self.parking_mode == "decision-binary":
            raise ValueError(
                "exclusivity_binaries and decision-binary parking both claim the "
                "mode column; enable at most one"
            )


class VariableIndex:
    """Bijection between symbolic keys (kind, scenario, period, unit) and
    contiguous column ids, in the documented lexicographic order."""

    def __init__(self, config: MicrogridConfig, n_scenarios: int,
                 options: FormulationOptions):
        T, S = config.horizon, n_scenarios
        self.dims = {"T": T, "S": S, "chp": config.n_chp, "phev": config.n_phev,
                     "deferrable": config.n_deferrable}
        self.has_curtail = options.curtailment_penalty is not None
        self.has_mode = options.exclusivity_binaries or options.parking_mode == "decision-binary"
        units = {
            "chp": config.n_chp,
            "charge": config.n_phev,
            "discharge": config.n_phev,
            "storage": config.n_phev,
            "serve": config.n_deferrable,
            "buy": 1,
            "sell": 1,
            "curtail": 1 if self.has_curtail else 0,
            "mode": config.n_phev if self.has_mode else 0,
        }
        self._units = units
        self._offset = {}
        pos = 0
        for kind in COLUMN_KINDS:
            self._offset[kind] = pos
            pos += S * T * units[kind]
        self.n_cols = pos

    def column(self, kind: str, s: int, t: int, unit: int = 0) -> int:
        nu = self._units[kind]
        if nu == 0:
            raise KeyError(f"column kind {kind!r} not present in this formulation")
        T, S = self.dims["T"], self.dims["S"]
        if not (0 <= s < S and 0 <= t < T and 0 <= unit < nu):
            raise IndexError(f"{kind}({unit}, t={t}, s={s}) out of range")
        return self._offset[kind] + (s * T + t) * nu + unit

    def describe(self, col: int):
        """Inverse map: column id -> (kind, scenario, period, unit)."""
        for kind in reversed(COLUMN_KINDS):
            if self._units[kind] and col >= self._offset[kind]:
                rel = col - self._offset[kind]
                nu = self._units[kind]
                T = self.dims["T"]
                st, unit = divmod(rel, nu)
                s, t = divmod(st, T)
                return kind, s, t, unit
        raise IndexError(f"column {col} out of range")

    def column_names(self):
        short = {"chp": "chp", "charge": "chg", "discharge": "dis", "storage": "sto",
                 "serve": "srv", "buy": "buy", "sell": "sel", "curtail": "cur",
                 "mode": "mod"}
        names = []
        T, S = self.dims["T"], self.dims["S"]
        for kind in COLUMN_KINDS:
            nu = self._units[kind]
            for s in range(S):
                for t in range(T):
                    for u in range(nu):
                        if kind in ("buy", "sell", "curtail"):
                            names.append(f"{short[kind]}_t{t}_s{s}")
                        else:
                            names.append(f"{short[kind]}{u}_t{t}_s{s}")
        return names


def expected_counts(config: MicrogridConfig, n_scenarios: int,
                    options: FormulationOptions) -> dict:
    """Closed-form column/row counts of the deterministic equivalent.

    Columns: S*T*(Nc + 3*Np + Nj + 2), plus S*T if curtailment is on and
    S*T*Np if mode binaries are on.  Rows: per scenario Np*T link, Np
    terminal, Nj window sums, T balance, T heat; plus 2*Np*T*S coupling
    rows when exclusivity or decision-binary parking is on and
    (S-1)*Nc*T nonanticipativity rows in day-ahead-chp mode.
    """
    T, S = config.horizon, n_scenarios
    nc, np_, nj = config.n_chp, config.n_phev, config.n_deferrable
    has_mode = options.exclusivity_binaries or options.parking_mode == "decision-binary"
    cols = S * T * (nc + 3 * np_ + nj + 2)
    if options.curtailment_penalty is not None:
        cols += S * T
    if has_mode:
        cols += S * T * np_
    rows = S * (np_ * T + np_ + nj + 2 * T)
    if has_mode:
        rows += 2 * np_ * T * S
    if options.stage_mode == "day-ahead-chp":
        rows += (S - 1) * nc * T
    return {"n_cols": cols, "n_rows": rows}


def symbol_audit():
    """Where each model quantity lives in the formulation.

    One entry per quantity: (quantity, element).  Kept as data so tests
    and docs can assert the mapping is complete.
    """
    return [
        ("CHP power output", "column kind 'chp'"),
        ("CHP capacity limits", "bounds of 'chp' columns"),
        ("CHP production cost", "objective coefficient of 'chp'"),
        ("power-to-heat ratio", "coefficients of 'heat' rows"),
        ("PHEV charge rate", "column kind 'charge'"),
        ("PHEV discharge rate", "column kind 'discharge'"),
        ("PHEV stored energy", "column kind 'storage'"),
        ("storage dynamics", "'link' equality rows (rates scaled by period_hours)"),
        ("storage capacity window", "bounds of 'storage' columns"),
        ("rate limits gated by parking", "bounds of 'charge'/'discharge' columns "
                                         "(rows when parking is a decision)"),
        ("terminal stored energy", "'terminal' equality rows"),
        ("degradation cost", "objective coefficients of 'charge'/'discharge'"),
        ("deferrable serving rate", "column kind 'serve'"),
        ("serving window and rate band", "bounds of 'serve' columns"),
        ("required energy per load", "'defer_sum' equality rows"),
        ("grid import/export", "column kinds 'buy'/'sell'"),
        ("exchange capacity", "bounds of 'buy'/'sell' columns"),
        ("energy prices", "objective coefficients of 'buy'/'sell'"),
        ("power balance with solar and base load", "'balance' equality rows"),
        ("heat demand", "'heat' inequality rows"),
        ("scenario probability", "objective scaling per scenario"),
        ("solar output", "right-hand side of 'balance' rows"),
        ("optional spill", "column kind 'curtail' in 'balance' rows"),
        ("optional mode binary", "column kind 'mode' with coupling rows"),
        ("day-ahead CHP coupling", "'nonanticipative' equality rows"),
    ]


def build(config: MicrogridConfig, scenarios, options: FormulationOptions | None = None):
    """Assemble the deterministic equivalent; returns (LpProblem, VariableIndex)."""
    options = options or FormulationOptions()
    report = validate_config(config)
    if not report.ok:
        raise ValueError("invalid config: " + "; ".join(i.message for i in report.errors))
    T, S = config.horizon, len(scenarios.scenarios)
    if S == 0:
        raise ValueError("scenario set is empty")
    for sc in scenarios.scenarios:
        if sc.solar.shape != (T,) or sc.parking.shape != (config.n_phev, T) \
                or sc.deferrable_energy.shape != (config.n_deferrable,):
            raise ValueError("scenario dimensions do not match the config")
    if options.curtailment_penalty is not None:
        if options.curtailment_penalty <= config.tariff.price_buy.max():
            raise ValueError("curtailment_penalty must exceed the highest purchase price")

    index = VariableIndex(config, S, options)
    h = config.period_hours
    probs = [sc.probability for sc in scenarios.scenarios]
    decision_parking = options.parking_mode == "decision-binary"

    n = index.n_cols
    obj = np.zeros(n)
    lo = np.zeros(n)
    hi = np.zeros(n)
    binary_cols = []

    for s in range(S):
        scen = scenarios.scenarios[s]
        w = probs[s] * h
        for t in range(T):
            for i, u in enumerate(config.chp_units):
                j = index.column("chp", s, t, i)
                lo[j], hi[j] = u.p_min, u.p_max
                obj[j] = w * u.cost_per_kwh
            for m, ev in enumerate(config.phevs):
                jc = index.column("charge", s, t, m)
                jd = index.column("discharge", s, t, m)
                gate = 1.0 if decision_parking else scen.parking[m, t]
                lo[jc], hi[jc] = 0.0, ev.charge_rate_max * gate
                lo[jd], hi[jd] = 0.0, ev.discharge_rate_max * gate
                obj[jc] = w * ev.degradation_cost_per_kwh * ev.eta_charge
                obj[jd] = w * ev.degradation_cost_per_kwh / ev.eta_discharge
                js = index.column("storage", s, t, m)
                lo[js], hi[js] = ev.e_min, ev.e_max
            for jdx, d in enumerate(config.deferrables):
                jl = index.column("serve", s, t, jdx)
                if t in d.window_range():
                    lo[jl], hi[jl] = d.rate_min, d.rate_max
                else:
                    lo[jl], hi[jl] = 0.0, 0.0
            jb = index.column("buy", s, t)
            jsell = index.column("sell", s, t)
            cap = config.tariff.exchange_cap[t]
            lo[jb], hi[jb] = 0.0, cap
            lo[jsell], hi[jsell] = 0.0, cap
            obj[jb] = w * config.tariff.price_buy[t]
            obj[jsell] = -w * config.tariff.price_sell[t]
            if index.has_curtail:
                jcur = index.column("curtail", s, t)
                lo[jcur], hi[jcur] = 0.0, np.inf
                obj[jcur] = w * options.curtailment_penalty
            if index.has_mode:
                for m in range(config.n_phev):
                    jm = index.column("mode", s, t, m)
                    lo[jm], hi[jm] = 0.0, 1.0
                    binary_cols.append(jm)

    rows = []  # (sense, rhs, name)
    trips = []

    def add_row(sense, rhs, name):
        rows.append((sense, rhs, name))
        return len(rows) - 1

    for s in range(S):
        for t in range(T):
            for m, ev in enumerate(config.phevs):
                r = add_row("=", ev.e_initial if t == 0 else 0.0, f"link_m{m}_t{t}_s{s}")
                trips.append((r, index.column("storage", s, t, m), 1.0))
                if t > 0:
                    trips.append((r, index.column("storage", s, t - 1, m), -1.0))
                trips.append((r, index.column("charge", s, t, m), -h * ev.eta_charge))
                trips.append((r, index.column("discharge", s, t, m), h / ev.eta_discharge))
    for s in range(S):
        for m, ev in enumerate(config.phevs):
            r = add_row("=", ev.e_initial, f"term_m{m}_s{s}")
            trips.append((r, index.column("storage", s, T - 1, m), 1.0))
    for s in range(S):
        scen = scenarios.scenarios[s]
        for jdx, d in enumerate(config.deferrables):
            r = add_row("=", float(scen.deferrable_energy[jdx]), f"dsum_j{jdx}_s{s}")
            for t in d.window_range():
                trips.append((r, index.column("serve", s, t, jdx), h))
    for s in range(S):
        scen = scenarios.scenarios[s]
        for t in range(T):
            r = add_row("=", config.base_power[t] - scen.solar[t], f"bal_t{t}_s{s}")
            for i in range(config.n_chp):
                trips.append((r, index.column("chp", s, t, i), 1.0))
            for m in range(config.n_phev):
                trips.append((r, index.column("discharge", s, t, m), 1.0))
                trips.append((r, index.column("charge", s, t, m), -1.0))
            trips.append((r, index.column("buy", s, t), 1.0))
            trips.append((r, index.column("sell", s, t), -1.0))
            for jdx in range(config.n_deferrable):
                trips.append((r, index.column("serve", s, t, jdx), -1.0))
            if index.has_curtail:
                trips.append((r, index.column("curtail", s, t), -1.0))
    for s in range(S):
        for t in range(T):
            r = add_row(">=", config.base_heat[t], f"heat_t{t}_s{s}")
            for i, u in enumerate(config.chp_units):
                trips.append((r, index.column("chp", s, t, i), u.alpha))

    if options.exclusivity_binaries:
        for s in range(S):
            scen = scenarios.scenarios[s]
            for t in range(T):
                for m, ev in enumerate(config.phevs):
                    gate_c = ev.charge_rate_max * scen.parking[m, t]
                    gate_d = ev.discharge_rate_max * scen.parking[m, t]
                    r = add_row("<=", 0.0, f"exc_m{m}_t{t}_s{s}")
                    trips.append((r, index.column("charge", s, t, m), 1.0))
                    if gate_c:
                        trips.append((r, index.column("mode", s, t, m), -gate_c))
                    r = add_row("<=", gate_d, f"exd_m{m}_t{t}_s{s}")
                    trips.append((r, index.column("discharge", s, t, m), 1.0))
                    if gate_d:
                        trips.append((r, index.column("mode", s, t, m), gate_d))
    if decision_parking:
        for s in range(S):
            for t in range(T):
                for m, ev in enumerate(config.phevs):
                    r = add_row("<=", 0.0, f"pkc_m{m}_t{t}_s{s}")
                    trips.append((r, index.column("charge", s, t, m), 1.0))
                    trips.append((r, index.column("mode", s, t, m), -ev.charge_rate_max))
                    r = add_row("<=", 0.0, f"pkd_m{m}_t{t}_s{s}")
                    trips.append((r, index.column("discharge", s, t, m), 1.0))
                    trips.append((r, index.column("mode", s, t, m), -ev.discharge_rate_max))
    if options.stage_mode == "day-ahead-chp":
        for s in range(1, S):
            for t in range(T):
                for i in range(config.n_chp):
                    r = add_row("=", 0.0, f"nac_i{i}_t{t}_s{s}")
                    trips.append((r, index.column("chp", s, t, i), 1.0))
                    trips.append((r, index.column("chp", 0, t, i), -1.0))

    expect = expected_counts(config, S, options)
    if len(rows) != expect["n_rows"] or n != expect["n_cols"]:
        raise AssertionError(
            f"formulation self-audit failed: built {n} cols / {len(rows)} rows, "
            f"formulas give {expect['n_cols']} / {expect['n_rows']}"
        )

    problem = LpProblem(
        n_cols=n,
        n_rows=len(rows),
        objective=obj,
        triplets=trips,
        row_sense=[r[0] for r in rows],
        rhs=[r[1] for r in rows],
        col_lower=lo,
        col_upper=hi,
        binary_cols=binary_cols,
        row_names=[r[2] for r in rows],
        col_names=index.column_names(),
        name="MICROGRID",
    )
    return problem, index


def schedule_to_vector(schedule: Schedule, index: VariableIndex) -> np.ndarray:
    """Embed a schedule as a primal point of the built problem (spill and
    mode columns, when present, are left at zero)."""
    x = np.zeros(index.n_cols)
    T, S = index.dims["T"], index.dims["S"]
    for s in range(S):
        for t in range(T):
            for i in range(index.dims["chp"]):
                x[index.column("chp", s, t, i)] = schedule.chp_power[i, t, s]
            for m in range(index.dims["phev"]):
                x[index.column("charge", s, t, m)] = schedule.charge[m, t, s]
                x[index.column("discharge", s, t, m)] = schedule.discharge[m, t, s]
                x[index.column("storage", s, t, m)] = schedule.storage[m, t, s]
            for j in range(index.dims["deferrable"]):
                x[index.column("serve", s, t, j)] = schedule.serve[j, t, s]
            x[index.column("buy", s, t)] = schedule.grid_buy[t, s]
            x[index.column("sell", s, t)] = schedule.grid_sell[t, s]
    return x


def extract_schedule(solution, index: VariableIndex, config: MicrogridConfig,
                     scenarios, storage_tol: float = 1e-6) -> Schedule:
    """Map an LP solution back to a Schedule.

    Storage is recomputed from the charge/discharge trajectories and must
    agree with the solver's storage columns within storage_tol.
    """
    if solution.status in ("infeasible", "unbounded") or solution.x is None:
        raise ValueError(f"cannot extract a schedule from status {solution.status!r}")
    x = solution.x
    T, S = index.dims["T"], index.dims["S"]
    nc, nev, nj = index.dims["chp"], index.dims["phev"], index.dims["deferrable"]

    def grab(kind, nu):
        out = np.zeros((nu, T, S))
        for s in range(S):
            for t in range(T):
                for u in range(nu):
                    out[u, t, s] = x[index.column(kind, s, t, u)]
        return out

    chp = grab("chp", nc)
    charge = grab("charge", nev)
    discharge = grab("discharge", nev)
    lp_storage = grab("storage", nev)
    serve = grab("serve", nj)
    buy = np.zeros((T, S))
    sell = np.zeros((T, S))
    for s in range(S):
        for t in range(T):
            buy[t, s] = x[index.column("buy", s, t)]
            sell[t, s] = x[index.column("sell", s, t)]

    derived = derive_storage(config, charge, discharge)
    if nev and np.abs(derived - lp_storage).max() > storage_tol:
        raise ValueError(
            "storage columns disagree with the recursion by "
            f"{np.abs(derived - lp_storage).max():.3g} kWh"
        )
    return Schedule.from_decisions(config, chp, charge, discharge, serve, buy, sell)
