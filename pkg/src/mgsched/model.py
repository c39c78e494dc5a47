"""Microgrid domain model: fleet parameters, scenarios, schedules, and
solver-independent evaluation of cost and energy balance.

Conventions (documented in the README): powers in kW, energies in kWh,
heat in kW-thermal, prices in currency per kWh.  Rate variables are
converted to energy with the period length `period_hours`.  Grid import
(`grid_buy`) adds cost at the purchase price, export (`grid_sell`)
subtracts revenue at the selling price, and the power balance reads
supply + buy = demand + sell.  Deferrable-load windows are 1-based
inclusive period indices; all arrays are 0-based.
"""

from dataclasses import dataclass, field

import numpy as np


def _freeze(a, dtype=float):
    arr = np.asarray(a, dtype=dtype).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChpUnit:
    """Combined heat and power unit; produces `alpha` kW of useful heat
    per kW of electric output."""

    p_min: float
    p_max: float
    alpha: float
    cost_per_kwh: float


@dataclass(frozen=True)
class Phev:
    """Plug-in hybrid EV battery usable for charge/discharge while parked."""

    e_min: float
    e_max: float
    e_initial: float
    charge_rate_max: float
    discharge_rate_max: float
    eta_charge: float
    eta_discharge: float
    degradation_cost_per_kwh: float


@dataclass(frozen=True)
class DeferrableLoad:
    """Task needing a fixed energy inside a time window at a bounded rate.

    `t_arrive`/`t_depart` are 1-based inclusive periods.
    """

    t_arrive: int
    t_depart: int
    rate_min: float
    rate_max: float
    energy_nominal: float

    def window_length(self) -> int:
        return self.t_depart - self.t_arrive + 1

    def window_range(self) -> range:
        """0-based period indices inside the window."""
        return range(self.t_arrive - 1, self.t_depart)


@dataclass(frozen=True)
class GridTariff:
    price_buy: np.ndarray
    price_sell: np.ndarray
    exchange_cap: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "price_buy", _freeze(self.price_buy))
        object.__setattr__(self, "price_sell", _freeze(self.price_sell))
        object.__setattr__(self, "exchange_cap", _freeze(self.exchange_cap))


@dataclass(frozen=True)
class MicrogridConfig:
    """Full static description of the microgrid over the horizon."""

    horizon: int
    chp_units: tuple
    phevs: tuple
    deferrables: tuple
    tariff: GridTariff
    base_power: np.ndarray
    base_heat: np.ndarray
    solar_capacity: float
    period_hours: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "chp_units", tuple(self.chp_units))
        object.__setattr__(self, "phevs", tuple(self.phevs))
        object.__setattr__(self, "deferrables", tuple(self.deferrables))
        object.__setattr__(self, "base_power", _freeze(self.base_power))
        object.__setattr__(self, "base_heat", _freeze(self.base_heat))

    @property
    def n_chp(self) -> int:
        return len(self.chp_units)

    @property
    def n_phev(self) -> int:
        return len(self.phevs)

    @property
    def n_deferrable(self) -> int:
        return len(self.deferrables)


@dataclass(frozen=True)
class Scenario:
    """One joint realization of the uncertain inputs.

    solar: (T,) kW; parking: (n_phev, T) 0/1 availability;
    deferrable_energy: (n_deferrable,) kWh actually requested.
    """

    probability: float
    solar: np.ndarray
    parking: np.ndarray
    deferrable_energy: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "solar", _freeze(self.solar))
        object.__setattr__(self, "parking", _freeze(np.atleast_2d(self.parking)))
        object.__setattr__(self, "deferrable_energy", _freeze(self.deferrable_energy))


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str
    severity: str = "error"  # error | warning


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)

    def add(self, code, message, severity="error"):
        self.issues.append(ValidationIssue(code, message, severity))

    @property
    def errors(self):
        return [i for i in self.issues if i.severity == "error"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self):
        return [i.code for i in self.issues]

    def to_dict(self):
        return {
            "ok": self.ok,
            "issues": [
                {"code": i.code, "message": i.message, "severity": i.severity}
                for i in self.issues
            ],
        }


def validate_config(config: MicrogridConfig) -> ValidationReport:
    """Check every type invariant; violations become report entries."""
    rep = ValidationReport()
    T = config.horizon
    h = config.period_hours
    if T <= 0:
        rep.add("HORIZON_NONPOSITIVE", f"horizon must be >= 1, got {T}")
        return rep
    if h <= 0:
        rep.add("PERIOD_HOURS_NONPOSITIVE", f"period_hours must be > 0, got {h}")

    for i, u in enumerate(config.chp_units):
        if not (0 <= u.p_min <= u.p_max):
            rep.add("CHP_CAPACITY_ORDER", f"chp[{i}]: need 0 <= p_min <= p_max, got [{u.p_min}, {u.p_max}]")
        if u.alpha <= 0:
            rep.add("CHP_ALPHA_NONPOSITIVE", f"chp[{i}]: alpha must be > 0, got {u.alpha}")
        if u.cost_per_kwh < 0:
            rep.add("CHP_COST_NEGATIVE", f"chp[{i}]: cost_per_kwh must be >= 0")

    for m, ev in enumerate(config.phevs):
        if not (0 <= ev.e_min <= ev.e_initial <= ev.e_max):
            rep.add(
                "PHEV_ENERGY_ORDER",
                f"phev[{m}]: need 0 <= e_min <= e_initial <= e_max, "
                f"got ({ev.e_min}, {ev.e_initial}, {ev.e_max})",
            )
        if ev.charge_rate_max < 0 or ev.discharge_rate_max < 0:
            rep.add("PHEV_RATE_NEGATIVE", f"phev[{m}]: rate limits must be >= 0")
        if not (0 < ev.eta_charge <= 1) or not (0 < ev.eta_discharge <= 1):
            rep.add("PHEV_ETA_RANGE", f"phev[{m}]: efficiencies must lie in (0, 1]")
        if ev.degradation_cost_per_kwh < 0:
            rep.add("PHEV_COST_NEGATIVE", f"phev[{m}]: degradation cost must be >= 0")

    for j, d in enumerate(config.deferrables):
        if d.t_arrive > d.t_depart:
            rep.add("WINDOW_REVERSED", f"deferrable[{j}]: t_arrive {d.t_arrive} > t_depart {d.t_depart}")
            continue
        if d.t_arrive < 1 or d.t_depart > T:
            rep.add("WINDOW_OUT_OF_HORIZON", f"deferrable[{j}]: window [{d.t_arrive}, {d.t_depart}] outside [1, {T}]")
        if not (0 <= d.rate_min <= d.rate_max):
            rep.add("DEFER_RATE_ORDER", f"deferrable[{j}]: need 0 <= rate_min <= rate_max")
        lo = d.rate_min * d.window_length() * h
        hi = d.rate_max * d.window_length() * h
        if not (lo <= d.energy_nominal <= hi):
            rep.add(
                "WINDOW_INFEASIBLE",
                f"deferrable[{j}]: energy {d.energy_nominal} kWh outside deliverable "
                f"range [{lo}, {hi}] kWh of its window",
            )

    tar = config.tariff
    for name, arr in (("price_buy", tar.price_buy), ("price_sell", tar.price_sell),
                      ("exchange_cap", tar.exchange_cap)):
        if arr.shape != (T,):
            rep.add("TARIFF_LENGTH", f"tariff.{name} must have length {T}, got {arr.shape}")
        elif np.any(arr < 0):
            rep.add("TARIFF_NEGATIVE", f"tariff.{name} has negative entries")
    if tar.price_buy.shape == (T,) and tar.price_sell.shape == (T,):
        if np.any(tar.price_sell > tar.price_buy + 1e-12):
            rep.add(
                "SELL_ABOVE_BUY",
                "price_sell exceeds price_buy in some period; buy/sell exclusivity "
                "of optimal schedules is no longer guaranteed",
                severity="warning",
            )

    for name, arr in (("base_power", config.base_power), ("base_heat", config.base_heat)):
        if arr.shape != (T,):
            rep.add("BASE_LENGTH", f"{name} must have length {T}, got {arr.shape}")
        elif np.any(arr < 0):
            rep.add("BASE_NEGATIVE", f"{name} has negative entries")
    if config.solar_capacity < 0:
        rep.add("SOLAR_CAPACITY_NEGATIVE", f"solar_capacity must be >= 0, got {config.solar_capacity}")
    return rep


def validate_scenario(scenario: Scenario, config: MicrogridConfig) -> ValidationReport:
    rep = ValidationReport()
    T = config.horizon
    if scenario.probability < 0:
        rep.add("PROBABILITY_NEGATIVE", f"probability {scenario.probability} < 0")
    if scenario.solar.shape != (T,):
        rep.add("SOLAR_LENGTH", f"solar must have length {T}")
    else:
        if np.any(scenario.solar < 0):
            rep.add("SOLAR_NEGATIVE", "solar has negative entries")
        if np.any(scenario.solar > config.solar_capacity + 1e-9):
            rep.add("SOLAR_ABOVE_CAPACITY", "solar exceeds installed capacity")
    if scenario.parking.shape != (config.n_phev, T):
        rep.add("PARKING_SHAPE", f"parking must be ({config.n_phev}, {T})")
    elif not np.all((scenario.parking == 0) | (scenario.parking == 1)):
        rep.add("PARKING_NOT_BINARY", "parking entries must be 0 or 1")
    if scenario.deferrable_energy.shape != (config.n_deferrable,):
        rep.add("DEFER_ENERGY_LENGTH", f"deferrable_energy must have length {config.n_deferrable}")
    return rep


# --------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class Schedule:
    """Per-scenario decision trajectories plus the derived storage path.

    Shapes: chp_power (n_chp, T, S); charge/discharge/storage (n_phev, T, S);
    serve (n_deferrable, T, S); grid_buy/grid_sell (T, S).  `storage` is
    always recomputed from charge/discharge, never set independently.
    """

    chp_power: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    serve: np.ndarray
    grid_buy: np.ndarray
    grid_sell: np.ndarray
    storage: np.ndarray

    @classmethod
    def from_decisions(cls, config, chp_power, charge, discharge, serve,
                       grid_buy, grid_sell):
        charge = np.asarray(charge, dtype=float)
        discharge = np.asarray(discharge, dtype=float)
        storage = derive_storage(config, charge, discharge)
        return cls(
            chp_power=_freeze(chp_power),
            charge=_freeze(charge),
            discharge=_freeze(discharge),
            serve=_freeze(serve),
            grid_buy=_freeze(grid_buy),
            grid_sell=_freeze(grid_sell),
            storage=_freeze(storage),
        )

    @classmethod
    def zeros(cls, config, n_scenarios):
        T, S = config.horizon, n_scenarios
        return cls.from_decisions(
            config,
            np.zeros((config.n_chp, T, S)),
            np.zeros((config.n_phev, T, S)),
            np.zeros((config.n_phev, T, S)),
            np.zeros((config.n_deferrable, T, S)),
            np.zeros((T, S)),
            np.zeros((T, S)),
        )

    @property
    def n_scenarios(self) -> int:
        return self.grid_buy.shape[1]

    def scenario_slice(self, s: int) -> "ScheduleSlice":
        return ScheduleSlice(
            chp_power=self.chp_power[:, :, s],
            charge=self.charge[:, :, s],
            discharge=self.discharge[:, :, s],
            serve=self.serve[:, :, s],
            grid_buy=self.grid_buy[:, s],
            grid_sell=self.grid_sell[:, s],
            storage=self.storage[:, :, s],
        )

    def to_dict(self):
        return {
            "chp_power": self.chp_power.tolist(),
            "charge": self.charge.tolist(),
            "discharge": self.discharge.tolist(),
            "serve": self.serve.tolist(),
            "grid_buy": self.grid_buy.tolist(),
            "grid_sell": self.grid_sell.tolist(),
            "storage": self.storage.tolist(),
        }


@dataclass(frozen=True)
class ScheduleSlice:
    """Single-scenario view of a Schedule (2-D arrays, one column per period)."""

    chp_power: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    serve: np.ndarray
    grid_buy: np.ndarray
    grid_sell: np.ndarray
    storage: np.ndarray


def derive_storage(config: MicrogridConfig, charge, discharge) -> np.ndarray:
    """Stored-energy path implied by the charge/discharge trajectories.

    storage[m, t] = storage[m, t-1] + (eta+ * charge - discharge / eta-) * h,
    starting from each vehicle's initial energy.
    """
    h = config.period_hours
    eta_c = np.array([ev.eta_charge for ev in config.phevs])
    eta_d = np.array([ev.eta_discharge for ev in config.phevs])
    e0 = np.array([ev.e_initial for ev in config.phevs])
    if config.n_phev == 0:
        return np.zeros_like(np.asarray(charge, dtype=float))
    delta = (eta_c[:, None, None] * charge - discharge / eta_d[:, None, None]) * h
    return e0[:, None, None] + np.cumsum(delta, axis=1)


def evaluate_cost(config: MicrogridConfig, scenarios, schedule: Schedule) -> float:
    """Probability-weighted operating cost of a schedule.

    Sums CHP production cost, PHEV degradation on throughput (charge
    weighted by eta+, discharge by 1/eta-), and grid purchases net of
    sales, all scaled by the period length.
    """
    T, S = config.horizon, len(scenarios.scenarios)
    _check_dims(config, S, schedule)
    probs = np.array([sc.probability for sc in scenarios.scenarios])
    h = config.period_hours

    per_ts = np.zeros((T, S))
    if config.n_chp:
        c_chp = np.array([u.cost_per_kwh for u in config.chp_units])
        per_ts += np.tensordot(c_chp, schedule.chp_power, axes=(0, 0))
    if config.n_phev:
        c_ev = np.array([ev.degradation_cost_per_kwh for ev in config.phevs])
        eta_c = np.array([ev.eta_charge for ev in config.phevs])
        eta_d = np.array([ev.eta_discharge for ev in config.phevs])
        per_ts += np.tensordot(c_ev * eta_c, schedule.charge, axes=(0, 0))
        per_ts += np.tensordot(c_ev / eta_d, schedule.discharge, axes=(0, 0))
    per_ts += config.tariff.price_buy[:, None] * schedule.grid_buy
    per_ts -= config.tariff.price_sell[:, None] * schedule.grid_sell
    return float(h * probs @ per_ts.sum(axis=0))


@dataclass
class BalanceReport:
    """Per-period power residual and heat surplus for one scenario."""

    power_residual: np.ndarray
    heat_surplus: np.ndarray
    flags: list  # (period, "power" | "heat")

    @property
    def ok(self) -> bool:
        return not self.flags

    def to_dict(self):
        return {
            "ok": self.ok,
            "power_residual": self.power_residual.tolist(),
            "heat_surplus": self.heat_surplus.tolist(),
            "flags": [{"t": int(t), "kind": k} for t, k in self.flags],
        }


def check_balance(config: MicrogridConfig, scenario: Scenario,
                  schedule_slice: ScheduleSlice, tol: float = 1e-6) -> BalanceReport:
    """Evaluate the power and heat balance of one scenario's schedule.

    Power residual per period: (generation + net discharge + solar + buy)
    minus (sell + base load + deferrable serving); flagged when its
    magnitude exceeds tol.  Heat surplus is CHP heat minus heat demand;
    flagged when below -tol (surplus itself is disposed freely).
    """
    T = config.horizon
    sl = schedule_slice
    supply = sl.chp_power.sum(axis=0) if config.n_chp else np.zeros(T)
    net_dis = (sl.discharge - sl.charge).sum(axis=0) if config.n_phev else np.zeros(T)
    served = sl.serve.sum(axis=0) if config.n_deferrable else np.zeros(T)
    power_residual = (
        supply + net_dis + scenario.solar + sl.grid_buy
        - (sl.grid_sell + config.base_power + served)
    )
    if config.n_chp:
        alphas = np.array([u.alpha for u in config.chp_units])
        heat = np.tensordot(alphas, sl.chp_power, axes=(0, 0))
    else:
        heat = np.zeros(T)
    heat_surplus = heat - config.base_heat

    flags = [(int(t), "power") for t in np.nonzero(np.abs(power_residual) > tol)[0]]
    flags += [(int(t), "heat") for t in np.nonzero(heat_surplus < -tol)[0]]
    flags.sort()
    return BalanceReport(power_residual=power_residual, heat_surplus=heat_surplus, flags=flags)


def _check_dims(config, S, schedule):
    T = config.horizon
    expect = {
        "chp_power": (config.n_chp, T, S),
        "charge": (config.n_phev, T, S),
        "discharge": (config.n_phev, T, S),
        "serve": (config.n_deferrable, T, S),
        "grid_buy": (T, S),
        "grid_sell": (T, S),
    }
    for name, shape in expect.items():
        got = getattr(schedule, name).shape
        if got != shape:
            raise ValueError(f"schedule.{name} has shape {got}, expected {shape}")
