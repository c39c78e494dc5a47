import numpy as np
import pytest

from conftest import make_config
from mgsched.model import (
    ChpUnit,
    DeferrableLoad,
    GridTariff,
    MicrogridConfig,
    Phev,
    Scenario,
    Schedule,
    check_balance,
    derive_storage,
    evaluate_cost,
    validate_config,
    validate_scenario,
)
from mgsched.scenario import ScenarioSet
from oracles import cost_by_hand


def config_one_of_each(T=2, **kw):
    defaults = dict(
        horizon=T,
        chp_units=(ChpUnit(0.0, 200.0, 1.2, 0.05),),
        phevs=(Phev(4.0, 18.0, 9.0, 4.0, 4.0, 0.9, 0.9, 0.0035),),
        deferrables=(),
        tariff=GridTariff(np.full(T, 0.10), np.full(T, 0.08), np.full(T, 4000.0)),
        base_power=np.zeros(T),
        base_heat=np.zeros(T),
        solar_capacity=100.0,
    )
    defaults.update(kw)
    return MicrogridConfig(**defaults)


def uniform_set(config, n):
    T = config.horizon
    return ScenarioSet(tuple(
        Scenario(1.0 / n, np.zeros(T), np.ones((config.n_phev, T)),
                 np.zeros(config.n_deferrable))
        for _ in range(n)
    ))


# -- validation -------------------------------------------------------------


def test_case_study_phev_parameters_are_valid():
    # 18 kWh pack, 4 kWh floor, 4 kW symmetric rates, 0.9 efficiencies
    cfg = config_one_of_each()
    assert validate_config(cfg).ok


def test_reversed_window_reported():
    cfg = config_one_of_each(
        T=6, deferrables=(DeferrableLoad(5, 4, 0.0, 2.0, 1.0),),
        base_power=np.zeros(6), base_heat=np.zeros(6),
        tariff=GridTariff(np.full(6, 0.1), np.full(6, 0.08), np.full(6, 100.0)),
    )
    rep = validate_config(cfg)
    assert not rep.ok
    assert "WINDOW_REVERSED" in rep.codes()


def test_undeliverable_window_reported():
    # max 2 kW over a 3 h window cannot deliver 7 kWh
    cfg = config_one_of_each(
        T=6, deferrables=(DeferrableLoad(2, 4, 0.0, 2.0, 7.0),),
        base_power=np.zeros(6), base_heat=np.zeros(6),
        tariff=GridTariff(np.full(6, 0.1), np.full(6, 0.08), np.full(6, 100.0)),
    )
    rep = validate_config(cfg)
    assert not rep.ok
    assert "WINDOW_INFEASIBLE" in rep.codes()


def test_sell_above_buy_is_warning_only():
    T = 2
    cfg = config_one_of_each(
        T=T, tariff=GridTariff(np.full(T, 0.10), np.full(T, 0.12), np.full(T, 10.0)),
    )
    rep = validate_config(cfg)
    assert rep.ok  # warnings don't invalidate
    assert "SELL_ABOVE_BUY" in rep.codes()


def test_every_invariant_violation_has_a_code():
    T = 2
    cfg = MicrogridConfig(
        horizon=T,
        chp_units=(ChpUnit(5.0, 2.0, -1.0, -0.1),),
        phevs=(Phev(10.0, 5.0, 20.0, -1.0, 4.0, 1.5, 0.0, -0.1),),
        deferrables=(DeferrableLoad(1, 9, 3.0, 1.0, 1.0),),
        tariff=GridTariff([-0.1, 0.1], [0.05, 0.05], [10.0, 10.0]),
        base_power=[-5.0, 0.0],
        base_heat=[0.0, 0.0],
        solar_capacity=-3.0,
    )
    codes = set(validate_config(cfg).codes())
    assert {"CHP_CAPACITY_ORDER", "CHP_ALPHA_NONPOSITIVE", "CHP_COST_NEGATIVE",
            "PHEV_ENERGY_ORDER", "PHEV_RATE_NEGATIVE", "PHEV_ETA_RANGE",
            "WINDOW_OUT_OF_HORIZON", "DEFER_RATE_ORDER", "TARIFF_NEGATIVE",
            "BASE_NEGATIVE", "SOLAR_CAPACITY_NEGATIVE"} <= codes


def test_scenario_validation():
    cfg = config_one_of_each()
    ok = Scenario(0.5, [10.0, 20.0], [[1.0, 0.0]], [])
    assert validate_scenario(ok, cfg).ok
    bad = Scenario(0.5, [10.0, 500.0], [[1.0, 0.5]], [])
    codes = validate_scenario(bad, cfg).codes()
    assert "SOLAR_ABOVE_CAPACITY" in codes and "PARKING_NOT_BINARY" in codes


# -- cost -------------------------------------------------------------------


def test_zero_schedule_costs_nothing():
    cfg = config_one_of_each()
    ss = uniform_set(cfg, 2)
    assert evaluate_cost(cfg, ss, Schedule.zeros(cfg, 2)) == 0.0


def test_charging_cost_uses_efficiency_weighted_throughput():
    # 4 kW for one hour at 0.0035 $/kWh with eta+ = 0.9 -> 0.0126
    cfg = config_one_of_each(T=1, tariff=GridTariff([0.1], [0.08], [100.0]),
                             base_power=[0.0], base_heat=[0.0])
    ss = uniform_set(cfg, 1)
    charge = np.zeros((1, 1, 1))
    charge[0, 0, 0] = 4.0
    sched = Schedule.from_decisions(
        cfg, np.zeros((1, 1, 1)), charge, np.zeros((1, 1, 1)),
        np.zeros((0, 1, 1)), np.zeros((1, 1)), np.zeros((1, 1)),
    )
    assert evaluate_cost(cfg, ss, sched) == pytest.approx(0.0126, abs=1e-12)


def test_chp_plus_purchase_example():
    # CHP 100 kW for 2 h at 0.05 plus 10 kW bought for 1 h at 0.10 -> 11.0
    cfg = config_one_of_each(T=2)
    ss = uniform_set(cfg, 1)
    chp = np.full((1, 2, 1), 100.0)
    buy = np.zeros((2, 1))
    buy[0, 0] = 10.0
    sched = Schedule.from_decisions(
        cfg, chp, np.zeros((1, 2, 1)), np.zeros((1, 2, 1)),
        np.zeros((0, 2, 1)), buy, np.zeros((2, 1)),
    )
    got = evaluate_cost(cfg, ss, sched)
    assert got == pytest.approx(11.0, abs=1e-12)
    assert got == pytest.approx(cost_by_hand(cfg, ss, sched), abs=1e-12)


def test_cost_matches_term_by_term_oracle_on_random_schedules():
    rng = np.random.default_rng(2)
    cfg = make_config(T=5, n_chp=2, n_phev=3, n_def=2)
    S = 3
    probs = rng.dirichlet(np.ones(S))
    ss = ScenarioSet(tuple(
        Scenario(probs[s], rng.uniform(0, 100, 5), np.ones((3, 5)), np.zeros(2))
        for s in range(S)
    ))
    sched = Schedule.from_decisions(
        cfg,
        rng.uniform(0, 50, (2, 5, S)), rng.uniform(0, 4, (3, 5, S)),
        rng.uniform(0, 4, (3, 5, S)), rng.uniform(0, 3, (2, 5, S)),
        rng.uniform(0, 20, (5, S)), rng.uniform(0, 20, (5, S)),
    )
    assert evaluate_cost(cfg, ss, sched) == pytest.approx(
        cost_by_hand(cfg, ss, sched), rel=1e-12)


def test_cost_is_linear_in_the_schedule():
    rng = np.random.default_rng(8)
    cfg = make_config(T=4, n_chp=1, n_phev=2, n_def=1)
    S = 2
    ss = ScenarioSet(tuple(
        Scenario(0.5, rng.uniform(0, 50, 4), np.ones((2, 4)), np.zeros(1))
        for _ in range(S)
    ))

    def random_schedule():
        return Schedule.from_decisions(
            cfg,
            rng.uniform(0, 50, (1, 4, S)), rng.uniform(0, 4, (2, 4, S)),
            rng.uniform(0, 4, (2, 4, S)), rng.uniform(0, 3, (1, 4, S)),
            rng.uniform(0, 20, (4, S)), rng.uniform(0, 20, (4, S)),
        )

    for _ in range(5):
        X, Y = random_schedule(), random_schedule()
        a, b = rng.uniform(-2, 2, 2)
        combo = Schedule.from_decisions(
            cfg,
            a * X.chp_power + b * Y.chp_power,
            a * X.charge + b * Y.charge,
            a * X.discharge + b * Y.discharge,
            a * X.serve + b * Y.serve,
            a * X.grid_buy + b * Y.grid_buy,
            a * X.grid_sell + b * Y.grid_sell,
        )
        expect = a * evaluate_cost(cfg, ss, X) + b * evaluate_cost(cfg, ss, Y)
        assert evaluate_cost(cfg, ss, combo) == pytest.approx(expect, rel=1e-10, abs=1e-10)


def test_dimension_mismatch_raises():
    cfg = config_one_of_each()
    ss = uniform_set(cfg, 2)
    with pytest.raises(ValueError, match="shape"):
        evaluate_cost(cfg, ss, Schedule.zeros(cfg, 3))


# -- storage ----------------------------------------------------------------


def test_storage_recursion_matches_loop():
    rng = np.random.default_rng(4)
    cfg = make_config(T=6, n_phev=2, period_hours=0.5)
    charge = rng.uniform(0, 4, (2, 6, 3))
    discharge = rng.uniform(0, 4, (2, 6, 3))
    got = derive_storage(cfg, charge, discharge)
    for m, ev in enumerate(cfg.phevs):
        for s in range(3):
            e = ev.e_initial
            for t in range(6):
                e += (ev.eta_charge * charge[m, t, s]
                      - discharge[m, t, s] / ev.eta_discharge) * cfg.period_hours
                assert got[m, t, s] == pytest.approx(e, rel=1e-12)


# -- balance ----------------------------------------------------------------


def test_zero_everything_balances():
    cfg = config_one_of_each(T=2)
    scen = Scenario(1.0, np.zeros(2), np.ones((1, 2)), np.zeros(0))
    rep = check_balance(cfg, scen, Schedule.zeros(cfg, 1).scenario_slice(0))
    assert rep.ok
    assert np.all(rep.power_residual == 0.0)


def test_heat_ratio_exactly_covers_demand():
    # 100 kW at heat ratio 1.2 against 120 kW-thermal demand -> surplus 0
    cfg = config_one_of_each(
        T=1, base_power=[100.0], base_heat=[120.0],
        tariff=GridTariff([0.1], [0.08], [100.0]),
    )
    scen = Scenario(1.0, np.zeros(1), np.ones((1, 1)), np.zeros(0))
    chp = np.full((1, 1, 1), 100.0)
    sched = Schedule.from_decisions(
        cfg, chp, np.zeros((1, 1, 1)), np.zeros((1, 1, 1)),
        np.zeros((0, 1, 1)), np.zeros((1, 1)), np.zeros((1, 1)),
    )
    rep = check_balance(cfg, scen, sched.scenario_slice(0))
    assert rep.heat_surplus[0] == pytest.approx(0.0, abs=1e-12)
    # power side: 100 kW of CHP against 100 kW of base load balances too
    assert rep.power_residual[0] == pytest.approx(0.0, abs=1e-12)
    assert rep.ok


def test_undersupply_residual_is_flagged():
    # demand 50, solar 30, buy 15 -> residual -5, flagged
    cfg = config_one_of_each(
        T=1, chp_units=(), phevs=(), base_power=[50.0], base_heat=[0.0],
        tariff=GridTariff([0.1], [0.08], [100.0]),
    )
    scen = Scenario(1.0, np.array([30.0]), np.zeros((0, 1)), np.zeros(0))
    buy = np.full((1, 1), 15.0)
    sched = Schedule.from_decisions(
        cfg, np.zeros((0, 1, 1)), np.zeros((0, 1, 1)), np.zeros((0, 1, 1)),
        np.zeros((0, 1, 1)), buy, np.zeros((1, 1)),
    )
    rep = check_balance(cfg, scen, sched.scenario_slice(0), tol=1e-6)
    assert rep.power_residual[0] == pytest.approx(-5.0)
    assert (0, "power") in rep.flags


def test_heat_deficit_flagged_surplus_not():
    cfg = config_one_of_each(
        T=1, base_power=[0.0], base_heat=[50.0],
        tariff=GridTariff([0.1], [0.08], [100.0]),
    )
    scen = Scenario(1.0, np.zeros(1), np.ones((1, 1)), np.zeros(0))
    for p, expect_ok in ((10.0, False), (100.0, True)):
        chp = np.full((1, 1, 1), p)
        sell = np.full((1, 1), p)  # keep power balanced
        sched = Schedule.from_decisions(
            cfg, chp, np.zeros((1, 1, 1)), np.zeros((1, 1, 1)),
            np.zeros((0, 1, 1)), np.zeros((1, 1)), sell,
        )
        rep = check_balance(cfg, scen, sched.scenario_slice(0))
        assert (("heat" in [k for _, k in rep.flags]) is not expect_ok)
