import numpy as np
import pytest

from mgsched.model import ChpUnit, DeferrableLoad, GridTariff, MicrogridConfig, Phev
from mgsched.scenario import GenerationSpec


def make_config(T=6, n_chp=1, n_phev=1, n_def=1, cap=4000.0, period_hours=1.0):
    """Small self-consistent microgrid used across the suite."""
    price_buy = np.linspace(0.08, 0.14, T)
    chp = tuple(
        ChpUnit(p_min=0.0, p_max=150.0 + 20 * i, alpha=1.2, cost_per_kwh=0.085 + 0.005 * i)
        for i in range(n_chp)
    )
    phevs = tuple(
        Phev(e_min=4.0, e_max=18.0, e_initial=9.0, charge_rate_max=4.0,
             discharge_rate_max=4.0, eta_charge=0.9, eta_discharge=0.9,
             degradation_cost_per_kwh=0.0035)
        for _ in range(n_phev)
    )
    defs = tuple(
        DeferrableLoad(t_arrive=2, t_depart=min(T, 4), rate_min=0.0, rate_max=3.0,
                       energy_nominal=4.0)
        for _ in range(n_def)
    )
    return MicrogridConfig(
        horizon=T,
        period_hours=period_hours,
        chp_units=chp,
        phevs=phevs,
        deferrables=defs,
        tariff=GridTariff(price_buy, 0.8 * price_buy, np.full(T, cap)),
        base_power=np.full(T, 80.0) + 10 * np.arange(T),
        base_heat=np.full(T, 40.0),
        solar_capacity=200.0,
    )


def make_genspec(config, sigma=0.3, parking_prob=0.7, seed=123):
    T = config.horizon
    t = np.arange(T)
    mean = 120.0 * np.exp(-0.5 * ((t - (T - 1) / 2) / max(T / 5, 1.0)) ** 2)
    return GenerationSpec(
        solar_profile_mean=mean,
        solar_noise_model="multiplicative-lognormal",
        solar_sigma=sigma,
        parking_prob=parking_prob,
        deferrable_energy_mean=np.full(config.n_deferrable, 4.0),
        deferrable_energy_spread=np.full(config.n_deferrable, 2.0),
        rng_seed=seed,
    )


@pytest.fixture
def small_config():
    return make_config()


@pytest.fixture
def small_genspec(small_config):
    return make_genspec(small_config)
