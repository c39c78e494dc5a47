"""Configuration ingestion: one JSON document mirroring MicrogridConfig.

Time-series fields (tariff series, base loads, solar mean profile) accept
either an inline list of length T or a reference {"csv": path, "column":
name} to a CSV file with a header row and one row per period; `column`
may be omitted when the file has a single column.  Relative CSV paths
resolve against the directory of the JSON document.  Fleet entries accept
an optional "count" to replicate identical units.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .model import ChpUnit, DeferrableLoad, GridTariff, MicrogridConfig, Phev
from .scenario import GenerationSpec


class IngestError(ValueError):
    """Unreadable or structurally invalid configuration input."""


def _read_csv_column(path: Path, column: str | None):
    try:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise IngestError(f"cannot read {path}: {e}") from e
    if not rows:
        raise IngestError(f"{path}: empty CSV")
    header = rows[0]
    if column is None:
        if len(header) != 1:
            raise IngestError(f"{path}: multiple columns, specify one of {header}")
        idx = 0
    else:
        try:
            idx = header.index(column)
        except ValueError:
            raise IngestError(f"{path}: no column named {column!r} in {header}") from None
    try:
        return np.array([float(r[idx]) for r in rows[1:]])
    except (ValueError, IndexError) as e:
        raise IngestError(f"{path}: bad numeric data in column {column!r}: {e}") from e


def _series(value, base_dir: Path, what: str):
    if isinstance(value, dict):
        if "csv" not in value:
            raise IngestError(f"{what}: time-series reference needs a 'csv' key")
        path = Path(value["csv"])
        if not path.is_absolute():
            path = base_dir / path
        return _read_csv_column(path, value.get("column"))
    try:
        return np.asarray(value, dtype=float)
    except (TypeError, ValueError) as e:
        raise IngestError(f"{what}: expected a list of numbers or a csv reference") from e


def _require(data: dict, key: str, what: str):
    if key not in data:
        raise IngestError(f"{what}: missing required field {key!r}")
    return data[key]


def _replicated(entries, builder, what):
    out = []
    for k, raw in enumerate(entries):
        if not isinstance(raw, dict):
            raise IngestError(f"{what}[{k}]: expected an object")
        raw = dict(raw)
        count = int(raw.pop("count", 1))
        if count < 1:
            raise IngestError(f"{what}[{k}]: count must be >= 1")
        try:
            item = builder(**raw)
        except TypeError as e:
            raise IngestError(f"{what}[{k}]: {e}") from e
        out.extend([item] * count)
    return out


def config_from_dict(data: dict, base_dir=".") -> MicrogridConfig:
    base_dir = Path(base_dir)
    horizon = int(_require(data, "horizon", "config"))
    tariff_raw = _require(data, "tariff", "config")
    tariff = GridTariff(
        price_buy=_series(_require(tariff_raw, "price_buy", "tariff"), base_dir, "price_buy"),
        price_sell=_series(_require(tariff_raw, "price_sell", "tariff"), base_dir, "price_sell"),
        exchange_cap=_series(_require(tariff_raw, "exchange_cap", "tariff"), base_dir, "exchange_cap"),
    )
    return MicrogridConfig(
        horizon=horizon,
        period_hours=float(data.get("period_hours", 1.0)),
        chp_units=tuple(_replicated(data.get("chp_units", []), ChpUnit, "chp_units")),
        phevs=tuple(_replicated(data.get("phevs", []), Phev, "phevs")),
        deferrables=tuple(_replicated(data.get("deferrables", []), DeferrableLoad, "deferrables")),
        tariff=tariff,
        base_power=_series(_require(data, "base_power", "config"), base_dir, "base_power"),
        base_heat=_series(_require(data, "base_heat", "config"), base_dir, "base_heat"),
        solar_capacity=float(_require(data, "solar_capacity", "config")),
    )


def load_config(path) -> MicrogridConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as e:
        raise IngestError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise IngestError(f"{path}: invalid JSON: {e}") from e
    return config_from_dict(data, base_dir=path.parent)


def generation_spec_from_dict(data: dict, base_dir=".") -> GenerationSpec:
    base_dir = Path(base_dir)
    samples = None
    if "solar_samples" in data:
        raw = data["solar_samples"]
        if isinstance(raw, dict):
            path = Path(raw["csv"])
            if not path.is_absolute():
                path = base_dir / path
            with open(path, newline="") as f:
                rows = list(csv.reader(f))
            # one column per sample trajectory, one row per period
            body = np.array([[float(v) for v in r] for r in rows[1:]])
            samples = body.T
        else:
            samples = np.asarray(raw, dtype=float)
    parking = data.get("parking_prob", 1.0)
    if isinstance(parking, list):
        parking = np.asarray(parking, dtype=float)
    try:
        return GenerationSpec(
            solar_profile_mean=_series(_require(data, "solar_profile_mean", "generation spec"),
                                       base_dir, "solar_profile_mean"),
            solar_noise_model=data.get("solar_noise_model", "multiplicative-lognormal"),
            solar_sigma=float(data.get("solar_sigma", 0.0)),
            solar_samples=samples,
            parking_prob=parking,
            deferrable_energy_mean=np.asarray(data.get("deferrable_energy_mean", []), dtype=float),
            deferrable_energy_spread=np.asarray(data.get("deferrable_energy_spread", []), dtype=float),
            rng_seed=int(data.get("rng_seed", 0)),
        )
    except ValueError as e:
        raise IngestError(f"generation spec: {e}") from e


def load_generation_spec(path) -> GenerationSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as e:
        raise IngestError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise IngestError(f"{path}: invalid JSON: {e}") from e
    return generation_spec_from_dict(data, base_dir=path.parent)
