"""Monte Carlo scenario generation and fast-forward scenario reduction.

Uncertainty has three independent blocks: solar output trajectories,
PHEV parking availability (Bernoulli per vehicle and period), and the
energy requested by each deferrable load.  Reduction follows the greedy
fast-forward selection: starting from the empty set, repeatedly add the
scenario that minimizes the probability-weighted distance between the
full set and the kept set, then move each discarded scenario's
probability to its nearest kept neighbour.

Every scenario draws from its own substream seeded by (seed, index), so
generation is reproducible regardless of chunking or parallelism.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import MicrogridConfig, Scenario

NOISE_MODELS = ("multiplicative-lognormal", "truncated-normal", "empirical")


@dataclass(frozen=True)
class GenerationSpec:
    """Parameters of the scenario sampler.

    parking_prob broadcasts to (n_phev, T): give a scalar, a per-period
    row, or the full matrix.  For the empirical noise model supply
    solar_samples with one trajectory per row.
    """

    solar_profile_mean: np.ndarray
    solar_noise_model: str = "multiplicative-lognormal"
    solar_sigma: float = 0.0
    solar_samples: np.ndarray | None = None
    parking_prob: float | np.ndarray = 1.0
    deferrable_energy_mean: np.ndarray = ()
    deferrable_energy_spread: np.ndarray = ()
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "solar_profile_mean",
                           np.asarray(self.solar_profile_mean, dtype=float))
        if self.solar_samples is not None:
            object.__setattr__(self, "solar_samples",
                               np.atleast_2d(np.asarray(self.solar_samples, dtype=float)))
        object.__setattr__(self, "deferrable_energy_mean",
                           np.asarray(self.deferrable_energy_mean, dtype=float))
        object.__setattr__(self, "deferrable_energy_spread",
                           np.asarray(self.deferrable_energy_spread, dtype=float))
        if self.solar_noise_model not in NOISE_MODELS:
            raise ValueError(f"unknown noise model {self.solar_noise_model!r}")
        if self.solar_sigma < 0:
            raise ValueError("solar_sigma must be >= 0")
        if np.any(self.solar_profile_mean < 0):
            raise ValueError("solar_profile_mean must be nonnegative")
        prob = np.asarray(self.parking_prob, dtype=float)
        if np.any(prob < 0) or np.any(prob > 1):
            raise ValueError("parking probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        p = self.probabilities
        if np.any(p < 0):
            raise ValueError("scenario probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"scenario probabilities sum to {p.sum()}, not 1")

    def __len__(self):
        return len(self.scenarios)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios])

    def solar_matrix(self) -> np.ndarray:
        return np.stack([s.solar for s in self.scenarios])

    def parking_tensor(self) -> np.ndarray:
        return np.stack([s.parking for s in self.scenarios])

    def deferrable_matrix(self) -> np.ndarray:
        return np.stack([s.deferrable_energy for s in self.scenarios])

    def mean_scenario(self) -> Scenario:
        """Probability-weighted mean of all blocks, as a single scenario.

        Parking becomes fractional availability; this is the input of the
        expected-value (deterministic) baseline, not a physical scenario.
        """
        p = self.probabilities
        return Scenario(
            probability=1.0,
            solar=np.tensordot(p, self.solar_matrix(), axes=(0, 0)),
            parking=np.tensordot(p, self.parking_tensor(), axes=(0, 0)),
            deferrable_energy=np.tensordot(p, self.deferrable_matrix(), axes=(0, 0)),
        )

    def single(self, s: int) -> "ScenarioSet":
        """One scenario pulled out with probability 1 (for subproblems)."""
        sc = self.scenarios[s]
        return ScenarioSet((Scenario(1.0, sc.solar, sc.parking, sc.deferrable_energy),))


def generate(spec: GenerationSpec, config: MicrogridConfig, count: int) -> ScenarioSet:
    """Draw `count` equally probable scenarios, deterministic in rng_seed."""
    if count <= 0:
        raise ValueError("count must be >= 1")
    T = config.horizon
    n_ev = config.n_phev
    n_def = config.n_deferrable
    if spec.solar_profile_mean.shape != (T,):
        raise ValueError(f"solar_profile_mean must have length {T}")
    if spec.solar_noise_model == "empirical":
        if spec.solar_samples is None:
            raise ValueError("empirical noise model needs solar_samples")
        if spec.solar_samples.shape[1] != T:
            raise ValueError("solar_samples rows must have length T")
    prob = np.broadcast_to(np.asarray(spec.parking_prob, dtype=float), (n_ev, T))
    if spec.deferrable_energy_mean.shape != (n_def,):
        raise ValueError(f"deferrable_energy_mean must have length {n_def}")
    if spec.deferrable_energy_spread.shape != (n_def,):
        raise ValueError(f"deferrable_energy_spread must have length {n_def}")

    cap = config.solar_capacity
    h = config.period_hours
    e_lo = np.array([d.rate_min * d.window_length() * h for d in config.deferrables])
    e_hi = np.array([d.rate_max * d.window_length() * h for d in config.deferrables])

    out = []
    for k in range(count):
        rng = np.random.default_rng([spec.rng_seed, k])
        if spec.solar_noise_model == "multiplicative-lognormal":
            z = rng.standard_normal(T)
            factor = np.exp(spec.solar_sigma * z - 0.5 * spec.solar_sigma**2)
            solar = spec.solar_profile_mean * factor
        elif spec.solar_noise_model == "truncated-normal":
            z = rng.standard_normal(T)
            solar = spec.solar_profile_mean + spec.solar_sigma * z
        else:
            row = int(rng.integers(0, spec.solar_samples.shape[0]))
            solar = spec.solar_samples[row]
        solar = np.clip(solar, 0.0, cap)
        parking = (rng.random((n_ev, T)) < prob).astype(float)
        if n_def:
            u = rng.random(n_def)
            energy = spec.deferrable_energy_mean + (2 * u - 1) * spec.deferrable_energy_spread
            energy = np.clip(energy, e_lo, e_hi)
        else:
            energy = np.zeros(0)
        out.append(Scenario(1.0 / count, solar, parking, energy))
    return ScenarioSet(tuple(out))


# --------------------------------------------------------------------------
# distances and reduction


@dataclass(frozen=True)
class DistanceWeights:
    """Per-block scale factors of the scenario metric."""

    solar: float = 1.0
    parking: float = 1.0
    deferrable: float = 1.0

    @classmethod
    def from_set(cls, scenario_set: ScenarioSet) -> "DistanceWeights":
        """Normalize each block by its pooled standard deviation over the
        set; blocks that never vary get weight 0 (they carry no signal)."""

        def inv_std(a):
            if a.size == 0:
                return 0.0
            s = float(np.std(a))
            return 1.0 / s if s > 0 else 0.0

        return cls(
            solar=inv_std(scenario_set.solar_matrix()),
            parking=inv_std(scenario_set.parking_tensor()),
            deferrable=inv_std(scenario_set.deferrable_matrix()),
        )


def _feature_matrix(scenario_set: ScenarioSet, weights: DistanceWeights) -> np.ndarray:
    S = len(scenario_set)
    blocks = [
        weights.solar * scenario_set.solar_matrix(),
        weights.parking * scenario_set.parking_tensor().reshape(S, -1),
        weights.deferrable * scenario_set.deferrable_matrix().reshape(S, -1),
    ]
    return np.hstack([b for b in blocks if b.size])


def scenario_distance(a: Scenario, b: Scenario, weights: DistanceWeights | None = None) -> float:
    """Weighted L2 distance over (solar, flattened parking, deferrable energy)."""
    weights = weights or DistanceWeights()
    if a.solar.shape != b.solar.shape or a.parking.shape != b.parking.shape \
            or a.deferrable_energy.shape != b.deferrable_energy.shape:
        raise ValueError("scenario dimensions differ")
    d2 = weights.solar**2 * float(((a.solar - b.solar) ** 2).sum())
    d2 += weights.parking**2 * float(((a.parking - b.parking) ** 2).sum())
    d2 += weights.deferrable**2 * float(((a.deferrable_energy - b.deferrable_energy) ** 2).sum())
    return float(np.sqrt(d2))


def _distance_matrix(scenario_set: ScenarioSet, weights: DistanceWeights) -> np.ndarray:
    X = _feature_matrix(scenario_set, weights)
    sq = (X**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    np.fill_diagonal(d, 0.0)
    return d


def kantorovich_distance(scenario_set: ScenarioSet, subset_indices,
                         weights: DistanceWeights | None = None) -> float:
    """Sum over discarded scenarios of probability times distance to the
    nearest kept scenario."""
    idx = sorted(set(int(i) for i in subset_indices))
    if not idx:
        raise ValueError("subset must be nonempty")
    S = len(scenario_set)
    if idx[0] < 0 or idx[-1] >= S:
        raise ValueError("subset index out of range")
    weights = weights or DistanceWeights.from_set(scenario_set)
    X = _feature_matrix(scenario_set, weights)
    diff = X[:, None, :] - X[None, idx, :]
    d = np.sqrt((diff**2).sum(axis=2)).min(axis=1)
    return float(scenario_set.probabilities @ d)


@dataclass
class ReductionReport:
    n_original: int
    n_kept: int
    kept_indices: list
    selection_order: list
    kantorovich_distance: float
    step_distances: list = field(default_factory=list)

    def to_dict(self):
        return {
            "n_original": self.n_original,
            "n_kept": self.n_kept,
            "kept_indices": self.kept_indices,
            "selection_order": self.selection_order,
            "kantorovich_distance": self.kantorovich_distance,
            "step_distances": self.step_distances,
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("sort_keys", True)
        kwargs.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kwargs)


def reduce_fast_forward(scenario_set: ScenarioSet, keep: int,
                        weights: DistanceWeights | None = None):
    """Greedy fast-forward selection of `keep` scenarios.

    Each step adds the scenario whose inclusion minimizes the
    probability-weighted distance of the full set to the kept set; all
    argmin ties resolve to the lowest scenario index.  Discarded
    probability mass moves to the nearest kept scenario.  Returns the
    reduced set (original index order) and a report with the selection
    order and the final distance.
    """
    S = len(scenario_set)
    if not (1 <= keep <= S):
        raise ValueError(f"keep must lie in [1, {S}], got {keep}")
    weights = weights or DistanceWeights.from_set(scenario_set)
    C = _distance_matrix(scenario_set, weights)
    p = scenario_set.probabilities

    selected = []
    dmin = None
    step_distances = []
    for _ in range(keep):
        if dmin is None:
            z = p @ C
        else:
            z = p @ np.minimum(dmin[:, None], C)
            z[selected] = np.inf
        u = int(np.argmin(z))
        selected.append(u)
        dmin = C[:, u].copy() if dmin is None else np.minimum(dmin, C[:, u])
        step_distances.append(float(p @ dmin))

    kept = sorted(selected)
    new_prob = {i: float(p[i]) for i in kept}
    for k in range(S):
        if k in new_prob:
            continue
        nearest = kept[int(np.argmin(C[k, kept]))]
        new_prob[nearest] += float(p[k])

    reduced = ScenarioSet(tuple(
        Scenario(
            probability=new_prob[i],
            solar=scenario_set.scenarios[i].solar,
            parking=scenario_set.scenarios[i].parking,
            deferrable_energy=scenario_set.scenarios[i].deferrable_energy,
        )
        for i in kept
    ))
    report = ReductionReport(
        n_original=S,
        n_kept=keep,
        kept_indices=kept,
        selection_order=selected,
        kantorovich_distance=step_distances[-1],
        step_distances=step_distances,
    )
    return reduced, report


# --------------------------------------------------------------------------
# serialization


def scenario_set_to_dict(scenario_set: ScenarioSet) -> dict:
    return {
        "scenarios": [
            {
                "probability": s.probability,
                "solar": s.solar.tolist(),
                "parking": s.parking.tolist(),
                "deferrable_energy": s.deferrable_energy.tolist(),
            }
            for s in scenario_set.scenarios
        ]
    }


def scenario_set_from_dict(data: dict) -> ScenarioSet:
    out = []
    for s in data["scenarios"]:
        solar = np.asarray(s["solar"], dtype=float)
        parking = np.asarray(s["parking"], dtype=float)
        if parking.size == 0:
            parking = parking.reshape(0, solar.shape[0])
        out.append(Scenario(
            probability=float(s["probability"]),
            solar=solar,
            parking=parking,
            deferrable_energy=np.asarray(s.get("deferrable_energy", []), dtype=float),
        ))
    return ScenarioSet(tuple(out))


def save_json(scenario_set: ScenarioSet, path):
    Path(path).write_text(
        json.dumps(scenario_set_to_dict(scenario_set), sort_keys=True) + "\n"
    )


def load_json(path) -> ScenarioSet:
    return scenario_set_from_dict(json.loads(Path(path).read_text()))


def save_csv_bundle(scenario_set: ScenarioSet, directory):
    """Write solar.csv, parking.csv, deferrable.csv, probabilities.csv."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    S = len(scenario_set)
    T = scenario_set.scenarios[0].solar.shape[0]
    n_ev = scenario_set.scenarios[0].parking.shape[0]
    n_def = scenario_set.scenarios[0].deferrable_energy.shape[0]

    with open(directory / "solar.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["scenario"] + [f"t{t + 1}" for t in range(T)])
        for s, sc in enumerate(scenario_set.scenarios):
            w.writerow([s] + [repr(float(v)) for v in sc.solar])
    with open(directory / "parking.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["scenario", "phev"] + [f"t{t + 1}" for t in range(T)])
        for s, sc in enumerate(scenario_set.scenarios):
            for m in range(n_ev):
                w.writerow([s, m] + [repr(float(v)) for v in sc.parking[m]])
    with open(directory / "deferrable.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["scenario"] + [f"load{j + 1}" for j in range(n_def)])
        for s, sc in enumerate(scenario_set.scenarios):
            w.writerow([s] + [repr(float(v)) for v in sc.deferrable_energy])
    with open(directory / "probabilities.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["scenario", "probability"])
        for s, sc in enumerate(scenario_set.scenarios):
            w.writerow([s, repr(float(sc.probability))])


def load_csv_bundle(directory) -> ScenarioSet:
    directory = Path(directory)

    def read(fname):
        with open(directory / fname, newline="") as f:
            rows = list(csv.reader(f))
        return rows[0], rows[1:]

    _, rows = read("solar.csv")
    solar = {int(r[0]): np.array([float(v) for v in r[1:]]) for r in rows}
    _, rows = read("parking.csv")
    parking = {}
    for r in rows:
        parking.setdefault(int(r[0]), {})[int(r[1])] = [float(v) for v in r[2:]]
    _, rows = read("deferrable.csv")
    deferrable = {int(r[0]): np.array([float(v) for v in r[1:]]) for r in rows}
    _, rows = read("probabilities.csv")
    probs = {int(r[0]): float(r[1]) for r in rows}

    scenarios = []
    for s in sorted(solar):
        if s in parking:
            mat = np.array([parking[s][m] for m in sorted(parking[s])])
        else:
            mat = np.zeros((0, solar[s].shape[0]))
        scenarios.append(Scenario(
            probability=probs[s],
            solar=solar[s],
            parking=mat,
            deferrable_energy=deferrable.get(s, np.zeros(0)),
        ))
    return ScenarioSet(tuple(scenarios))
