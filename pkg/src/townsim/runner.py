"""Full simulation loop, replicate batches and endemic-cycle detection."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .config import ScenarioConfig
from .engine import (COMPARTMENTS, EpidemicRates, Population, seed_infections,
                     step_day)
from .network import ContactNetwork, generate_ba
from .travel import OutsideCity, TravelRates, outside_trajectory, step_travel
from .vaccination import DoseLog, VaccineSchedule, administer_doses, assign_willingness

log = logging.getLogger(__name__)

COUNT_COLUMNS = tuple(c.name for c in COMPARTMENTS) + ("outside",)
COLUMNS = ("day",) + COUNT_COLUMNS + ("I", "k_I", "cum_doses", "i_o")
INT_COLUMNS = ("day",) + COUNT_COLUMNS + ("cum_doses",)


class TimeSeries:
    """Daily records of one run, stored column-wise."""

    def __init__(self, columns: dict[str, np.ndarray], n: int):
        missing = set(COLUMNS) - set(columns)
        if missing:
            raise ValueError(f"missing columns: {sorted(missing)}")
        self.columns = {k: np.asarray(columns[k]) for k in COLUMNS}
        self.n = n

    def __len__(self) -> int:
        return len(self.columns["day"])

    def __getitem__(self, key: str) -> np.ndarray:
        return self.columns[key]

    @property
    def infected(self) -> np.ndarray:
        return self.columns["I"]

    @property
    def hub_degree(self) -> np.ndarray:
        return self.columns["k_I"]

    def row(self, day: int) -> dict:
        return {k: v[day].item() for k, v in self.columns.items()}

    def equals(self, other: "TimeSeries") -> bool:
        return self.n == other.n and all(
            np.array_equal(self.columns[k], other.columns[k]) for k in COLUMNS)


def _record(rec: dict, day: int, pop: Population, net: ContactNetwork,
            cum_doses: int, i_o: float) -> None:
    counts = pop.counts()
    infected = pop.infected_mask()
    n_inf = int(infected.sum())
    rec["day"][day] = day
    for c in COMPARTMENTS:
        rec[c.name][day] = counts[c]
    rec["outside"][day] = int(pop.outside.sum())
    rec["I"][day] = n_inf / pop.n
    rec["k_I"][day] = float(net.degree[infected].mean()) if n_inf else 0.0
    rec["cum_doses"][day] = cum_doses
    rec["i_o"][day] = i_o


def build_network(cfg: ScenarioConfig) -> ContactNetwork:
    return generate_ba(cfg.n, cfg.mean_degree, seed=cfg.effective_network_seed)


def run_scenario(cfg: ScenarioConfig, network: ContactNetwork | None = None,
                 dose_log: DoseLog | None = None, check: bool = False,
                 city_trajectory: np.ndarray | None = None) -> TimeSeries:
    """Simulate ``cfg.days`` days and return the ``days + 1`` daily records.

    Each day runs travel, the outside-city update, in-town dynamics and
    vaccination, then records a snapshot. Day 0 is the seeded state.
    """
    net = network if network is not None else build_network(cfg)
    if net.n != cfg.n:
        raise ValueError(f"network has {net.n} nodes but config has n={cfg.n}")
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(5)
    rng_seed, rng_epi, rng_travel, rng_will, rng_vax = (np.random.default_rng(s) for s in seeds)

    rates = EpidemicRates.from_config(cfg)
    sched = VaccineSchedule.from_config(cfg)
    travel = TravelRates(cfg.departure_rate, cfg.return_rate)
    city = OutsideCity.from_config(cfg)
    traj = city_trajectory if city_trajectory is not None else outside_trajectory(city, cfg.days)

    pop = Population(cfg.n)
    assign_willingness(pop, cfg.uptake, rng_will)
    seed_infections(pop, cfg.initial_infections, rng_seed)

    T = cfg.days
    rec = {k: np.zeros(T + 1, dtype=np.int64 if k in INT_COLUMNS else float) for k in COLUMNS}
    cum = 0
    _record(rec, 0, pop, net, cum, traj[0, 1])
    for day in range(1, T + 1):
        if cfg.travel:
            city.s, city.i, city.r = traj[day - 1]
            step_travel(pop, city, travel, rng_travel, day, rates)
        step_day(pop, net, rates, rng_epi, day, check=check)
        if cfg.max_doses > 0:
            cum += administer_doses(pop, day, sched, rng_vax, degree=net.degree, log=dose_log)
        _record(rec, day, pop, net, cum, traj[day, 1])
        if check:
            pop.check()
    return TimeSeries(rec, cfg.n)


@dataclass
class ReplicateSet:
    runs: list
    seeds: list
    summary: dict

    @property
    def mean_infected(self) -> np.ndarray:
        return self.summary["I_mean"]


def summarize(runs: list[TimeSeries]) -> dict:
    stack = np.vstack([r.infected for r in runs])
    return {"day": runs[0]["day"].copy(),
            "I_mean": stack.mean(axis=0),
            "I_q05": np.quantile(stack, 0.05, axis=0),
            "I_q95": np.quantile(stack, 0.95, axis=0)}


def _run_one(args):
    cfg, net, traj = args
    return run_scenario(cfg, network=net, city_trajectory=traj)


def run_replicates(cfg: ScenarioConfig, n_replicates: int | None = None,
                   network: ContactNetwork | None = None, jobs: int = 1) -> ReplicateSet:
    """Run replicates with seeds ``rng_seed + r`` on one shared network."""
    n_replicates = cfg.replicates if n_replicates is None else n_replicates
    if n_replicates < 1:
        raise ValueError("n_replicates must be >= 1")
    net = network if network is not None else build_network(cfg)
    traj = outside_trajectory(OutsideCity.from_config(cfg), cfg.days)
    seeds = [cfg.rng_seed + r for r in range(n_replicates)]
    cfgs = [cfg.replace(rng_seed=s, network_seed=cfg.effective_network_seed) for s in seeds]
    tasks = [(c, net, traj) for c in cfgs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            runs = list(ex.map(_run_one, tasks))
    else:
        runs = [_run_one(t) for t in tasks]
    return ReplicateSet(runs=runs, seeds=seeds, summary=summarize(runs))


def smooth(series, window: int) -> np.ndarray:
    """Centered moving average, renormalized at the edges."""
    x = np.asarray(series, dtype=float)
    if window <= 1:
        return x.copy()
    kernel = np.ones(window)
    return np.convolve(x, kernel, mode="same") / np.convolve(np.ones_like(x), kernel, mode="same")


def find_epidemic_peaks(series, window: int = 14, min_prominence: float = 0.02) -> np.ndarray:
    sm = smooth(series, window)
    peaks, _ = find_peaks(sm, prominence=min_prominence)
    return peaks


def detect_endemic_period(series, window: int = 14, min_prominence: float = 0.02) -> float | None:
    """Mean spacing in days between prominent peaks of the smoothed series, or None."""
    x = np.asarray(series, dtype=float)
    if x.size < 2 * max(window, 1):
        raise ValueError(f"series too short for a {window}-day window")
    peaks = find_epidemic_peaks(x, window, min_prominence)
    if peaks.size < 2:
        return None
    return float(np.diff(peaks).mean())
