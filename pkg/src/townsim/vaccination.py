"""Vaccine supply ramp, willingness and daily dose allocation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import NO_DAY, Compartment, Population


@dataclass(frozen=True)
class VaccineSchedule:
    start_day: int = 60
    initial_doses: int = 10
    daily_cap: int = 100
    dose2_interval: int = 28
    dose3_interval: int = 180
    max_doses: int = 3
    uptake: float = 0.9
    efficacy: tuple[float, float, float] = (0.92, 0.86, 0.96)
    vaccine_period: float = 180.0
    waning: str = "fixed"
    first_dose_order: str = "random"

    def __post_init__(self):
        if not 0.0 <= self.uptake <= 1.0:
            raise ValueError("uptake must lie in [0,1]")
        if len(self.efficacy) != 3 or not all(0.0 <= e <= 1.0 for e in self.efficacy):
            raise ValueError("efficacy must be three probabilities")
        if not 0 <= self.initial_doses <= self.daily_cap:
            raise ValueError("initial_doses must lie in [0, daily_cap]")
        if self.dose2_interval < 1 or self.dose3_interval < 1:
            raise ValueError("dose intervals must be >= 1 day")
        if self.max_doses not in (0, 1, 2, 3):
            raise ValueError("max_doses must be 0..3")
        if self.first_dose_order not in ("random", "degree_desc"):
            raise ValueError("first_dose_order must be 'random' or 'degree_desc'")

    @property
    def intervals(self) -> tuple[int, int]:
        return (self.dose2_interval, self.dose3_interval)

    @classmethod
    def from_config(cls, cfg) -> "VaccineSchedule":
        return cls(start_day=cfg.vaccine_start_day, initial_doses=cfg.vaccine_initial_doses,
                   daily_cap=cfg.vaccine_daily_cap, dose2_interval=cfg.dose2_interval,
                   dose3_interval=cfg.dose3_interval, max_doses=cfg.max_doses,
                   uptake=cfg.uptake, efficacy=cfg.efficacy, vaccine_period=cfg.vaccine_period,
                   waning=cfg.vaccine_waning, first_dose_order=cfg.first_dose_order)


def daily_supply(day: int, sched: VaccineSchedule) -> int:
    """Doses delivered on ``day``: doubling from ``initial_doses`` until the cap."""
    if day < 0:
        raise ValueError("day must be >= 0")
    if day < sched.start_day or sched.initial_doses == 0:
        return 0
    return min(sched.initial_doses * 2 ** (day - sched.start_day), sched.daily_cap)


def assign_willingness(pop: Population, uptake: float, rng: np.random.Generator) -> None:
    """Independent per-dose willingness draws; dose d needs willingness for doses 1..d."""
    if not 0.0 <= uptake <= 1.0:
        raise ValueError("uptake must lie in [0,1]")
    pop.willing[:] = rng.random(pop.willing.shape) < uptake


def willing_counts(pop: Population) -> np.ndarray:
    """Number of agents willing to take each of doses 1, 2, 3 (compounded)."""
    return np.cumprod(pop.willing, axis=1).sum(axis=0)


class DoseLog:
    """Per-dose events, appended in administration order."""

    def __init__(self):
        self.day, self.agent, self.dose, self.succeeded = [], [], [], []

    def extend(self, day: int, agents: np.ndarray, dose: int, ok: np.ndarray) -> None:
        self.day.extend([day] * agents.size)
        self.agent.extend(agents.tolist())
        self.dose.extend([dose] * agents.size)
        self.succeeded.extend(ok.tolist())

    def __len__(self) -> int:
        return len(self.day)

    def rows(self):
        return zip(self.day, self.agent, self.dose, self.succeeded)


def _booster_candidates(pop: Population, dose: int, day: int) -> np.ndarray:
    due = pop.next_dose_due
    idx = np.flatnonzero((due != NO_DAY) & (due <= day))
    c = pop.compartment[idx]
    ok = ((pop.doses[idx] == dose - 1)
          & pop.willing[idx, :dose].all(axis=1)
          & ((c == Compartment.S) | (c >= Compartment.V1))
          & ~pop.outside[idx])
    idx = idx[ok]
    # earliest due first, ties by id
    return idx[np.argsort(pop.next_dose_due[idx], kind="stable")]


def _give(pop: Population, idx: np.ndarray, dose: int, day: int, sched: VaccineSchedule,
          rng: np.random.Generator, log: DoseLog | None) -> None:
    ok = rng.random(idx.size) < sched.efficacy[dose - 1]
    pop.doses[idx] = dose
    pop.ever_vaccinated[idx] = True
    hit = idx[ok]
    pop.compartment[hit] = Compartment.V1 + dose - 1
    if sched.waning == "fixed":
        pop.immunity_expires[hit] = day + int(round(sched.vaccine_period))
    else:
        pop.immunity_expires[hit] = NO_DAY
    if dose < 3:
        pop.next_dose_due[idx] = day + sched.intervals[dose - 1]
    else:
        pop.next_dose_due[idx] = NO_DAY
    if log is not None:
        log.extend(day, idx, dose, ok)


def administer_doses(pop: Population, day: int, sched: VaccineSchedule,
                     rng: np.random.Generator, degree: np.ndarray | None = None,
                     log: DoseLog | None = None) -> int:
    """Allocate today's supply: due third doses, due second doses, then first doses.

    Boosters go only to agents currently in S or a V compartment; anyone else
    stays due and is retried on later days. Returns the number of doses used.
    """
    supply = daily_supply(day, sched)
    if supply == 0 or sched.max_doses == 0:
        return 0
    used = 0
    for dose in (3, 2):
        if dose > sched.max_doses or used == supply:
            continue
        idx = _booster_candidates(pop, dose, day)[:supply - used]
        _give(pop, idx, dose, day, sched, rng, log)
        used += idx.size

    if used < supply:
        eligible = np.flatnonzero((pop.doses == 0) & pop.willing[:, 0]
                                  & (pop.compartment == Compartment.S) & ~pop.outside)
        take = min(supply - used, eligible.size)
        if take:
            if sched.first_dose_order == "degree_desc":
                if degree is None:
                    raise ValueError("degree-ordered allocation needs node degrees")
                order = np.lexsort((eligible, -degree[eligible]))
                idx = eligible[order[:take]]
            else:
                idx = np.sort(rng.choice(eligible, size=take, replace=False))
            _give(pop, idx, 1, day, sched, rng, log)
            used += take
    return used
