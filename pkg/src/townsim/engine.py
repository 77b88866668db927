"""Daily S/E/U/R/V1-V3 dynamics on the contact network.

All rates are per-day probabilities. Agent state lives in parallel numpy
arrays on :class:`Population`; :meth:`Population.agent` returns a read-only
snapshot of one person.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .network import ContactNetwork

NO_DAY = -1


class Compartment(enum.IntEnum):
    S = 0
    E = 1
    U = 2
    R = 3
    V1 = 4
    V2 = 5
    V3 = 6


COMPARTMENTS = tuple(Compartment)
VACCINATED = (Compartment.V1, Compartment.V2, Compartment.V3)


class InconsistentState(RuntimeError):
    pass


class InsufficientSusceptibles(ValueError):
    pass


class ImmunityMode(str, enum.Enum):
    HOMOGENEOUS = "homogeneous"
    RULEBASED = "rulebased"


@dataclass(frozen=True)
class EpidemicRates:
    beta: float = 0.14
    delta: float = 0.05
    testing_rate: float = 0.01
    tau: float = 1.0 / 14.0
    immunity_mode: ImmunityMode = ImmunityMode.HOMOGENEOUS
    immunity_waning: str = "fixed"
    immunity_period: float = 180.0
    # rule-based durations: (never vaccinated, first infection), reinfection,
    # vaccinated first infection, vaccinated reinfection
    immunity_naive: float = 140.0
    immunity_reinfected: float = 180.0
    immunity_vaccinated: float = 180.0
    immunity_hybrid: float = 200.0
    vaccine_period: float = 180.0
    vaccine_waning: str = "fixed"

    def __post_init__(self):
        for name in ("beta", "delta", "testing_rate", "tau"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0,1], got {v}")
        for name in ("immunity_period", "immunity_naive", "immunity_reinfected",
                     "immunity_vaccinated", "immunity_hybrid", "vaccine_period"):
            if getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be >= 1 day")
        object.__setattr__(self, "immunity_mode", ImmunityMode(self.immunity_mode))

    @property
    def detection(self) -> float:
        return min(1.0, self.testing_rate + self.tau)

    @classmethod
    def from_config(cls, cfg) -> "EpidemicRates":
        return cls(beta=cfg.beta, delta=cfg.delta, testing_rate=cfg.testing_rate,
                   tau=cfg.tau, immunity_mode=cfg.immunity_mode,
                   immunity_waning=cfg.immunity_waning, immunity_period=cfg.immunity_period,
                   immunity_naive=cfg.immunity_naive,
                   immunity_reinfected=cfg.immunity_reinfected,
                   immunity_vaccinated=cfg.immunity_vaccinated,
                   immunity_hybrid=cfg.immunity_hybrid, vaccine_period=cfg.vaccine_period,
                   vaccine_waning=cfg.vaccine_waning)


def infection_probability(num_infectious_neighbors, beta: float):
    """Chance of catching the disease from ``k`` independent infectious contacts."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0,1], got {beta}")
    k = np.asarray(num_infectious_neighbors)
    p = 1.0 - (1.0 - beta) ** k
    return float(p) if p.ndim == 0 else p


def natural_immunity_duration(ever_vaccinated, prior_infection, mode="homogeneous",
                              rates: EpidemicRates | None = None):
    """Days of natural immunity after recovery.

    Works elementwise on arrays. In rule-based mode the duration depends on
    vaccination history and on whether this was a reinfection.
    """
    rates = rates or EpidemicRates()
    mode = ImmunityMode(mode)
    vac = np.asarray(ever_vaccinated, dtype=bool)
    prior = np.asarray(prior_infection, dtype=bool)
    if mode is ImmunityMode.HOMOGENEOUS:
        out = np.full(np.broadcast(vac, prior).shape, rates.immunity_period)
    else:
        out = np.where(vac,
                       np.where(prior, rates.immunity_hybrid, rates.immunity_vaccinated),
                       np.where(prior, rates.immunity_reinfected, rates.immunity_naive))
    return float(out) if out.ndim == 0 else out


def r0(beta: float, delta: float) -> float:
    if delta <= 0:
        raise ZeroDivisionError("recovery rate delta must be > 0")
    return beta / delta


@dataclass(frozen=True)
class AgentView:
    id: int
    compartment: Compartment
    outside: bool
    doses_received: int
    willing: tuple[bool, bool, bool]
    immunity_expires_day: int | None
    next_dose_due_day: int | None
    ever_infected: bool
    ever_vaccinated: bool
    infections: int


class Population:
    """Per-person epidemic state for one replicate."""

    def __init__(self, n: int):
        self.n = n
        self.compartment = np.zeros(n, dtype=np.int8)
        self.outside = np.zeros(n, dtype=bool)
        self.doses = np.zeros(n, dtype=np.int8)
        self.willing = np.zeros((n, 3), dtype=bool)
        self.immunity_expires = np.full(n, NO_DAY, dtype=np.int64)
        self.next_dose_due = np.full(n, NO_DAY, dtype=np.int64)
        self.ever_infected = np.zeros(n, dtype=bool)
        self.ever_vaccinated = np.zeros(n, dtype=bool)
        self.infections = np.zeros(n, dtype=np.int32)
        # recovered while away; timer restarts on return
        self.recovered_outside = np.zeros(n, dtype=bool)

    def agent(self, i: int) -> AgentView:
        exp = int(self.immunity_expires[i])
        due = int(self.next_dose_due[i])
        return AgentView(
            id=i, compartment=Compartment(int(self.compartment[i])),
            outside=bool(self.outside[i]), doses_received=int(self.doses[i]),
            willing=tuple(bool(w) for w in self.willing[i]),
            immunity_expires_day=None if exp == NO_DAY else exp,
            next_dose_due_day=None if due == NO_DAY else due,
            ever_infected=bool(self.ever_infected[i]),
            ever_vaccinated=bool(self.ever_vaccinated[i]),
            infections=int(self.infections[i]))

    def counts(self, in_town_only: bool = True) -> np.ndarray:
        c = self.compartment[~self.outside] if in_town_only else self.compartment
        return np.bincount(c, minlength=len(COMPARTMENTS))

    def infected_mask(self) -> np.ndarray:
        c = self.compartment
        return ((c == Compartment.E) | (c == Compartment.U)) & ~self.outside

    def copy(self) -> "Population":
        other = Population.__new__(Population)
        for k, v in self.__dict__.items():
            other.__dict__[k] = v.copy() if isinstance(v, np.ndarray) else v
        return other

    def check(self) -> None:
        """Raise :class:`InconsistentState` if any per-agent invariant is broken."""
        c = self.compartment
        if np.any((c < 0) | (c > Compartment.V3)):
            raise InconsistentState("unknown compartment code")
        vac = (c >= Compartment.V1)
        if np.any(vac & ~self.ever_vaccinated):
            raise InconsistentState("agent in V without vaccination history")
        if np.any(vac & (c - Compartment.V1 + 1 > self.doses)):
            raise InconsistentState("agent in V_d with fewer than d doses")
        infected = (c == Compartment.E) | (c == Compartment.U)
        if np.any(infected & ~self.ever_infected):
            raise InconsistentState("infected agent without infection history")
        if np.any(self.outside & (c == Compartment.U)):
            raise InconsistentState("quarantined agent outside town")
        if np.any((self.doses < 0) | (self.doses > 3)):
            raise InconsistentState("dose count out of range")


def seed_infections(pop: Population, count: int, rng: np.random.Generator, day: int = 0) -> np.ndarray:
    """Move ``count`` uniformly chosen in-town susceptibles to Exposed."""
    if count == 0:
        return np.empty(0, dtype=np.int64)
    candidates = np.flatnonzero((pop.compartment == Compartment.S) & ~pop.outside)
    if count > candidates.size:
        raise InsufficientSusceptibles(
            f"cannot seed {count} infections among {candidates.size} susceptibles")
    chosen = np.sort(rng.choice(candidates, size=count, replace=False))
    _infect(pop, chosen)
    return chosen


def _infect(pop: Population, idx: np.ndarray) -> None:
    pop.compartment[idx] = Compartment.E
    pop.ever_infected[idx] = True
    pop.infections[idx] += 1
    pop.immunity_expires[idx] = NO_DAY


def recover(pop: Population, idx: np.ndarray, day: int, rates: EpidemicRates) -> None:
    """Move agents to R and start their natural-immunity clock."""
    pop.compartment[idx] = Compartment.R
    if rates.immunity_waning == "fixed":
        dur = natural_immunity_duration(pop.ever_vaccinated[idx], pop.infections[idx] > 1,
                                        rates.immunity_mode, rates)
        pop.immunity_expires[idx] = day + np.rint(np.asarray(dur)).astype(np.int64)
    else:
        pop.immunity_expires[idx] = NO_DAY


def natural_waning_probability(pop: Population, idx: np.ndarray, rates: EpidemicRates):
    dur = natural_immunity_duration(pop.ever_vaccinated[idx], pop.infections[idx] > 1,
                                    rates.immunity_mode, rates)
    return 1.0 / np.asarray(dur)


def count_infectious_neighbors(net: ContactNetwork, infectious: np.ndarray) -> np.ndarray:
    return net.matrix @ infectious.astype(np.int32)


def step_day(pop: Population, net: ContactNetwork, rates: EpidemicRates,
             rng: np.random.Generator, day: int, check: bool = False) -> dict:
    """Advance in-town disease dynamics by one day.

    Phases run in a fixed order: transmission, detection, recovery, natural
    waning, vaccine waning. Each phase acts on the state left by the one
    before, so a new exposure can be detected or recover on the same day.
    Transmission itself only uses the infectious set from the start of the
    day, and agents who recovered today do not also wane today.

    Returns a dict with per-phase transition counts.
    """
    if day < 0:
        raise ValueError("day must be >= 0")
    if check:
        pop.check()
    c = pop.compartment
    town = ~pop.outside
    moved = np.zeros(pop.n, dtype=bool)

    # 1. transmission from undetected, in-town exposed agents
    infectious = (c == Compartment.E) & town
    targets = np.flatnonzero((c == Compartment.S) & town)
    k = count_infectious_neighbors(net, infectious)[targets]
    exposed_now = targets[k > 0]
    p = infection_probability(k[k > 0], rates.beta)
    newly = exposed_now[rng.random(exposed_now.size) < p]
    _infect(pop, newly)

    # 2. detection E -> U, including today's new exposures
    e_idx = np.flatnonzero((c == Compartment.E) & town)
    detected = e_idx[rng.random(e_idx.size) < rates.detection]
    c[detected] = Compartment.U

    # 3. recovery from E and U
    sick = np.flatnonzero(((c == Compartment.E) | (c == Compartment.U)) & town)
    recovered = sick[rng.random(sick.size) < rates.delta]
    recover(pop, recovered, day, rates)
    moved[recovered] = True

    # 4. natural immunity waning R -> S (travellers' clocks keep running)
    r_idx = np.flatnonzero((c == Compartment.R) & ~moved)
    if rates.immunity_waning == "fixed":
        waned_r = r_idx[(pop.immunity_expires[r_idx] != NO_DAY)
                        & (pop.immunity_expires[r_idx] <= day)]
    else:
        u = rng.random(r_idx.size)
        waned_r = r_idx[u < natural_waning_probability(pop, r_idx, rates)]
    c[waned_r] = Compartment.S
    pop.immunity_expires[waned_r] = NO_DAY
    moved[waned_r] = True

    # 5. vaccine immunity waning V_d -> S
    v_idx = np.flatnonzero((c >= Compartment.V1) & ~moved)
    if rates.vaccine_waning == "fixed":
        waned_v = v_idx[(pop.immunity_expires[v_idx] != NO_DAY)
                        & (pop.immunity_expires[v_idx] <= day)]
    else:
        waned_v = v_idx[rng.random(v_idx.size) < 1.0 / rates.vaccine_period]
    c[waned_v] = Compartment.S
    pop.immunity_expires[waned_v] = NO_DAY

    if check:
        pop.check()
    return {"infected": int(newly.size), "detected": int(detected.size),
            "recovered": int(recovered.size), "natural_waned": int(waned_r.size),
            "vaccine_waned": int(waned_v.size)}
