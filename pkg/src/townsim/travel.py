"""Travel between the township and a well-mixed outside city."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Compartment, EpidemicRates, Population, recover


@dataclass
class OutsideCity:
    """Mean-field SIRS state of the outside city (population fractions)."""

    population: int = 4_000_000
    beta: float = 0.14
    delta: float = 0.05
    resusceptibility: float = 1.0 / 180.0
    s: float = 1.0
    i: float = 0.0
    r: float = 0.0

    @classmethod
    def seeded(cls, population=4_000_000, initial_infected=100.0, beta=0.14, delta=0.05,
               immunity_period=180.0) -> "OutsideCity":
        eps = initial_infected / population
        return cls(population=population, beta=beta, delta=delta,
                   resusceptibility=1.0 / immunity_period, s=1.0 - eps, i=eps, r=0.0)

    @classmethod
    def from_config(cls, cfg) -> "OutsideCity":
        return cls.seeded(cfg.outside_population, cfg.outside_initial_infected,
                          cfg.outside_beta, cfg.outside_delta, cfg.outside_immunity_period)

    def endemic_prevalence(self) -> float:
        """Infected fraction at the endemic fixed point (0 if beta <= delta)."""
        if self.beta <= self.delta:
            return 0.0
        g = self.resusceptibility
        return (1.0 - self.delta / self.beta) * g / (g + self.delta)


def step_outside_city(city: OutsideCity) -> OutsideCity:
    """One forward-Euler day of the SIRS equations, in place."""
    s, i, r = city.s, city.i, city.r
    infections = city.beta * s * i
    recoveries = city.delta * i
    waning = city.resusceptibility * r
    s, i, r = s - infections + waning, i + infections - recoveries, r + recoveries - waning
    s, i, r = (min(max(x, 0.0), 1.0) for x in (s, i, r))
    total = s + i + r
    city.s, city.i, city.r = s / total, i / total, r / total
    return city


def outside_trajectory(city: OutsideCity, days: int) -> np.ndarray:
    """Array of shape (days + 1, 3) with (s, i, r) after 0..days steps. ``city`` is not mutated."""
    c = OutsideCity(**city.__dict__)
    out = np.empty((days + 1, 3))
    out[0] = c.s, c.i, c.r
    for d in range(1, days + 1):
        step_outside_city(c)
        out[d] = c.s, c.i, c.r
    return out


@dataclass(frozen=True)
class TravelRates:
    departure: float = 0.00012
    ret: float = 0.0001

    def __post_init__(self):
        if not (0.0 <= self.departure <= 1.0 and 0.0 <= self.ret <= 1.0):
            raise ValueError("travel rates must lie in [0,1]")


def step_travel(pop: Population, city: OutsideCity, rates: TravelRates,
                rng: np.random.Generator, day: int,
                epi: EpidemicRates | None = None) -> dict:
    """One day of travel.

    Agents already away first face the city's epidemic: susceptibles are
    infected with probability ``beta_o * i_o`` and infected travellers recover
    with probability ``delta_o``. Immune travellers (R or V) cannot be
    infected. Then away agents return with probability ``rates.ret`` and
    in-town, non-quarantined agents leave with probability ``rates.departure``.
    Infected returners arrive Exposed; those who recovered away restart their
    natural-immunity clock on arrival.
    """
    epi = epi or EpidemicRates()
    c = pop.compartment
    away = np.flatnonzero(pop.outside)

    sus = away[c[away] == Compartment.S]
    sick = away[c[away] == Compartment.E]
    caught = sus[rng.random(sus.size) < city.beta * city.i]
    healed = sick[rng.random(sick.size) < city.delta]
    c[caught] = Compartment.E
    pop.ever_infected[caught] = True
    pop.infections[caught] += 1
    recover(pop, healed, day, epi)
    pop.recovered_outside[healed] = True

    back = away[rng.random(away.size) < rates.ret]
    pop.outside[back] = False
    fresh = back[pop.recovered_outside[back] & (c[back] == Compartment.R)]
    recover(pop, fresh, day, epi)
    pop.recovered_outside[back] = False

    home = np.flatnonzero(~pop.outside & (c != Compartment.U))
    home = home[~np.isin(home, back, assume_unique=True)]
    leaving = home[rng.random(home.size) < rates.departure]
    pop.outside[leaving] = True

    return {"departed": int(leaving.size), "returned": int(back.size),
            "infected_outside": int(caught.size), "recovered_outside": int(healed.size),
            "returned_infected": int((c[back] == Compartment.E).sum())}
