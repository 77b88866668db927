import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from townsim.engine import NO_DAY, Compartment, EpidemicRates, Population, step_day
from townsim.network import generate_ba
from townsim.vaccination import (DoseLog, VaccineSchedule, administer_doses,
                                 assign_willingness, daily_supply, willing_counts)


def test_supply_ramp():
    s = VaccineSchedule()
    assert daily_supply(59, s) == 0
    assert [daily_supply(d, s) for d in range(60, 66)] == [10, 20, 40, 80, 100, 100]
    assert daily_supply(62, s) == 40 and daily_supply(70, s) == 100
    with pytest.raises(ValueError):
        daily_supply(-1, s)


def test_schedule_validation():
    with pytest.raises(ValueError):
        VaccineSchedule(uptake=1.5)
    with pytest.raises(ValueError):
        VaccineSchedule(max_doses=4)
    with pytest.raises(ValueError):
        VaccineSchedule(initial_doses=200, daily_cap=100)


def test_willingness_compounds():
    pop = Population(10_000)
    assign_willingness(pop, 0.9, np.random.default_rng(0))
    for count, p in zip(willing_counts(pop), (0.9, 0.81, 0.729)):
        assert abs(count - 10_000 * p) <= 3 * math.sqrt(10_000 * p * (1 - p))


def test_willingness_extremes():
    pop = Population(100)
    assign_willingness(pop, 1.0, np.random.default_rng(0))
    assert pop.willing.all()
    assign_willingness(pop, 0.0, np.random.default_rng(0))
    assert not pop.willing.any()
    assert administer_doses(pop, 80, VaccineSchedule(), np.random.default_rng(0)) == 0


def test_nothing_before_start():
    pop = Population(100)
    pop.willing[:] = True
    assert administer_doses(pop, 59, VaccineSchedule(), np.random.default_rng(0)) == 0


def test_third_dose_efficacy():
    n = 1000
    pop = Population(n)
    pop.willing[:] = True
    pop.doses[:] = 2
    pop.ever_vaccinated[:] = True
    pop.next_dose_due[:] = 100
    sched = VaccineSchedule(daily_cap=n, initial_doses=n)
    log = DoseLog()
    used = administer_doses(pop, 100, sched, np.random.default_rng(2), log=log)
    assert used == n and set(log.dose) == {3}
    v3 = (pop.compartment == Compartment.V3).sum()
    assert abs(v3 - 960) <= 3 * math.sqrt(n * 0.96 * 0.04)
    assert (pop.next_dose_due == NO_DAY).all()


def test_unlimited_supply_vaccinates_everyone_at_once():
    n = 500
    pop = Population(n)
    pop.willing[:] = True
    sched = VaccineSchedule(daily_cap=n, initial_doses=n, efficacy=(1.0, 1.0, 1.0))
    administer_doses(pop, 60, sched, np.random.default_rng(0))
    assert (pop.compartment == Compartment.V1).all()
    assert (pop.immunity_expires == 240).all()
    assert (pop.next_dose_due == 88).all()


def test_boosters_first():
    pop = Population(30)
    pop.willing[:] = True
    pop.doses[:10] = 1
    pop.ever_vaccinated[:10] = True
    pop.compartment[:10] = Compartment.V1
    pop.next_dose_due[:10] = np.arange(90, 100)
    sched = VaccineSchedule(daily_cap=12, initial_doses=12)
    log = DoseLog()
    administer_doses(pop, 100, sched, np.random.default_rng(0), log=log)
    doses = np.array(log.dose)
    assert (doses == 2).sum() == 10 and (doses == 1).sum() == 2
    assert log.agent[:10] == list(range(10))


def test_failed_dose_still_counts_and_schedules_next():
    pop = Population(1)
    pop.willing[:] = True
    sched = VaccineSchedule(efficacy=(0.0, 0.86, 0.96))
    administer_doses(pop, 60, sched, np.random.default_rng(0))
    a = pop.agent(0)
    assert a.compartment is Compartment.S and a.doses_received == 1
    assert a.ever_vaccinated and a.next_dose_due_day == 88


def test_booster_waits_while_infected():
    pop = Population(1)
    pop.willing[:] = True
    pop.doses[0] = 1
    pop.ever_vaccinated[0] = True
    pop.next_dose_due[0] = 88
    pop.compartment[0] = Compartment.E
    sched = VaccineSchedule()
    assert administer_doses(pop, 90, sched, np.random.default_rng(0)) == 0
    pop.compartment[0] = Compartment.S
    assert administer_doses(pop, 91, sched, np.random.default_rng(0)) == 1
    assert pop.doses[0] == 2


def test_degree_ordering():
    pop = Population(5)
    pop.willing[:] = True
    deg = np.array([1, 5, 3, 5, 2])
    sched = VaccineSchedule(first_dose_order="degree_desc")
    log = DoseLog()
    administer_doses(pop, 60, sched, np.random.default_rng(0), degree=deg, log=log)
    administer_doses(pop, 61, sched, np.random.default_rng(0), degree=deg, log=log)
    assert sorted(log.agent[:5]) == [0, 1, 2, 3, 4]
    pop2 = Population(5)
    pop2.willing[:] = True
    log2 = DoseLog()
    administer_doses(pop2, 60, VaccineSchedule(daily_cap=3, initial_doses=2,
                                               first_dose_order="degree_desc"),
                     np.random.default_rng(0), degree=deg, log=log2)
    assert log2.agent == [1, 3]


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), max_doses=st.integers(1, 3),
       uptake=st.floats(0.3, 1.0), cap=st.integers(5, 60))
def test_campaign_accounting(seed, max_doses, uptake, cap):
    n = 400
    net = generate_ba(n, 4.0, seed=seed)
    pop = Population(n)
    rng = np.random.default_rng(seed)
    assign_willingness(pop, uptake, rng)
    pop.compartment[rng.choice(n, 5, replace=False)] = Compartment.E
    pop.ever_infected[pop.compartment == Compartment.E] = True
    rates = EpidemicRates(immunity_period=30.0, vaccine_period=40.0)
    sched = VaccineSchedule(max_doses=max_doses, daily_cap=cap, initial_doses=min(10, cap),
                            dose2_interval=10, dose3_interval=20, start_day=5)
    log = DoseLog()
    supplied = used = 0
    prev_doses = pop.doses.copy()
    for day in range(1, 150):
        step_day(pop, net, rates, rng, day, check=True)
        used += administer_doses(pop, day, sched, rng, log=log)
        supplied += daily_supply(day, sched)
        assert used <= supplied
        assert np.all(pop.doses >= prev_doses) and pop.doses.max() <= max_doses
        prev_doses = pop.doses.copy()
        level = np.where(pop.compartment >= Compartment.V1,
                         pop.compartment - Compartment.V1 + 1, 0)
        willing_upto = np.cumprod(pop.willing, axis=1).sum(axis=1)
        assert np.all(level <= willing_upto)
    assert len(log) == used
    last = {}
    for day, agent, dose, _ in log.rows():
        prev = last.get(agent)
        if dose == 1:
            assert prev is None
        else:
            gap = sched.intervals[dose - 2]
            assert prev is not None and prev[1] == dose - 1 and day - prev[0] >= gap
        last[agent] = (day, dose)
