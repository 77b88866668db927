import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import empty_network
from townsim.engine import (NO_DAY, Compartment, EpidemicRates, InconsistentState,
                            InsufficientSusceptibles, Population, count_infectious_neighbors,
                            infection_probability, natural_immunity_duration, r0, recover,
                            seed_infections, step_day)
from townsim.network import ContactNetwork, generate_ba


def test_infection_probability_values():
    assert infection_probability(0, 0.14) == 0.0
    assert infection_probability(1, 0.14) == pytest.approx(0.14)
    assert infection_probability(2, 0.14) == pytest.approx(0.2604)
    assert np.allclose(infection_probability(np.array([0, 3]), 0.5), [0.0, 0.875])
    with pytest.raises(ValueError):
        infection_probability(1, 1.2)


def test_r0():
    assert r0(0.14, 0.05) == pytest.approx(2.8)
    assert r0(0.0, 0.3) == 0.0
    assert r0(0.05, 0.05) == 1.0
    with pytest.raises(ZeroDivisionError):
        r0(0.1, 0.0)


@pytest.mark.parametrize("vac,prior,mode,days", [
    (False, False, "homogeneous", 180), (True, True, "homogeneous", 180),
    (False, False, "rulebased", 140), (False, True, "rulebased", 180),
    (True, False, "rulebased", 180), (True, True, "rulebased", 200),
])
def test_natural_immunity_duration(vac, prior, mode, days):
    assert natural_immunity_duration(vac, prior, mode) == days


def test_rates_validation():
    with pytest.raises(ValueError):
        EpidemicRates(beta=1.5)
    with pytest.raises(ValueError):
        EpidemicRates(immunity_period=0.5)
    assert EpidemicRates(testing_rate=0.5, tau=0.7).detection == 1.0


def test_counting_neighbors_matches_adjacency_walk():
    net = generate_ba(300, 5.0, seed=2)
    inf = np.random.default_rng(0).random(300) < 0.2
    expect = np.array([inf[net.neighbors(i)].sum() for i in range(300)])
    assert np.array_equal(count_infectious_neighbors(net, inf), expect)


# -- seeding -------------------------------------------------------------------

def test_seed_infections():
    pop = Population(10_000)
    assert seed_infections(pop, 0, np.random.default_rng(1)).size == 0
    assert pop.counts()[Compartment.S] == 10_000
    ids = seed_infections(pop, 4, np.random.default_rng(1))
    c = pop.counts()
    assert c[Compartment.E] == 4 and c[Compartment.S] == 9996
    again = seed_infections(Population(10_000), 4, np.random.default_rng(1))
    assert np.array_equal(ids, again)
    with pytest.raises(InsufficientSusceptibles):
        seed_infections(Population(3), 4, np.random.default_rng(1))


# -- single-day behaviour ------------------------------------------------------

def test_no_source_no_change():
    net = generate_ba(500, 5.0, seed=0)
    pop = Population(500)
    stats = step_day(pop, net, EpidemicRates(), np.random.default_rng(0), 1)
    assert stats["infected"] == 0
    assert pop.counts()[Compartment.S] == 500


def test_days_in_exposed_before_detection_is_geometric():
    n = 10_000
    pop = Population(n)
    pop.compartment[:] = Compartment.E
    pop.ever_infected[:] = True
    rates = EpidemicRates(delta=0.0, testing_rate=0.01, tau=1 / 14)
    rng = np.random.default_rng(3)
    detected_on = np.full(n, -1)
    for day in range(1, 400):
        before = pop.compartment == Compartment.E
        step_day(pop, empty_network(n), rates, rng, day)
        detected_on[before & (pop.compartment == Compartment.U)] = day
    assert (detected_on > 0).all()
    assert detected_on.mean() == pytest.approx(1 / (0.01 + 1 / 14), rel=0.05)


def test_fixed_natural_immunity_lasts_180_days():
    pop = Population(1)
    pop.infections[0] = 1
    pop.ever_infected[0] = True
    rates = EpidemicRates()
    recover(pop, np.array([0]), 100, rates)
    net = empty_network(1)
    rng = np.random.default_rng(0)
    for day in range(101, 281):
        step_day(pop, net, rates, rng, day)
        expected = Compartment.S if day >= 280 else Compartment.R
        assert pop.compartment[0] == expected, day


def test_rulebased_hybrid_immunity_timer():
    pop = Population(2)
    pop.infections[:] = [1, 2]
    pop.ever_vaccinated[:] = [False, True]
    recover(pop, np.array([0, 1]), 10, EpidemicRates(immunity_mode="rulebased"))
    assert pop.immunity_expires.tolist() == [150, 210]


@pytest.mark.parametrize("which", ["natural", "vaccine"])
def test_exponential_waning_mean_residence(which):
    n, period = 20_000, 40.0
    pop = Population(n)
    if which == "natural":
        pop.compartment[:] = Compartment.R
        rates = EpidemicRates(immunity_waning="exponential", immunity_period=period)
    else:
        pop.compartment[:] = Compartment.V1
        pop.ever_vaccinated[:] = True
        pop.doses[:] = 1
        rates = EpidemicRates(vaccine_waning="exponential", vaccine_period=period)
    pop.immunity_expires[:] = NO_DAY
    rng = np.random.default_rng(11)
    left_on = np.zeros(n)
    for day in range(1, 800):
        immune = pop.compartment != Compartment.S
        step_day(pop, empty_network(n), rates, rng, day)
        left_on[immune & (pop.compartment == Compartment.S)] = day
    assert (left_on > 0).all()
    assert left_on.mean() == pytest.approx(period, rel=0.05)


def test_check_detects_broken_invariants():
    pop = Population(3)
    pop.compartment[0] = Compartment.V2
    with pytest.raises(InconsistentState):
        pop.check()


def test_agent_view():
    pop = Population(2)
    pop.compartment[1] = Compartment.R
    pop.immunity_expires[1] = 77
    a = pop.agent(1)
    assert a.compartment is Compartment.R and a.immunity_expires_day == 77
    assert pop.agent(0).immunity_expires_day is None


# -- properties over random small epidemics -----------------------------------

def _epidemic(n, seed, days, **rates):
    net = generate_ba(n, 4.0, seed=seed)
    pop = Population(n)
    rng = np.random.default_rng(seed)
    seed_infections(pop, 3, rng)
    r = EpidemicRates(**rates)
    return net, pop, r, rng


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), beta=st.floats(0, 1), delta=st.floats(0.01, 1),
       mode=st.sampled_from(["homogeneous", "rulebased"]),
       waning=st.sampled_from(["fixed", "exponential"]))
def test_run_invariants(seed, beta, delta, mode, waning):
    n = 200
    net, pop, rates, rng = _epidemic(n, seed, 60, beta=beta, delta=delta, immunity_mode=mode,
                                     immunity_waning=waning, immunity_period=20.0,
                                     immunity_naive=15.0)
    away = (rng.random(n) < 0.05) & (pop.compartment == Compartment.S)
    pop.outside[away] = True
    prev_inf = pop.ever_infected.copy()
    for day in range(1, 61):
        step_day(pop, net, rates, rng, day, check=True)
        assert pop.counts().sum() + pop.outside.sum() == n
        assert np.all(pop.ever_infected >= prev_inf)
        prev_inf = pop.ever_infected.copy()
    # travellers left as susceptibles are untouched by in-town transmission
    assert np.all(pop.compartment[pop.outside & away] == Compartment.S)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_zero_beta_never_spreads(seed):
    net, pop, rates, rng = _epidemic(300, seed, 100, beta=0.0)
    start = pop.ever_infected.copy()
    for day in range(1, 101):
        step_day(pop, net, rates, rng, day)
    assert np.array_equal(pop.ever_infected, start)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_certain_recovery_means_single_day_illness(seed):
    net, pop, rates, rng = _epidemic(300, seed, 50, beta=0.5, delta=1.0)
    for day in range(1, 51):
        step_day(pop, net, rates, rng, day)
        sick = (pop.compartment == Compartment.E) | (pop.compartment == Compartment.U)
        assert not sick.any()


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), beta=st.floats(0.05, 1))
def test_instant_quarantine_stops_chains(seed, beta):
    net, pop, rates, rng = _epidemic(300, seed, 50, beta=beta, testing_rate=1.0, delta=0.05)
    seeds = np.flatnonzero(pop.compartment == Compartment.E)
    contacts = set(np.concatenate([net.neighbors(s) for s in seeds]).tolist()) - set(seeds)
    for day in range(1, 51):
        step_day(pop, net, rates, rng, day)
    assert pop.ever_infected.sum() <= seeds.size + len(contacts)
    assert set(np.flatnonzero(pop.ever_infected)) <= set(seeds) | contacts


def test_outside_agents_are_neither_sources_nor_targets():
    net = ContactNetwork.from_edges(3, [(0, 1), (1, 2)])
    pop = Population(3)
    pop.compartment[1] = Compartment.E
    pop.ever_infected[1] = True
    pop.outside[[0, 1]] = [True, True]
    rates = EpidemicRates(beta=1.0, testing_rate=0.0, tau=0.0, delta=0.0)
    step_day(pop, net, rates, np.random.default_rng(0), 1)
    assert pop.compartment[2] == Compartment.S
    pop.outside[1] = False
    step_day(pop, net, rates, np.random.default_rng(0), 2)
    assert pop.compartment[2] == Compartment.E
    assert pop.compartment[0] == Compartment.S
