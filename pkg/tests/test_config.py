import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from townsim.config import ConfigError, ScenarioConfig, load_config, parse_config, serialize


def test_empty_text_gives_defaults():
    cfg = parse_config("")
    assert cfg == ScenarioConfig()
    assert (cfg.beta, cfg.delta, cfg.n, cfg.days) == (0.14, 0.05, 10000, 1080)
    assert cfg.tau == pytest.approx(1 / 14)
    assert cfg.efficacy == (0.92, 0.86, 0.96)


def test_out_of_range_beta():
    with pytest.raises(ConfigError, match=r"beta must lie in \[0,1\]"):
        parse_config("beta = 1.5")


def test_single_override():
    cfg = parse_config("# comment\nmax_doses = 2   # trailing\n\n")
    diff = [f.name for f in dataclasses.fields(cfg)
            if getattr(cfg, f.name) != getattr(ScenarioConfig(), f.name)]
    assert diff == ["max_doses"] and cfg.max_doses == 2


@pytest.mark.parametrize("text,line", [
    ("beta = 0.1\nbogus = 3", 2),
    ("beta = 0.1\nbeta = 0.2", 2),
    ("just words", 1),
    ("n = ten", 1),
    ("travel = maybe", 1),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


@pytest.mark.parametrize("text", ["immunity_mode = mixed", "max_doses = 4", "n = 0",
                                  "uptake = -0.1", "immunity_period = 0.5"])
def test_validation_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_network_seed_defaults_to_rng_seed():
    assert parse_config("rng_seed = 9").effective_network_seed == 9
    assert parse_config("rng_seed = 9\nnetwork_seed = 4").effective_network_seed == 4
    assert parse_config("network_seed = none").network_seed is None


configs = st.builds(
    ScenarioConfig,
    n=st.integers(10, 50_000),
    beta=st.floats(0, 1),
    delta=st.floats(0, 1),
    immunity_mode=st.sampled_from(["homogeneous", "rulebased"]),
    immunity_waning=st.sampled_from(["fixed", "exponential"]),
    immunity_period=st.floats(1, 1000),
    max_doses=st.integers(0, 3),
    uptake=st.floats(0, 1),
    travel=st.booleans(),
    departure_rate=st.floats(0, 1),
    rng_seed=st.integers(0, 2**63 - 1),
    network_seed=st.none() | st.integers(0, 2**32),
)


@settings(max_examples=100)
@given(cfg=configs)
def test_serialize_round_trip(cfg):
    assert parse_config(serialize(cfg)) == cfg
    assert parse_config(serialize(cfg)).digest() == cfg.digest()


def test_digest_tracks_content():
    assert ScenarioConfig().digest() == ScenarioConfig().digest()
    assert ScenarioConfig().digest() != ScenarioConfig(beta=0.15).digest()


def test_load_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("days = 30\n")
    assert load_config(p).days == 30
