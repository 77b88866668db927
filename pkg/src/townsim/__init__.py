"""Agent-based epidemic simulation on a scale-free contact network, with vaccination,
travel to a larger outside city and lead-lag analysis of hub infection."""

__version__ = "0.1.0"

from .config import ConfigError, ScenarioConfig, load_config, parse_config, serialize
from .engine import Compartment, Population, step_day
from .network import ContactNetwork, fit_power_law, generate_ba
from .runner import TimeSeries, run_replicates, run_scenario
from .stats import cross_correlation, granger_test, hub_analysis, select_lag_aic

__all__ = [
    "Compartment", "ConfigError", "ContactNetwork", "Population", "ScenarioConfig",
    "TimeSeries", "cross_correlation", "fit_power_law", "generate_ba", "granger_test",
    "hub_analysis", "load_config", "parse_config", "run_replicates", "run_scenario",
    "select_lag_aic", "serialize", "step_day",
]
