from __future__ import annotations

import logging

import pytest

from hetmarket.engine import FORESIGHT, GREEDY, LLM, MYOPIC, run_simulation
from hetmarket.scenario import (
    ScenarioError,
    load_scenario_file,
    parse_scenario_text,
    preset,
    scenario1,
    scenario2,
)

FULL_TEXT = """
[topology]
num_sbs = 3
mbs_power_watts = 20
sbs_power_watts = 2
channels_per_station = 6
power_unit_price = 0.2
macro_radius_m = 400
sbs_ring_radius_m = 200
bandwidth_hz = 2e6
noise_density_w_per_hz = 1e-20
mbs_pathloss_exponent = 2.8
sbs_pathloss_exponent = 3.2
reference_distance_m = 2.0
interference_mode = none

[population]
num_ues = 10
budget = 8.5
qos_classes_mbps = 1.0, 3.0
myopic = 6
greedy = 2
llm = 1
foresight = 1

[auction]
entrance_fee = 0.25
competitor_mode = oracle

[valuation]
base_value_per_mbps = 0.4, 0.6
max_value_per_mbps = 0.9, 1.1
saturation_losses = 4, 6

[llm]
base_url = http://localhost:9999/v1
model_name = test-model
api_key_env_var = TEST_KEY
timeout_ms = 2500
max_retries = 3
temperature = 0.5
foresight_threshold = 0.25
foresight_pacing = 0.75

[simulation]
episodes = 12
runs = 2
seed = 99
jobs = 2
"""


class TestParsing:
    def test_full_round_trip(self):
        config = parse_scenario_text(FULL_TEXT)
        assert config.topology.num_small_cells == 3
        assert config.topology.mbs_power_watts == 20.0
        assert config.topology.channels_per_station == 6
        assert config.topology.power_unit_price == 0.2
        assert config.topology.channel.bandwidth_hz == 2e6
        assert config.topology.channel.interference_mode == "none"
        assert config.topology.channel.reference_distance_m == 2.0
        assert config.population.num_ues == 10
        assert config.population.budget == 8.5
        assert config.population.qos_classes_mbps == (1.0, 3.0)
        assert config.population.strategy_counts == {
            MYOPIC: 6, GREEDY: 2, LLM: 1, FORESIGHT: 1,
        }
        assert config.auction.entrance_fee == 0.25
        assert config.auction.competitor_mode == "oracle"
        assert config.urgency.base_value_per_mbps == (0.4, 0.6)
        assert config.urgency.max_value_per_mbps == (0.9, 1.1)
        assert config.urgency.saturation_losses == (4, 6)
        assert config.endpoint.base_url == "http://localhost:9999/v1"
        assert config.endpoint.model_name == "test-model"
        assert config.endpoint.api_key_env_var == "TEST_KEY"
        assert config.endpoint.timeout_ms == 2500
        assert config.endpoint.max_retries == 3
        assert config.endpoint.temperature == 0.5
        assert config.foresight.threshold_fraction == 0.25
        assert config.foresight.pacing_fraction == 0.75
        assert config.episodes == 12
        assert config.runs == 2
        assert config.seed == 99
        assert config.jobs == 2

    def test_empty_text_gives_documented_defaults(self):
        config = parse_scenario_text("")
        assert config.population.num_ues == 40
        assert config.population.budget == 15.0
        assert config.population.qos_classes_mbps == (2.0, 4.0, 8.0)
        assert config.population.strategy_counts == {
            MYOPIC: 40, GREEDY: 0, LLM: 0, FORESIGHT: 0,
        }
        assert config.topology.num_small_cells == 2
        assert config.topology.power_unit_price == 0.05
        assert config.auction.entrance_fee == 0.1
        assert config.episodes == 40
        assert config.seed == 0

    def test_unfilled_myopic_count_absorbs_remainder(self):
        text = "[population]\nnum_ues = 40\ngreedy = 2\nllm = 1\n"
        config = parse_scenario_text(text)
        assert config.population.strategy_counts[MYOPIC] == 37

    def test_default_notices_logged_at_info(self, caplog):
        with caplog.at_level(logging.INFO, logger="hetmarket.scenario"):
            parse_scenario_text("[simulation]\nepisodes = 5\n")
        assert any("defaulted" in record.message for record in caplog.records)

    def test_mismatched_counts_fail_at_run_time(self):
        config = parse_scenario_text(
            "[population]\nnum_ues = 10\nmyopic = 3\ngreedy = 1\n"
        )
        with pytest.raises(Exception, match="strategy counts"):
            run_simulation(config)


class TestRejection:
    def test_unknown_section_named_with_source(self):
        with pytest.raises(ScenarioError) as err:
            parse_scenario_text("[turbo]\nboost = 1\n", source="bad.ini")
        assert "bad.ini" in str(err.value)
        assert "[turbo]" in str(err.value)

    def test_unknown_key_named(self):
        with pytest.raises(ScenarioError) as err:
            parse_scenario_text("[population]\nqos = 2\n")
        assert "'qos'" in str(err.value)
        assert "[population]" in str(err.value)

    def test_bad_value_named(self):
        with pytest.raises(ScenarioError) as err:
            parse_scenario_text("[population]\nnum_ues = many\n")
        assert "'num_ues'" in str(err.value)
        assert "many" in str(err.value)

    def test_problems_accumulate(self):
        text = "[population]\nnum_ues = many\nqos = 2\n\n[turbo]\nboost = 1\n"
        with pytest.raises(ScenarioError) as err:
            parse_scenario_text(text)
        assert len(err.value.problems) == 3

    def test_broken_ini_syntax(self):
        with pytest.raises(ScenarioError):
            parse_scenario_text("num_ues = 40\n")

    def test_bad_interference_mode(self):
        with pytest.raises(ScenarioError, match="interference_mode"):
            parse_scenario_text("[topology]\ninterference_mode = partial\n")


class TestFiles:
    def test_load_scenario_file(self, tmp_path):
        path = tmp_path / "small.ini"
        path.write_text("[simulation]\nepisodes = 7\nseed = 3\n")
        config = load_scenario_file(str(path))
        assert config.episodes == 7
        assert config.seed == 3

    def test_load_reports_path_in_errors(self, tmp_path):
        path = tmp_path / "broken.ini"
        path.write_text("[population]\nqos = 2\n")
        with pytest.raises(ScenarioError) as err:
            load_scenario_file(str(path))
        assert "broken.ini" in str(err.value)


class TestPresets:
    def test_scenario1_mix(self):
        config = scenario1()
        assert config.population.num_ues == 40
        assert config.population.budget == 15.0
        assert config.population.strategy_counts == {
            LLM: 1, FORESIGHT: 0, GREEDY: 1, MYOPIC: 38,
        }
        assert config.topology.channels_per_station == 4
        assert config.episodes == 40

    def test_scenario2_mix(self):
        config = scenario2()
        assert config.population.strategy_counts == {
            LLM: 1, FORESIGHT: 0, GREEDY: 39, MYOPIC: 0,
        }

    def test_preset_lookup(self):
        assert preset("scenario1") == scenario1()
        assert preset("scenario2") == scenario2()
        with pytest.raises(ScenarioError, match="unknown preset"):
            preset("scenario9")
