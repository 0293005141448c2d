"""Tests for scenario, price, trace and manifest loading"""

import os

import pytest

from src.core.storagesim import DataObject, Tier
from src.models.errors import ScenarioLoadError
from src.models.job import QueueName
from src.models.scenario import ExperimentKind, MarketKind, ScalingStrategy
from src.utils.loaders import (
    load_price_file,
    load_scenario,
    read_manifest,
    read_spot_traces,
    write_manifest,
    write_spot_traces,
)
from src.utils.validation import validate_scenario
from tests.conftest import RESOURCES, SCENARIOS, scenario_path

PRICE_FILE = os.path.join(RESOURCES, "prices", "default.env")


def write(path, text: str) -> str:
    path.write_text(text, encoding="utf-8")
    return str(path)


def scenario_text(body: str) -> str:
    return f"name = t\nexperiment = elastic-scaling\nseed = 1\nprice_file = {PRICE_FILE}\n{body}"


WORKLOAD = """
[workload]
job_count = 4
mean_inter_arrival_s = 60
duration_mix = 600:1.0
"""


class TestBundledScenarios:
    @pytest.mark.parametrize("filename", sorted(os.listdir(SCENARIOS)))
    def test_loads_and_validates(self, filename):
        scenario = load_scenario(os.path.join(SCENARIOS, filename))
        is_valid, issues = validate_scenario(scenario)
        assert is_valid, issues

    def test_elastic_scenario_fields(self):
        scenario = load_scenario(scenario_path("elastic_unlimited_spot"))
        assert scenario.experiment is ExperimentKind.ELASTIC_SCALING
        pool = scenario.pools[QueueName.PRODUCTION]
        assert pool.strategy is ScalingStrategy.UNLIMITED
        assert pool.market is MarketKind.SPOT
        assert pool.bid.value == 1.0
        assert scenario.workload.duration_mix == [(3600, 0.4), (10800, 0.2), (14400, 0.4)]
        assert os.path.isabs(scenario.spot_trace_path)

    def test_dotted_keys_nest(self):
        scenario = load_scenario(scenario_path("throughput"))
        assert scenario.throughput.capacity.write_capacity == 400
        assert scenario.throughput.worker_counts == [1, 2, 4, 8, 16, 32]


class TestScenarioErrors:
    """Errors name the file and the line"""

    def test_bad_value_names_line(self, tmp_path):
        path = write(tmp_path / "bad.scn", scenario_text(WORKLOAD + "\n[scaling]\nstrategy = sideways\n"))
        with pytest.raises(ScenarioLoadError) as info:
            load_scenario(path)
        assert info.value.path == path
        assert info.value.line == 12
        assert f"{path}:12" in str(info.value)

    def test_unknown_section(self, tmp_path):
        path = write(tmp_path / "bad.scn", scenario_text("[network]\nspeed = 1\n"))
        with pytest.raises(ScenarioLoadError) as info:
            load_scenario(path)
        assert info.value.line == 5

    def test_duplicate_key(self, tmp_path):
        path = write(tmp_path / "bad.scn", scenario_text("seed = 2\n"))
        with pytest.raises(ScenarioLoadError, match="duplicate key 'seed'"):
            load_scenario(path)

    def test_unknown_key(self, tmp_path):
        path = write(tmp_path / "bad.scn", scenario_text(WORKLOAD + "colour = blue\n"))
        with pytest.raises(ScenarioLoadError) as info:
            load_scenario(path)
        assert "workload.colour" in str(info.value)
        assert info.value.line == 10

    def test_missing_price_file(self, tmp_path):
        path = write(tmp_path / "bad.scn", "experiment = storage-cost\nseed = 0\nprice_file = nowhere.env\n")
        with pytest.raises(ScenarioLoadError, match="file not found") as info:
            load_scenario(path)
        assert info.value.line == 3

    def test_malformed_line(self, tmp_path):
        path = write(tmp_path / "bad.scn", scenario_text("just words\n"))
        with pytest.raises(ScenarioLoadError) as info:
            load_scenario(path)
        assert info.value.line == 5

    def test_missing_pool(self, tmp_path):
        path = write(tmp_path / "bad.scn", scenario_text(WORKLOAD))
        with pytest.raises(ScenarioLoadError, match="no \\[scaling\\] pool"):
            load_scenario(path)

    def test_name_defaults_to_file_stem(self, tmp_path):
        text = f"experiment = storage-cost\nseed = 0\nprice_file = {PRICE_FILE}\n[storage]\nstrategies = IA\n"
        scenario = load_scenario(write(tmp_path / "my_run.scn", text))
        assert scenario.name == "my_run"

    def test_rbac_section(self, tmp_path):
        body = WORKLOAD + (
            "\n[scaling]\nstrategy = unlimited\n"
            "\n[rbac]\nrole.task-executor = internal, trusted-switcher\nrole.kotta-public-only = user\n"
            "allow.kotta-public-only = queue/*:submit; dataset/public/*:read+download\n"
        )
        scenario = load_scenario(write(tmp_path / "rbac.scn", scenario_text(body)))
        assert [role.name for role in scenario.rbac.roles] == ["task-executor", "kotta-public-only"]
        assert scenario.rbac.grants[1].actions == ["read", "download"]
        assert validate_scenario(scenario)[0]

    def test_validation_reports_missing_grant(self, tmp_path):
        body = WORKLOAD + (
            "\n[scaling]\nstrategy = unlimited\n"
            "\n[rbac]\nrole.task-executor = internal, trusted-switcher\nrole.kotta-public-only = user\n"
        )
        scenario = load_scenario(write(tmp_path / "rbac.scn", scenario_text(body)))
        is_valid, issues = validate_scenario(scenario)
        assert not is_valid
        assert any("may not submit" in issue for issue in issues)

    def test_cold_tier_missing_from_policy(self, tmp_path):
        text = (
            f"name = t\nexperiment = lifecycle-simulation\nseed = 1\nprice_file = {PRICE_FILE}\n"
            "tier_policy = STD30-IA\n\n[lifecycle]\ndataset_gb = 100\ncold_tier = GLACIER\n"
        )
        scenario = load_scenario(write(tmp_path / "lifecycle.scn", text))
        is_valid, issues = validate_scenario(scenario)
        assert not is_valid
        assert issues == ["lifecycle.cold_tier: GLACIER is not a tier of STD30-IA"]


class TestPriceFile:
    def test_default_prices(self):
        prices = load_price_file(PRICE_FILE)
        assert prices.on_demand_usd_per_hour == {"m4.xlarge": 0.239, "c4.8xlarge": 1.675}
        assert prices.storage.std_tiered[0] == (1000.0, 0.03)
        assert prices.provisioning_delay.high_s == 720

    def test_bad_price_names_line(self, tmp_path):
        path = write(tmp_path / "p.env", "on_demand_usd_per_hour.m4.xlarge=0.239\n\nbilling_quantum_s=soon\n")
        with pytest.raises(ScenarioLoadError) as info:
            load_price_file(path)
        assert info.value.line == 3
        assert "billing_quantum_s" in str(info.value)

    def test_unknown_price_key(self, tmp_path):
        path = write(tmp_path / "p.env", "on_demand_usd_per_hour.m4.xlarge=0.239\nstorage.tape=1\n")
        with pytest.raises(ScenarioLoadError) as info:
            load_price_file(path)
        assert info.value.line == 2


class TestTraceAndManifestFiles:
    def test_trace_round_trip(self, tmp_path):
        traces = read_spot_traces(os.path.join(RESOURCES, "traces", "revocation_spikes.csv"))
        assert len(traces) == 10
        path = str(tmp_path / "copy.csv")
        write_spot_traces(path, traces)
        again = read_spot_traces(path)
        assert [(t.az, t.times, t.prices) for t in again] == [(t.az, t.times, t.prices) for t in traces]

    def test_trace_bad_row_names_line(self, tmp_path):
        path = write(
            tmp_path / "t.csv",
            "timestamp,region,az,instance_type,price_usd_per_hour\n0,us-east-1,us-east-1a,m4.xlarge,0.1\n"
            "60,us-east-1,us-east-1a,m4.xlarge,cheap\n",
        )
        with pytest.raises(ScenarioLoadError) as info:
            read_spot_traces(path)
        assert info.value.line == 3

    def test_trace_header_checked(self, tmp_path):
        path = write(tmp_path / "t.csv", "time,price\n0,0.1\n")
        with pytest.raises(ScenarioLoadError) as info:
            read_spot_traces(path)
        assert info.value.line == 1

    def test_manifest(self, tmp_path):
        objects = read_manifest(os.path.join(RESOURCES, "manifests", "inputs.csv"))
        restricted = [obj for obj in objects if obj.object_id.startswith("dataset/wos/")]
        assert restricted[0].tier is Tier.GLACIER
        path = str(tmp_path / "m.csv")
        write_manifest(path, [DataObject("a", 1.5, Tier.IA, owner_role="r")])
        assert read_manifest(path)[0].tier is Tier.IA

    def test_manifest_unknown_tier(self, tmp_path):
        path = write(tmp_path / "m.csv", "object_id,size_gb,initial_tier,owner_role\na,1,TAPE,r\n")
        with pytest.raises(ScenarioLoadError, match="unknown tier") as info:
            read_manifest(path)
        assert info.value.line == 2


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
