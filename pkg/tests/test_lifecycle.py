"""Tests for the day-by-day storage lifecycle simulation"""

from typing import Dict, List

import pytest

from src.core.simkernel import RngStream
from src.core.simulation import LifecycleSimulation
from src.core.storagesim import SECONDS_PER_DAY, Tier, parse_policy
from src.models.errors import ConfigurationError
from src.models.scenario import LifecycleParams

DAY = SECONDS_PER_DAY
IDLE_LIMIT = {Tier.STD: 30 * DAY, Tier.IA: 90 * DAY}
DEMOTE_TO = {Tier.STD: Tier.IA, Tier.IA: Tier.GLACIER}


def reference_tiers(initial: Tier, access_days: List[int], days: int) -> List[Tier]:
    """Tier after each midnight tick, walking one object day by day"""
    tier = initial
    last_access = 0
    accessed = set(access_days)
    snapshots = []
    for day in range(days + 1):
        midnight = day * DAY
        if day >= 1:
            if tier in IDLE_LIMIT and midnight - last_access > IDLE_LIMIT[tier]:
                tier = DEMOTE_TO[tier]
            snapshots.append(tier)
        if day in accessed:
            noon = midnight + 43200
            if tier is Tier.GLACIER:
                tier = Tier.STD
                last_access = noon + 14400
            else:
                last_access = noon
    return snapshots


def simulate(prices, rbac, seed: int, **values):
    params = LifecycleParams(**values)
    simulation = LifecycleSimulation(
        params, parse_policy("STD30-IA60-Glacier"), prices, RngStream(seed, "lifecycle"), rbac
    )
    return simulation.run()


class TestLifecycleSimulation:
    def test_tiers_match_day_by_day_reference(self, prices, rbac):
        result = simulate(prices, rbac, 3, dataset_gb=1000, hot_fraction=0.2, mean_access_gap_days=30, days=200)
        assert len(result.snapshots) == 200
        for index, object_id in enumerate(result.object_ids):
            expected = reference_tiers(result.initial_tiers[object_id], result.access_days.get(object_id, []), 200)
            actual = [snapshot[index] for snapshot in result.snapshots]
            assert actual == expected, object_id
        assert result.demotions > 0
        assert result.retrievals > 0

    def test_full_year_over_ten_terabytes(self, prices, rbac):
        result = simulate(prices, rbac, 7, dataset_gb=10000, object_gb=10, days=365)
        assert len(result.object_ids) == 1000
        assert len(result.snapshots) == 365
        for index, object_id in enumerate(result.object_ids):
            expected = reference_tiers(result.initial_tiers[object_id], result.access_days.get(object_id, []), 365)
            assert [snapshot[index] for snapshot in result.snapshots] == expected, object_id
        assert result.deviation < 0.05

    def test_hot_and_cold_start(self, prices, rbac):
        result = simulate(prices, rbac, 1, dataset_gb=1000, hot_fraction=0.1, days=10)
        tiers: Dict[Tier, int] = {}
        for tier in result.initial_tiers.values():
            tiers[tier] = tiers.get(tier, 0) + 1
        assert tiers == {Tier.STD: 10, Tier.GLACIER: 90}
        assert set(result.access_days) == {oid for oid, tier in result.initial_tiers.items() if tier is Tier.STD}

    def test_cost_close_to_formula(self, prices, rbac):
        result = simulate(prices, rbac, 7)
        assert len(result.daily_costs) == 365
        assert result.formula_cost == pytest.approx(880.26, abs=1.0)
        assert result.deviation < 0.05

    def test_cold_tier_outside_policy_rejected(self, prices, rbac):
        params = LifecycleParams(dataset_gb=100, object_gb=10, hot_fraction=0.0, days=10)
        with pytest.raises(ConfigurationError) as info:
            LifecycleSimulation(params, parse_policy("STD30-IA"), prices, RngStream(1, "lifecycle"), rbac)
        assert "GLACIER" in str(info.value)
        with pytest.raises(ConfigurationError):
            LifecycleSimulation(
                params.model_copy(update={"cold_tier": "IA", "hot_fraction": 0.5}),
                parse_policy("IA"),
                prices,
                RngStream(1, "lifecycle"),
                rbac,
            )

    def test_same_seed_same_history(self, prices, rbac):
        first = simulate(prices, rbac, 5, dataset_gb=500, days=60)
        second = simulate(prices, rbac, 5, dataset_gb=500, days=60)
        assert first.snapshots == second.snapshots
        assert first.daily_costs == second.daily_costs

    def test_accesses_are_audited(self, prices, rbac):
        result = simulate(prices, rbac, 2, dataset_gb=200, hot_fraction=0.5, days=60)
        reads = [r for r in rbac.audit_log if r.principal == "analyst"]
        assert len(reads) == sum(len(days) for days in result.access_days.values())
        assert all(r.decision.value == "allow" for r in reads)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
