"""Tests for the closed-form storage, retrieval and placement cost model"""

import pytest

from src.core.costmodel import (
    ProvisioningStrategy,
    RetrievalDemand,
    glacier_retrieval_cost,
    lifecycle_year_cost,
    monthly_storage_cost,
    provision_cost,
    storage_cost_table,
    strategy_comparison,
)
from src.core.market import PriceBook
from src.core.simkernel import RngStream
from src.core.storagesim import Tier, parse_policy
from src.core.trace_generator import generate_traces
from src.models.scenario import PriceSettings, StorageCostParams, StoragePrices

STORAGE = StoragePrices()


class TestStorageCost:
    """Yearly cost of 10 TB under each storage strategy"""

    def test_std_is_banded(self):
        assert monthly_storage_cost(Tier.STD, 1000, STORAGE) == pytest.approx(30.0)
        assert monthly_storage_cost(Tier.STD, 10000, STORAGE) == pytest.approx(295.5)
        assert monthly_storage_cost(Tier.STD, 0, STORAGE) == 0.0

    def test_retrieving_priced_as_glacier(self):
        assert monthly_storage_cost(Tier.RETRIEVING, 100, STORAGE) == monthly_storage_cost(Tier.GLACIER, 100, STORAGE)

    def test_storage_table(self):
        params = StorageCostParams(
            dataset_gb=10000,
            strategies="STD, IA, GLACIER, STD30-IA, STD30-IA60-Glacier@0.03, STD30-IA60-Glacier@0.10",
        )
        rows = storage_cost_table(params, STORAGE)
        expected = [3546.00, 1500.00, 840.00, 1670.50, 880.26, 974.20]
        assert [row.year_usd for row in rows] == pytest.approx(expected, abs=1.0)
        assert rows[0].strategy == "S3-Standard"
        assert rows[2].strategy == "Glacier"
        assert rows[4].strategy == "STD30-IA60-Glacier (3%)"
        assert rows[0].access_usd is None
        assert rows[2].access_time == "4 hours"
        assert rows[4].access_usd is not None

    def test_hot_fraction_raises_cost(self):
        policy = parse_policy("STD30-IA60-Glacier")
        costs = [lifecycle_year_cost(10000, f, policy, STORAGE) for f in (0.0, 0.03, 0.1, 0.5)]
        assert costs == sorted(costs)
        assert costs[0] == pytest.approx(840.0)


class TestGlacierRetrieval:
    def test_peak_rate_example(self):
        demand = RetrievalDemand(peak_daily_gb=300, glacier_gb=10000)
        assert glacier_retrieval_cost(demand, STORAGE) == pytest.approx(510.0, abs=0.01)

    def test_within_free_quota_is_free(self):
        demand = RetrievalDemand(peak_daily_gb=10, glacier_gb=10000)
        assert glacier_retrieval_cost(demand, STORAGE) == 0.0


class TestProvisionCost:
    def test_transfer_only_across_regions(self):
        assert provision_cost(0.5, 10, 10, False, 0.02) == 0.5
        assert provision_cost(0.5, 10, 10, True, 0.02) == pytest.approx(0.9)


def synthetic_book(seed: int) -> PriceBook:
    book = PriceBook(settings=PriceSettings(on_demand_usd_per_hour={"c4.8xlarge": 1.675}))
    for trace in generate_traces(RngStream(seed, "traces").child("c4.8xlarge"), "c4.8xlarge", 1.675, days=31):
        book.add_trace(trace)
    return book


def by_strategy(rows, volume):
    return {row.strategy: row.monthly_usd for row in rows if row.data_gb == volume}


class TestStrategyComparison:
    """Placement strategies over synthetic 10-AZ traces"""

    VOLUMES = [0, 1, 2, 5, 10, 20, 50, 100, 200]

    def test_strategy_properties(self):
        crossovers = 0
        for seed in range(1, 6):
            rows = strategy_comparison(synthetic_book(seed), "c4.8xlarge", self.VOLUMES, "us-east-1")
            advantages = []
            for volume in self.VOLUMES:
                costs = by_strategy(rows, volume)
                within = costs[ProvisioningStrategy.CHEAPEST_WITHIN_REGION]
                assert within <= costs[ProvisioningStrategy.CHEAPEST_SINGLE_AZ] + 1e-9
                assert costs[ProvisioningStrategy.CHEAPEST_SINGLE_AZ] <= costs[ProvisioningStrategy.MOST_EXPENSIVE_SINGLE_AZ]
                advantages.append(within - costs[ProvisioningStrategy.CHEAPEST_ACROSS_REGIONS])
            assert advantages[0] >= -1e-9
            assert all(b <= a + 1e-9 for a, b in zip(advantages, advantages[1:]))
            if advantages[0] > 0:
                crossovers += 1
                assert advantages[-1] < 0, f"seed {seed}: across-regions never loses its advantage"
        assert crossovers >= 1

    def test_rows_cover_every_volume_and_strategy(self):
        rows = strategy_comparison(synthetic_book(3), "c4.8xlarge", [0, 10], "us-east-1", hours=24)
        assert len(rows) == 8
        assert {row.strategy for row in rows} == set(ProvisioningStrategy)

    def test_unknown_home_region(self):
        with pytest.raises(ValueError):
            strategy_comparison(synthetic_book(3), "c4.8xlarge", [0], "sa-east-1", hours=1)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
