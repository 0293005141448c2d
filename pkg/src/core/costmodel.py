"""
Closed-form cost model for storage, Glacier retrieval, egress and
provisioning-strategy comparison
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from src.core.market import PriceBook, cheapest_az
from src.core.storagesim import Tier, TierPolicy, parse_policy
from src.models.errors import ConfigurationError
from src.models.scenario import AzScope, StorageCostParams, StoragePrices

logger = logging.getLogger(__name__)

MONTHS_PER_YEAR = 12
DAYS_PER_MONTH = 30
HOURS_PER_MONTH = 720

TIER_LABELS = {Tier.STD: "S3-Standard", Tier.IA: "S3-Infrequent Access", Tier.GLACIER: "Glacier"}
ACCESS_TIMES = {Tier.STD: "immediate", Tier.IA: "immediate", Tier.GLACIER: "4 hours"}


def monthly_storage_cost(tier: Tier, size_gb: float, prices: StoragePrices) -> float:
    """Dollars per month to keep `size_gb` in a tier (RETRIEVING is billed as GLACIER)"""
    if size_gb < 0:
        raise ConfigurationError("size must be non-negative")
    if tier is Tier.STD:
        cost = 0.0
        lower = 0.0
        for upper, rate in prices.std_tiered:
            if size_gb <= lower:
                break
            cost += (min(size_gb, upper) - lower) * rate
            lower = upper
        return cost
    if tier is Tier.IA:
        return size_gb * prices.ia_usd_per_gb_month
    return size_gb * prices.glacier_usd_per_gb_month


def storage_year_cost(tier: Tier, size_gb: float, prices: StoragePrices) -> float:
    return MONTHS_PER_YEAR * monthly_storage_cost(tier, size_gb, prices)


@dataclass(frozen=True)
class RetrievalDemand:
    peak_daily_gb: float
    glacier_gb: float


def retrieval_rates(demand: RetrievalDemand, prices: StoragePrices) -> Tuple[float, float]:
    """
    (peak hourly retrieval rate, free hourly quota)

    The peak rate spreads the day's retrieval over the restore window; the
    free quota is the monthly free share of the Glacier volume spread over
    the same window on every day of the month.
    """
    window = prices.glacier_retrieval_window_hours
    peak_rate = demand.peak_daily_gb / window
    free_rate = demand.glacier_gb * prices.glacier_free_fraction / (DAYS_PER_MONTH * window)
    return peak_rate, free_rate


def glacier_retrieval_cost(demand: RetrievalDemand, prices: StoragePrices) -> float:
    """Monthly retrieval charge: billable peak rate over every hour of the month"""
    peak_rate, free_rate = retrieval_rates(demand, prices)
    if peak_rate < free_rate:
        return 0.0
    return (peak_rate - free_rate) * prices.glacier_transfer_usd_per_gb * HOURS_PER_MONTH


def lifecycle_year_cost(dataset_gb: float, hot_fraction: float, policy: TierPolicy, prices: StoragePrices) -> float:
    """
    Yearly storage cost of a dataset under a lifecycle policy

    Chains ending in GLACIER: the hot fraction keeps cycling through the
    non-terminal tiers, weighted by how long it dwells in each; the rest sits
    in GLACIER. Other chains: the whole dataset dwells in each non-terminal
    tier for its staleness and in the terminal tier for the rest of the year.
    """
    if not 0.0 <= hot_fraction <= 1.0:
        raise ConfigurationError("hot_fraction must be within [0, 1]")
    links = policy.chain
    hot_links = links[:-1]
    terminal = policy.terminal
    if not hot_links:
        return storage_year_cost(terminal, dataset_gb, prices)

    if terminal is Tier.GLACIER:
        total_days = sum(link.staleness_days for link in hot_links)
        blended_hot = sum(
            link.staleness_days / total_days * storage_year_cost(link.tier, dataset_gb, prices)
            for link in hot_links
        )
        cold = storage_year_cost(Tier.GLACIER, dataset_gb, prices)
        return hot_fraction * blended_hot + (1.0 - hot_fraction) * cold

    months_used = 0.0
    cost = 0.0
    for link in hot_links:
        months = min(link.staleness_days / DAYS_PER_MONTH, MONTHS_PER_YEAR - months_used)
        cost += months * monthly_storage_cost(link.tier, dataset_gb, prices)
        months_used += months
    cost += (MONTHS_PER_YEAR - months_used) * monthly_storage_cost(terminal, dataset_gb, prices)
    return cost


def provision_cost(
    instance_price: float,
    download_gb: float,
    upload_gb: float,
    cross_region: bool,
    transfer_usd_per_gb: float,
) -> float:
    """Hourly instance price plus inter-region transfer of the task's data"""
    if not cross_region:
        return instance_price
    return instance_price + (download_gb + upload_gb) * transfer_usd_per_gb


@dataclass(frozen=True)
class StorageCostRow:
    strategy: str
    year_usd: float
    access_usd: Optional[float]
    access_time: str


def strategy_label(policy: TierPolicy, hot_fraction: float) -> str:
    if len(policy.chain) == 1:
        return TIER_LABELS[policy.terminal]
    if policy.terminal is Tier.GLACIER:
        return f"{policy.text} ({hot_fraction:.0%})"
    return policy.text


def storage_cost_table(params: StorageCostParams, prices: StoragePrices) -> List[StorageCostRow]:
    """One row per configured strategy: yearly storage cost, yearly access cost, access time"""
    rows = []
    for strategy in params.strategies:
        policy = parse_policy(strategy.policy)
        year = lifecycle_year_cost(params.dataset_gb, strategy.hot_fraction, policy, prices)
        access = None
        if policy.terminal is Tier.GLACIER:
            glacier_share = 1.0 if len(policy.chain) == 1 else 1.0 - strategy.hot_fraction
            peak = params.peak_daily_retrieval_gb
            if peak is None:
                peak = strategy.hot_fraction * params.dataset_gb
            demand = RetrievalDemand(peak_daily_gb=peak, glacier_gb=glacier_share * params.dataset_gb)
            access = MONTHS_PER_YEAR * glacier_retrieval_cost(demand, prices)
        rows.append(
            StorageCostRow(
                strategy=strategy_label(policy, strategy.hot_fraction),
                year_usd=year,
                access_usd=access,
                access_time=ACCESS_TIMES[policy.terminal],
            )
        )
    return rows


class ProvisioningStrategy(str, Enum):
    CHEAPEST_SINGLE_AZ = "cheapest-single-az"
    MOST_EXPENSIVE_SINGLE_AZ = "most-expensive-single-az"
    CHEAPEST_WITHIN_REGION = "cheapest-within-region"
    CHEAPEST_ACROSS_REGIONS = "cheapest-across-regions"


@dataclass(frozen=True)
class StrategyCostRow:
    data_gb: float
    strategy: ProvisioningStrategy
    monthly_usd: float


def strategy_comparison(
    price_book: PriceBook,
    instance_type: str,
    data_volumes_gb: Sequence[float],
    home_region: str,
    start: int = 0,
    hours: int = HOURS_PER_MONTH,
) -> List[StrategyCostRow]:
    """
    Monthly cost of running one task per hour under each placement strategy

    Single-AZ strategies stay in one home-region AZ all month (the cheapest
    and the most expensive such AZ). Within-region picks the cheapest home
    AZ each hour. Across-regions picks the cheapest instance price anywhere
    each hour, then pays transfer for both directions when that AZ is out of
    the home region.

    Returns:
        Rows ordered by data volume, then strategy
    """
    zones = price_book.spot_zones(instance_type)
    home_zones = [zone for zone in zones if zone[0] == home_region]
    if not home_zones:
        raise ConfigurationError(f"No spot traces for {instance_type} in home region {home_region}")
    hour_starts = [start + hour * 3600 for hour in range(hours)]

    fixed_totals: Dict[Tuple[str, str], float] = {
        zone: sum(price_book.trace_for(zone[0], zone[1], instance_type).price_at(t) for t in hour_starts)
        for zone in home_zones
    }
    within = 0.0
    across_price = 0.0
    out_of_region_hours = 0
    home = home_zones[0]
    for t in hour_starts:
        within += cheapest_az(price_book, AzScope.WITHIN_REGION, instance_type, t, home)[2]
        region, _, price = cheapest_az(price_book, AzScope.ACROSS_REGIONS, instance_type, t, home)
        across_price += price
        if region != home_region:
            out_of_region_hours += 1

    transfer = price_book.settings.transfer_usd_per_gb
    rows = []
    for volume in data_volumes_gb:
        across = across_price + out_of_region_hours * provision_cost(0.0, volume, volume, True, transfer)
        rows.extend(
            [
                StrategyCostRow(volume, ProvisioningStrategy.CHEAPEST_SINGLE_AZ, min(fixed_totals.values())),
                StrategyCostRow(volume, ProvisioningStrategy.MOST_EXPENSIVE_SINGLE_AZ, max(fixed_totals.values())),
                StrategyCostRow(volume, ProvisioningStrategy.CHEAPEST_WITHIN_REGION, within),
                StrategyCostRow(volume, ProvisioningStrategy.CHEAPEST_ACROSS_REGIONS, across),
            ]
        )
    logger.info(
        f"Compared placement strategies over {hours}h: {out_of_region_hours}h placed outside {home_region}"
    )
    return rows
