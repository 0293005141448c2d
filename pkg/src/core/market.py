"""
Instance markets: on-demand pricing, spot price traces, provisioning and billing
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Set, Tuple

from src.core.simkernel import EventKind, RngStream, SimKernel
from src.models.errors import ConfigurationError, ObjectNotFoundError, PriceExceededError
from src.models.scenario import AzScope, BidPolicy, DelayKind, MarketKind, PriceSettings, ProvisioningDelay

logger = logging.getLogger(__name__)

Zone = Tuple[str, str]


@dataclass
class SpotTrace:
    """Spot price of one instance type in one AZ, held constant between points"""
    region: str
    az: str
    instance_type: str
    times: List[int] = field(default_factory=list)
    prices: List[float] = field(default_factory=list)

    def add_point(self, at: int, price: float) -> None:
        if self.times and at <= self.times[-1]:
            raise ConfigurationError(
                f"Trace {self.region}/{self.az}/{self.instance_type}: timestamps must increase ({at})"
            )
        if price < 0:
            raise ConfigurationError(f"Negative spot price {price} at {at}")
        self.times.append(at)
        self.prices.append(price)

    def price_at(self, at: int) -> float:
        if not self.times:
            raise ConfigurationError(f"Empty trace for {self.region}/{self.az}")
        index = bisect.bisect_right(self.times, at) - 1
        return self.prices[max(index, 0)]

    def first_crossing(self, after: int, bid: float) -> Optional[int]:
        """First trace point strictly after `after` whose price exceeds `bid`"""
        start = bisect.bisect_right(self.times, after)
        for index in range(start, len(self.times)):
            if self.prices[index] > bid:
                return self.times[index]
        return None

    def integrate(self, start: int, end: int) -> float:
        """Dollar-seconds of the step function over [start, end), divided by 3600"""
        if end <= start:
            return 0.0
        low = bisect.bisect_right(self.times, start)
        high = bisect.bisect_left(self.times, end)
        points = [start] + self.times[low:high] + [end]
        total = sum(self.price_at(a) * (b - a) for a, b in zip(points, points[1:]))
        return total / 3600.0


@dataclass
class PriceBook:
    """On-demand prices, spot traces and billing rules for one run"""
    settings: PriceSettings
    traces: Dict[Tuple[str, str, str], SpotTrace] = field(default_factory=dict)
    extra_zones: Set[Zone] = field(default_factory=set)

    @property
    def billing_quantum_s(self) -> int:
        return self.settings.billing_quantum_s

    def on_demand_price(self, instance_type: str) -> float:
        try:
            return self.settings.on_demand_usd_per_hour[instance_type]
        except KeyError:
            raise ConfigurationError(f"No on-demand price for instance type {instance_type}")

    def add_trace(self, trace: SpotTrace) -> None:
        key = (trace.region, trace.az, trace.instance_type)
        if key in self.traces:
            raise ConfigurationError(f"Duplicate spot trace for {key}")
        self.traces[key] = trace

    def trace_for(self, region: str, az: str, instance_type: str) -> SpotTrace:
        try:
            return self.traces[(region, az, instance_type)]
        except KeyError:
            raise ConfigurationError(f"No spot trace for {instance_type} in {az}")

    @property
    def known_zones(self) -> Set[Zone]:
        return {(region, az) for region, az, _ in self.traces} | set(self.extra_zones)

    def spot_zones(self, instance_type: str) -> List[Zone]:
        return sorted((region, az) for region, az, itype in self.traces if itype == instance_type)


def cheapest_az(
    price_book: PriceBook,
    scope: AzScope,
    instance_type: str,
    at: int,
    home: Zone,
) -> Tuple[str, str, float]:
    """
    Lowest spot price AZ within the scope; ties go to the lexicographically
    smallest (region, az)

    Returns:
        (region, az, price)
    """
    home_region, home_az = home
    if scope is AzScope.SINGLE_AZ:
        candidates = [home]
    elif scope is AzScope.WITHIN_REGION:
        candidates = [zone for zone in price_book.spot_zones(instance_type) if zone[0] == home_region]
    else:
        candidates = price_book.spot_zones(instance_type)
    if not candidates:
        raise ConfigurationError(f"No spot traces for {instance_type} within scope {scope.value} of {home_az}")
    best = min(
        ((price_book.trace_for(region, az, instance_type).price_at(at), region, az) for region, az in candidates)
    )
    return best[1], best[2], best[0]


class InstanceState(str, Enum):
    PROVISIONING = "provisioning"
    IDLE = "idle"
    BUSY = "busy"
    REVOKED = "revoked"
    TERMINATED = "terminated"


LIVE_STATES = frozenset({InstanceState.PROVISIONING, InstanceState.IDLE, InstanceState.BUSY})


@dataclass
class Instance:
    instance_id: str
    market: MarketKind
    region: str
    az: str
    instance_type: str
    pool: str
    bid: Optional[float]
    launch_time: int
    ready_time: int
    state: InstanceState = InstanceState.PROVISIONING
    terminate_time: Optional[int] = None
    idle_since: Optional[int] = None
    job_id: Optional[str] = None
    revoke_at: Optional[int] = None
    accrued_cost: float = 0.0

    @property
    def is_live(self) -> bool:
        return self.state in LIVE_STATES


def draw_delay(model: ProvisioningDelay, rng: RngStream) -> int:
    """Seconds from a provisioning request to a ready instance"""
    if model.kind is DelayKind.FIXED:
        return model.low_s
    if model.kind is DelayKind.HEAVY_TAIL and rng.random() < model.tail_probability:
        return int(rng.integers(model.high_s, model.tail_high_s))
    return int(rng.integers(model.low_s, model.high_s))


class Market:
    """Provisions instances and prices their lifetimes"""

    def __init__(self, price_book: PriceBook, rng: RngStream, kernel: Optional[SimKernel] = None):
        self.price_book = price_book
        self.rng = rng
        self.kernel = kernel
        self.instances: Dict[str, Instance] = {}
        self._counter = 0

    def get(self, instance_id: str) -> Instance:
        try:
            return self.instances[instance_id]
        except KeyError:
            raise ObjectNotFoundError(f"Unknown instance: {instance_id}")

    def cheapest_az(self, scope: AzScope, instance_type: str, at: int, home: Zone) -> Tuple[str, str, float]:
        return cheapest_az(self.price_book, scope, instance_type, at, home)

    def provision(
        self,
        market: MarketKind,
        zone: Zone,
        bid_policy: BidPolicy,
        at: int,
        instance_type: str,
        pool: str = "production",
        prewarmed: bool = False,
    ) -> Instance:
        """
        Request an instance

        Args:
            market: on-demand or spot
            zone: (region, az) to launch in
            bid_policy: Spot bid policy, ignored for on-demand
            at: Request time; billing starts here
            instance_type: Instance type
            pool: Pool the instance serves
            prewarmed: Skip the provisioning delay (initial fill)

        Returns:
            The new instance in PROVISIONING state; instance-ready (and, for
            spot, instance-revoked) events are scheduled when a kernel is bound

        Raises:
            ConfigurationError: Unknown AZ or instance type
            PriceExceededError: Spot price already above the bid
        """
        region, az = zone
        if zone not in self.price_book.known_zones:
            raise ConfigurationError(f"Unknown availability zone {az} in {region}")
        on_demand = self.price_book.on_demand_price(instance_type)

        bid = None
        revoke_at = None
        if market is MarketKind.SPOT:
            bid = bid_policy.bid_for(on_demand)
            trace = self.price_book.trace_for(region, az, instance_type)
            price = trace.price_at(at)
            if price > bid:
                raise PriceExceededError(az, price, bid)
            revoke_at = trace.first_crossing(at, bid)

        delay = 0 if prewarmed else draw_delay(self.price_book.settings.provisioning_delay, self.rng)
        self._counter += 1
        instance = Instance(
            instance_id=f"i-{self._counter:05d}",
            market=market,
            region=region,
            az=az,
            instance_type=instance_type,
            pool=pool,
            bid=bid,
            launch_time=at,
            ready_time=at + delay,
            revoke_at=revoke_at,
        )
        self.instances[instance.instance_id] = instance
        if self.kernel is not None:
            self.kernel.schedule_at(instance.ready_time, EventKind.INSTANCE_READY, instance_id=instance.instance_id)
            if revoke_at is not None:
                self.kernel.schedule_at(revoke_at, EventKind.INSTANCE_REVOKED, instance_id=instance.instance_id)
        logger.debug(
            f"Provisioned {instance.instance_id} ({market.value}) in {az} at t={at}, ready t={instance.ready_time}"
        )
        return instance

    def quanta(self, instance: Instance, until: int) -> int:
        if until <= instance.launch_time:
            return 0
        return int(math.ceil((until - instance.launch_time) / self.price_book.billing_quantum_s))

    def billing(self, instance: Instance, until: int) -> float:
        """
        Charge for an instance from launch until `until`, in whole quanta

        On-demand: quanta x quantum hours x hourly price. Spot with hourly (or
        coarser than a minute) quanta: each quantum at the price in effect at
        its start. Spot with finer quanta: the price step function integrated
        over the billed span.
        """
        count = self.quanta(instance, until)
        if count == 0:
            return 0.0
        quantum = self.price_book.billing_quantum_s
        if instance.market is MarketKind.ON_DEMAND:
            return count * quantum / 3600.0 * self.price_book.on_demand_price(instance.instance_type)
        trace = self.price_book.trace_for(instance.region, instance.az, instance.instance_type)
        if quantum < 60:
            return trace.integrate(instance.launch_time, instance.launch_time + count * quantum)
        return sum(
            trace.price_at(instance.launch_time + k * quantum) * quantum / 3600.0 for k in range(count)
        )

    def on_demand_equivalent(self, instance: Instance, until: int) -> float:
        """What the same billed quanta would cost at the on-demand rate"""
        quantum = self.price_book.billing_quantum_s
        return self.quanta(instance, until) * quantum / 3600.0 * self.price_book.on_demand_price(
            instance.instance_type
        )

    def live_instances(self, pool: Optional[str] = None) -> Iterable[Instance]:
        return [
            instance
            for instance in self.instances.values()
            if instance.is_live and (pool is None or instance.pool == pool)
        ]
