"""Pydantic models for scenario files and price files"""

import math
from enum import Enum
from typing import Annotated, Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator, model_validator

from src.models.job import QueueName


def split_list(value: Any) -> Any:
    """Accept comma separated strings wherever a list is expected"""
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


def split_pairs(value: Any) -> Any:
    """Parse 'a:b, c:d' into [(a, b), (c, d)]"""
    items = split_list(value)
    if not isinstance(items, list):
        return items
    pairs = []
    for item in items:
        if isinstance(item, str):
            if ":" not in item:
                raise ValueError(f"expected 'value:weight' pair, got '{item}'")
            left, right = item.split(":", 1)
            pairs.append((left.strip(), right.strip()))
        else:
            pairs.append(item)
    return pairs


CsvFloats = Annotated[List[float], BeforeValidator(split_list)]
CsvInts = Annotated[List[int], BeforeValidator(split_list)]
PriceBands = Annotated[List[Tuple[float, float]], BeforeValidator(split_pairs)]
DurationMix = Annotated[List[Tuple[int, float]], BeforeValidator(split_pairs)]


class SectionModel(BaseModel):
    """Unknown keys are errors, so typos in scenario and price files surface"""
    model_config = ConfigDict(extra="forbid")


class ExperimentKind(str, Enum):
    """Experiments a scenario file can describe"""
    ELASTIC_SCALING = "elastic-scaling"
    STORAGE_COST = "storage-cost"
    THROUGHPUT = "throughput"
    COST_AWARE_PROVISIONING = "cost-aware-provisioning"
    LIFECYCLE_SIMULATION = "lifecycle-simulation"


class MarketKind(str, Enum):
    ON_DEMAND = "on-demand"
    SPOT = "spot"


class AzScope(str, Enum):
    """How far the placement search looks for a cheaper availability zone"""
    SINGLE_AZ = "single-az"
    WITHIN_REGION = "within-region"
    ACROSS_REGIONS = "across-regions"


class ScalingStrategy(str, Enum):
    NO_SCALING = "no-scaling"
    LIMITED = "limited"
    UNLIMITED = "unlimited"


class BidKind(str, Enum):
    STATIC = "static"
    FRACTION_OF_ON_DEMAND = "fraction-of-on-demand"


class DelayKind(str, Enum):
    FIXED = "fixed"
    UNIFORM = "uniform"
    HEAVY_TAIL = "heavy-tail"


class BidPolicy(SectionModel):
    """Spot bid, either a fixed price or a fraction of the on-demand price"""
    kind: BidKind = Field(default=BidKind.FRACTION_OF_ON_DEMAND, description="Bid kind")
    value: float = Field(default=1.0, gt=0.0, description="Dollar bid or on-demand fraction")

    def bid_for(self, on_demand_price: float) -> float:
        if self.kind is BidKind.STATIC:
            return self.value
        return self.value * on_demand_price


class ScalingPolicy(SectionModel):
    """Provisioning policy for one execution pool"""
    strategy: ScalingStrategy = Field(..., description="Scaling strategy")
    fixed_size: Optional[int] = Field(default=None, ge=1, description="Pool size under no-scaling")
    max_size: Optional[int] = Field(default=None, ge=1, description="Upper bound under limited scaling")
    min_size: int = Field(default=0, ge=0, description="Instances kept even when idle")
    pool: QueueName = Field(default=QueueName.PRODUCTION, description="Queue the pool serves")
    market: MarketKind = Field(default=MarketKind.ON_DEMAND, description="Purchasing market")
    az_scope: AzScope = Field(default=AzScope.SINGLE_AZ, description="Placement search scope")
    idle_timeout_s: int = Field(default=3300, gt=0, description="Idle reclamation mark within a billing quantum")
    bid: BidPolicy = Field(default_factory=BidPolicy, description="Spot bid policy")
    home_region: str = Field(default="us-east-1", description="Region holding the data")
    home_az: str = Field(default="us-east-1a", description="AZ used by single-az placement")
    instance_type: str = Field(default="m4.xlarge", description="Instance type to provision")

    @model_validator(mode="after")
    def check_bounds(self) -> "ScalingPolicy":
        if self.strategy is ScalingStrategy.NO_SCALING and self.fixed_size is None:
            raise ValueError("no-scaling requires fixed_size")
        if self.strategy is ScalingStrategy.LIMITED:
            if self.max_size is None:
                raise ValueError("limited scaling requires max_size")
            if self.max_size < self.min_size:
                raise ValueError("max_size must be >= min_size")
        if self.pool is QueueName.DEVELOPMENT:
            if self.min_size < 1:
                raise ValueError("the development pool keeps at least one instance (min_size >= 1)")
            if self.market is not MarketKind.ON_DEMAND:
                raise ValueError("the development pool uses on-demand instances")
        if not self.home_az.startswith(self.home_region):
            raise ValueError(f"home_az '{self.home_az}' is not in home_region '{self.home_region}'")
        return self

    @property
    def lower_bound(self) -> int:
        if self.strategy is ScalingStrategy.NO_SCALING:
            return self.fixed_size or 0
        return self.min_size

    @property
    def upper_bound(self) -> Optional[int]:
        if self.strategy is ScalingStrategy.NO_SCALING:
            return self.fixed_size
        if self.strategy is ScalingStrategy.LIMITED:
            return self.max_size
        return None


class ProvisioningDelay(SectionModel):
    """Distribution of the time between a provisioning request and a ready instance"""
    kind: DelayKind = Field(default=DelayKind.UNIFORM, description="Delay model")
    low_s: int = Field(default=240, ge=0, description="Lower bound (or fixed value)")
    high_s: int = Field(default=720, ge=0, description="Upper bound of the body")
    tail_probability: float = Field(default=0.0, ge=0.0, le=1.0, description="Heavy-tail probability")
    tail_high_s: int = Field(default=1800, ge=0, description="Upper bound of the tail")

    @model_validator(mode="after")
    def check_range(self) -> "ProvisioningDelay":
        if self.high_s < self.low_s:
            raise ValueError("high_s must be >= low_s")
        if self.kind is DelayKind.HEAVY_TAIL and self.tail_high_s < self.high_s:
            raise ValueError("tail_high_s must be >= high_s")
        return self


class StoragePrices(SectionModel):
    """Per GB-month storage prices and Glacier retrieval parameters"""
    std_tiered: PriceBands = Field(
        default_factory=lambda: [(1000.0, 0.0300), (math.inf, 0.0295)],
        description="(band upper bound in GB, $/GB-month) pairs for S3 Standard",
    )
    ia_usd_per_gb_month: float = Field(default=0.0125, ge=0.0)
    glacier_usd_per_gb_month: float = Field(default=0.007, ge=0.0)
    glacier_transfer_usd_per_gb: float = Field(default=0.01, ge=0.0, description="Peak retrieval rate price")
    glacier_free_fraction: float = Field(default=0.05, ge=0.0, le=1.0, description="Monthly free retrieval share")
    glacier_retrieval_window_hours: float = Field(default=4.0, gt=0.0)

    @field_validator("std_tiered")
    @classmethod
    def check_tiers(cls, value: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        if not value:
            raise ValueError("at least one S3 Standard price band is required")
        bounds = [bound for bound, _ in value]
        if any(b <= a for a, b in zip(bounds, bounds[1:])):
            raise ValueError("price band bounds must be strictly increasing")
        if not math.isinf(bounds[-1]):
            raise ValueError("the last price band must be unbounded (inf)")
        return value


class PriceSettings(SectionModel):
    """Contents of a price file"""
    on_demand_usd_per_hour: Dict[str, float] = Field(..., description="On-demand price per instance type")
    transfer_usd_per_gb: float = Field(default=0.020, ge=0.0, description="Inter-region transfer price")
    billing_quantum_s: int = Field(default=3600, ge=1, description="Billing granularity")
    s3_bandwidth_gb_per_s: float = Field(default=0.1, gt=0.0, description="Staging bandwidth")
    glacier_retrieval_s: int = Field(default=14400, ge=0, description="Glacier restore latency")
    provisioning_delay: ProvisioningDelay = Field(default_factory=ProvisioningDelay)
    storage: StoragePrices = Field(default_factory=StoragePrices)

    @field_validator("on_demand_usd_per_hour")
    @classmethod
    def check_prices(cls, value: Dict[str, float]) -> Dict[str, float]:
        if not value:
            raise ValueError("at least one on-demand price is required")
        for instance_type, price in value.items():
            if price <= 0:
                raise ValueError(f"on-demand price for {instance_type} must be positive")
        return value


class WorkloadParams(SectionModel):
    """Synthetic workload description"""
    job_count: int = Field(..., gt=0, description="Number of jobs")
    mean_inter_arrival_s: float = Field(..., gt=0.0, description="Mean exponential gap between submissions")
    duration_mix: DurationMix = Field(..., description="(duration seconds, probability) pairs")
    duration_jitter_fraction: float = Field(default=0.05, ge=0.0, lt=1.0)
    input_size_choices_gb: CsvFloats = Field(default_factory=lambda: [1.0, 3.0, 5.0, 7.0, 9.0])
    output_size_gb: float = Field(default=0.0, ge=0.0)
    queue: QueueName = Field(default=QueueName.PRODUCTION)
    owner_role: str = Field(default="kotta-public-only")
    executable: str = Field(default="sleep")
    input_object_prefix: Optional[str] = Field(
        default="dataset/public/input-",
        description="Jobs read '<prefix><size>gb'; empty disables managed inputs",
    )

    @model_validator(mode="before")
    @classmethod
    def rate_to_gap(cls, data: Any) -> Any:
        if isinstance(data, dict) and "arrival_rate_per_hour" in data:
            data = dict(data)
            rate = float(data.pop("arrival_rate_per_hour"))
            if rate <= 0:
                raise ValueError("arrival_rate_per_hour must be positive")
            data.setdefault("mean_inter_arrival_s", 3600.0 / rate)
        return data

    @field_validator("duration_mix")
    @classmethod
    def check_mix(cls, value: List[Tuple[int, float]]) -> List[Tuple[int, float]]:
        if not value:
            raise ValueError("duration_mix must not be empty")
        if any(duration <= 0 for duration, _ in value):
            raise ValueError("durations must be positive")
        if any(probability < 0 for _, probability in value):
            raise ValueError("probabilities must be non-negative")
        if abs(sum(probability for _, probability in value) - 1.0) > 1e-9:
            raise ValueError("duration_mix probabilities must sum to 1")
        return value

    @field_validator("input_size_choices_gb")
    @classmethod
    def check_sizes(cls, value: List[float]) -> List[float]:
        if not value or any(size < 0 for size in value):
            raise ValueError("input_size_choices_gb needs at least one non-negative size")
        return value


class JobManagerSettings(SectionModel):
    watcher_period_s: int = Field(default=60, gt=0, description="Failure watcher period")
    max_attempts: int = Field(default=0, ge=0, description="0 means retry forever")


class BrokerCapacity(SectionModel):
    """Provisioned operations per second of the queue/status broker"""
    read_capacity: float = Field(default=100.0, gt=0.0)
    write_capacity: float = Field(default=400.0, gt=0.0)


class ThroughputParams(SectionModel):
    task_count: int = Field(default=10000, gt=0)
    worker_counts: CsvInts = Field(default_factory=lambda: [1, 2, 4, 8, 16, 32])
    per_worker_rate: float = Field(default=4.90, gt=0.0, description="Tasks per second per worker")
    reads_per_task: int = Field(default=1, ge=0)
    writes_per_task: int = Field(default=5, ge=1)
    capacity: BrokerCapacity = Field(default_factory=BrokerCapacity)
    caller_role: str = Field(default="kotta-public-only")

    @field_validator("worker_counts")
    @classmethod
    def check_counts(cls, value: List[int]) -> List[int]:
        if not value or any(count < 1 for count in value):
            raise ValueError("worker_counts must be positive")
        return value


class StorageStrategy(SectionModel):
    """One row of the storage cost comparison"""
    policy: str
    hot_fraction: float = Field(default=0.0, ge=0.0, le=1.0)


class StorageCostParams(SectionModel):
    dataset_gb: float = Field(default=10000.0, gt=0.0)
    strategies: List[StorageStrategy] = Field(default_factory=list)
    peak_daily_retrieval_gb: Optional[float] = Field(default=None, ge=0.0)

    @field_validator("strategies", mode="before")
    @classmethod
    def parse_strategies(cls, value: Any) -> Any:
        items = split_list(value)
        if not isinstance(items, list):
            return items
        parsed = []
        for item in items:
            if isinstance(item, str):
                policy, _, fraction = item.partition("@")
                parsed.append({"policy": policy.strip(), "hot_fraction": float(fraction) if fraction else 0.0})
            else:
                parsed.append(item)
        return parsed


class LifecycleParams(SectionModel):
    dataset_gb: float = Field(default=10000.0, gt=0.0)
    object_gb: float = Field(default=10.0, gt=0.0)
    hot_fraction: float = Field(default=0.03, ge=0.0, le=1.0)
    mean_access_gap_days: float = Field(default=21.0, gt=0.0)
    days: int = Field(default=365, gt=0)
    cold_tier: str = Field(default="GLACIER", description="Initial tier of objects outside the hot set")
    owner_role: str = Field(default="kotta-public-only")


class ProvisioningParams(SectionModel):
    data_volumes_gb: CsvFloats = Field(default_factory=lambda: [0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0])
    hours: int = Field(default=720, gt=0)
    start_s: int = Field(default=0, ge=0)
    home_region: str = Field(default="us-east-1")
    instance_type: str = Field(default="c4.8xlarge")
    synthetic_days: int = Field(default=31, gt=0, description="Length of generated traces")


class RoleSpec(SectionModel):
    name: str
    kind: str = Field(default="user", pattern="^(user|internal)$")
    trusted_switcher: bool = False


class GrantSpec(SectionModel):
    role: str
    resource: str
    actions: List[str]


class RbacSettings(SectionModel):
    roles: List[RoleSpec] = Field(default_factory=list)
    grants: List[GrantSpec] = Field(default_factory=list)
    token_lifetime_s: int = Field(default=3600, gt=0)
    session_lifetime_s: int = Field(default=21600, gt=0)


def default_rbac_settings() -> RbacSettings:
    """Role set used when a scenario has no [rbac] section"""
    return RbacSettings(
        roles=[
            RoleSpec(name="task-executor", kind="internal", trusted_switcher=True),
            RoleSpec(name="web-server", kind="internal"),
            RoleSpec(name="kotta-public-only", kind="user"),
            RoleSpec(name="kotta-read-WOS-private", kind="user"),
        ],
        grants=[
            GrantSpec(role="kotta-public-only", resource="queue/*", actions=["submit"]),
            GrantSpec(role="kotta-public-only", resource="dataset/public/*", actions=["read", "download"]),
            GrantSpec(role="kotta-read-WOS-private", resource="queue/*", actions=["submit"]),
            GrantSpec(role="kotta-read-WOS-private", resource="dataset/public/*", actions=["read", "download"]),
            GrantSpec(role="kotta-read-WOS-private", resource="dataset/wos/*", actions=["read"]),
        ],
    )


class Scenario(SectionModel):
    """A fully loaded scenario"""
    name: str = Field(..., min_length=1)
    experiment: ExperimentKind
    seed: int = Field(..., ge=0)
    source_path: Optional[str] = None
    prices: PriceSettings
    workload: Optional[WorkloadParams] = None
    pools: Dict[QueueName, ScalingPolicy] = Field(default_factory=dict)
    jobs: JobManagerSettings = Field(default_factory=JobManagerSettings)
    rbac: RbacSettings = Field(default_factory=default_rbac_settings)
    tier_policy: str = Field(default="STD30-IA60-Glacier")
    spot_trace_path: Optional[str] = None
    synthetic_traces: bool = False
    dataset_manifest_path: Optional[str] = None
    throughput: ThroughputParams = Field(default_factory=ThroughputParams)
    storage: StorageCostParams = Field(default_factory=StorageCostParams)
    lifecycle: LifecycleParams = Field(default_factory=LifecycleParams)
    provisioning: ProvisioningParams = Field(default_factory=ProvisioningParams)
    max_virtual_days: float = Field(default=30.0, gt=0.0)

    @model_validator(mode="after")
    def check_experiment_inputs(self) -> "Scenario":
        if self.experiment is ExperimentKind.ELASTIC_SCALING:
            if self.workload is None:
                raise ValueError("elastic-scaling needs a [workload] section")
            if self.workload.queue not in self.pools:
                raise ValueError(f"no [scaling] pool serves the '{self.workload.queue.value}' queue")
            for policy in self.pools.values():
                if policy.instance_type not in self.prices.on_demand_usd_per_hour:
                    raise ValueError(f"no on-demand price for instance type {policy.instance_type}")
                if policy.market is MarketKind.SPOT and not (self.spot_trace_path or self.synthetic_traces):
                    raise ValueError("spot market pools need spot_trace_path or synthetic_traces")
        if self.experiment is ExperimentKind.COST_AWARE_PROVISIONING:
            if not (self.spot_trace_path or self.synthetic_traces):
                raise ValueError("cost-aware-provisioning needs spot_trace_path or synthetic_traces")
            if self.provisioning.instance_type not in self.prices.on_demand_usd_per_hour:
                raise ValueError(f"no on-demand price for instance type {self.provisioning.instance_type}")
        if self.experiment is ExperimentKind.STORAGE_COST and not self.storage.strategies:
            raise ValueError("storage-cost needs at least one strategy")
        return self

    @property
    def max_virtual_seconds(self) -> int:
        return int(self.max_virtual_days * 86400)
