"""Core simulation modules"""

from src.core.simkernel import Event, EventKind, RngStream, SimKernel
from src.core.market import Market, PriceBook, SpotTrace, cheapest_az
from src.core.autoscaler import Autoscaler
from src.core.jobmgr import JobManager, effective_throughput
from src.core.storagesim import StorageSystem, Tier, TierPolicy, parse_policy
from src.core.rbac import AccessControl, Action, Decision
from src.core.costmodel import (
    glacier_retrieval_cost,
    lifecycle_year_cost,
    monthly_storage_cost,
    storage_cost_table,
    strategy_comparison,
)
from src.core.simulation import ElasticScalingSimulation, LifecycleSimulation
from src.core.throughput import simulate_throughput

__all__ = [
    # Kernel
    "SimKernel",
    "Event",
    "EventKind",
    "RngStream",
    # Market and scaling
    "Market",
    "PriceBook",
    "SpotTrace",
    "cheapest_az",
    "Autoscaler",
    # Jobs
    "JobManager",
    "effective_throughput",
    "simulate_throughput",
    # Storage
    "StorageSystem",
    "Tier",
    "TierPolicy",
    "parse_policy",
    # Access control
    "AccessControl",
    "Action",
    "Decision",
    # Cost model
    "monthly_storage_cost",
    "glacier_retrieval_cost",
    "lifecycle_year_cost",
    "storage_cost_table",
    "strategy_comparison",
    # Experiments
    "ElasticScalingSimulation",
    "LifecycleSimulation",
]
