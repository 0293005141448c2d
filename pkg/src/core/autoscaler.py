"""Pool sizing decisions for the execution pools"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

from src.core.market import Market
from src.models.job import JobSpec
from src.models.scenario import MarketKind, ScalingPolicy, ScalingStrategy

logger = logging.getLogger(__name__)


class ActionKind(str, Enum):
    PROVISION = "provision"
    TERMINATE = "terminate"


@dataclass(frozen=True)
class ScalingAction:
    kind: ActionKind
    instance_id: Optional[str] = None


@dataclass(frozen=True)
class IdleInstance:
    instance_id: str
    launch_time: int
    idle_since: int


@dataclass
class PoolState:
    """Snapshot of one pool as the autoscaler sees it"""
    provisioning: int = 0
    busy: int = 0
    idle: List[IdleInstance] = field(default_factory=list)

    @property
    def idle_count(self) -> int:
        return len(self.idle)

    @property
    def provisioned(self) -> int:
        return self.provisioning + self.busy + len(self.idle)


class Autoscaler:
    """Applies one pool's ScalingPolicy"""

    def __init__(self, policy: ScalingPolicy, billing_quantum_s: int = 3600, market: Optional[Market] = None):
        self.policy = policy
        self.billing_quantum_s = billing_quantum_s
        self.market = market

    def initial_fill(self) -> int:
        """Instances to start pre-warmed at t=0"""
        return self.policy.lower_bound

    def reclaim_at(self, instance: IdleInstance) -> int:
        """
        Time an idle instance becomes reclaimable

        With quanta longer than the idle timeout this is the next point where
        the instance's uptime within its billing quantum reaches the timeout.
        """
        timeout = self.policy.idle_timeout_s
        quantum = self.billing_quantum_s
        if quantum <= timeout:
            return instance.idle_since + timeout
        elapsed = instance.idle_since - instance.launch_time
        completed = elapsed // quantum
        mark = instance.launch_time + completed * quantum + timeout
        if mark < instance.idle_since:
            mark += quantum
        return mark

    def react(self, queue_depth: int, pool: PoolState, at: int) -> List[ScalingAction]:
        """
        Decide provisioning and termination actions

        Args:
            queue_depth: Jobs waiting in this pool's queue
            pool: Current pool snapshot
            at: Virtual time of the decision

        Returns:
            Provision actions (one per instance) followed by terminations
        """
        policy = self.policy
        provisioned = pool.provisioned

        if policy.strategy is ScalingStrategy.NO_SCALING:
            deficit = max(0, policy.fixed_size - provisioned)
            return [ScalingAction(ActionKind.PROVISION) for _ in range(deficit)]

        unmatched = max(0, queue_depth - pool.idle_count - pool.provisioning)
        to_add = max(unmatched, policy.min_size - provisioned)
        if policy.upper_bound is not None:
            to_add = min(to_add, max(0, policy.upper_bound - provisioned))
        actions = [ScalingAction(ActionKind.PROVISION) for _ in range(to_add)]

        if queue_depth == 0:
            reclaimable = sorted(
                (self.reclaim_at(instance), instance.instance_id)
                for instance in pool.idle
                if at >= self.reclaim_at(instance)
            )
            allowed = max(0, provisioned + to_add - policy.min_size)
            for _, instance_id in reclaimable[:allowed]:
                actions.append(ScalingAction(ActionKind.TERMINATE, instance_id))
        if actions:
            logger.debug(f"Pool {policy.pool.value} at t={at}: {len(actions)} actions (queue={queue_depth})")
        return actions

    def place(self, job: Optional[JobSpec], at: int) -> Tuple[str, str, MarketKind]:
        """
        Choose where the next instance goes

        On-demand instances go to the home AZ; spot instances to the cheapest
        AZ within the policy's scope.
        """
        policy = self.policy
        home = (policy.home_region, policy.home_az)
        if policy.market is MarketKind.ON_DEMAND or self.market is None:
            return policy.home_region, policy.home_az, policy.market
        region, az, _ = self.market.cheapest_az(policy.az_scope, policy.instance_type, at, home)
        return region, az, MarketKind.SPOT
