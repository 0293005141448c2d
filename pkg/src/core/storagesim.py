"""
Tiered object storage with LRU-style lifecycle demotion

Objects live in STD, IA or GLACIER. A daily lifecycle tick moves objects that
have gone unaccessed past their tier's threshold one link down the policy
chain. Reading a Glacier object starts a restore; the object lands back in
STD once the restore completes.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional

from src.core.rbac import AccessControl, Action, Decision
from src.core.simkernel import EventKind, SimKernel
from src.models.errors import AccessDeniedError, ConfigurationError, ObjectNotFoundError, PolicyParseError

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400


class Tier(str, Enum):
    STD = "STD"
    IA = "IA"
    GLACIER = "GLACIER"
    RETRIEVING = "RETRIEVING"


# Demotion order; a policy chain must follow it strictly
TIER_RANK = {Tier.STD: 0, Tier.IA: 1, Tier.GLACIER: 2}

TIER_ALIASES = {"STD": Tier.STD, "STANDARD": Tier.STD, "IA": Tier.IA, "GLACIER": Tier.GLACIER}

_LINK = re.compile(r"^([A-Za-z]+)(\d+)?$")


@dataclass(frozen=True)
class TierLink:
    tier: Tier
    staleness_days: Optional[int] = None


@dataclass(frozen=True)
class TierPolicy:
    """Ordered demotion chain, e.g. STD30-IA60-Glacier"""
    text: str
    chain: tuple

    @property
    def terminal(self) -> Tier:
        return self.chain[-1].tier

    @property
    def tiers(self) -> List[Tier]:
        return [link.tier for link in self.chain]

    def next_tier(self, tier: Tier) -> Optional[Tier]:
        tiers = self.tiers
        if tier not in tiers or tiers.index(tier) == len(tiers) - 1:
            return None
        return tiers[tiers.index(tier) + 1]

    def threshold_seconds(self, tier: Tier) -> Optional[int]:
        """Idle time after which an object in `tier` is demoted (cumulative along the chain)"""
        total = 0
        for link in self.chain:
            if link.staleness_days is None:
                return None
            total += link.staleness_days
            if link.tier is tier:
                return total * SECONDS_PER_DAY
        return None


def parse_policy(text: str) -> TierPolicy:
    """
    Parse a policy string such as 'STD30-IA60-Glacier'

    Every link except the last carries a staleness in days; tiers must be in
    demotion order.

    Raises:
        PolicyParseError: Naming the offending token
    """
    if not text or not text.strip():
        raise PolicyParseError(text, "", "empty policy")
    tokens = text.strip().split("-")
    parsed = []
    for token in tokens:
        match = _LINK.match(token)
        if not match:
            raise PolicyParseError(text, token)
        tier = TIER_ALIASES.get(match.group(1).upper())
        if tier is None:
            raise PolicyParseError(text, token, "unknown tier")
        parsed.append((token, tier, match.group(2)))

    links = []
    for position, (token, tier, days) in enumerate(parsed):
        is_last = position == len(parsed) - 1
        if not is_last and days is None:
            raise PolicyParseError(text, token, "missing staleness days in")
        if is_last and days is not None:
            raise PolicyParseError(text, token, "terminal tier cannot carry days")
        if links and TIER_RANK[tier] <= TIER_RANK[links[-1].tier]:
            raise PolicyParseError(text, token, "tiers out of demotion order at")
        staleness = int(days) if days is not None else None
        if staleness is not None and staleness <= 0:
            raise PolicyParseError(text, token, "staleness must be positive in")
        links.append(TierLink(tier, staleness))
    return TierPolicy(text=text.strip(), chain=tuple(links))


@dataclass
class DataObject:
    object_id: str
    size_gb: float
    tier: Tier = Tier.STD
    last_access: int = 0
    owner_role: str = "kotta-public-only"
    access_count: int = 0
    retrieval_done_at: Optional[int] = None


@dataclass(frozen=True)
class StagingModel:
    bandwidth_gb_per_s: float = 0.1
    glacier_retrieval_s: int = 14400

    def transfer_seconds(self, size_gb: float) -> int:
        return int(math.ceil(size_gb / self.bandwidth_gb_per_s)) if size_gb > 0 else 0


class PlanKind(str, Enum):
    IMMEDIATE = "immediate"
    DEFERRED = "deferred"


@dataclass(frozen=True)
class StagingPlan:
    kind: PlanKind
    duration: int = 0
    ready_at: Optional[int] = None

    @property
    def immediate(self) -> bool:
        return self.kind is PlanKind.IMMEDIATE


@dataclass(frozen=True)
class Demotion:
    object_id: str
    from_tier: Tier
    to_tier: Tier
    at: int


def lifecycle_tick(objects: Iterable[DataObject], policy: TierPolicy, at: int) -> List[Demotion]:
    """Move every object idle past its tier threshold one link down the chain"""
    demotions = []
    for obj in objects:
        if obj.tier is Tier.RETRIEVING:
            continue
        threshold = policy.threshold_seconds(obj.tier)
        target = policy.next_tier(obj.tier)
        if threshold is None or target is None:
            continue
        if at - obj.last_access > threshold:
            demotions.append(Demotion(obj.object_id, obj.tier, target, at))
            obj.tier = target
    return demotions


@dataclass
class StorageSystem:
    """Object store bound to a policy, a staging model and access control"""
    policy: TierPolicy
    staging: StagingModel = field(default_factory=StagingModel)
    rbac: Optional[AccessControl] = None
    kernel: Optional[SimKernel] = None
    objects: Dict[str, DataObject] = field(default_factory=dict)
    retrievals_started: int = 0
    demotion_count: int = 0

    def add_object(self, obj: DataObject) -> None:
        if obj.object_id in self.objects:
            raise ConfigurationError(f"Duplicate object id: {obj.object_id}")
        if obj.tier is Tier.RETRIEVING:
            raise ConfigurationError(f"Object {obj.object_id} cannot start in RETRIEVING")
        self.objects[obj.object_id] = obj

    def get(self, object_id: str) -> DataObject:
        try:
            return self.objects[object_id]
        except KeyError:
            raise ObjectNotFoundError(f"Unknown object: {object_id}")

    def volume_by_tier(self) -> Dict[Tier, float]:
        volumes = {tier: 0.0 for tier in Tier}
        for obj in self.objects.values():
            volumes[obj.tier] += obj.size_gb
        return volumes

    def lifecycle_tick(self, at: int) -> List[Demotion]:
        demotions = lifecycle_tick(self.objects.values(), self.policy, at)
        self.demotion_count += len(demotions)
        if demotions:
            logger.debug(f"Lifecycle tick at t={at}: {len(demotions)} demotions")
        return demotions

    def needs_retrieval(self, object_id: str) -> bool:
        obj = self.objects.get(object_id)
        return obj is not None and obj.tier in (Tier.GLACIER, Tier.RETRIEVING)

    def request(
        self,
        object_id: str,
        at: int,
        role: str,
        principal: Optional[str] = None,
        action: Action = Action.READ,
    ) -> StagingPlan:
        """
        Read an object on behalf of a role

        Args:
            object_id: Object to read
            at: Virtual time of the read
            role: Acting role, checked against access control
            principal: Worker or user making the request
            action: READ for staging, DOWNLOAD for user downloads

        Returns:
            Immediate plan with the transfer time, or a deferred plan with the
            time the Glacier restore completes

        Raises:
            ObjectNotFoundError: Unknown object
            AccessDeniedError: The role may not read the object
        """
        obj = self.get(object_id)
        if self.rbac is not None:
            decision = self.rbac.authorize(role, object_id, action, at, principal=principal)
            if decision is Decision.DENY:
                raise AccessDeniedError(role, object_id, action.value, self.rbac.audit_log[-1].reason)

        obj.access_count += 1
        if obj.tier is Tier.RETRIEVING:
            obj.last_access = at
            return StagingPlan(PlanKind.DEFERRED, ready_at=obj.retrieval_done_at)
        if obj.tier is Tier.GLACIER:
            obj.tier = Tier.RETRIEVING
            obj.last_access = at
            obj.retrieval_done_at = at + self.staging.glacier_retrieval_s
            self.retrievals_started += 1
            if self.kernel is not None:
                self.kernel.schedule_at(obj.retrieval_done_at, EventKind.RETRIEVAL_DONE, object_id=object_id)
            logger.debug(f"Restore of {object_id} started at t={at}, ready at t={obj.retrieval_done_at}")
            return StagingPlan(PlanKind.DEFERRED, ready_at=obj.retrieval_done_at)
        obj.last_access = at
        return StagingPlan(PlanKind.IMMEDIATE, duration=self.staging.transfer_seconds(obj.size_gb))

    def complete_retrieval(self, object_id: str, at: int) -> DataObject:
        """Land a restored object in STD; the landing counts as an access"""
        obj = self.get(object_id)
        if obj.tier is not Tier.RETRIEVING:
            raise ConfigurationError(f"Object {object_id} is not being retrieved (tier {obj.tier.value})")
        obj.tier = Tier.STD
        obj.last_access = at
        obj.retrieval_done_at = None
        return obj
