"""
Experiment drivers that wire the kernel, market, autoscaler, job manager,
storage and access control together
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from src.core.autoscaler import ActionKind, Autoscaler, IdleInstance, PoolState
from src.core.costmodel import lifecycle_year_cost, monthly_storage_cost
from src.core.jobmgr import WORKER_ROLE, JobManager
from src.core.market import Instance, InstanceState, Market, PriceBook
from src.core.rbac import AccessControl, AuditRecord
from src.core.simkernel import Event, EventKind, RngStream, SimKernel
from src.core.storagesim import (
    SECONDS_PER_DAY,
    TIER_ALIASES,
    DataObject,
    StagingModel,
    StorageSystem,
    Tier,
    TierPolicy,
)
from src.models.errors import AccessDeniedError, ConfigurationError, PriceExceededError, SimulationGuardError
from src.models.job import JobRecord, JobSpec, QueueName, StatusMarker, WorkerStats
from src.models.scenario import LifecycleParams, PriceSettings, ScalingPolicy

logger = logging.getLogger(__name__)


def staging_model(settings: PriceSettings) -> StagingModel:
    return StagingModel(settings.s3_bandwidth_gb_per_s, settings.glacier_retrieval_s)


@dataclass
class Pool:
    queue: QueueName
    policy: ScalingPolicy
    autoscaler: Autoscaler
    failed_provisions: int = 0


@dataclass
class InstanceCost:
    instance: Instance
    cost_usd: float
    on_demand_usd: float


@dataclass
class ElasticRunResult:
    """Everything an elastic-scaling run produced"""
    jobs: List[JobRecord]
    markers: List[StatusMarker]
    instance_costs: List[InstanceCost]
    audit: List[AuditRecord]
    decision_count: int
    end_time: int
    events_processed: int
    failed_provisions: int
    revocations: int
    rejected_jobs: int

    @property
    def total_cost(self) -> float:
        return sum(item.cost_usd for item in self.instance_costs)

    @property
    def on_demand_cost(self) -> float:
        return sum(item.on_demand_usd for item in self.instance_costs)


class ElasticScalingSimulation:
    """Runs a workload against one or more autoscaled pools"""

    def __init__(
        self,
        pools: Dict[QueueName, ScalingPolicy],
        price_book: PriceBook,
        jobs: Sequence[JobSpec],
        rbac: AccessControl,
        seed: int,
        storage: Optional[StorageSystem] = None,
        watcher_period_s: int = 60,
        max_attempts: int = 0,
        max_virtual_s: int = 30 * SECONDS_PER_DAY,
    ):
        self.kernel = SimKernel(seed)
        self.price_book = price_book
        self.market = Market(price_book, self.kernel.stream("provisioning"), self.kernel)
        self.rbac = rbac
        self.storage = storage
        if storage is not None:
            storage.kernel = self.kernel
        self.jobmgr = JobManager(rbac, storage, staging_model(price_book.settings), max_attempts)
        self.specs = {spec.job_id: spec for spec in jobs}
        if len(self.specs) != len(jobs):
            raise ConfigurationError("Workload contains duplicate job ids")
        self.pools: Dict[QueueName, Pool] = {}
        for queue, policy in sorted(pools.items(), key=lambda item: item[0].value):
            price_book.extra_zones.add((policy.home_region, policy.home_az))
            autoscaler = Autoscaler(policy, price_book.billing_quantum_s, self.market)
            self.pools[queue] = Pool(queue, policy, autoscaler)
        self.watcher_period_s = watcher_period_s
        self.max_virtual_s = max_virtual_s
        self._arrivals_pending = len(self.specs)
        self._finished = False
        self._end_time = 0
        self._revocations = 0

        self.kernel.on(EventKind.JOB_ARRIVAL, self._on_job_arrival)
        self.kernel.on(EventKind.INSTANCE_READY, self._on_instance_ready)
        self.kernel.on(EventKind.INSTANCE_REVOKED, self._on_instance_revoked)
        self.kernel.on(EventKind.STAGING_DONE, self._on_staging_done)
        self.kernel.on(EventKind.JOB_FINISHED, self._on_job_finished)
        self.kernel.on(EventKind.WATCHER_TICK, self._on_watcher_tick)
        self.kernel.on(EventKind.RETRIEVAL_DONE, self._on_retrieval_done)

    # pool bookkeeping

    def _pool_instances(self, pool: Pool) -> List[Instance]:
        return sorted(self.market.live_instances(pool.queue.value), key=lambda inst: inst.instance_id)

    def _pool_state(self, pool: Pool) -> PoolState:
        state = PoolState()
        for inst in self._pool_instances(pool):
            if inst.state is InstanceState.PROVISIONING:
                state.provisioning += 1
            elif inst.state is InstanceState.BUSY:
                state.busy += 1
            else:
                state.idle.append(IdleInstance(inst.instance_id, inst.launch_time, inst.idle_since))
        return state

    def _provision(self, pool: Pool, at: int, prewarmed: bool = False) -> bool:
        policy = pool.policy
        try:
            region, az, market = pool.autoscaler.place(None, at)
            self.market.provision(
                market, (region, az), policy.bid, at, policy.instance_type, pool=pool.queue.value, prewarmed=prewarmed
            )
        except PriceExceededError as e:
            pool.failed_provisions += 1
            logger.warning(f"Provisioning for {pool.queue.value} deferred at t={at}: {e}")
            return False
        return True

    def _terminate(self, inst: Instance, at: int) -> None:
        inst.state = InstanceState.TERMINATED
        inst.terminate_time = at
        inst.job_id = None

    def _autoscale(self, pool: Pool, at: int) -> None:
        actions = pool.autoscaler.react(self.jobmgr.queue_depth(pool.queue), self._pool_state(pool), at)
        for action in actions:
            if action.kind is ActionKind.PROVISION:
                if not self._provision(pool, at):
                    break
            else:
                self._terminate(self.market.get(action.instance_id), at)

    def _dispatch(self, pool: Pool, at: int) -> None:
        for inst in self._pool_instances(pool):
            if self.jobmgr.queue_depth(pool.queue) == 0:
                break
            if inst.state is not InstanceState.IDLE:
                continue
            job_id = self.jobmgr.worker_poll(inst.instance_id, pool.queue, at)
            self._assign(inst, job_id, at)

    def _assign(self, inst: Instance, job_id: str, at: int) -> None:
        inst.state = InstanceState.BUSY
        inst.job_id = job_id
        inst.idle_since = None
        record = self.jobmgr.get(job_id)
        try:
            duration = self.jobmgr.stage_in(job_id, WORKER_ROLE, at, worker_id=inst.instance_id)
        except AccessDeniedError as e:
            logger.warning(f"Job {job_id} cannot stage its input: {e}")
            self.jobmgr.fail(job_id, at, str(e))
            self._release(inst, at)
            return
        self.kernel.schedule_at(
            at + duration,
            EventKind.STAGING_DONE,
            job_id=job_id,
            attempt=record.attempt,
            phase="in",
            instance_id=inst.instance_id,
        )

    def _release(self, inst: Instance, at: int) -> None:
        inst.state = InstanceState.IDLE
        inst.job_id = None
        inst.idle_since = at
        if self._check_finished(at):
            return
        pool = self.pools[QueueName(inst.pool)]
        self._dispatch(pool, at)
        self._autoscale(pool, at)

    def _holds(self, event: Event) -> Optional[Instance]:
        """The instance still running this attempt of the job, if any"""
        inst = self.market.get(event.payload["instance_id"])
        job_id = event.payload["job_id"]
        if inst.state is not InstanceState.BUSY or inst.job_id != job_id:
            return None
        if not self.jobmgr.is_current(job_id, event.payload["attempt"]):
            return None
        return inst

    def _check_finished(self, at: int) -> bool:
        if self._finished:
            return True
        if self._arrivals_pending > 0 or not self.jobmgr.all_finished():
            return False
        for inst in self.market.instances.values():
            if inst.is_live:
                self._terminate(inst, at)
        self._finished = True
        self._end_time = at
        self.kernel.stop()
        logger.info(f"All jobs finished at t={at}")
        return True

    # event handlers

    def _on_job_arrival(self, event: Event) -> None:
        at = event.fire_at
        spec = self.specs[event.payload["job_id"]]
        self._arrivals_pending -= 1
        try:
            self.jobmgr.submit(spec, spec.owner_role, at, principal=spec.owner_role)
        except AccessDeniedError as e:
            logger.warning(f"Submission of {spec.job_id} rejected: {e}")
            self._check_finished(at)
            return
        pool = self.pools.get(spec.queue)
        if pool is not None:
            self._dispatch(pool, at)
            self._autoscale(pool, at)

    def _on_instance_ready(self, event: Event) -> None:
        inst = self.market.get(event.payload["instance_id"])
        if inst.state is not InstanceState.PROVISIONING:
            return
        inst.state = InstanceState.IDLE
        inst.idle_since = event.fire_at
        pool = self.pools[QueueName(inst.pool)]
        self._dispatch(pool, event.fire_at)
        self._autoscale(pool, event.fire_at)

    def _on_instance_revoked(self, event: Event) -> None:
        at = event.fire_at
        inst = self.market.get(event.payload["instance_id"])
        if not inst.is_live:
            return
        if inst.state is InstanceState.BUSY and inst.job_id is not None:
            self.jobmgr.mark_worker_lost(inst.instance_id, inst.job_id, at)
        inst.state = InstanceState.REVOKED
        inst.terminate_time = at
        inst.job_id = None
        self._revocations += 1
        logger.info(f"Spot instance {inst.instance_id} revoked at t={at}")

    def _on_staging_done(self, event: Event) -> None:
        inst = self._holds(event)
        if inst is None:
            return
        at = event.fire_at
        job_id = event.payload["job_id"]
        if event.payload["phase"] == "in":
            spec = self.specs[job_id]
            stats = WorkerStats(cpu_fraction=1.0, io_gb=spec.input_size_gb)
            self.jobmgr.start_running(job_id, at, stats=stats)
            self.kernel.schedule_at(
                at + spec.nominal_duration,
                EventKind.JOB_FINISHED,
                job_id=job_id,
                attempt=event.payload["attempt"],
                instance_id=inst.instance_id,
            )
        else:
            self.jobmgr.complete(job_id, at)
            self._release(inst, at)

    def _on_job_finished(self, event: Event) -> None:
        inst = self._holds(event)
        if inst is None:
            return
        at = event.fire_at
        job_id = event.payload["job_id"]
        stage_out = self.jobmgr.finish_running(job_id, at)
        if stage_out == 0:
            self.jobmgr.complete(job_id, at)
            self._release(inst, at)
            return
        self.kernel.schedule_at(
            at + stage_out,
            EventKind.STAGING_DONE,
            job_id=job_id,
            attempt=event.payload["attempt"],
            phase="out",
            instance_id=inst.instance_id,
        )

    def _on_watcher_tick(self, event: Event) -> None:
        at = event.fire_at
        resubmitted = self.jobmgr.watcher_tick(at)
        if resubmitted:
            logger.info(f"Watcher resubmitted {len(resubmitted)} jobs at t={at}")
        if self._check_finished(at):
            return
        for pool in self.pools.values():
            self._dispatch(pool, at)
            self._autoscale(pool, at)
        self.kernel.schedule_at(at + self.watcher_period_s, EventKind.WATCHER_TICK)

    def _on_retrieval_done(self, event: Event) -> None:
        at = event.fire_at
        object_id = event.payload["object_id"]
        self.storage.complete_retrieval(object_id, at)
        released = self.jobmgr.release_deferred(object_id, at)
        queues = {self.specs[job_id].queue for job_id in released}
        for queue in sorted(queues, key=lambda q: q.value):
            pool = self.pools.get(queue)
            if pool is not None:
                self._dispatch(pool, at)
                self._autoscale(pool, at)

    def run(self) -> ElasticRunResult:
        """
        Run until every job has finished

        Raises:
            SimulationGuardError: Work remained at the virtual-time guard
        """
        for pool in self.pools.values():
            for _ in range(pool.autoscaler.initial_fill()):
                self._provision(pool, 0, prewarmed=True)
        for spec in sorted(self.specs.values(), key=lambda s: (s.submit_time, s.job_id)):
            self.kernel.schedule_at(spec.submit_time, EventKind.JOB_ARRIVAL, job_id=spec.job_id)
        self.kernel.schedule_at(self.watcher_period_s, EventKind.WATCHER_TICK)

        self.kernel.run_until(self.max_virtual_s)
        if not self._finished:
            raise SimulationGuardError(
                f"{self.jobmgr.unfinished + self._arrivals_pending} jobs unfinished after "
                f"{self.max_virtual_s / SECONDS_PER_DAY:g} virtual days"
            )

        costs = []
        for inst in sorted(self.market.instances.values(), key=lambda i: i.instance_id):
            inst.accrued_cost = self.market.billing(inst, inst.terminate_time)
            costs.append(InstanceCost(inst, inst.accrued_cost, self.market.on_demand_equivalent(inst, inst.terminate_time)))
        return ElasticRunResult(
            jobs=[self.jobmgr.jobs[job_id] for job_id in sorted(self.jobmgr.jobs)],
            markers=list(self.jobmgr.markers),
            instance_costs=costs,
            audit=list(self.rbac.audit_log),
            decision_count=self.rbac.decision_count,
            end_time=self._end_time,
            events_processed=self.kernel.processed_count,
            failed_provisions=sum(pool.failed_provisions for pool in self.pools.values()),
            revocations=self._revocations,
            rejected_jobs=self.jobmgr.rejected,
        )


@dataclass
class LifecycleResult:
    object_ids: List[str]
    initial_tiers: Dict[str, Tier]
    access_days: Dict[str, List[int]]
    snapshots: List[List[Tier]] = field(default_factory=list)
    daily_costs: List[float] = field(default_factory=list)
    daily_volumes: List[Dict[Tier, float]] = field(default_factory=list)
    demotions: int = 0
    retrievals: int = 0
    formula_cost: float = 0.0

    @property
    def total_cost(self) -> float:
        return sum(self.daily_costs)

    @property
    def deviation(self) -> float:
        """Relative difference between simulated and closed-form cost"""
        if self.formula_cost == 0:
            return 0.0
        return abs(self.total_cost - self.formula_cost) / self.formula_cost


class LifecycleSimulation:
    """
    Day-by-day storage lifecycle over a dataset

    Hot objects start in STD and are read at Poisson-spaced days (at noon);
    the rest start in the cold tier. A lifecycle tick runs every midnight and
    the tier of every object is recorded right after it.
    """

    ACCESS_OFFSET_S = 43200

    def __init__(
        self,
        params: LifecycleParams,
        policy: TierPolicy,
        prices: PriceSettings,
        rng: RngStream,
        rbac: AccessControl,
        objects: Optional[List[DataObject]] = None,
    ):
        self.params = params
        self.policy = policy
        self.prices = prices
        self.rng = rng
        self.rbac = rbac
        self.objects = objects if objects is not None else self._synthetic_objects()
        self.hot_ids = self._pick_hot()
        self._check_tiers()

    def _check_tiers(self) -> None:
        """Every object must start in a tier the policy chain contains"""
        chain = set(self.policy.tiers)
        stray = sorted({obj.tier.value for obj in self.objects if obj.tier not in chain})
        if stray:
            raise ConfigurationError(
                f"Tier policy {self.policy.text} has no {', '.join(stray)} tier for the objects starting there"
            )

    def _synthetic_objects(self) -> List[DataObject]:
        params = self.params
        cold = TIER_ALIASES.get(params.cold_tier.upper())
        if cold is None:
            raise ConfigurationError(f"Unknown cold tier: {params.cold_tier}")
        count = int(round(params.dataset_gb / params.object_gb))
        return [
            DataObject(
                object_id=f"dataset/public/archive-{index:05d}",
                size_gb=params.object_gb,
                tier=cold,
                owner_role=params.owner_role,
            )
            for index in range(count)
        ]

    def _pick_hot(self) -> List[str]:
        count = int(round(self.params.hot_fraction * len(self.objects)))
        if count == 0:
            return []
        picks = self.rng.child("hot").choice(len(self.objects), size=count, replace=False)
        hot = sorted(int(index) for index in picks)
        for index in hot:
            self.objects[index].tier = Tier.STD
        return [self.objects[index].object_id for index in hot]

    def access_schedule(self) -> Dict[str, List[int]]:
        """Access days per hot object, drawn from one stream in object order"""
        stream = self.rng.child("access")
        schedule = {}
        for object_id in self.hot_ids:
            days = set()
            t = float(stream.exponential(self.params.mean_access_gap_days))
            while t < self.params.days:
                days.add(int(math.floor(t)))
                t += float(stream.exponential(self.params.mean_access_gap_days))
            schedule[object_id] = sorted(days)
        return schedule

    def _daily_cost(self, volumes: Dict[Tier, float]) -> float:
        storage_prices = self.prices.storage
        monthly = (
            monthly_storage_cost(Tier.STD, volumes[Tier.STD], storage_prices)
            + monthly_storage_cost(Tier.IA, volumes[Tier.IA], storage_prices)
            + monthly_storage_cost(Tier.GLACIER, volumes[Tier.GLACIER] + volumes[Tier.RETRIEVING], storage_prices)
        )
        return monthly * 12 / 365

    def run(self) -> LifecycleResult:
        kernel = SimKernel(self.rng.seed)
        storage = StorageSystem(self.policy, staging_model(self.prices), self.rbac, kernel)
        for obj in self.objects:
            storage.add_object(obj)
        order = [obj.object_id for obj in self.objects]
        schedule = self.access_schedule()
        result = LifecycleResult(
            object_ids=order,
            initial_tiers={obj.object_id: obj.tier for obj in self.objects},
            access_days=schedule,
        )
        total_gb = sum(obj.size_gb for obj in self.objects)
        result.formula_cost = (
            lifecycle_year_cost(total_gb, self.params.hot_fraction, self.policy, self.prices.storage)
            * self.params.days
            / 365
        )

        def on_tick(event: Event) -> None:
            storage.lifecycle_tick(event.fire_at)
            result.snapshots.append([storage.objects[object_id].tier for object_id in order])
            volumes = storage.volume_by_tier()
            result.daily_volumes.append(volumes)
            result.daily_costs.append(self._daily_cost(volumes))

        def on_access(event: Event) -> None:
            obj = storage.get(event.payload["object_id"])
            storage.request(obj.object_id, event.fire_at, obj.owner_role, principal="analyst")

        def on_retrieval(event: Event) -> None:
            storage.complete_retrieval(event.payload["object_id"], event.fire_at)

        kernel.on(EventKind.LIFECYCLE_TICK, on_tick)
        kernel.on(EventKind.DATA_ACCESS, on_access)
        kernel.on(EventKind.RETRIEVAL_DONE, on_retrieval)
        for day in range(1, self.params.days + 1):
            kernel.schedule_at(day * SECONDS_PER_DAY, EventKind.LIFECYCLE_TICK, day=day)
        for object_id, days in schedule.items():
            for day in days:
                kernel.schedule_at(day * SECONDS_PER_DAY + self.ACCESS_OFFSET_S, EventKind.DATA_ACCESS, object_id=object_id)
        kernel.run_until(self.params.days * SECONDS_PER_DAY)

        result.demotions = storage.demotion_count
        result.retrievals = storage.retrievals_started
        logger.info(
            f"Lifecycle run: {result.demotions} demotions, {result.retrievals} restores, "
            f"cost ${result.total_cost:.2f} vs formula ${result.formula_cost:.2f}"
        )
        return result
