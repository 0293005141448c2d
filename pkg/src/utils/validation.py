"""Cross-checks on a loaded scenario that single-field validation cannot express"""

import logging
from typing import List, Tuple

from src.core.jobmgr import WORKER_ROLE
from src.core.rbac import AccessControl, Action, Decision, RoleKind
from src.core.storagesim import TIER_ALIASES, Tier, parse_policy
from src.models.errors import ConfigurationError
from src.models.job import QueueName
from src.models.scenario import AzScope, ExperimentKind, MarketKind, Scenario
from src.utils.loaders import read_manifest, read_spot_traces

logger = logging.getLogger(__name__)


def check_policies(scenario: Scenario) -> List[str]:
    """Tier policy strings parse, and lifecycle objects start in a tier of the chain"""
    issues = []
    policy = None
    try:
        policy = parse_policy(scenario.tier_policy)
    except ConfigurationError as e:
        issues.append(f"tier_policy: {e}")
    for strategy in scenario.storage.strategies:
        try:
            parse_policy(strategy.policy)
        except ConfigurationError as e:
            issues.append(f"storage.strategies: {e}")
    cold = TIER_ALIASES.get(scenario.lifecycle.cold_tier.upper())
    if cold is None:
        issues.append(f"lifecycle.cold_tier: unknown tier '{scenario.lifecycle.cold_tier}'")
    if scenario.experiment is ExperimentKind.LIFECYCLE_SIMULATION and policy is not None:
        if cold is not None and cold not in policy.tiers and not scenario.dataset_manifest_path:
            issues.append(f"lifecycle.cold_tier: {cold.value} is not a tier of {policy.text}")
        if scenario.lifecycle.hot_fraction > 0 and Tier.STD not in policy.tiers:
            issues.append(f"lifecycle.hot_fraction: hot objects start in STD, which {policy.text} lacks")
    return issues


def check_rbac(scenario: Scenario) -> List[str]:
    """Roles and grants build, and the roles the experiment acts under can do their work"""
    try:
        engine = AccessControl.from_settings(scenario.rbac)
    except ConfigurationError as e:
        return [f"rbac: {e}"]

    issues = []
    if scenario.experiment is ExperimentKind.ELASTIC_SCALING:
        worker = engine.roles.get(WORKER_ROLE)
        if worker is None or worker.kind is not RoleKind.INTERNAL or not worker.trusted_switcher:
            issues.append(f"rbac: role '{WORKER_ROLE}' must exist as an internal trusted switcher")
        workload = scenario.workload
        if workload is not None:
            queue = f"queue/{workload.queue.value}"
            if engine.authorize(workload.owner_role, queue, Action.SUBMIT, 0) is Decision.DENY:
                issues.append(f"rbac: workload owner '{workload.owner_role}' may not submit to {queue}")
            if workload.input_object_prefix:
                sample = f"{workload.input_object_prefix}{workload.input_size_choices_gb[0]:g}gb"
                if engine.authorize(workload.owner_role, sample, Action.READ, 0) is Decision.DENY:
                    issues.append(f"rbac: workload owner '{workload.owner_role}' may not read {sample}")
    if scenario.experiment is ExperimentKind.THROUGHPUT:
        role = scenario.throughput.caller_role
        queue = f"queue/{QueueName.PRODUCTION.value}"
        if engine.authorize(role, queue, Action.SUBMIT, 0) is Decision.DENY:
            issues.append(f"rbac: throughput caller '{role}' may not submit to {queue}")
    return issues


def check_inputs(scenario: Scenario) -> List[str]:
    """Referenced trace and manifest files parse and cover the zones the run needs"""
    issues = []
    zones = set()
    if scenario.spot_trace_path:
        try:
            traces = read_spot_traces(scenario.spot_trace_path)
            zones = {(t.region, t.az, t.instance_type) for t in traces}
        except ConfigurationError as e:
            issues.append(str(e))
    if scenario.dataset_manifest_path:
        try:
            read_manifest(scenario.dataset_manifest_path)
        except ConfigurationError as e:
            issues.append(str(e))
    if not zones:
        return issues

    if scenario.experiment is ExperimentKind.ELASTIC_SCALING:
        for queue, policy in scenario.pools.items():
            if policy.market is not MarketKind.SPOT:
                continue
            if policy.az_scope is AzScope.SINGLE_AZ:
                covered = (policy.home_region, policy.home_az, policy.instance_type) in zones
            elif policy.az_scope is AzScope.WITHIN_REGION:
                covered = any(r == policy.home_region and i == policy.instance_type for r, _, i in zones)
            else:
                covered = any(i == policy.instance_type for _, _, i in zones)
            if not covered:
                issues.append(
                    f"pool {queue.value}: no spot trace for {policy.instance_type} within "
                    f"{policy.az_scope.value} of {policy.home_az}"
                )
    if scenario.experiment is ExperimentKind.COST_AWARE_PROVISIONING:
        params = scenario.provisioning
        if not any(r == params.home_region and i == params.instance_type for r, _, i in zones):
            issues.append(f"provisioning: no spot trace for {params.instance_type} in {params.home_region}")
    return issues


def validate_scenario(scenario: Scenario) -> Tuple[bool, List[str]]:
    """
    Run every cross-check on a loaded scenario

    Args:
        scenario: Scenario that already passed model validation

    Returns:
        Tuple of (is_valid, list_of_issues)
    """
    issues = check_policies(scenario) + check_rbac(scenario) + check_inputs(scenario)
    for issue in issues:
        logger.warning(f"Scenario {scenario.name}: {issue}")
    return not issues, issues
