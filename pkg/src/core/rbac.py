"""
Role-based access control with an append-only audit log

Users act through roles. Internal roles run the platform; a trusted switcher
(the task executor) may temporarily assume a user role to stage that user's
data. Every authorization decision, including role assumption, is recorded.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional

from src.models.errors import ConfigurationError, SwitchDeniedError
from src.models.scenario import RbacSettings

logger = logging.getLogger(__name__)


class RoleKind(str, Enum):
    USER = "user"
    INTERNAL = "internal"


class Action(str, Enum):
    READ = "read"
    WRITE = "write"
    SUBMIT = "submit"
    DOWNLOAD = "download"
    ASSUME = "assume"


GRANTABLE_ACTIONS = frozenset({Action.READ, Action.WRITE, Action.SUBMIT, Action.DOWNLOAD})


class Decision(str, Enum):
    ALLOW = "allow"
    DENY = "deny"


@dataclass(frozen=True)
class Role:
    name: str
    kind: RoleKind
    trusted_switcher: bool = False

    def __post_init__(self):
        if self.trusted_switcher and self.kind is not RoleKind.INTERNAL:
            raise ConfigurationError(f"Only internal roles can switch roles: {self.name}")


@dataclass(frozen=True)
class Policy:
    """Grant of actions on a literal resource or a trailing-wildcard pattern"""
    role: str
    resource: str
    actions: FrozenSet[Action]

    def __post_init__(self):
        if "*" in self.resource[:-1] or (self.resource.endswith("*") and not self.resource.endswith("/*")):
            raise ConfigurationError(f"Only trailing '/*' wildcards are supported: {self.resource}")
        illegal = set(self.actions) - GRANTABLE_ACTIONS
        if illegal:
            raise ConfigurationError(f"Policies cannot grant {sorted(a.value for a in illegal)}")

    def matches(self, resource: str) -> bool:
        if self.resource.endswith("/*"):
            return resource.startswith(self.resource[:-1])
        return resource == self.resource


@dataclass
class Session:
    """Web session derived from an identity-provider token"""
    principal: str
    role: str
    issued_at: int
    token_lifetime: int = 3600
    session_lifetime: int = 21600

    @property
    def token_expires_at(self) -> int:
        return self.issued_at + self.token_lifetime

    @property
    def expires_at(self) -> int:
        return self.issued_at + self.session_lifetime

    def token_valid(self, at: int) -> bool:
        return self.issued_at <= at < self.token_expires_at

    def is_valid(self, at: int) -> bool:
        return self.issued_at <= at < self.expires_at


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    at: int
    principal: str
    acting_role: str
    resource: str
    action: Action
    decision: Decision
    reason: str = ""


@dataclass
class RoleHandle:
    """Temporary assumption of a user role; release before running user code"""
    worker_role: str
    role: str
    principal: str
    acquired_at: int
    released: bool = False
    _owner: Optional["AccessControl"] = field(default=None, repr=False)

    def release(self) -> None:
        if not self.released:
            self.released = True
            if self._owner is not None:
                self._owner._active_handles.discard(id(self))

    def __enter__(self) -> "RoleHandle":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.release()


class AccessControl:
    """Roles, policies, sessions and the audit log"""

    def __init__(self, token_lifetime: int = 3600, session_lifetime: int = 21600):
        self.token_lifetime = token_lifetime
        self.session_lifetime = session_lifetime
        self.roles: Dict[str, Role] = {}
        self.policies: List[Policy] = []
        self.audit_log: List[AuditRecord] = []
        self.decision_count = 0
        self._active_handles: set = set()

    @classmethod
    def from_settings(cls, settings: RbacSettings) -> "AccessControl":
        engine = cls(settings.token_lifetime_s, settings.session_lifetime_s)
        for spec in settings.roles:
            engine.add_role(Role(spec.name, RoleKind(spec.kind), spec.trusted_switcher))
        for grant in settings.grants:
            try:
                actions = frozenset(Action(action) for action in grant.actions)
            except ValueError as e:
                raise ConfigurationError(f"Unknown action in grant for {grant.role}: {e}")
            engine.add_policy(Policy(grant.role, grant.resource, actions))
        return engine

    def add_role(self, role: Role) -> None:
        self.roles[role.name] = role

    def add_policy(self, policy: Policy) -> None:
        if policy.role not in self.roles:
            raise ConfigurationError(f"Policy references unknown role: {policy.role}")
        self.policies.append(policy)

    def grant(self, role: str, resource: str, actions: Iterable[Action]) -> None:
        self.add_policy(Policy(role, resource, frozenset(actions)))

    def issue_session(self, principal: str, role: str, at: int) -> Session:
        return Session(principal, role, at, self.token_lifetime, self.session_lifetime)

    @property
    def held_handles(self) -> int:
        return len(self._active_handles)

    def _record(
        self,
        at: int,
        principal: str,
        role: str,
        resource: str,
        action: Action,
        decision: Decision,
        reason: str,
    ) -> Decision:
        self.audit_log.append(
            AuditRecord(len(self.audit_log), at, principal, role, resource, action, decision, reason)
        )
        self.decision_count += 1
        if decision is Decision.DENY:
            logger.debug(f"DENY {role} {action.value} {resource} at t={at}: {reason}")
        return decision

    def _evaluate(self, role_name: str, resource: str, action: Action) -> tuple:
        role = self.roles.get(role_name)
        if role is None:
            return Decision.DENY, "unknown-role"
        if action is Action.ASSUME:
            target = self.roles.get(resource[len("role/"):]) if resource.startswith("role/") else None
            if not role.trusted_switcher:
                return Decision.DENY, "not-a-trusted-switcher"
            if target is None or target.kind is not RoleKind.USER:
                return Decision.DENY, "target-not-a-user-role"
            return Decision.ALLOW, "trusted-switch"
        for policy in self.policies:
            if policy.role == role_name and action in policy.actions and policy.matches(resource):
                return Decision.ALLOW, f"policy:{policy.resource}"
        return Decision.DENY, "no-matching-policy"

    def authorize(
        self,
        acting_role: str,
        resource: str,
        action: Action,
        at: int,
        principal: Optional[str] = None,
        session: Optional[Session] = None,
    ) -> Decision:
        """
        Decide and audit one request

        Args:
            acting_role: Role the request is made under
            resource: Resource path, e.g. 'dataset/public/x'
            action: Requested action
            at: Virtual time of the request
            principal: Who made the request (defaults to the role name)
            session: Web session the request came through, if any

        Returns:
            ALLOW or DENY; exactly one audit record is appended either way
        """
        principal = principal or acting_role
        if session is not None and not session.is_valid(at):
            return self._record(at, principal, acting_role, resource, action, Decision.DENY, "session-expired")
        decision, reason = self._evaluate(acting_role, resource, action)
        return self._record(at, principal, acting_role, resource, action, decision, reason)

    def assume_role(self, worker_role: str, target_role: str, at: int, principal: Optional[str] = None) -> RoleHandle:
        """
        Let a trusted switcher act as a user role

        Raises:
            SwitchDeniedError: If the worker role may not assume the target
        """
        resource = f"role/{target_role}"
        decision = self.authorize(worker_role, resource, Action.ASSUME, at, principal=principal)
        if decision is Decision.DENY:
            raise SwitchDeniedError(worker_role, resource, Action.ASSUME.value, self.audit_log[-1].reason)
        handle = RoleHandle(worker_role, target_role, principal or worker_role, at, _owner=self)
        self._active_handles.add(id(handle))
        return handle
