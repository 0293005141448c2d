"""Exception types raised by the simulator"""

from typing import Optional


class SimulationError(Exception):
    """Base class for every error raised by ccsim"""


class ClockViolationError(SimulationError):
    """An event was scheduled before the current virtual time"""

    def __init__(self, fire_at: int, clock: int):
        self.fire_at = fire_at
        self.clock = clock
        super().__init__(f"Cannot schedule event at t={fire_at}: clock is already at t={clock}")


class ConfigurationError(SimulationError, ValueError):
    """Invalid parameters, policies or input files"""


class PolicyParseError(ConfigurationError):
    """A tier policy string could not be parsed"""

    def __init__(self, policy: str, token: str, reason: str = "unexpected token"):
        self.policy = policy
        self.token = token
        super().__init__(f"Invalid tier policy '{policy}': {reason} '{token}'")


class ScenarioLoadError(ConfigurationError):
    """A scenario, price, trace or manifest file failed to load"""

    def __init__(self, path: str, message: str, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}")


class JobValidationError(ConfigurationError):
    """A job specification was rejected at submit time"""


class PriceExceededError(SimulationError):
    """Spot price is above the bid at provisioning time"""

    def __init__(self, zone: str, price: float, bid: float):
        self.zone = zone
        self.price = price
        self.bid = bid
        super().__init__(f"Spot price {price:.4f} in {zone} exceeds bid {bid:.4f}")


class AccessDeniedError(SimulationError):
    """An authorization decision denied the request"""

    def __init__(self, role: str, resource: str, action: str, reason: str = "no matching policy"):
        self.role = role
        self.resource = resource
        self.action = action
        self.reason = reason
        super().__init__(f"Access denied: role '{role}' may not {action} '{resource}' ({reason})")


class SwitchDeniedError(AccessDeniedError):
    """A worker tried to assume a role it is not allowed to switch into"""


class ObjectNotFoundError(SimulationError, LookupError):
    """Unknown job, object or instance identifier"""


class InvalidTransitionError(SimulationError):
    """A job state change outside the legal transition table"""

    def __init__(self, job_id: str, current: str, target: str):
        self.job_id = job_id
        super().__init__(f"Job {job_id}: illegal transition {current} -> {target}")


class SimulationGuardError(SimulationError):
    """The run hit the virtual-time guard before all work finished"""
