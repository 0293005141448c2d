"""Data models for ccsim"""

from src.models.errors import (
    AccessDeniedError,
    ClockViolationError,
    ConfigurationError,
    InvalidTransitionError,
    ObjectNotFoundError,
    PolicyParseError,
    PriceExceededError,
    ScenarioLoadError,
    SimulationError,
    SimulationGuardError,
    SwitchDeniedError,
)
from src.models.job import JobRecord, JobSpec, JobState, QueueName, StatusMarker
from src.models.report import ComparisonRow, ScenarioReport
from src.models.scenario import ExperimentKind, PriceSettings, Scenario, ScalingPolicy

__all__ = [
    # Errors
    "SimulationError",
    "ClockViolationError",
    "ConfigurationError",
    "PolicyParseError",
    "ScenarioLoadError",
    "PriceExceededError",
    "AccessDeniedError",
    "SwitchDeniedError",
    "ObjectNotFoundError",
    "InvalidTransitionError",
    "SimulationGuardError",
    # Jobs
    "JobSpec",
    "JobRecord",
    "JobState",
    "QueueName",
    "StatusMarker",
    # Scenarios and reports
    "ExperimentKind",
    "PriceSettings",
    "Scenario",
    "ScalingPolicy",
    "ScenarioReport",
    "ComparisonRow",
]
