"""Process-level configuration read from the environment"""

import logging
import os
from dataclasses import dataclass
from typing import Dict, Optional

from src.models.errors import ConfigurationError

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class SimulationConfig:
    """Output location, virtual-time guard and log level for a ccsim process"""
    out_dir: str = "out"
    max_virtual_days: Optional[float] = None
    log_level: str = "WARNING"

    def as_dict(self) -> Dict[str, str]:
        return {
            "CCSIM_OUT_DIR": self.out_dir,
            "CCSIM_MAX_VIRTUAL_DAYS": "scenario default" if self.max_virtual_days is None else f"{self.max_virtual_days:g}",
            "LOG_LEVEL": self.log_level,
        }


def create_config_from_env() -> SimulationConfig:
    """
    Create the simulation config from environment variables

    Environment variables:
        CCSIM_OUT_DIR: Directory reports are written under (default: out)
        CCSIM_MAX_VIRTUAL_DAYS: Virtual-time guard overriding the scenario's
        LOG_LEVEL: Python logging level name (default: WARNING)

    Raises:
        ConfigurationError: A variable holds an unusable value
    """
    out_dir = os.getenv("CCSIM_OUT_DIR", "out")
    days = os.getenv("CCSIM_MAX_VIRTUAL_DAYS")
    max_virtual_days = None
    if days:
        try:
            max_virtual_days = float(days)
        except ValueError:
            raise ConfigurationError(f"CCSIM_MAX_VIRTUAL_DAYS must be a number, got '{days}'")
        if max_virtual_days <= 0:
            raise ConfigurationError("CCSIM_MAX_VIRTUAL_DAYS must be positive")

    log_level = os.getenv("LOG_LEVEL", "WARNING").upper()
    if log_level not in LOG_LEVELS:
        logger.warning(f"Unknown LOG_LEVEL {log_level}, using WARNING")
        log_level = "WARNING"
    return SimulationConfig(out_dir=out_dir, max_virtual_days=max_virtual_days, log_level=log_level)
