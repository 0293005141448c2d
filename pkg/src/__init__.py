"""ccsim - Deterministic simulator for elastic cloud analytics platforms"""

__version__ = "0.1.0"

from src.core.simkernel import SimKernel
from src.models.scenario import Scenario
from src.services.scenario_service import ScenarioService

__all__ = ["SimKernel", "Scenario", "ScenarioService"]
