"""Services module"""

from src.services.scenario_service import ScenarioService
from src.services.report_writer import write_comparison, write_report

__all__ = ["ScenarioService", "write_report", "write_comparison"]
