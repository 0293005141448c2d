"""Shared fixtures"""

import os

import pytest

from src.core.rbac import AccessControl
from src.models.scenario import PriceSettings, ProvisioningDelay, default_rbac_settings

RESOURCES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "resources")
SCENARIOS = os.path.join(RESOURCES, "scenarios")


def scenario_path(name: str) -> str:
    return os.path.join(SCENARIOS, f"{name}.scn")


@pytest.fixture
def prices():
    """Default prices with a fixed 300s provisioning delay"""
    return PriceSettings(
        on_demand_usd_per_hour={"m4.xlarge": 0.239, "c4.8xlarge": 1.675},
        provisioning_delay=ProvisioningDelay(kind="fixed", low_s=300, high_s=300),
    )


@pytest.fixture
def rbac():
    return AccessControl.from_settings(default_rbac_settings())
