"""Synthetic spot price traces"""

import logging
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.core.market import SpotTrace
from src.core.simkernel import RngStream

logger = logging.getLogger(__name__)

# 10 AZs over 4 regions
DEFAULT_ZONES: Tuple[Tuple[str, str], ...] = (
    ("ap-southeast-1", "ap-southeast-1a"),
    ("ap-southeast-1", "ap-southeast-1b"),
    ("eu-west-1", "eu-west-1a"),
    ("eu-west-1", "eu-west-1b"),
    ("us-east-1", "us-east-1a"),
    ("us-east-1", "us-east-1b"),
    ("us-east-1", "us-east-1c"),
    ("us-west-2", "us-west-2a"),
    ("us-west-2", "us-west-2b"),
    ("us-west-2", "us-west-2c"),
)


def generate_traces(
    rng: RngStream,
    instance_type: str,
    on_demand_price: float,
    days: int = 31,
    zones: Sequence[Tuple[str, str]] = DEFAULT_ZONES,
    step_s: int = 3600,
    base_fraction: Tuple[float, float] = (0.12, 0.35),
    volatility: float = 0.08,
    reversion: float = 0.15,
    spike_probability: float = 0.01,
    spike_hours: Tuple[int, int] = (1, 4),
    spike_factor: Tuple[float, float] = (2.0, 6.0),
) -> List[SpotTrace]:
    """
    Generate one hourly trace per AZ

    Each AZ's log-price walks around its own base level (a fraction of the
    on-demand price) with mean reversion, and occasionally spikes for a few
    hours. Every AZ draws from its own child stream.

    Args:
        rng: Parent random stream
        instance_type: Instance type label for the traces
        on_demand_price: Reference price the base levels are fractions of
        days: Trace length
        zones: (region, az) pairs to generate

    Returns:
        Traces ordered by (region, az)
    """
    steps = int(days * 86400 // step_s)
    traces = []
    for region, az in sorted(zones):
        stream = rng.child(az)
        base = math.log(on_demand_price * float(stream.uniform(*base_fraction)))
        shocks = np.asarray(stream.uniform(-1.0, 1.0, size=steps)) * volatility * math.sqrt(3.0)
        spikes = np.asarray(stream.random(size=steps)) < spike_probability
        spike_lengths = stream.integers(spike_hours[0], spike_hours[1], size=steps)
        spike_scales = stream.uniform(spike_factor[0], spike_factor[1], size=steps)

        trace = SpotTrace(region=region, az=az, instance_type=instance_type)
        level = base
        spike_left = 0
        spike_scale = 1.0
        for step in range(steps):
            level += reversion * (base - level) + shocks[step]
            if spike_left == 0 and spikes[step]:
                spike_left = int(spike_lengths[step])
                spike_scale = float(spike_scales[step])
            price = math.exp(level) * (spike_scale if spike_left > 0 else 1.0)
            if spike_left > 0:
                spike_left -= 1
            trace.add_point(step * step_s, round(price, 4))
        traces.append(trace)
    logger.info(f"Generated {len(traces)} spot traces of {steps} points for {instance_type}")
    return traces


def describe(traces: Sequence[SpotTrace]) -> List[Dict[str, object]]:
    """Summary rows (zone, points, min/mean/max price) for display"""
    rows = []
    for trace in traces:
        prices = np.asarray(trace.prices)
        rows.append(
            {
                "region": trace.region,
                "az": trace.az,
                "points": len(trace.prices),
                "min": f"{prices.min():.4f}",
                "mean": f"{prices.mean():.4f}",
                "max": f"{prices.max():.4f}",
            }
        )
    return rows
