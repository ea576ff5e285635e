"""Reproducible sample points inside a model's box.

The generator is splitmix64: state += 0x9E3779B97F4A7C15, then the state is
mixed with xor-shifts 30, 27, 31 and multipliers 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB. A float in [0, 1) takes the top 53 bits of one output.
Coordinates of a point are drawn in coordinate order.
"""

import logging

import numpy as np

from src import constants
from src.dsl import ExpressionDomainError, ModelSpec, eval_expr
from src.errors import GeometryError

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1


class SamplingError(GeometryError):
    """Raised when no usable point can be found in the box."""


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53


def frame_condition(spec: ModelSpec, point: tuple[float, ...]) -> float:
    try:
        values = np.array([[eval_expr(e, point).value for e in row] for row in spec.frame])
    except ExpressionDomainError:
        return float("inf")
    return float(np.linalg.cond(values))


def sample_points(
    spec: ModelSpec,
    count: int,
    seed: int,
    max_condition: float = constants.MAX_FRAME_CONDITION,
) -> list[tuple[float, ...]]:
    """Draw `count` points uniformly from the box, skipping badly conditioned frames.

    Raises:
        SamplingError: after too many consecutive rejections.
    """
    rng = SplitMix64(seed)
    points = []
    rejected = 0
    while len(points) < count:
        point = tuple(lo + (hi - lo) * rng.next_float() for lo, hi in spec.box)
        condition = frame_condition(spec, point)
        if condition <= max_condition:
            points.append(point)
            rejected = 0
            continue
        rejected += 1
        logger.debug("Rejected sample %s (frame condition %.3e)", point, condition)
        if rejected >= constants.MAX_RESAMPLE_ATTEMPTS:
            raise SamplingError(
                f"no point with frame condition below {max_condition:g} after {rejected} attempts"
            )
    logger.info("Sampled %d points in model %r with seed %d", count, spec.name, seed)
    return points
