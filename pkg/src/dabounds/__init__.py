"""Exact domain-adaptation bounds, divergences and a small adversarial-training simulator."""

from .domain import (
    AtomFunction,
    AtomMap,
    Channel,
    DiscreteDistribution,
    Domain,
    LabeledSample,
    MixedDistribution,
    PiecewiseFunction,
    PiecewiseLinearMap,
    PiecewiseUniform,
    compose,
    error,
    expectation,
    pushforward,
)
from .bounds import BoundReport, RademacherEstimate

__version__ = "0.1.0"
