"""Simulation, evaluation and optimization of action rules on a stochastically moving feasible interval."""

from .costs import AsymmetricQuadratic, PseudoHuber, Quadratic, SquaredDistanceTo
from .intervals import (Constant, DynamicsSpec, FixedWidth, IndependentSorted, Interval, Normal,
                        OrderStatsUniform, TwoPoint, Uniform, project, random_walk, uniform_benchmark)
from .policies import Anchor, ConvexCombination, StatusQuo, TabulatedReference
from .simulator import PathStats, SimConfig, compare, run

__version__ = "0.1.0"
