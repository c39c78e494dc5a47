"""Stochastic scheduling of a grid-connected microgrid with PHEV fleets,
CHP units, deferrable loads, and uncertain solar output.

The package builds the deterministic equivalent of a scenario-based
two-stage program and solves it with its own simplex / branch-and-bound
engine; Monte Carlo scenario generation and fast-forward reduction are
included.  See the README for the model and the demos/ scripts for
worked examples.
"""

__version__ = "0.1.0"

from . import config_io, experiments, formulation, lpcore, model, scenario  # noqa: F401
