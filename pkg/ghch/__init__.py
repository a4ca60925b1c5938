__version__ = "0.1.0"

from ghch.coefficients import CoefficientSet
from ghch.linear_solver import IntegratorConfig
from ghch.picard import PicardConfig
from ghch.scenario import Scenario, load_scenario
from ghch.spectral_ops import Field, Grid, make_grid
from ghch.sweep import ScenarioSweep

__all__ = [
    "CoefficientSet",
    "Field",
    "Grid",
    "IntegratorConfig",
    "PicardConfig",
    "Scenario",
    "ScenarioSweep",
    "__version__",
    "load_scenario",
    "make_grid",
]
