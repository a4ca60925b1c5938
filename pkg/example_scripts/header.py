import logging
import os
from pathlib import Path

import numpy as np

from ghch import coefficients, energy_monitor, formats, linear_solver, picard
from ghch.presets import get_preset
from ghch.scenario import load_scenario
from ghch.sweep import ScenarioSweep, run_sweep

logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

output_root = Path("./output")

# either a shipped preset or a scenario file from ../scenarios
scenario = load_scenario(Path(__file__).parent.parent / "scenarios" / "picard_small.ini")
scenario.run.integrator.set("ifrk4")
scenario.weight.variant.set("exact")
scenario.output.snapshot_stride.set(10)

grid = scenario.make_grid()
c = scenario.coefficient_set()
