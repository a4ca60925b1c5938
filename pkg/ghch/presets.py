"""Shipped problem presets.

Each preset is a scenario in mapping form, usable with
:func:`ghch.scenario.scenario_from_mapping`, plus the bounds recorded for
it: the contraction ratio ``r`` that every ratio of consecutive Picard
distances stays below, and the ceiling on the fitted Gronwall rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from ghch.scenario import scenario_from_mapping

if TYPE_CHECKING:
    from ghch.scenario import Scenario


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    config: dict[str, dict[str, str]]
    contraction_ratio: float | None = None
    lambda_ceiling: float | None = None
    outside_hypotheses: bool = False
    sweep_values: tuple[float, ...] = field(default=())

    def scenario(self, **overrides: dict[str, str]) -> Scenario:
        """A fresh scenario; ``overrides`` maps section names to extra keys."""
        config = {section: dict(entries) for section, entries in self.config.items()}
        for section, entries in overrides.items():
            config.setdefault(section, {}).update(entries)
        return scenario_from_mapping(config, source=f"preset:{self.name}")


_PICARD_PROBLEM = {
    "m": "1",
    "s": "3",
    "c1": "1",
    "a1": "u",
    "a2": "0.1*ux",
    "a3": "0.1",
    "a4": "0.05*cos(x)*(2 + sin(x))",
    "a5": "2 + sin(x)",
    "u0": "0.01*(cos(x) + 0.5*cos(2*x))",
}

PRESETS: dict[str, Preset] = {
    preset.name: preset
    for preset in (
        Preset(
            "weight_constant",
            "constant coefficients a4 = 0, a5 = 2",
            {"grid": {"N": "256"}, "problem": {"a4": "0", "a5": "2", "u0": "0", "s": "3.5"}},
        ),
        Preset(
            "weight_cos",
            "a4 = cos x, a5 = 1",
            {"grid": {"N": "256"}, "problem": {"a4": "cos(x)", "a5": "1", "u0": "0", "c1": "0.5"}},
        ),
        Preset(
            "weight_varying",
            "a4 = cos(x)/2, a5 = 2 + sin x",
            {
                "grid": {"N": "256"},
                "problem": {"a4": "0.5*cos(x)", "a5": "2 + sin(x)", "u0": "0", "c1": "1"},
            },
        ),
        Preset(
            "dispersive",
            "constant coefficient dispersion, three low modes, exact phase rotation",
            {
                "grid": {"N": "128"},
                "problem": {
                    "a1": "1",
                    "a3": "0.3",
                    "a5": "1",
                    "u0": "0.3*cos(x) + 0.2*sin(2*x) + 0.1*cos(3*x + 1)",
                },
                "run": {"T": "1", "dt": "0.01"},
            },
        ),
        Preset(
            "picard_small",
            "Camassa-Holm type nonlinearity a1 = u at small amplitude",
            {
                "grid": {"N": "128"},
                "problem": _PICARD_PROBLEM,
                "run": {"T": "0.1", "dt": "1e-5"},
                "picard": {"tol": "1e-9", "max_iter": "12"},
            },
            contraction_ratio=0.5,
            lambda_ceiling=25.0,
        ),
        Preset(
            "sweep_small",
            "coarse version of picard_small for amplitude sweeps",
            {
                "grid": {"N": "32"},
                "problem": _PICARD_PROBLEM,
                "run": {"T": "0.1", "dt": "5e-4"},
                "picard": {"tol": "1e-9", "max_iter": "12"},
            },
            contraction_ratio=0.5,
            lambda_ceiling=25.0,
            sweep_values=(0.5, 1.0, 2.0, 4.0),
        ),
        Preset(
            "kdv",
            "KdV type problem with a5 = 0, outside the well-posedness hypotheses",
            {
                "grid": {"N": "64"},
                "problem": {"a1": "u", "a3": "1", "a5": "0", "u0": "0.1*cos(x)", "m": "1"},
                "run": {"T": "0.1", "dt": "1e-3", "integrator": "rk4"},
            },
            outside_hypotheses=True,
        ),
    )
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        msg = f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        raise KeyError(msg) from None
