"""Scenario configuration as a qcodes instrument.

A scenario file is INI text with the sections ``grid``, ``problem``,
``run``, ``picard``, ``weight`` and ``output``::

    [grid]
    N = 128
    L = 2*pi

    [problem]
    a5 = 2 + sin(x)
    u0 = 0.01*(cos(x) + 0.5*cos(2*x))

Keys are case sensitive, ``#`` and ``;`` start comments and there is no
interpolation. Numeric values may be constant expressions. Only
``problem.a5`` and ``problem.u0`` are required.
"""

from __future__ import annotations

import configparser
import itertools
import json
import math
import os
from pathlib import Path
from typing import TYPE_CHECKING, Any

from qcodes import Instrument, ManualParameter
from qcodes.instrument import InstrumentModule
from qcodes.utils import NumpyJSONEncoder
from qcodes.validators import Bool, Enum, Ints, Strings

import ghch
from ghch import expr_parser
from ghch.coefficients import ALLOWED_VARS, WEIGHT_VARIANTS, CoefficientSet
from ghch.linear_solver import SCHEMES, IntegratorConfig
from ghch.parameters import (
    EvenInts,
    ExpressionParameter,
    FiniteNumbers,
    PositiveNumbers,
)
from ghch.picard import PicardConfig
from ghch.spectral_ops import Grid, make_grid

if TYPE_CHECKING:
    from collections.abc import Mapping

    from qcodes import Parameter

OUTPUT_DIR_ENV = "GHCH_OUTPUT_DIR"
REQUIRED_KEYS = (("problem", "a5"), ("problem", "u0"))
MAX_N = 2**20

_TRUE = {"on", "true", "yes", "1"}
_FALSE = {"off", "false", "no", "0"}


class ScenarioError(ValueError):
    def __init__(self, message: str, key: str | None = None, source: str | None = None) -> None:
        self.key = key
        self.source = source
        prefix = f"{source}: " if source else ""
        where = f"{key}: " if key else ""
        super().__init__(f"{prefix}{where}{message}")


class ScenarioIOError(ScenarioError):
    pass


class ScenarioParseError(ScenarioError):
    def __init__(
        self,
        message: str,
        key: str | None = None,
        source: str | None = None,
        line: int | None = None,
    ) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, key, source)


class ScenarioExpressionError(ScenarioError):
    pass


class ScenarioValueError(ScenarioError):
    pass


class GridSection(InstrumentModule):
    def __init__(self, parent: Scenario, name: str = "grid") -> None:
        super().__init__(parent, name)
        self.N = ManualParameter(
            name="N",
            instrument=self,
            label="Number of grid nodes",
            vals=EvenInts(min_value=8, max_value=MAX_N),
            initial_value=128,
        )
        self.L = ManualParameter(
            name="L",
            instrument=self,
            label="Period length",
            vals=PositiveNumbers(),
            initial_value=2 * math.pi,
        )


class ProblemSection(InstrumentModule):
    def __init__(self, parent: Scenario, name: str = "problem") -> None:
        super().__init__(parent, name)
        self.m = ManualParameter(
            name="m",
            instrument=self,
            label="Parameter m of Lambda_m",
            vals=PositiveNumbers(),
            initial_value=1.0,
        )
        self.s = ManualParameter(
            name="s",
            instrument=self,
            label="Sobolev index",
            vals=PositiveNumbers(min_value=2.5),
            initial_value=3.0,
        )
        self.c1 = ManualParameter(
            name="c1",
            instrument=self,
            label="Lower bound of |a5|",
            vals=PositiveNumbers(),
            initial_value=0.1,
        )
        self.u0_scale = ManualParameter(
            name="u0_scale",
            instrument=self,
            label="Amplitude factor on the initial data",
            vals=FiniteNumbers(),
            initial_value=1.0,
        )
        for key, label in (
            ("a1", "Coefficient of u_x"),
            ("a2", "Coefficient of u_xx"),
            ("a3", "Coefficient of u_xxx"),
            ("a4", "Coefficient of u_xxxx"),
            ("a5", "Coefficient of u_xxxxx"),
            ("f", "Forcing"),
            ("u0", "Initial data"),
        ):
            setattr(
                self,
                key,
                ExpressionParameter(
                    name=key,
                    instrument=self,
                    label=label,
                    allowed_vars=ALLOWED_VARS[key],
                ),
            )


class RunSection(InstrumentModule):
    def __init__(self, parent: Scenario, name: str = "run") -> None:
        super().__init__(parent, name)
        self.T = ManualParameter(
            name="T",
            instrument=self,
            label="Final time",
            vals=PositiveNumbers(),
            initial_value=1.0,
        )
        self.dt = ManualParameter(
            name="dt",
            instrument=self,
            label="Time step",
            vals=PositiveNumbers(),
            initial_value=1e-4,
        )
        self.integrator = ManualParameter(
            name="integrator",
            instrument=self,
            label="Time integration scheme",
            vals=Enum(*SCHEMES),
            initial_value="ifrk4",
        )
        self.dealias = ManualParameter(
            name="dealias",
            instrument=self,
            label="Dealias coefficient products by 3/2 padding",
            vals=Bool(),
            initial_value=True,
        )


class PicardSection(InstrumentModule):
    def __init__(self, parent: Scenario, name: str = "picard") -> None:
        super().__init__(parent, name)
        self.tol = ManualParameter(
            name="tol",
            instrument=self,
            label="Tolerance on the sup-in-time H^s distance",
            vals=PositiveNumbers(),
            initial_value=1e-9,
        )
        self.max_iter = ManualParameter(
            name="max_iter",
            instrument=self,
            label="Iteration cap",
            vals=Ints(min_value=1, max_value=10_000),
            initial_value=12,
        )


class WeightSection(InstrumentModule):
    def __init__(self, parent: Scenario, name: str = "weight") -> None:
        super().__init__(parent, name)
        self.variant = ManualParameter(
            name="variant",
            instrument=self,
            label="Weight construction",
            vals=Enum(*WEIGHT_VARIANTS),
            initial_value="exact",
        )


class OutputSection(InstrumentModule):
    def __init__(self, parent: Scenario, name: str = "output") -> None:
        super().__init__(parent, name)
        self.directory = ManualParameter(
            name="directory",
            instrument=self,
            label="Output directory",
            vals=Strings(min_length=1),
            initial_value="output",
        )
        self.snapshot_stride = ManualParameter(
            name="snapshot_stride",
            instrument=self,
            label="Every n-th snapshot is traced",
            vals=Ints(min_value=1),
            initial_value=1,
        )
        self.write_snapshots = ManualParameter(
            name="write_snapshots",
            instrument=self,
            label="Also write every n-th snapshot to snapshots/",
            vals=Bool(),
            initial_value=False,
        )


_SECTIONS = {
    "grid": GridSection,
    "problem": ProblemSection,
    "run": RunSection,
    "picard": PicardSection,
    "weight": WeightSection,
    "output": OutputSection,
}
_name_counter = itertools.count()


class Scenario(Instrument):
    """One problem setup: grid, coefficients, integrator and outputs."""

    grid: GridSection
    problem: ProblemSection
    run: RunSection
    picard: PicardSection
    weight: WeightSection
    output: OutputSection

    def __init__(self, name: str | None = None, **kwargs) -> None:
        if name is None:
            name = f"scenario_{next(_name_counter)}"
        super().__init__(name, **kwargs)
        for section, section_class in _SECTIONS.items():
            module = section_class(self, section)
            setattr(self, section, module)
            self.add_submodule(section, module)
        self.source: str | None = None

    def get_idn(self) -> dict[str, str | None]:
        return {
            "vendor": "ghch",
            "model": "scenario",
            "serial": self.source,
            "firmware": ghch.__version__,
        }

    def make_grid(self) -> Grid:
        return make_grid(self.grid.N(), self.grid.L())

    def coefficient_set(self) -> CoefficientSet:
        problem = self.problem
        return CoefficientSet(
            m=problem.m(),
            s=problem.s(),
            c1=problem.c1(),
            a1=problem.a1.ast,
            a2=problem.a2.ast,
            a3=problem.a3.ast,
            a4=problem.a4.ast,
            a5=problem.a5.ast,
            f=problem.f.ast,
            u0=problem.u0.ast,
            u0_scale=problem.u0_scale(),
        )

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(self.run.integrator(), self.run.dt(), self.run.dealias())

    def picard_config(self) -> PicardConfig:
        return PicardConfig(
            tol=self.picard.tol(),
            max_iter=self.picard.max_iter(),
            T=self.run.T(),
            integrator=self.integrator_config(),
            s=self.problem.s(),
        )

    def output_directory(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV) or self.output.directory())

    def save_snapshot(self, directory: Path) -> Path:
        """Write the instrument snapshot as ``scenario.json``."""
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / "scenario.json"
        path.write_text(
            json.dumps(self.snapshot(update=False), cls=NumpyJSONEncoder, indent=2, sort_keys=True),
            encoding="utf-8",
        )
        return path


def _convert(parameter: Parameter, raw: str) -> Any:
    """Convert raw text to the type the parameter's validator expects."""
    if isinstance(parameter, ExpressionParameter):
        return raw
    vals = parameter.vals
    if isinstance(vals, Bool):
        word = raw.strip().lower()
        if word in _TRUE:
            return True
        if word in _FALSE:
            return False
        msg = f"expected one of on/off, true/false, yes/no, 1/0, got {raw!r}"
        raise ValueError(msg)
    if isinstance(vals, (Enum, Strings)):
        return raw.strip()
    value = float(expr_parser.parse(raw).evaluate({}))
    if isinstance(vals, (Ints, EvenInts)):
        if not math.isfinite(value) or value != int(value):
            msg = f"expected an integer, got {raw!r}"
            raise ValueError(msg)
        return int(value)
    return value


def scenario_from_mapping(
    config: Mapping[str, Mapping[str, str]], source: str | None = None, name: str | None = None
) -> Scenario:
    """Build a validated scenario from ``{section: {key: raw text}}``.

    Raises
    ------
    ScenarioParseError
        Unknown section or key.
    ScenarioExpressionError
        An expression does not parse or a constant expression does not
        evaluate.
    ScenarioValueError
        A value violates its contract, or a required key is missing.
    """
    for section, key in REQUIRED_KEYS:
        if key not in config.get(section, {}):
            msg = "missing required key"
            raise ScenarioValueError(msg, f"{section}.{key}", source)

    scenario = Scenario(name)
    scenario.source = source
    try:
        for section, entries in config.items():
            if section not in scenario.submodules:
                msg = f"unknown section [{section}]"
                raise ScenarioParseError(msg, section, source)
            module = scenario.submodules[section]
            for key, raw in entries.items():
                qualified = f"{section}.{key}"
                if key not in module.parameters:
                    msg = "unknown key"
                    raise ScenarioParseError(msg, qualified, source)
                parameter = module.parameters[key]
                try:
                    parameter.set(_convert(parameter, raw))
                except expr_parser.ExpressionError as exc:
                    raise ScenarioExpressionError(str(exc), qualified, source) from exc
                except (ValueError, TypeError, OverflowError) as exc:
                    raise ScenarioValueError(str(exc), qualified, source) from exc
    except ScenarioError:
        scenario.close()
        raise
    scenario.log.info("loaded scenario from %s", source or "mapping")
    return scenario


def load_scenario(path: str | os.PathLike, name: str | None = None) -> Scenario:
    """Read, parse and validate a scenario file.

    Raises
    ------
    ScenarioIOError
        The file cannot be read or is not UTF-8.
    ScenarioParseError
        Malformed INI text (with line number) or unknown section/key.
    ScenarioExpressionError, ScenarioValueError
        See :func:`scenario_from_mapping`.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ScenarioIOError(str(exc), source=str(path)) from exc

    parser = configparser.ConfigParser(
        interpolation=None,
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=("#", ";"),
        default_section="__default__",
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ScenarioParseError(exc.message, source=str(path), line=line) from exc

    config = {section: dict(parser.items(section)) for section in parser.sections()}
    return scenario_from_mapping(config, str(path), name)
