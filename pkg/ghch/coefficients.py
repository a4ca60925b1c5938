"""Problem data, hypothesis checks and the energy weight.

The equation is::

    Lambda_m^2 u_t + a1 u_x + a2 u_xx + a3 u_xxx + a4 u_xxxx + a5 u_xxxxx = f

with ``a1, a3`` functions of ``(t, x, u)``, ``a2`` of ``(t, x, u, ux)``,
``a4, a5, f`` of ``(t, x)`` and initial data ``u0(x)``.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Literal, NamedTuple

import numpy as np

from ghch import expr_parser
from ghch.spectral_ops import Field, antiderivative, derivative, lambda_m0
from ghch.trajectory import sample

if TYPE_CHECKING:
    from collections.abc import Iterable

    from ghch.expr_parser import ExprAst
    from ghch.spectral_ops import Grid
    from ghch.trajectory import Trajectory

log = logging.getLogger(__name__)

ALLOWED_VARS: dict[str, frozenset[str]] = {
    "a1": frozenset({"t", "x", "u"}),
    "a2": frozenset({"t", "x", "u", "ux"}),
    "a3": frozenset({"t", "x", "u"}),
    "a4": frozenset({"t", "x"}),
    "a5": frozenset({"t", "x"}),
    "f": frozenset({"t", "x"}),
    "u0": frozenset({"x"}),
}
COEFFICIENT_NAMES = ("a1", "a2", "a3", "a4", "a5")

PERIODICITY_TOL = 1e-10

WeightVariant = Literal["literal", "exact"]
WEIGHT_VARIANTS = ("literal", "exact")


class PeriodicityError(ValueError):
    pass


class DegenerateWeightError(RuntimeError):
    pass


class ValidationError(ValueError):
    def __init__(self, report: ValidationReport) -> None:
        self.report = report
        super().__init__(str(report))


class CoefficientFields(NamedTuple):
    a1: Field
    a2: Field
    a3: Field
    a4: Field
    a5: Field
    f: Field

    @property
    def coefficients(self) -> tuple[Field, ...]:
        """``a1..a5`` in derivative order."""
        return self[:5]


@dataclass(frozen=True)
class CoefficientSet:
    m: float
    s: float
    c1: float
    a1: ExprAst
    a2: ExprAst
    a3: ExprAst
    a4: ExprAst
    a5: ExprAst
    f: ExprAst
    u0: ExprAst
    u0_scale: float = 1.0

    def __post_init__(self) -> None:
        assert self.m > 0, f"m must be positive, got {self.m}"
        assert self.s > 2.5, f"s must exceed 5/2, got {self.s}"
        assert self.c1 > 0, f"c1 must be positive, got {self.c1}"
        for name, allowed in ALLOWED_VARS.items():
            extra = getattr(self, name).variables() - allowed
            assert not extra, f"{name} depends on {sorted(extra)}"

    @classmethod
    def from_strings(
        cls,
        a5: str,
        u0: str,
        a1: str = "0",
        a2: str = "0",
        a3: str = "0",
        a4: str = "0",
        f: str = "0",
        m: float = 1.0,
        s: float = 3.0,
        c1: float = 0.1,
        u0_scale: float = 1.0,
    ) -> CoefficientSet:
        sources = {"a1": a1, "a2": a2, "a3": a3, "a4": a4, "a5": a5, "f": f, "u0": u0}
        exprs = {
            name: expr_parser.parse(src, ALLOWED_VARS[name]) for name, src in sources.items()
        }
        return cls(m=m, s=s, c1=c1, u0_scale=u0_scale, **exprs)

    def scaled(self, u0_scale: float) -> CoefficientSet:
        return replace(self, u0_scale=u0_scale)

    def source(self, name: str) -> str:
        return expr_parser.to_source(getattr(self, name))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for name in ALLOWED_VARS:
            h.update(f"{name}={self.source(name)};".encode())
        h.update(f"m={self.m!r};s={self.s!r};c1={self.c1!r};u0_scale={self.u0_scale!r}".encode())
        return h.hexdigest()

    def depends_on_solution(self) -> bool:
        return any("u" in getattr(self, name).variables() for name in ("a1", "a2", "a3")) or (
            "ux" in self.a2.variables()
        )

    def initial_field(self, grid: Grid) -> Field:
        u0 = expr_parser.evaluate_on(self.u0, {"x": grid.x}, (grid.N,))
        return Field(grid, self.u0_scale * u0)

    def coefficient_field(self, name: str, t: float, grid: Grid, u: Field | None = None) -> Field:
        bindings: dict[str, float | np.ndarray] = {"t": t, "x": grid.x}
        if u is not None:
            bindings["u"] = u.values
            if "ux" in ALLOWED_VARS[name]:
                bindings["ux"] = derivative(u, 1).values
        return Field(grid, expr_parser.evaluate_on(getattr(self, name), bindings, (grid.N,)))

    def evaluate(self, t: float, u: Field) -> CoefficientFields:
        """The five coefficient fields and the forcing at the state ``(t, u)``."""
        bindings = {"t": t, "x": u.grid.x, "u": u.values}
        if "ux" in self.a2.variables():
            bindings["ux"] = derivative(u, 1).values
        shape = (u.grid.N,)
        return CoefficientFields(
            *(
                Field(u.grid, expr_parser.evaluate_on(getattr(self, name), bindings, shape))
                for name in (*COEFFICIENT_NAMES, "f")
            )
        )


@dataclass(frozen=True)
class ValidationFailure:
    check: Literal["nondegeneracy", "finite", "periodicity"]
    message: str
    t: float | None = None
    x: float | None = None

    def __str__(self) -> str:
        where = []
        if self.t is not None:
            where.append(f"t={self.t:g}")
        if self.x is not None:
            where.append(f"x={self.x:g}")
        location = f" at {', '.join(where)}" if where else ""
        return f"{self.check}{location}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    failures: tuple[ValidationFailure, ...] = ()
    min_abs_a5: float = float("nan")

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.ok

    @property
    def checks_failed(self) -> set[str]:
        return {failure.check for failure in self.failures}

    def raise_for_failures(self) -> None:
        if self.failures:
            raise ValidationError(self)

    def __str__(self) -> str:
        if self.ok:
            return "all checks passed"
        return "; ".join(str(failure) for failure in self.failures)


def validate(c: CoefficientSet, grid: Grid, t_samples: Iterable[float]) -> ValidationReport:
    """Check nondegeneracy, finiteness and periodic compatibility.

    Coefficients that depend on the solution are sampled at ``u0``. At
    most one failure per check and sample time is reported, located at
    the worst node.
    """
    failures: list[ValidationFailure] = []
    min_abs_a5 = float("inf")
    try:
        u0 = c.initial_field(grid)
    except expr_parser.EvaluationError as exc:
        return ValidationReport((ValidationFailure("finite", f"u0: {exc}"),))
    if not np.all(np.isfinite(u0.values)):
        bad = int(np.argmax(~np.isfinite(u0.values)))
        failures.append(ValidationFailure("finite", "u0 is not finite", x=float(grid.x[bad])))
        return ValidationReport(tuple(failures))

    for t in t_samples:
        t = float(t)
        try:
            fields = c.evaluate(t, u0)
        except expr_parser.EvaluationError as exc:
            failures.append(ValidationFailure("finite", str(exc), t=t))
            continue

        finite = True
        for name, fld in zip((*COEFFICIENT_NAMES, "f"), fields):
            bad = ~np.isfinite(fld.values)
            if np.any(bad):
                finite = False
                j = int(np.argmax(bad))
                failures.append(
                    ValidationFailure("finite", f"{name} is not finite", t=t, x=float(grid.x[j]))
                )
        if not finite:
            continue

        abs_a5 = np.abs(fields.a5.values)
        j = int(np.argmin(abs_a5))
        min_abs_a5 = min(min_abs_a5, float(abs_a5[j]))
        if abs_a5[j] < c.c1:
            failures.append(
                ValidationFailure(
                    "nondegeneracy",
                    f"|a5| = {abs_a5[j]:.3g} < c1 = {c.c1:g}",
                    t=t,
                    x=float(grid.x[j]),
                )
            )
        if np.any(abs_a5 == 0):
            continue

        mean = float(np.mean(fields.a4.values / fields.a5.values))
        if not abs(mean) <= PERIODICITY_TOL:
            failures.append(
                ValidationFailure(
                    "periodicity",
                    f"mean of a4/a5 over one period is {mean:.3g}, F is not periodic",
                    t=t,
                )
            )
    return ValidationReport(tuple(failures), min_abs_a5)


def compute_F(c: CoefficientSet, t: float, grid: Grid) -> Field:
    """F(t, x) = int_0^x a4/a5 dy by spectral antiderivative; F(t, 0) = 0."""
    a4 = c.coefficient_field("a4", t, grid).values
    a5 = c.coefficient_field("a5", t, grid).values
    if np.any(a5 == 0):
        msg = f"a5 vanishes at t = {t:g}"
        raise DegenerateWeightError(msg)
    q = a4 / a5
    mean = float(np.mean(q))
    if abs(mean) > PERIODICITY_TOL:
        msg = f"mean of a4/a5 at t = {t:g} is {mean:.3g}; F would not be periodic"
        raise PeriodicityError(msg)
    return antiderivative(Field(grid, q))


@dataclass(frozen=True, eq=False)
class WeightField:
    w: Field
    w_t: Field
    w1: float
    w2: float
    variant: WeightVariant
    t: float
    g: Field | None = field(default=None, repr=False)


def _weight(
    c: CoefficientSet, t: float, grid: Grid, variant: WeightVariant
) -> tuple[np.ndarray, np.ndarray]:
    """Weight samples and the target ``g`` of Lambda_m^0(w^2) = g."""
    F = compute_F(c, t, grid).values
    abs_a5 = np.abs(c.coefficient_field("a5", t, grid).values)
    exponent = (2 * c.s - 7) / 6
    if variant == "literal":
        base = Field(grid, abs_a5**exponent * np.exp(-F / 3))
        w = lambda_m0(base, c.m, inverse=True).values
        return w, abs_a5 ** (2 * exponent) * np.exp(-2 * F / 3)
    assert variant == "exact", f"unknown weight variant {variant!r}"
    g = abs_a5 ** (2 * exponent) * np.exp(-2 * F / 3)
    radicand = lambda_m0(Field(grid, g), c.m, inverse=True).values
    if np.any(radicand <= 0):
        j = int(np.argmin(radicand))
        msg = (
            f"(Lambda_m^0)^-1 g is not positive at t = {t:g}, x = {grid.x[j]:g}"
            f" (value {radicand[j]:.3g})"
        )
        raise DegenerateWeightError(msg)
    return np.sqrt(radicand), g


def compute_weight(
    c: CoefficientSet,
    t: float,
    grid: Grid,
    variant: WeightVariant = "exact",
    horizon: float = 1.0,
    t0: float = 0.0,
) -> WeightField:
    """Construct the energy weight at time ``t``.

    Parameters
    ----------
    c : CoefficientSet
        Problem data; must pass :func:`validate`.
    t : float
        Time stamp.
    grid : Grid
        Spatial grid.
    variant : {"literal", "exact"}
        ``"literal"`` applies (Lambda_m^0)^-1 to |a5|^((2s-7)/6) exp(-F/3).
        ``"exact"`` takes the square root of (Lambda_m^0)^-1 g with
        g = |a5|^((2s-7)/3) exp(-2F/3), which solves the cancellation
        identity exactly.
    horizon : float
        Time horizon T of the run; sets the finite difference step
        ``1e-4 * max(1, T)`` of ``w_t``.
    t0 : float
        Start of the run. ``w_t`` is a centered difference inside
        ``[t0, horizon]`` and one-sided (second order) at its ends, so
        coefficients are never evaluated outside it.

    Raises
    ------
    DegenerateWeightError
        The weight is not positive.
    PeriodicityError
        a4/a5 does not have zero mean.
    """
    w, g = _weight(c, t, grid, variant)
    w1 = float(np.min(w))
    w2 = float(np.max(w))
    if w1 <= 0:
        msg = f"{variant} weight is not positive at t = {t:g} (min {w1:.3g})"
        raise DegenerateWeightError(msg)

    h = 1e-4 * max(1.0, horizon)
    if t - h < t0:
        w_1, _ = _weight(c, t + h, grid, variant)
        w_2, _ = _weight(c, t + 2 * h, grid, variant)
        w_t = (-3 * w + 4 * w_1 - w_2) / (2 * h)
    elif t + h > horizon:
        w_1, _ = _weight(c, t - h, grid, variant)
        w_2, _ = _weight(c, t - 2 * h, grid, variant)
        w_t = (3 * w - 4 * w_1 + w_2) / (2 * h)
    else:
        w_plus, _ = _weight(c, t + h, grid, variant)
        w_minus, _ = _weight(c, t - h, grid, variant)
        w_t = (w_plus - w_minus) / (2 * h)
    return WeightField(
        w=Field(grid, w),
        w_t=Field(grid, w_t),
        w1=w1,
        w2=w2,
        variant=variant,
        t=t,
        g=Field(grid, g),
    )


def weight_residual_field(c: CoefficientSet, wf: WeightField, t: float, grid: Grid) -> Field:
    """Pointwise (3/2)(a5 g)_x - (s-2)(a5)_x g + a4 g with g = Lambda_m^0(w^2).

    Its vanishing makes the three top-order integrals of the energy
    identity cancel for every u.
    """
    g = lambda_m0(Field(grid, wf.w.values**2), c.m).values
    a4 = c.coefficient_field("a4", t, grid).values
    a5 = c.coefficient_field("a5", t, grid)
    return Field(
        grid,
        1.5 * derivative(Field(grid, a5.values * g), 1).values
        - (c.s - 2) * derivative(a5, 1).values * g
        + a4 * g,
    )


def weight_residual(c: CoefficientSet, wf: WeightField, t: float, grid: Grid) -> float:
    return float(np.max(np.abs(weight_residual_field(c, wf, t, grid).values)))


class FrozenCoefficients:
    """Coefficients evaluated along a fixed trajectory ``v``."""

    def __init__(self, c: CoefficientSet, v: Trajectory, grid: Grid) -> None:
        assert v.grid == grid
        self.c = c
        self.v = v
        self.grid = grid
        self._cache: tuple[float, CoefficientFields] | None = None

    @property
    def t0(self) -> float:
        return self.v.t0

    @property
    def T(self) -> float:
        return self.v.T

    def __call__(self, t: float, u: Field | None = None) -> CoefficientFields:
        # RK stages revisit the same time twice in a row
        if self._cache is not None and self._cache[0] == t:
            return self._cache[1]
        fields = self.c.evaluate(t, sample(self.v, t))
        self._cache = (t, fields)
        return fields


def freeze(c: CoefficientSet, v: Trajectory, grid: Grid) -> FrozenCoefficients:
    return FrozenCoefficients(c, v, grid)
