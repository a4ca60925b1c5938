from __future__ import annotations

import math
from typing import TYPE_CHECKING

from qcodes import Parameter
from qcodes.validators import Ints, Numbers, Strings, Validator

from ghch import expr_parser

if TYPE_CHECKING:
    from collections.abc import Iterable

    from qcodes.instrument import InstrumentBase

    from ghch.expr_parser import ExprAst


class FiniteNumbers(Validator):
    """Finite real numbers in ``[min_value, max_value]``."""

    def __init__(
        self,
        min_value: float = -float("inf"),
        max_value: float = float("inf"),
    ) -> None:
        self.numbers = Numbers(min_value, max_value)
        self._valid_values = (min_value if math.isfinite(min_value) else 0.0,)

    def validate(self, value: float, context: str = ""):
        self.numbers.validate(value, context)
        if not math.isfinite(value):
            raise ValueError(f"{value!r} is not finite; {context}")


class PositiveNumbers(FiniteNumbers):
    """Finite real numbers strictly above ``min_value`` (default 0)."""

    def __init__(self, min_value: float = 0.0, max_value: float = float("inf")) -> None:
        super().__init__(min_value, max_value)
        self.min_value = min_value
        self._valid_values = (min_value + 1,)

    def validate(self, value: float, context: str = ""):
        super().validate(value, context)
        if value <= self.min_value:
            raise ValueError(f"{value!r} must be greater than {self.min_value}; {context}")


class EvenInts(Validator):
    def __init__(self, min_value: int = 0, max_value: int | None = None) -> None:
        self.ints = Ints(min_value) if max_value is None else Ints(min_value, max_value)
        self._valid_values = (min_value + min_value % 2,)

    def validate(self, value: int, context: str = ""):
        self.ints.validate(value, context)
        if value % 2 != 0:
            raise ValueError(f"{value!r} is not even; {context}")


class ExpressionValidator(Validator):
    """Expression source over a fixed set of variables."""

    def __init__(self, allowed_vars: Iterable[str]) -> None:
        self.strings = Strings(min_length=1)
        self.allowed_vars = frozenset(allowed_vars)
        self._valid_values = ("0",)

    def validate(self, value: str, context: str = ""):
        self.strings.validate(value, context)
        expr_parser.parse(value, self.allowed_vars)


class ExpressionParameter(Parameter):
    """Coefficient expression. Parsed on set; the tree is kept in ``ast``."""

    ast: ExprAst

    def __init__(
        self,
        name: str,
        instrument: InstrumentBase,
        label: str,
        allowed_vars: Iterable[str],
        initial_value: str = "0",
        **kwargs,
    ) -> None:
        self.allowed_vars = frozenset(allowed_vars)
        super().__init__(
            name=name,
            instrument=instrument,
            label=label,
            vals=ExpressionValidator(self.allowed_vars),
            initial_value=initial_value,
            **kwargs,
        )

    def set_raw(self, value: str) -> None:
        self.ast = expr_parser.parse(value, self.allowed_vars)
        self.source = value

    def get_raw(self) -> str:
        return self.source
