"""On-disk formats.

CSV files use ``,`` separators, ``\\n`` line endings and 17 significant
digits, so reruns are byte-identical.

Field snapshots are little-endian binary::

    magic    4 bytes   b"GHCH"
    version  uint32    1
    N        uint64
    L, m, s, t         float64 each
    samples  N float64
"""

from __future__ import annotations

import csv
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ghch.spectral_ops import Field, GridError, make_grid

if TYPE_CHECKING:
    import os
    from collections.abc import Iterable, Sequence

    from ghch.coefficients import WeightField
    from ghch.energy_monitor import EnergyTrace
    from ghch.spectral_ops import Grid
    from ghch.sweep import SweepReport
    from ghch.verification import OperatorBoundRecord

log = logging.getLogger(__name__)

MAGIC = b"GHCH"
VERSION = 1
_HEADER = struct.Struct("<4sIQ4d")


class FormatError(ValueError):
    def __init__(self, message: str, path: str | os.PathLike | None = None) -> None:
        self.path = path
        super().__init__(f"{path}: {message}" if path is not None else message)


def fmt(value: float | bool | None) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    value = float(value)
    if value == 0:
        return "0"
    return format(value, ".17g")


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as file:
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([cell if isinstance(cell, str) else fmt(cell) for cell in row])
    except OSError as exc:
        raise FormatError(f"cannot write: {exc.strerror or exc}", path) from exc
    log.debug("wrote %s", path)


def write_trace(trace: EnergyTrace, picard_history: Sequence[float], path: str | os.PathLike) -> None:
    """Write ``trace.csv`` to ``path`` and ``picard.csv`` next to it."""
    path = Path(path)
    _write_rows(
        path,
        ("t", "Hs", "Es", "lambda_fit", "bound_ok"),
        (
            (t, hs, es, trace.lambda_fit, trace.bound_ok)
            for t, hs, es in zip(trace.times, trace.Hs, trace.Es)
        ),
    )
    _write_rows(
        path.with_name("picard.csv"),
        ("n", "distance"),
        ((str(n), d) for n, d in enumerate(picard_history)),
    )


def write_weight(
    path: str | os.PathLike, grid: Grid, wf: WeightField, g: Field, residual: Field
) -> None:
    _write_rows(
        Path(path),
        ("x", "w", "g", "residual"),
        zip(grid.x, wf.w.values, g.values, residual.values),
    )


def write_sweep(path: str | os.PathLike, report: SweepReport) -> None:
    _write_rows(
        Path(path),
        ("value", "converged", "n_final", "blowup_time", "lambda_fit", "bound_ok"),
        (
            (p.value, p.converged, str(p.n_final), p.blowup_time, p.lambda_fit, p.bound_ok)
            for p in report.points
        ),
    )


def write_operator_bounds(path: str | os.PathLike, records: Iterable[OperatorBoundRecord]) -> None:
    _write_rows(
        Path(path),
        (
            "N",
            "m",
            "s",
            "norm_m0",
            "bound_m0",
            "norm_m0_inverse",
            "bound_m0_inverse",
            "est1_violations",
            "commutation_error",
            "ok",
        ),
        (
            (
                str(r.N),
                r.m,
                r.s,
                r.norm_m0,
                r.bound_m0,
                r.norm_m0_inverse,
                r.bound_m0_inverse,
                str(r.est1_violations),
                r.commutation_error,
                r.ok,
            )
            for r in records
        ),
    )


@dataclass(frozen=True)
class SnapshotMeta:
    L: float
    m: float
    s: float
    t: float


def write_snapshot(field: Field, t: float, m: float, s: float, path: str | os.PathLike) -> None:
    path = Path(path)
    header = _HEADER.pack(MAGIC, VERSION, field.grid.N, field.grid.L, m, s, t)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(header + field.values.astype("<f8").tobytes())
    except OSError as exc:
        raise FormatError(f"cannot write: {exc.strerror or exc}", path) from exc


def read_snapshot(path: str | os.PathLike) -> tuple[Field, SnapshotMeta]:
    """Exact inverse of :func:`write_snapshot`.

    Raises
    ------
    FormatError
        Unreadable file, bad magic, unsupported version, truncated or
        oversized payload, or an invalid grid.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read: {exc.strerror or exc}", path) from exc
    if len(data) < _HEADER.size:
        msg = f"truncated header ({len(data)} of {_HEADER.size} bytes)"
        raise FormatError(msg, path)
    magic, version, N, L, m, s, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", path)
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}", path)
    expected = _HEADER.size + 8 * N
    if len(data) != expected:
        msg = f"payload has {len(data) - _HEADER.size} bytes, expected {8 * N} for N = {N}"
        raise FormatError(msg, path)
    try:
        grid = make_grid(N, L)
    except GridError as exc:
        raise FormatError(str(exc), path) from exc
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size, count=N).astype(float)
    return Field(grid, values), SnapshotMeta(L=L, m=m, s=s, t=t)
