import math
import struct

import numpy as np
import pytest

from ghch import energy_monitor, formats, picard
from ghch.coefficients import CoefficientSet
from ghch.presets import get_preset
from ghch.spectral_ops import Field, make_grid
from ghch.sweep import SweepPoint, SweepReport
from ghch.trajectory import Trajectory
from ghch.verification import check_operator_bounds


def _empty_trace():
    empty = np.array([])
    return energy_monitor.EnergyTrace(empty, empty, empty, math.nan, False, 0.0, 0.0)


def _run_dispersive(directory):
    scenario = get_preset("dispersive").scenario(grid={"N": "32"}, run={"T": "0.1"})
    try:
        c = scenario.coefficient_set()
        grid = scenario.make_grid()
        cfg = scenario.picard_config()
    finally:
        scenario.close()
    result = picard.run(c, grid, cfg)
    trace = energy_monitor.trace(result.limit, c)
    formats.write_trace(trace, result.distances, directory / "trace.csv")
    limit = result.limit
    formats.write_snapshot(limit.snapshot(limit.K), limit.T, c.m, c.s, directory / "u_final.ghch")


@pytest.mark.parametrize(
    ("value", "text"),
    [(0.0, "0"), (-0.0, "0"), (1.0, "1"), (0.1, "0.10000000000000001"), (True, "true"), (False, "false"), (None, ""), (math.inf, "inf")],
)
def test_fmt(value, text):
    assert formats.fmt(value) == text


def test_fmt_round_trips():
    rng = np.random.default_rng(0)
    for value in rng.standard_normal(100) * 10.0 ** rng.integers(-300, 300, 100):
        assert float(formats.fmt(value)) == value


def test_snapshot_round_trip_is_bit_exact(tmp_path):
    grid = make_grid(64, 10.0)
    field = Field(grid, np.random.default_rng(1).standard_normal(64) * 1e-3)
    path = tmp_path / "u.ghch"
    formats.write_snapshot(field, 0.25, 0.5, 3.5, path)
    assert path.stat().st_size == 48 + 8 * 64
    loaded, meta = formats.read_snapshot(path)
    assert loaded.grid == grid
    assert loaded.values.tobytes() == field.values.tobytes()
    assert meta == formats.SnapshotMeta(L=10.0, m=0.5, s=3.5, t=0.25)


def test_snapshot_header_layout(tmp_path):
    grid = make_grid(8, 2 * np.pi)
    path = tmp_path / "u.ghch"
    formats.write_snapshot(Field.zeros(grid), 1.0, 1.0, 3.0, path)
    magic, version, N, L, m, s, t = struct.unpack_from("<4sIQ4d", path.read_bytes())
    assert (magic, version, N) == (b"GHCH", 1, 8)
    assert (L, m, s, t) == (2 * np.pi, 1.0, 3.0, 1.0)


@pytest.fixture
def snapshot_bytes(tmp_path):
    path = tmp_path / "u.ghch"
    formats.write_snapshot(Field.from_function(make_grid(16, 1.0), np.sin), 0.0, 1.0, 3.0, path)
    return path.read_bytes()


@pytest.mark.parametrize(
    ("mutate", "match"),
    [
        (lambda data: data[:-3], "payload"),
        (lambda data: data + b"\0" * 8, "payload"),
        (lambda data: data[:20], "truncated header"),
        (lambda data: b"XXXX" + data[4:], "bad magic"),
        (lambda data: data[:4] + struct.pack("<I", 2) + data[8:], "version 2"),
        (lambda data: data[:8] + struct.pack("<Q", 7) + data[16:], "payload"),
    ],
)
def test_corrupted_snapshots(tmp_path, snapshot_bytes, mutate, match):
    path = tmp_path / "bad.ghch"
    path.write_bytes(mutate(snapshot_bytes))
    with pytest.raises(formats.FormatError, match=match):
        formats.read_snapshot(path)


def test_snapshot_with_invalid_grid(tmp_path, snapshot_bytes):
    # N = 6 with a matching payload
    data = snapshot_bytes[:8] + struct.pack("<Q", 6) + snapshot_bytes[16:48] + b"\0" * 48
    path = tmp_path / "bad.ghch"
    path.write_bytes(data)
    with pytest.raises(formats.FormatError, match="N must be even"):
        formats.read_snapshot(path)


def test_missing_snapshot(tmp_path):
    with pytest.raises(formats.FormatError, match="cannot read"):
        formats.read_snapshot(tmp_path / "missing.ghch")


def test_trace_files(tmp_path):
    times = np.array([0.0, 0.5])
    trace = energy_monitor.EnergyTrace(times, np.array([1.0, 1.5]), np.array([2.0, 2.5]), 0.25, True, 0.5, 1.0)
    formats.write_trace(trace, [1e-3, 1e-6], tmp_path / "trace.csv")
    assert (tmp_path / "trace.csv").read_text() == (
        "t,Hs,Es,lambda_fit,bound_ok\n0,2,1,0.25,true\n0.5,2.5,1.5,0.25,true\n"
    )
    assert (tmp_path / "picard.csv").read_text() == (
        "n,distance\n0,0.001\n1,9.9999999999999995e-07\n"
    )


def test_empty_picard_history(tmp_path):
    formats.write_trace(_empty_trace(), [], tmp_path / "trace.csv")
    assert (tmp_path / "trace.csv").read_text() == "t,Hs,Es,lambda_fit,bound_ok\n"
    assert (tmp_path / "picard.csv").read_text() == "n,distance\n"


def test_zero_trajectory_trace(tmp_path):
    grid = make_grid(16, 2 * np.pi)
    c = CoefficientSet.from_strings(a5="1", u0="0")
    traj = Trajectory.constant(Field.zeros(grid), 0.0, 0.2, 0.1)
    formats.write_trace(energy_monitor.trace(traj, c), [0.0], tmp_path / "trace.csv")
    rows = (tmp_path / "trace.csv").read_text().splitlines()
    assert rows[1:] == ["0,0,0,0,true", "0.10000000000000001,0,0,0,true", "0.20000000000000001,0,0,0,true"]
    assert (tmp_path / "picard.csv").read_text() == "n,distance\n0,0\n"


def test_sweep_and_operator_files(tmp_path):
    report = SweepReport(
        ("scenario.problem.u0_scale",),
        (SweepPoint(0.5, True, 3, None, 1.5, True), SweepPoint(4.0, False, 2, 0.05, math.inf, False)),
    )
    formats.write_sweep(tmp_path / "sweep.csv", report)
    assert (tmp_path / "sweep.csv").read_text().splitlines() == [
        "value,converged,n_final,blowup_time,lambda_fit,bound_ok",
        "0.5,true,3,,1.5,true",
        "4,false,2,0.050000000000000003,inf,false",
    ]
    formats.write_operator_bounds(tmp_path / "operators.csv", [check_operator_bounds(16, 2.0, 1.0, n_fields=2)])
    rows = (tmp_path / "operators.csv").read_text().splitlines()
    assert rows[0].startswith("N,m,s,")
    assert rows[1].startswith("16,2,1,")
    assert rows[1].endswith(",true")


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(formats.FormatError):
        formats.write_trace(_empty_trace(), [], blocker / "trace.csv")


def test_reruns_are_byte_identical(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    first.mkdir()
    second.mkdir()
    _run_dispersive(first)
    _run_dispersive(second)
    for name in ("trace.csv", "picard.csv", "u_final.ghch"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
