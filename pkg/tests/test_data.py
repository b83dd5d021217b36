import math

import numpy as np
import pytest

from qmemlab import data
from qmemlab.data import (Dataset, DataError, FeatureSpec, ParamSpace,
                          coupled_grid_space, coupled_space, generate,
                          read_csv, sample, single_space, stats, write_csv)
from qmemlab.dynamics import IntegratorConfig

FAST = IntegratorConfig(steps_per_period=150, periods=2)


def test_sample_deterministic():
    space = single_space(seed=42)
    a = sample(space, 25)
    b = sample(space, 25)
    assert np.array_equal(a, b)


def test_sample_respects_ranges():
    space = single_space(seed=7)
    rows = sample(space, 500)
    phi, lam = rows[:, 0], rows[:, 1]
    assert np.all((phi >= 0.0) & (phi < 2.0 * math.pi))
    assert np.all((lam > 0.0) & (lam <= 100.0))


def test_sample_different_seeds_differ():
    a = sample(single_space(seed=1), 10)
    b = sample(single_space(seed=2), 10)
    assert not np.array_equal(a, b)


def test_grid_cartesian_product():
    space = ParamSpace(features=(
        FeatureSpec("c12", 0.0, 2e-12, mode="grid", levels=10),
        FeatureSpec("l12", 0.0, 2e-8, mode="grid", levels=10),
        FeatureSpec("phi", 0.0, 2.0 * math.pi, mode="grid", levels=10),
        FeatureSpec("lambda", 0.1, 100.0, mode="grid", levels=10),
    ), seed=0)
    rows = sample(space, 1)
    assert rows.shape == (10000, 4)
    # first row holds every grid minimum; zero couplings are reachable
    assert rows[0, 0] == 0.0 and rows[0, 1] == 0.0
    assert rows[0, 2] == 0.0 and rows[0, 3] == 0.1
    assert rows[-1, 0] == 2e-12 and rows[-1, 1] == 2e-8


def test_grid_levels_validation():
    with pytest.raises(DataError):
        FeatureSpec("x", 0.0, 1.0, mode="grid", levels=1)


def test_generate_single_lambda_zero_row():
    space = ParamSpace(features=(
        FeatureSpec("phi", 1.0, 1.0),
        FeatureSpec("lambda", 0.0, 0.0),
    ), seed=0)
    ds = generate(space, 1, "single", cfg=FAST)
    assert ds.rows.shape == (1, 3)
    assert ds.rows[0, 2] == 0.0  # no dissipation, no loop


def test_generate_coupled_targets_equal():
    space = ParamSpace(features=(
        FeatureSpec("c12", 0.0, 1e-13),
        FeatureSpec("l12", 0.0, 1e-8),
        FeatureSpec("phi", 0.0, 2.0 * math.pi),
        FeatureSpec("lambda", 0.0, 100.0, open_low=True),
    ), seed=3)
    ds = generate(space, 4, "coupled", cfg=FAST)
    assert ds.rows.shape == (4, 6)
    assert np.array_equal(ds.column("form_factor"), ds.column("form_factor_2"))


def test_generate_worker_count_equivalence():
    space = single_space(seed=11)
    serial = generate(space, 6, "single", cfg=FAST, workers=1)
    parallel = generate(space, 6, "single", cfg=FAST, workers=3)
    assert np.array_equal(serial.rows, parallel.rows)


def test_generate_targets_in_unit_interval():
    ds = generate(single_space(seed=5), 8, "single", cfg=FAST)
    t = ds.targets()
    assert np.all((t >= 0.0) & (t <= 1.0))


def test_stats_constant_column():
    ds = Dataset(kind="single", columns=data.SINGLE_COLUMNS,
                 rows=np.array([[1.0, 2.0, 0.5]] * 4))
    summary = stats(ds)
    assert summary["phi"].std == 0.0
    assert summary["phi"].q25 == summary["phi"].q75 == 1.0


def test_stats_interpolated_median():
    rows = np.column_stack([np.array([1.0, 2.0, 3.0, 4.0]),
                            np.ones(4), np.ones(4) * 0.5])
    ds = Dataset(kind="single", columns=data.SINGLE_COLUMNS, rows=rows)
    summary = stats(ds)
    assert summary["phi"].q50 == 2.5
    assert summary["phi"].std == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
    assert summary["phi"].min <= summary["phi"].q25 <= summary["phi"].q50
    assert summary["phi"].q50 <= summary["phi"].q75 <= summary["phi"].max


def test_stats_empty_rejected():
    ds = Dataset(kind="single", columns=data.SINGLE_COLUMNS,
                 rows=np.empty((0, 3)))
    with pytest.raises(DataError):
        stats(ds)


def test_csv_roundtrip_exact(tmp_path):
    ds = generate(single_space(seed=9), 5, "single", cfg=FAST)
    path = tmp_path / "ds.csv"
    write_csv(ds, str(path))
    back = read_csv(str(path))
    assert back.kind == "single"
    assert np.array_equal(back.rows, ds.rows)


def test_csv_header_names(tmp_path):
    ds = generate(single_space(seed=9), 2, "single", cfg=FAST)
    path = tmp_path / "ds.csv"
    write_csv(ds, str(path))
    assert path.read_text().splitlines()[0] == "phi,lambda,form_factor"


def test_csv_empty_dataset(tmp_path):
    ds = Dataset(kind="coupled", columns=data.COUPLED_COLUMNS,
                 rows=np.empty((0, 6)))
    path = tmp_path / "empty.csv"
    write_csv(ds, str(path))
    assert path.read_text() == "c12,l12,phi,lambda,form_factor,form_factor_2\n"
    back = read_csv(str(path))
    assert back.rows.shape == (0, 6)


def test_csv_wrong_column_count(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("phi,lambda,form_factor\n1.0,2.0\n")
    with pytest.raises(DataError, match="bad.csv:2"):
        read_csv(str(path))


def test_csv_unknown_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(DataError, match="bad.csv:1"):
        read_csv(str(path))


def test_generate_reproducible_bytes(tmp_path):
    space = single_space(seed=20260808)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(generate(space, 5, "single", cfg=FAST, workers=2), str(p1))
    write_csv(generate(space, 5, "single", cfg=FAST, workers=1), str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_default_spaces_schema():
    assert single_space().names == ("phi", "lambda")
    assert coupled_space().names == ("c12", "l12", "phi", "lambda")
    grid = coupled_grid_space(levels=3)
    rows = sample(grid, 1)
    assert rows.shape == (81, 4)
    assert rows[0, 3] == 0.1  # lambda grid starts above the degenerate zero
