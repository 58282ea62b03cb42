"""Grid index correctness: hashing, queries, oracles, and recall."""

import math

import numpy as np
import pytest

from gridlsh.index import (
    CsvFormatError,
    GridConfig,
    PointSet,
    build_index,
    cell_coords,
    generate_uniform,
    load_csv,
    measure_recall,
    measure_recall_replicated,
    query_candidates,
    range_query_bruteforce,
)
from gridlsh.model import p_at_least


def test_generate_uniform_deterministic_and_in_range():
    a = generate_uniform(10, 2, 77)
    b = generate_uniform(10, 2, 77)
    assert np.array_equal(a.points, b.points)
    big = generate_uniform(100_000, 4, 77)
    assert np.all((big.points >= 0.0) & (big.points < 1.0))
    stderr = 1.0 / math.sqrt(12 * big.n)
    for j in range(4):
        assert abs(big.points[:, j].mean() - 0.5) <= 4 * stderr


def test_generate_uniform_validation():
    with pytest.raises(ValueError):
        generate_uniform(0, 2, 1)
    with pytest.raises(ValueError):
        generate_uniform(2, 2, 2**64)


def test_point_set_rejects_out_of_range():
    with pytest.raises(ValueError):
        PointSet(np.array([[0.5, 1.0]]))
    with pytest.raises(ValueError):
        PointSet(np.empty((0, 2)))


def test_load_csv_basic_and_header(tmp_path):
    plain = tmp_path / "plain.csv"
    plain.write_text("0.1,0.2\n0.3,0.4\n")
    points = load_csv(plain)
    assert points.points.shape == (2, 2)
    assert points.wrapped == 0

    headed = tmp_path / "headed.csv"
    headed.write_text("x,y\n0.1,0.2\n")
    assert load_csv(headed).points.shape == (1, 2)


def test_load_csv_wraps_out_of_range_values(tmp_path):
    path = tmp_path / "wrap.csv"
    path.write_text("1.25,0.5\n-0.25,0.0\n")
    points = load_csv(path)
    assert points.points[0, 0] == pytest.approx(0.25)
    assert points.points[1, 0] == pytest.approx(0.75)
    assert points.wrapped == 2


def test_load_csv_errors_carry_row_numbers(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("0.1,0.2\n0.3\n")
    with pytest.raises(CsvFormatError, match="row 2"):
        load_csv(ragged)

    garbage = tmp_path / "garbage.csv"
    garbage.write_text("0.1,0.2\n0.3,oops\n")
    with pytest.raises(CsvFormatError, match="row 2"):
        load_csv(garbage)

    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(CsvFormatError):
        load_csv(empty)

    nonfinite = tmp_path / "nan.csv"
    nonfinite.write_text("0.1,nan\n")
    with pytest.raises(CsvFormatError, match="row 1"):
        load_csv(nonfinite)


def test_grid_config_validation():
    with pytest.raises(ValueError):
        GridConfig(m=0, g=4, seed=1)
    with pytest.raises(ValueError):
        GridConfig(m=21, g=4, seed=1)
    with pytest.raises(ValueError):
        GridConfig(m=1, g=1, seed=1)
    with pytest.raises(ValueError):
        GridConfig(m=1, g=4, seed=-1)


def test_cell_coords_half_open_convention():
    coords = cell_coords(np.array([[0.0]]), np.array([0.0]), 4)
    assert coords[0, 0] == 0
    # wrap: a point just under 1 with a shift pushing it past the last cell
    wrapped = cell_coords(np.array([[0.999]]), np.array([0.2]), 4)
    assert wrapped[0, 0] == 0


def test_build_index_single_point_and_occupancy():
    single = PointSet(np.array([[0.3, 0.7]]))
    built = build_index(single, GridConfig(m=3, g=4, seed=9))
    for table in built.tables:
        assert len(table) == 1
        (bucket,) = table.values()
        assert bucket.tolist() == [0]

    points = generate_uniform(100_000, 4, 9)
    built = build_index(points, GridConfig(m=3, g=4, seed=9))
    for table in built.tables:
        sizes = [len(bucket) for bucket in table.values()]
        assert sum(sizes) == points.n  # every id exactly once per table
        assert np.mean(sizes) == pytest.approx(points.n / 4**4, rel=0.05)


def test_build_index_shift_validation():
    points = PointSet(np.array([[0.5]]))
    config = GridConfig(m=2, g=4, seed=0)
    with pytest.raises(ValueError):
        build_index(points, config, shifts=np.array([[0.3], [0.0]]))  # >= 1/g
    with pytest.raises(ValueError):
        build_index(points, config, shifts=np.zeros((3, 1)))


def test_query_candidates_contains_self():
    points = generate_uniform(500, 3, 11)
    built = build_index(points, GridConfig(m=4, g=4, seed=11))
    for pid in (0, 17, 499):
        for ell in range(1, 5):
            assert pid in query_candidates(built, points.points[pid], ell)


def test_query_candidates_identical_shifts_collapse_ell():
    points = generate_uniform(300, 2, 3)
    config = GridConfig(m=3, g=4, seed=3)
    shifts = np.tile(np.array([[0.1, 0.05]]), (3, 1))
    built = build_index(points, config, shifts=shifts)
    q = np.array([0.42, 0.17])
    assert query_candidates(built, q, 3) == query_candidates(built, q, 1)


def test_query_candidates_monotone_in_ell():
    points = generate_uniform(2000, 2, 5)
    built = build_index(points, GridConfig(m=4, g=3, seed=5))
    rng = np.random.default_rng(5)
    for _ in range(20):
        q = rng.random(2)
        sets = [query_candidates(built, q, ell) for ell in range(1, 5)]
        for smaller, larger in zip(sets[1:], sets):
            assert smaller <= larger


def test_query_candidates_against_per_table_recomputation():
    points = generate_uniform(500, 3, 21)
    built = build_index(points, GridConfig(m=3, g=4, seed=21))
    rng = np.random.default_rng(21)
    for _ in range(10):
        q = rng.random(3)
        matches = np.zeros(points.n, dtype=int)
        for t in range(3):
            point_cells = cell_coords(points.points, built.shifts[t], 4)
            query_cell = cell_coords(q[None, :], built.shifts[t], 4)[0]
            matches += np.all(point_cells == query_cell, axis=1)
        for ell in range(1, 4):
            expected = {int(i) for i in np.nonzero(matches >= ell)[0]}
            assert query_candidates(built, q, ell) == expected


def test_query_candidates_validation():
    points = generate_uniform(10, 2, 1)
    built = build_index(points, GridConfig(m=2, g=4, seed=1))
    with pytest.raises(ValueError):
        query_candidates(built, points.points[0], 3)
    with pytest.raises(ValueError):
        query_candidates(built, np.array([0.5, 1.0]), 1)
    with pytest.raises(ValueError):
        query_candidates(built, np.array([0.5]), 1)


def test_range_query_constructed_instance():
    points = PointSet(np.array([[0.5, 0.5], [0.6, 0.5], [0.95, 0.5]]))
    q = np.array([0.5, 0.5])
    found = range_query_bruteforce(points, q, 0.11)
    assert found == {0, 1}
    assert 0 in range_query_bruteforce(points, q, 0.01)  # the point itself
    # toroidal wrap: 0.95 is 0.05 away from 0.0
    assert range_query_bruteforce(PointSet(np.array([[0.95, 0.5]])), np.array([0.0, 0.5]), 0.1) == {0}
    with pytest.raises(ValueError):
        range_query_bruteforce(points, q, 0.5)
    with pytest.raises(ValueError):
        range_query_bruteforce(points, q, 0.0)


def _naive_range(points, q, radius):
    found = set()
    for i, row in enumerate(points):
        inside = True
        for pj, qj in zip(row, q):
            delta = (pj - qj + 0.5) % 1.0 - 0.5
            if not (-radius <= delta < radius):
                inside = False
                break
        if inside:
            found.add(i)
    return found


def test_range_query_matches_naive_double_loop():
    points = generate_uniform(1000, 3, 33)
    rng = np.random.default_rng(33)
    for _ in range(5):
        q = rng.random(3)
        radius = float(rng.uniform(0.05, 0.3))
        assert range_query_bruteforce(points, q, radius) == _naive_range(points.points, q, radius)


def test_measure_recall_fields_and_determinism():
    points = generate_uniform(20_000, 2, 55)
    built = build_index(points, GridConfig(m=2, g=4, seed=55))
    one = measure_recall(built, points, 100, 1, seed=55)
    again = measure_recall(built, points, 100, 1, seed=55)
    threaded = measure_recall(built, points, 100, 1, seed=55, workers=3)
    assert one == again == threaded
    assert one.queries == 100
    assert one.predicted_recall == float(p_at_least(2, 1, 2))
    assert 0.0 <= one.mean_recall <= 1.0
    assert 0.0 <= one.mean_selectivity <= 1.0


def test_measure_recall_validation():
    points = generate_uniform(100, 2, 1)
    built = build_index(points, GridConfig(m=2, g=4, seed=1))
    with pytest.raises(ValueError):
        measure_recall(built, points, 0, 1, seed=1)
    with pytest.raises(ValueError):
        measure_recall(built, points, 10, 3, seed=1)
    other = generate_uniform(50, 2, 2)
    with pytest.raises(ValueError):
        measure_recall(built, other, 10, 1, seed=1)


def test_measure_recall_replicated_passthrough_and_determinism():
    points = generate_uniform(20_000, 2, 66)
    solo = measure_recall_replicated(points, 2, 4, 1, 100, seed=66, draws=1)
    built = build_index(points, GridConfig(m=2, g=4, seed=66))
    assert solo == measure_recall(built, points, 100, 1, seed=66)
    rep_a = measure_recall_replicated(points, 2, 4, 1, 120, seed=66, draws=6)
    rep_b = measure_recall_replicated(points, 2, 4, 1, 120, seed=66, draws=6, workers=3)
    assert rep_a == rep_b
    with pytest.raises(ValueError):
        measure_recall_replicated(points, 2, 4, 1, 3, seed=66, draws=6)


def test_recall_converges_to_model_prediction():
    # averaged over shift draws so the standard error is honest
    points = generate_uniform(50_000, 2, 314)
    report = measure_recall_replicated(points, 2, 4, 1, 600, seed=314, draws=12)
    assert abs(report.mean_recall - report.predicted_recall) <= 3 * report.stderr_recall + 0.01


def test_translation_invariance_of_recall():
    base = generate_uniform(30_000, 2, 271)
    shifted = PointSet((base.points + np.array([0.37, 0.81])) % 1.0)
    rep_a = measure_recall_replicated(base, 2, 4, 1, 240, seed=1000, draws=12)
    rep_b = measure_recall_replicated(shifted, 2, 4, 1, 240, seed=2000, draws=12)
    spread = math.sqrt(rep_a.stderr_recall**2 + rep_b.stderr_recall**2)
    assert abs(rep_a.mean_recall - rep_b.mean_recall) <= 4 * spread


def test_recall_nondecreasing_in_m():
    points = generate_uniform(20_000, 2, 88)
    means = {}
    stderrs = {}
    for m in (1, 2, 3):
        per_seed = [
            measure_recall_replicated(points, m, 4, 1, 60, seed=88 + 1000 * s, draws=3).mean_recall
            for s in range(10)
        ]
        means[m] = float(np.mean(per_seed))
        stderrs[m] = float(np.std(per_seed, ddof=1)) / math.sqrt(10)
    for m in (1, 2):
        assert means[m + 1] >= means[m] - 2 * stderrs[m]
