import numpy as np
import pytest
from scipy import stats

from thermocovert.fingerprint import (DEFAULT_PROFILES, GridMismatch, RecordingPlan,
                                      ReferenceLibrary, UndefinedCorrelation, WorkloadProfile,
                                      build_library, check_profiles, classify, correlate,
                                      pair_stats)
from thermocovert.sensor import SensorTrace


@pytest.fixture(scope="module")
def library():
    return build_library(DEFAULT_PROFILES, repeats=5, plan=RecordingPlan(run_seconds=100.0))


def test_correlate_trivial_cases(rng):
    x = rng.normal(size=200)
    assert correlate(x, x) == pytest.approx(1.0)
    assert correlate(x, -x + 3.0) == pytest.approx(-1.0)


def test_correlate_matches_scipy(rng):
    x = rng.normal(size=500)
    y = 0.4 * x + rng.normal(size=500)
    assert correlate(x, y) == pytest.approx(stats.pearsonr(x, y)[0], rel=1e-12)


def test_correlate_errors():
    with pytest.raises(UndefinedCorrelation):
        correlate(np.ones(10), np.arange(10.0))
    with pytest.raises(GridMismatch):
        correlate(np.arange(3.0), np.arange(4.0))


def test_profile_intervals():
    p = WorkloadProfile("x", 0.9, duty=0.5, period=4.0)
    assert p.mean_activity == pytest.approx(0.45)
    assert p.intervals(10.0, 10.0) == [(10.0, 12.0), (14.0, 16.0), (18.0, 20.0)]
    assert WorkloadProfile("y", 1.0).intervals(0.0, 5.0) == [(0.0, 5.0)]
    with pytest.raises(ValueError):
        WorkloadProfile("z", 0.0)


def test_check_profiles():
    check_profiles(DEFAULT_PROFILES)
    with pytest.raises(ValueError):
        check_profiles([WorkloadProfile("a", 0.5), WorkloadProfile("a", 0.9)])
    with pytest.raises(ValueError):
        check_profiles([WorkloadProfile("a", 0.5), WorkloadProfile("b", 0.52)])


def test_library_shape(library):
    assert len(library) == 25
    assert library.labels == [p.name for p in DEFAULT_PROFILES]
    assert len(library.grid) == len(library.traces["rsa"][0])
    # one reading per 100 ms
    assert np.allclose(np.diff(library.grid), 0.1)


def test_profiles_saturate_at_distinct_levels(library):
    plan = RecordingPlan(run_seconds=100.0)
    late = (library.grid > plan.lead + plan.run_seconds - 30) & \
        (library.grid < plan.lead + plan.run_seconds)
    levels = {k: np.mean([tr.readings[late].mean() for tr in v])
              for k, v in library.traces.items()}
    vals = sorted(levels.values())
    assert all(b - a > 0.1 for a, b in zip(vals, vals[1:]))
    assert max(levels, key=levels.get) == "rsa"


def test_classify_own_trace(library):
    tr = library.traces["qsort"][2]
    res = classify(tr, library)
    assert res.label == "qsort"
    assert res.mean_scores["qsort"] == max(res.mean_scores.values())
    assert '"label": "qsort"' in res.to_json()


def test_classify_flat_trace(library):
    flat = SensorTrace(library.grid, np.full(len(library.grid), 22.0))
    assert classify(flat, library).label is None


def test_classify_grid_mismatch(library):
    short = SensorTrace(library.grid[:-1], np.arange(len(library.grid) - 1.0))
    with pytest.raises(GridMismatch):
        classify(short, library)


def test_pair_counts(library):
    ps = pair_stats(library)
    assert all(len(v) == 10 for v in ps.same.values())
    assert len(ps.cross) == 10 and all(len(v) == 25 for v in ps.cross.values())
    assert ps.mean_same > ps.mean_cross
    assert 0.0 <= ps.false_positive_rate(0.85) <= 1.0


def test_save_load_round_trip(library, tmp_path):
    library.save(tmp_path / "lib")
    back = ReferenceLibrary.load(tmp_path / "lib")
    assert back.labels == library.labels
    assert back.seeds == library.seeds
    for k in library.labels:
        for a, b in zip(library.traces[k], back.traces[k]):
            assert np.array_equal(a.readings, b.readings)


def test_library_requires_common_grid():
    a = SensorTrace([0.0, 1.0], [1.0, 2.0])
    b = SensorTrace([0.0, 2.0], [1.0, 2.0])
    with pytest.raises(GridMismatch):
        ReferenceLibrary({"a": [a], "b": [b]})


def test_build_library_is_seeded():
    plan = RecordingPlan(run_seconds=20.0, lead=5.0, tail=5.0)
    a = build_library(repeats=2, plan=plan, seed=3)
    b = build_library(repeats=2, plan=plan, seed=3)
    assert all(np.array_equal(x.readings, y.readings)
               for k in a.labels for x, y in zip(a.traces[k], b.traces[k]))
    with pytest.raises(ValueError):
        build_library(repeats=1, plan=plan)
