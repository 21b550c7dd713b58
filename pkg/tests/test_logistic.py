import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chaoticlms.logistic import (Constant, DegenerateOrbitWarning, LogisticParams, Modulated,
                                 Switched, bifurcation_scan, center, generate_orbit,
                                 iterate_map, lambdas_from_dict, uncenter, write_orbit_csv)


@pytest.mark.parametrize("lam, x, expected", [
    (4.0, 0.3, 0.84),
    (4.0, 0.75, 0.75),
    (3.95, 0.5, 0.9875),
])
def test_iterate_map(lam, x, expected):
    assert iterate_map(lam, x) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("lam, x", [(4.0, -0.1), (4.0, 1.5), (0.0, 0.5), (4.01, 0.5)])
def test_iterate_map_domain(lam, x):
    with pytest.raises(ValueError):
        iterate_map(lam, x)


def test_short_orbit():
    orbit = generate_orbit(LogisticParams(0.3, 0), 3, Constant(4.0))
    assert orbit.samples == pytest.approx([0.3, 0.84, 0.5376], abs=1e-15)
    assert not orbit.centered


def test_fixed_point_warns():
    with pytest.warns(DegenerateOrbitWarning):
        orbit = generate_orbit(LogisticParams(0.75, 0), 3, Constant(4.0))
    assert np.all(orbit.samples == 0.75)


def test_preimage_of_zero_warns():
    # 0.5 -> 1 -> 0 -> 0 ...
    with pytest.warns(DegenerateOrbitWarning):
        generate_orbit(LogisticParams(0.5, 200), 10)


def test_generic_orbit_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        generate_orbit(LogisticParams(), 5000)


def test_long_orbit_mean():
    orbit = generate_orbit(LogisticParams(0.123456789, 1000), 1_000_000)
    assert abs(orbit.samples.mean() - 0.5) < 0.01
    assert abs(center(orbit).samples.mean()) < 0.01


def test_center_examples():
    orbit = generate_orbit(LogisticParams(0.3, 0), 2)
    orbit = type(orbit)(np.array([0.5, 0.84]), orbit.lambdas, orbit.schedule)
    assert center(orbit).samples == pytest.approx([0.0, 0.34])
    ends = type(orbit)(np.array([1.0, 0.0]), orbit.lambdas, orbit.schedule)
    assert list(center(ends).samples) == [0.5, -0.5]


def test_center_twice_rejected():
    c = center(generate_orbit(LogisticParams(), 10))
    with pytest.raises(ValueError):
        center(c)
    with pytest.raises(ValueError):
        uncenter(uncenter(c))


def test_switched_schedule_exact_indices():
    sched = Switched(((0, 4.0), (400, 3.95), (1400, 4.0)))
    lams = sched.lambdas(2000)
    assert lams[399] == 4.0 and lams[400] == 3.95
    assert lams[1399] == 3.95 and lams[1400] == 4.0


@pytest.mark.parametrize("segments", [
    ((1, 4.0),),
    ((0, 4.0), (10, 3.9), (10, 3.8)),
    ((0, 4.0), (5, 4.5)),
    (),
])
def test_switched_schedule_validation(segments):
    with pytest.raises(ValueError):
        Switched(segments)


def test_modulated_schedule():
    sig = np.array([1.0, -1.0, 0.0])
    assert Modulated(3.95, 0.05, sig).lambdas(3) == pytest.approx([4.0, 3.9, 3.95])
    with pytest.raises(ValueError):
        Modulated(3.95, 0.05, np.array([1.5]))
    with pytest.raises(ValueError):
        Modulated(3.96, 0.05, sig)
    with pytest.raises(ValueError):
        Modulated(3.95, 0.05, sig).lambdas(4)


def test_schedule_from_dict():
    assert lambdas_from_dict({"kind": "constant", "lambda": 3.9}) == Constant(3.9)
    sched = lambdas_from_dict({"kind": "switched", "segments": [[0, 4], [5, 3.95]]})
    assert sched.lambdas(6)[-1] == 3.95
    with pytest.raises(ValueError):
        lambdas_from_dict({"kind": "tent"})


def test_bifurcation_fixed_point():
    lam, x = bifurcation_scan(1.0, 2.0, 1, settle=1000, keep=50)
    assert np.all(lam == 2.0)
    assert np.max(np.abs(x - (1 - 1 / 2.0))) < 1e-9


def test_bifurcation_period_two():
    lam_v = 3.2
    # nontrivial roots of f(f(x)) = x
    disc = math.sqrt((lam_v + 1) * (lam_v - 3))
    cycle = sorted([(lam_v + 1 - disc) / (2 * lam_v), (lam_v + 1 + disc) / (2 * lam_v)])
    _, x = bifurcation_scan(3.0, lam_v, 1, settle=1000, keep=50)
    distinct = np.unique(np.round(x, 9))
    assert distinct.size == 2
    assert distinct == pytest.approx(cycle, abs=1e-9)


def test_bifurcation_fills_interval_at_four():
    _, x = bifurcation_scan(3.0, 4.0, 1, settle=1000, keep=100_000)
    counts, _ = np.histogram(x, bins=100, range=(0, 1))
    assert np.all(counts > 0)


def test_bifurcation_grid_shape():
    lam, x = bifurcation_scan(3.4, 4.0, 7, settle=10, keep=3)
    assert lam.size == x.size == 21
    assert np.all((x >= 0) & (x <= 1))


def test_orbit_csv(tmp_path):
    orbit = generate_orbit(LogisticParams(0.3, 0), 3)
    path = tmp_path / "orbit.csv"
    write_orbit_csv(orbit, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,lambda,sample"
    assert lines[1] == "0,4,0.29999999999999999"
    assert float(lines[3].split(",")[2]) == orbit.samples[2]


lams = st.floats(min_value=0.01, max_value=4.0)
x0s = st.floats(min_value=1e-6, max_value=1 - 1e-6)


@settings(max_examples=60, deadline=None)
@given(x0=x0s, lam=lams, n=st.integers(1, 300))
def test_range_and_recurrence(x0, lam, n):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateOrbitWarning)
        orbit = generate_orbit(LogisticParams(x0, 5), n, Constant(lam))
    assert np.all((orbit.samples >= 0) & (orbit.samples <= 1))
    assert orbit.recurrence_residual() == 0.0
    c = center(orbit)
    assert np.all(np.abs(c.samples) <= 0.5)
    assert c.recurrence_residual() < 1e-15
    assert np.array_equal(uncenter(c).samples, orbit.samples)


@settings(max_examples=30, deadline=None)
@given(x0=x0s, split=st.integers(1, 99), lam2=st.floats(3.5, 4.0))
def test_switched_determinism(x0, split, lam2):
    sched = Switched(((0, 4.0), (split, lam2)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateOrbitWarning)
        a = generate_orbit(LogisticParams(x0, 3), 100, sched)
        b = generate_orbit(LogisticParams(x0, 3), 100, sched)
    assert np.array_equal(a.samples, b.samples)
    assert np.all((a.samples >= 0) & (a.samples <= 1))
    assert a.recurrence_residual() == 0.0
