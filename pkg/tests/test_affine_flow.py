from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from anosov_models.affine_flow import (
    first_return_to_base,
    flow,
    orbit_csv,
    reentry_time_lower_bound,
    trace_orbit,
    transit_map,
    transit_time,
    vector_field,
)
from anosov_models.errors import NeverExitsError, ParameterDomainError
from anosov_models.geometry import ModelParams, Point3


def integrate(params: ModelParams, start, t: float) -> np.ndarray:
    """Adaptive numeric integration of the model field, unwrapped in z."""
    sol = solve_ivp(
        lambda _t, u: vector_field(params, u[0], u[1]),
        (0.0, t),
        np.asarray(start, dtype=float),
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
    )
    return sol.y[:, -1]


def exit_time_numeric(params: ModelParams, start) -> float:
    """Integrate until |y| reaches r1 and return the crossing time."""
    event = lambda _t, u: abs(u[1]) - params.r1  # noqa: E731
    event.terminal = True
    sol = solve_ivp(
        lambda _t, u: vector_field(params, u[0], u[1]),
        (0.0, 200.0),
        np.asarray(start, dtype=float),
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        events=event,
    )
    return float(sol.t_events[0][0])


@pytest.mark.parametrize(
    "p, expected",
    [(1, (0.5, 2.0, 0.0)), (2, (0.5, 2.0, 0.5))],
)
def test_flow_examples_against_ode(p, expected):
    params = ModelParams(0.5, 1, 1, p, 0.4, 0.1)
    out = flow(params, Point3(1.0, 1.0, 0.0), 1.0)
    assert out.as_tuple() == pytest.approx(expected, abs=1e-12)
    num = integrate(params, (1.0, 1.0, 0.0), 1.0)
    assert num[:2] == pytest.approx(expected[:2], rel=1e-9)
    assert num[2] % 1.0 == pytest.approx(expected[2], abs=1e-9)


def test_flow_identity(toy_params):
    pt = Point3(0.1, -0.2, 0.3)
    assert flow(toy_params, pt, 0.0) == pt


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-1, 1), st.floats(-1, 1))
def test_group_law(s, t, x, y):
    params = ModelParams(0.5, 1, 1, 1, 0.4, 0.1)
    pt = Point3(x, y, 0.0)
    a = flow(params, flow(params, pt, s), t)
    b = flow(params, pt, s + t)
    # compare relative to the size of the coordinates, which grow like 2^50
    scale = max(1.0, abs(b.x), abs(b.y))
    assert abs(a.x - b.x) <= 1e-12 * scale and abs(a.y - b.y) <= 1e-12 * scale
    d = abs(a.z - b.z)
    assert min(d, 1 - d) <= 1e-12


@given(st.floats(-20, 20), st.floats(-1, 1), st.floats(-1, 1))
def test_hyperbola_invariance(t, x, y):
    params = ModelParams(0.5, 1, 1, 1, 0.4, 0.1)
    q = flow(params, Point3(x, y, 0.0), t)
    assert q.x * q.y == pytest.approx(x * y, rel=1e-12, abs=1e-300)


def test_transit_examples():
    params = ModelParams(0.5, 1, -1, 1, 0.4, 0.1)
    res = transit_map(params, Point3(0.4, 0.1, 0.0))
    assert res.transit_time == pytest.approx(2.0, abs=1e-12)
    assert res.exit_point.as_tuple() == pytest.approx((0.1, 0.4, 0.0), abs=1e-12)
    res = transit_map(params, Point3(0.4, 0.05, 0.3))
    assert res.transit_time == pytest.approx(3.0, abs=1e-12)
    assert res.exit_point.as_tuple() == pytest.approx((0.05, 0.4, 0.3), abs=1e-12)


@pytest.mark.parametrize("k", [1, 2, 5, 9])
def test_transit_time_at_powers_of_lambda(k):
    params = ModelParams(0.3, 1, -1, 1, 0.4, 0.39)
    assert transit_time(params, 0.4 * 0.3**k) == pytest.approx(k, abs=1e-12)


def test_transit_errors(toy_params):
    with pytest.raises(NeverExitsError):
        transit_map(toy_params, Point3(0.4, 0.0, 0.0))
    with pytest.raises(ParameterDomainError):
        transit_map(toy_params, Point3(0.4, 0.2, 0.0))
    with pytest.raises(ParameterDomainError):
        transit_map(toy_params, Point3(0.3, 0.05, 0.0))


@pytest.mark.parametrize("quadrant_signs", [(1, 1), (-1, 1), (-1, -1), (1, -1)])
def test_transit_matches_ode_in_every_quadrant(toy_params, quadrant_signs):
    sx, sy = quadrant_signs
    rng = np.random.default_rng(5)
    for r in rng.uniform(1e-3, toy_params.r2, 10):
        start = (sx * toy_params.r1, sy * r, 0.2)
        res = transit_map(toy_params, Point3(*start))
        assert exit_time_numeric(toy_params, start) == pytest.approx(res.transit_time, abs=1e-6)
        end = integrate(toy_params, start, res.transit_time)
        assert end[:2] == pytest.approx([res.exit_point.x, res.exit_point.y], abs=1e-9)


@given(st.floats(1e-6, 0.1), st.floats(0, 1, exclude_max=True))
def test_transit_consistent_with_flow(r, z):
    params = ModelParams(0.5, 2, -1, 3, 0.4, 0.1)
    res = transit_map(params, Point3(0.4, r, z))
    q = flow(params, Point3(0.4, r, z), res.transit_time)
    assert q.x == pytest.approx(res.exit_point.x, abs=1e-10)
    assert q.y == pytest.approx(res.exit_point.y, abs=1e-10)
    d = abs(q.z - res.exit_point.z)
    assert min(d, 1 - d) < 1e-10


def test_first_return_examples():
    params = ModelParams(0.5, 2, 1, 1, 0.4, 0.1)
    (x, y), t = first_return_to_base(params, 1.0, 1.0)
    assert (x, y, t) == pytest.approx((0.25, 4.0, 2.0))
    q = flow(params, Point3(1.0, 1.0, 0.0), t)
    assert (q.x, q.y, q.z) == pytest.approx((x, y, 0.0), abs=1e-12)
    params = ModelParams(0.5, 1, 1, 1, 0.4, 0.1)
    assert first_return_to_base(params, 0.2, 0.1) == ((pytest.approx(0.1), pytest.approx(0.2)), 1.0)
    assert first_return_to_base(params, 0.0, 0.0)[0] == (0.0, 0.0)


def test_reentry_bound_examples():
    assert reentry_time_lower_bound(0.2, 0.4, 0.5) == pytest.approx(2.0)
    assert reentry_time_lower_bound(0.1, 0.4, 0.5) == pytest.approx(4.0)
    assert reentry_time_lower_bound(0.4 * (1 - 1e-12), 0.4, 0.5) < 1e-10
    with pytest.raises(ParameterDomainError):
        reentry_time_lower_bound(0.5, 0.4, 0.5)


def crossing_time(params: ModelParams, start, coord: int, level: float) -> float:
    event = lambda _t, u: abs(u[coord]) - level  # noqa: E731
    event.terminal = True
    sol = solve_ivp(
        lambda _t, u: vector_field(params, u[0], u[1]),
        (0.0, 200.0),
        np.asarray(start, dtype=float),
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        events=event,
    )
    return float(sol.t_events[0][0])


def test_measured_reentry_never_beats_bound():
    """Leave the shrunk region, leave the outer one, come back through both."""
    outer = ModelParams(0.5, 1, -1, 1, 0.4, 0.1)
    shrunk = outer.with_radii(0.1, 0.025)
    bound = reentry_time_lower_bound(shrunk.r1, outer.r1, outer.lam)
    rng = np.random.default_rng(3)
    for r_out, y_in in zip(rng.uniform(1e-4, shrunk.r2, 25), rng.uniform(1e-5, 0.1 * shrunk.r2, 25)):
        exit_pt = transit_map(shrunk, Point3(shrunk.r1, r_out, 0.0)).exit_point
        leave = crossing_time(outer, exit_pt.as_tuple(), 1, outer.r1)
        back = crossing_time(outer, (outer.r1, y_in, 0.0), 0, shrunk.r1)
        assert leave + back >= bound - 1e-9


def test_trace_and_csv(toy_params):
    rows = trace_orbit(toy_params, Point3(0.39, 0.01, 0.0), 2.0, 0.5)
    assert len(rows) == 5
    assert rows[0][4] == "Q1"
    text = orbit_csv(rows)
    assert text.splitlines()[0] == "t,x,y,z,region"
    assert len(text.splitlines()) == 6
    with pytest.raises(ParameterDomainError):
        trace_orbit(toy_params, Point3(0, 0, 0), 1.0, 0.0)
