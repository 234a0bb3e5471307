import math

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from anchorlaw.design import c_star, chi_star, moment_stats, trace_cap_constant
from anchorlaw.errors import InvalidParameter
from anchorlaw.frontier import FrontierConfig, frontier, svg_plot, two_level_stats, two_level_template, upper_hull
from anchorlaw.sampling import random_templates
from anchorlaw.simplex import orbit_law, template_stats


@pytest.fixture(scope="module")
def curves():
    out = {}
    for d in (3, 4, 5):
        grid = np.concatenate([np.linspace(0, c_star(d), 11), np.geomspace(c_star(d), 50, 40)[1:]])
        out[d] = frontier(d, grid)
    return out


def test_two_level_stats_match_template_stats():
    for d, s, lam in [(3, 1, 2.0), (5, 2, 7.5), (6, 3, 1.1)]:
        _, _, S, C = template_stats(two_level_template(d, s, lam))
        c, sv = two_level_stats(d, s, lam)
        assert c == pytest.approx(C[0], rel=1e-12) and sv == pytest.approx(S[0], rel=1e-12)


def test_two_level_orbit_law_budgets():
    rho = orbit_law(two_level_template(5, 2, 3.0))
    c, s = two_level_stats(5, 2, 3.0)
    assert chi_star(rho).value == pytest.approx(float(c), rel=1e-12)
    assert moment_stats(rho).trace == pytest.approx(float(s), rel=1e-12)


def test_upper_hull_against_qhull(rng):
    P = rng.random((300, 2))
    P[:, 1] = np.sqrt(P[:, 0]) + 0.05 * rng.standard_normal(300)
    idx = upper_hull(P[:, 0], P[:, 1])
    hull = ConvexHull(P)
    # qhull vertices on the upper chain: facets whose outward normal points up
    upper = set()
    for eq, simp in zip(hull.equations, hull.simplices):
        if eq[1] > 0:
            upper.update(int(v) for v in simp)
    assert set(int(i) for i in idx) == upper
    assert np.all(np.diff(P[idx, 0]) > 0)


def test_origin_certificate():
    c = frontier(3, [0.0])
    assert c.values[0] == 0.0
    assert c.certificates[0, 0] == 0 and c.certificates[0, 4] == 0.0


def test_tangency_example():
    c = frontier(3, [c_star(3)])
    assert c.values[0] == pytest.approx(0.0883118, abs=1e-7)
    s_a, lam_a, s_b, lam_b, t = c.certificates[0]
    assert (s_b, t) == (1, pytest.approx(1.0, abs=1e-9))
    assert lam_b == pytest.approx(math.sqrt(2), rel=1e-12)


def test_empty_or_negative_grid():
    with pytest.raises(InvalidParameter):
        frontier(3, [])
    with pytest.raises(InvalidParameter):
        frontier(3, [-0.1])


@pytest.mark.parametrize("d", [3, 4, 5])
def test_linear_below_tangency(curves, d):
    c = curves[d]
    low = c.grid <= c_star(d)
    assert np.abs(c.values[low] - trace_cap_constant(d) * c.grid[low]).max() < 1e-6


@pytest.mark.parametrize("d", [3, 4, 5])
def test_concave_monotone_and_certified(curves, d):
    c = curves[d]
    assert np.all(np.diff(c.values) >= -1e-12)
    slopes = np.diff(c.values) / np.diff(c.grid)
    assert np.all(np.diff(slopes) <= 1e-9)
    assert c.certificate_residual() < 1e-9


@pytest.mark.parametrize("d", [3, 4, 5])
def test_random_templates_below_hull(curves, d, rng):
    A = random_templates(d, 10_000, rng)
    _, _, S, C = template_stats(A)
    c = curves[d]
    inside = C <= c.c_max
    assert inside.mean() > 0.5
    gap = S[inside] - c.evaluate(C[inside])
    assert gap.max() <= 1e-8


def test_finer_sampling_does_not_move_curve():
    grid = np.linspace(0, 3, 13)
    coarse = frontier(4, grid, FrontierConfig(n_lambda=200))
    fine = frontier(4, grid, FrontierConfig(n_lambda=800))
    assert np.abs(coarse.values - fine.values).max() < 1e-8


def test_outputs():
    c = frontier(3, [0.0, 0.05, 0.5])
    lines = c.to_csv().splitlines()
    assert lines[0].startswith("C0,F,") and len(lines) == 4
    obj = c.to_json()
    assert obj["d"] == 3 and len(obj["certificates"]) == 3
    assert svg_plot(c).startswith("<svg")


@pytest.mark.parametrize("d", [3, 6])
def test_trace_cap_line_bounds_whole_curve(d):
    grid = np.linspace(0, 3 * c_star(d), 25)
    vals = frontier(d, grid, FrontierConfig(n_lambda=100)).values
    assert np.all(vals <= trace_cap_constant(d) * grid + 1e-9)
