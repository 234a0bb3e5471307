import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchorlaw.channel import anchor, binary_rr
from anchorlaw.design import (
    augmented_rr,
    c_one,
    c_star,
    chi_star,
    composition_grid,
    finite_n_optimum,
    lambda_star,
    moment_stats,
    project_simplex,
    risk_fc,
    risk_iid,
    simulate_risk,
    trace_cap,
    trace_cap_check,
    trace_cap_constant,
    worst_risk_fc,
    worst_risk_iid,
    worst_risk_iid_grid,
)
from anchorlaw.errors import InvalidComposition, InvalidDimension, InvalidParameter, OutOfRegime, SingularCovariance
from anchorlaw.sampling import random_law
from anchorlaw.simplex import AnchoredLaw, dirac_center, orbit_law, symmetrize

LN3 = math.log(3.0)


def naive_chi(rho):
    d = rho.d
    chi = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            for w, a in zip(rho.weights, rho.templates):
                if a[i] > 0:
                    chi[i, j] += w * (a[j] - a[i]) ** 2 / a[i]
                elif a[j] > 0:
                    chi[i, j] = math.inf
    return chi


def naive_risk_fc(rho, theta, n):
    ms = moment_stats(rho)
    inv = np.linalg.inv(ms.sigma)
    tr = [np.trace(inv @ B @ inv) for B in ms.b_rows]
    return float(theta @ (np.array(tr) - (rho.d - 1) / rho.d)) / n


def naive_risk_iid(rho, theta, n):
    sig = moment_stats(rho).sigma
    inv2 = np.linalg.matrix_power(np.linalg.inv(sig), 2)
    h = rho.basis.H.T @ (theta - 1 / rho.d)
    total = sum(w * (1 + h @ x) * (x @ inv2 @ x) for w, x in zip(rho.weights, rho.points))
    return (total - h @ h) / n


def test_moment_examples():
    ms = moment_stats(dirac_center(3))
    assert ms.singular and ms.trace == 0 and not ms.sigma.any()
    ms = moment_stats(anchor(binary_rr(LN3)))
    assert ms.sigma[0, 0] == pytest.approx(0.5)


@pytest.mark.parametrize("d,p,lam", [(3, 1.0, 2.0), (4, 0.3, 5.0), (6, 0.7, 1.5)])
def test_augmented_rr_closed_forms(d, p, lam):
    rho = augmented_rr(d, p, lam)
    ms = moment_stats(rho)
    expected = p * d * (lam - 1) ** 2 / (d + lam - 1) ** 2
    assert np.allclose(ms.sigma, expected * np.eye(d - 1), atol=1e-12)
    assert chi_star(rho).value == pytest.approx(p * c_one(d, lam), abs=1e-12)


def test_augmented_rr_edge_cases():
    assert augmented_rr(4, 0.0, 2.0).allclose(dirac_center(4))
    with pytest.raises(InvalidParameter):
        augmented_rr(4, 0.5, 1.0)


def test_chi_examples():
    assert chi_star(dirac_center(3)).value == 0
    assert chi_star(anchor(binary_rr(LN3))).value == pytest.approx(4 / 3)


def test_chi_singular_entry():
    rho = orbit_law([1.5, 1.5, 0.0])
    assert math.isinf(chi_star(rho).value)


def test_tracecap_constants():
    assert trace_cap_constant(3) == pytest.approx(6 / (3 + 2 * math.sqrt(2)), abs=1e-12)
    assert trace_cap_constant(3) == pytest.approx(1.0294373, abs=1e-7)
    assert c_star(3) == pytest.approx((3 - 2 * math.sqrt(2)) / 2, abs=1e-15)
    assert moment_stats(augmented_rr(3, 1.0, lambda_star(3))).trace == pytest.approx(0.0883118, abs=1e-7)
    assert trace_cap(3, c_star(3)) == pytest.approx(0.0883118, abs=1e-7)
    with pytest.raises(InvalidDimension):
        trace_cap(2, 0.1)


@pytest.mark.parametrize("d", range(3, 9))
@pytest.mark.parametrize("p", [0.1, 0.5, 1.0])
def test_augmented_rr_saturates_cap(d, p):
    assert abs(trace_cap_check(augmented_rr(d, p, lambda_star(d)))) < 1e-12


def test_risk_examples():
    rho = anchor(binary_rr(LN3))
    assert risk_iid(rho, [0.5, 0.5], 100) == pytest.approx(0.02)
    assert math.isinf(risk_iid(dirac_center(3), np.full(3, 1 / 3), 10))
    assert math.isinf(risk_fc(dirac_center(3), [1, 0, 0], 10))


def test_risk_rejects_bad_inputs():
    rho = anchor(binary_rr(1.0))
    with pytest.raises(InvalidComposition):
        risk_fc(rho, [0.3, 0.7], 5)  # 1.5 users
    with pytest.raises(InvalidComposition):
        risk_iid(rho, [0.5, 0.6], 5)


def test_exchangeable_uniform_risk(rng):
    rho = symmetrize(random_law(4, 3, rng))
    inv_tr = np.trace(np.linalg.inv(moment_stats(rho).sigma))
    assert risk_iid(rho, np.full(4, 0.25), 7) == pytest.approx(inv_tr / 7, rel=1e-12)
    val, theta = worst_risk_iid(rho, 7)
    assert val == pytest.approx(inv_tr / 7, rel=1e-10)


def test_composition_grid_counts():
    G = composition_grid(3, 4)
    assert len(G) == math.comb(6, 2)
    assert np.allclose(G.sum(axis=1), 1)


def test_project_simplex():
    assert np.allclose(project_simplex(np.array([0.2, 0.3, 0.5])), [0.2, 0.3, 0.5])
    assert np.allclose(project_simplex(np.array([2.0, 0.0, 0.0])), [1, 0, 0])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_chi_matches_naive(d, k, seed):
    rng = np.random.default_rng(seed)
    rho = random_law(d, k, rng, concentration=0.5)
    got = chi_star(rho).matrix
    ref = naive_chi(rho)
    fin = np.isfinite(ref)
    assert np.array_equal(fin, np.isfinite(got))
    assert np.allclose(got[fin], ref[fin], atol=1e-10, rtol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_risks_match_naive_forms(d, k, seed):
    rng = np.random.default_rng(seed)
    rho = random_law(d, k + d, rng)
    if moment_stats(rho).singular:
        return
    counts = rng.multinomial(10, np.full(d, 1 / d))
    theta = counts / 10
    assert risk_fc(rho, theta, 10) == pytest.approx(naive_risk_fc(rho, theta, 10), rel=1e-9)
    assert risk_iid(rho, theta, 10) == pytest.approx(naive_risk_iid(rho, theta, 10), rel=1e-9)
    # vertex average identity
    inv_tr = np.trace(np.linalg.inv(moment_stats(rho).sigma))
    avg = np.mean([risk_fc(rho, e, 10) for e in np.eye(d)])
    assert avg == pytest.approx((inv_tr - (d - 1) / d) / 10, rel=1e-9)
    # trace identity
    ms = moment_stats(rho)
    assert np.allclose(ms.b_rows.mean(axis=0), ms.sigma, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_exact_worst_iid_dominates_grid(d, seed):
    rng = np.random.default_rng(seed)
    rho = random_law(d, d + 3, rng)
    if moment_stats(rho).singular:
        return
    exact, theta = worst_risk_iid(rho, 3)
    grid, _ = worst_risk_iid_grid(rho, 3, resolution=30)
    assert exact >= grid - 1e-12
    assert exact == pytest.approx(risk_iid(rho, theta, 3), rel=1e-12)
    assert exact - grid < 0.05 * exact


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 8), st.integers(1, 12), st.sampled_from([0.3, 1.0, 5.0]), st.integers(0, 2**32 - 1))
def test_trace_cap_holds(d, k, conc, seed):
    rng = np.random.default_rng(seed)
    assert trace_cap_check(random_law(d, k, rng, concentration=conc)) >= -1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_symmetrization_does_not_raise_budgets(d, k, seed):
    rng = np.random.default_rng(seed)
    rho = random_law(d, k, rng)
    sym = symmetrize(rho)
    assert chi_star(sym).value <= chi_star(rho).value + 1e-10
    r0, _ = worst_risk_fc(rho, 1)
    r1, _ = worst_risk_fc(sym, 1)
    assert r1 <= r0 + 1e-10 or math.isinf(r0)


def test_finite_n_optimum_example():
    opt = finite_n_optimum(3, 0.05, 1000)
    assert opt.iid == pytest.approx(2 * (3 + 2 * math.sqrt(2)) / 150, abs=1e-12)
    assert opt.iid == pytest.approx(0.0777124, abs=1e-7)
    assert opt.fc == pytest.approx(opt.iid - 2 / 3000, abs=1e-15)
    val, _ = worst_risk_iid(opt.law, 1000)
    assert val == pytest.approx(opt.iid, rel=1e-12)
    val, _ = worst_risk_fc(opt.law, 1000)
    assert val == pytest.approx(opt.fc, rel=1e-12)
    assert chi_star(opt.law).value == pytest.approx(0.05, rel=1e-12)


def test_finite_n_optimum_regime():
    assert finite_n_optimum(4, c_star(4), 10).p == 1.0
    with pytest.raises(OutOfRegime):
        finite_n_optimum(3, 0.5, 10)


def test_simulation_is_seeded_and_close(rng):
    rho = random_law(3, 4, rng)
    theta = np.array([0.2, 0.3, 0.5])
    a = simulate_risk(rho, theta, 20, 40_000, seed=3)
    b = simulate_risk(rho, theta, 20, 40_000, seed=3)
    assert a == b
    assert abs(a[0] - risk_iid(rho, theta, 20)) < 4 * a[1]
    m, se = simulate_risk(rho, theta, 20, 40_000, seed=4, mode="fc")
    assert abs(m - risk_fc(rho, theta, 20)) < 4 * se


def test_simulation_needs_nonsingular():
    with pytest.raises(SingularCovariance):
        simulate_risk(dirac_center(3), np.full(3, 1 / 3), 1, 10, seed=0)
