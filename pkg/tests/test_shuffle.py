import itertools
import math
from collections import defaultdict
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchorlaw.channel import Channel, ScalarLaw, anchor, binary_rr
from anchorlaw.errors import NotFeasible, TooLarge
from anchorlaw.sampling import random_channel, random_feasible_scalar, random_law
from anchorlaw.shuffle import (
    EXTRAS,
    brute_force_shuffle,
    default_alphas,
    divergence_profile,
    endpoint_law,
    envelope,
    envelope_check,
    nfold_average,
    pair_profile,
    rigidity_probe,
)

LN3 = math.log(3.0)


def sequence_oracle(W, i, j, n, alphas):
    """Hockey-stick profiles from ordered output sequences, grouped into multisets."""
    W = np.asarray(W)
    q0, q1 = defaultdict(float), defaultdict(float)
    for seq in itertools.product(range(W.shape[1]), repeat=n):
        p0 = math.prod(W[i, y] for y in seq)
        p1 = sum(W[j, seq[m]] * math.prod(W[i, y] for l, y in enumerate(seq) if l != m) for m in range(n)) / n
        key = tuple(sorted(seq))
        q0[key] += p0
        q1[key] += p1
    P0 = np.array([q0[k] for k in q0])
    P1 = np.array([q1[k] for k in q0])
    fwd = [np.clip(P1 - a * P0, 0, None).sum() for a in alphas]
    rev = [np.clip(P0 - a * P1, 0, None).sum() for a in alphas]
    return np.array(fwd), np.array(rev)


def test_endpoint_law_examples():
    assert endpoint_law(0).allclose(ScalarLaw([1.0], [1.0]))
    mu = endpoint_law(LN3)
    assert mu.allclose(ScalarLaw([1 / 3, 3.0], [0.75, 0.25]), atol=1e-15)
    assert mu.mean() == pytest.approx(1.0, abs=1e-15)


def test_nfold_by_binomial_expansion():
    got = nfold_average(endpoint_law(LN3), 2)
    assert got.allclose(ScalarLaw([1 / 3, 5 / 3, 3.0], [9 / 16, 6 / 16, 1 / 16]), atol=1e-15)
    assert nfold_average(ScalarLaw([1.0], [1.0]), 7).size == 1


@pytest.mark.parametrize("n", [1, 2, 5, 12])
def test_two_point_average_has_n_plus_one_atoms(n):
    assert nfold_average(endpoint_law(0.7), n).size == n + 1


def test_nfold_against_exact_rational_enumeration():
    vals = [Fraction(1, 2), Fraction(1), Fraction(2)]
    wts = [Fraction(1, 3), Fraction(1, 6), Fraction(1, 2)]
    n = 4
    exact = defaultdict(Fraction)
    for idx in itertools.product(range(3), repeat=n):
        exact[sum(vals[k] for k in idx) / n] += math.prod(wts[k] for k in idx)
    got = nfold_average(ScalarLaw([float(v) for v in vals], [float(w) for w in wts]), n)
    keys = sorted(exact)
    assert np.allclose(got.values, [float(k) for k in keys], atol=1e-15)
    assert np.allclose(got.weights, [float(exact[k]) for k in keys], atol=1e-15)


def test_nfold_guard():
    mu = ScalarLaw(np.linspace(0.5, 1.5, 50), np.full(50, 1 / 50))
    with pytest.raises(TooLarge):
        nfold_average(mu, 20)


def test_profile_of_dirac_is_zero():
    prof = divergence_profile(ScalarLaw([1.0], [1.0]), [1.0, 2.0, 5.0])
    assert not prof.forward.any() and not prof.reverse.any()
    assert all(v == 0 for v in prof.extras.values())


def test_envelope_examples():
    assert envelope(LN3, 1, [1.0]).forward[0] == pytest.approx(0.5)
    assert envelope(LN3, 2, [2.0]).forward[0] == pytest.approx(1 / 16)
    prof = envelope(0.0, 4)
    assert np.array_equal(prof.alphas, [1.0]) and prof.forward[0] == 0 and prof.reverse[0] == 0


def test_default_alphas():
    a = default_alphas(1.0, 3)
    assert len(a) == 25 and a[0] == 1.0 and a[-1] == pytest.approx(math.e**3)


def test_brr_saturates_envelope():
    for eps0 in (0.5, 1.0, 2.0):
        for n in (1, 3):
            rep = envelope_check(anchor(binary_rr(eps0)), eps0, n)
            assert abs(rep.min_slack) < 1e-12


def test_equal_rows_below_envelope():
    rep = envelope_check(anchor(Channel([[0.3, 0.7]] * 3)), 1.0, 3)
    assert rep and rep.min_slack >= 0


def test_envelope_check_rejects_non_ldp():
    with pytest.raises(NotFeasible):
        envelope_check(anchor(binary_rr(2.0)), 1.0, 2)


def test_random_d4_channel_below_envelope(rng):
    rho = random_law(4, 5, rng, eps0=1.0)
    assert envelope_check(rho, 1.0, 3).min_slack >= -1e-10


def test_rigidity_examples():
    assert rigidity_probe(endpoint_law(1.0), 1.0, 3).status == "SATURATED"
    v = rigidity_probe(ScalarLaw([1.0], [1.0]), LN3, 2)
    assert v.status == "GAP" and v.alpha == 1.0 and v.size == pytest.approx(3 / 8)
    v = rigidity_probe(ScalarLaw([1 / 3, 1.0, 3.0], [0.375, 0.5, 0.125]), LN3, 2)
    assert v.status == "GAP"


def test_rigidity_rejects_infeasible():
    with pytest.raises(NotFeasible):
        rigidity_probe(ScalarLaw([0.1, 1.9], [0.5, 0.5]), 1.0, 1)
    with pytest.raises(NotFeasible):
        rigidity_probe(ScalarLaw([0.5, 1.0], [0.5, 0.5]), 1.0, 1)


def test_brute_force_examples():
    W = binary_rr(LN3)
    assert brute_force_shuffle(W, 0, 1, 1, [1.0]).forward[0] == pytest.approx(0.5)
    bf = brute_force_shuffle(W, 0, 1, 2, [2.0])
    assert bf.forward[0] == pytest.approx(1 / 16)
    assert np.abs(brute_force_shuffle(Channel([[0.2, 0.8]] * 2), 0, 1, 3, [1.0, 2.0]).forward).max() < 1e-15


def test_brute_force_guard():
    W = Channel(np.full((2, 40), 1 / 40))
    with pytest.raises(TooLarge):
        brute_force_shuffle(W, 0, 1, 6, [1.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 3), st.integers(2, 3), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_histogram_oracle_matches_sequence_enumeration(d, K, n, seed):
    rng = np.random.default_rng(seed)
    W = random_channel(d, K, rng)
    alphas = [1.0, 1.3, 2.0]
    bf = brute_force_shuffle(W, 0, 1, n, alphas)
    fwd, rev = sequence_oracle(W.W, 0, 1, n, alphas)
    assert np.allclose(bf.forward, fwd, atol=1e-12)
    assert np.allclose(bf.reverse, rev, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(2, 4), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_scalar_shadow_matches_histograms(d, K, n, seed):
    rng = np.random.default_rng(seed)
    W = random_channel(d, K, rng)
    rho = anchor(W)
    alphas = default_alphas(1.5, 2)
    i, j = (int(v) for v in rng.choice(d, 2, replace=False))
    bf = brute_force_shuffle(W, i, j, n, alphas)
    sh = pair_profile(rho, i, j, n, alphas)
    assert np.abs(bf.forward - sh.forward).max() < 1e-10
    assert np.abs(bf.reverse - sh.reverse).max() < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([0.5, 1.0, 2.0]), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_chord_bound_for_convex_tests(eps0, k, seed):
    rng = np.random.default_rng(seed)
    mu = random_feasible_scalar(eps0, rng, k)
    star = endpoint_law(eps0)
    for a in default_alphas(eps0, 1, 7):
        for f in (lambda t: np.clip(t - a, 0, None), lambda t: np.clip(1 - a * t, 0, None)):
            assert mu.expect(f) <= star.expect(f) + 1e-12
    for f in (EXTRAS["kl"], EXTRAS["chi2"]):
        assert mu.expect(f) <= star.expect(f) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([0.5, 1.0, 2.0]), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_feasible_laws_show_a_gap(eps0, n, seed):
    rng = np.random.default_rng(seed)
    mu = random_feasible_scalar(eps0, rng, 2)
    assert rigidity_probe(mu, eps0, n).status == "GAP"


def test_profile_csv_and_json():
    prof = envelope(1.0, 2)
    lines = prof.to_csv().splitlines()
    assert lines[0].startswith("# ") and lines[1] == "alpha,forward,reverse"
    assert len(lines) == 27
    obj = prof.to_json()
    assert obj["eps0"] == 1.0 and len(obj["forward"]) == 25
