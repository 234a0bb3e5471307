"""Exact finite-n shuffled privacy for the one-coordinate contamination experiment.

Under ``Q0 = W(.|i)^n`` the likelihood ratio of the contaminated product
``Q1`` is the average of ``n`` i.i.d. one-user ratios, so every directed
hockey-stick and f-divergence reduces to an expectation under an averaged
scalar law.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import Channel, ScalarLaw, ldp_check, merge_atoms, pairwise_lr_law
from .errors import NotFeasible, TooLarge
from .simplex import AnchoredLaw

MAX_ATOMS = 10**7
SATURATION_TOL = 1e-10
ENVELOPE_TOL = 1e-10
SUPPORT_RTOL = 1e-10


@dataclass(frozen=True, eq=False, repr=False)
class AveragedLaw(ScalarLaw):
    """Law of ``(L_1 + ... + L_n) / n`` for i.i.d. ``L_m``."""

    n: int = 1


def endpoint_law(eps0: float) -> ScalarLaw:
    """Two-point mean-one law on ``{e^-eps0, e^eps0}``; ``delta_1`` at ``eps0 = 0``."""
    if eps0 < 0:
        raise ValueError("eps0 must be nonnegative")
    if eps0 == 0:
        return ScalarLaw([1.0], [1.0])
    a, b = math.exp(-eps0), math.exp(eps0)
    return ScalarLaw([a, b], [(b - 1.0) / (b - a), (1.0 - a) / (b - a)])


def nfold_average(mu: ScalarLaw, n: int, max_atoms: int = MAX_ATOMS) -> AveragedLaw:
    """Exact law of the average of ``n`` i.i.d. copies of ``mu``.

    Raises:
        TooLarge: if the worst-case support ``C(n+k-1, k-1)`` exceeds ``max_atoms``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    k = mu.size
    if math.comb(n + k - 1, k - 1) > max_atoms:
        raise TooLarge(f"support of the {n}-fold average may reach C({n + k - 1}, {k - 1}) atoms")
    v, w = np.asarray(mu.values), np.asarray(mu.weights)
    sv, sw = v.copy(), w.copy()
    for _ in range(n - 1):
        sv, sw = merge_atoms((sv[:, None] + v[None, :]).ravel(), (sw[:, None] * w[None, :]).ravel())
    sw = sw / sw.sum()
    return AveragedLaw(sv / n, sw, n=n)


def default_alphas(eps0: float, n: int, num: int = 25) -> np.ndarray:
    """Log-spaced grid on ``[1, e^(eps0 n)]``."""
    if eps0 == 0:
        return np.array([1.0])
    return np.geomspace(1.0, math.exp(eps0 * n), num)


def _xlogx(t):
    t = np.asarray(t, dtype=float)
    return np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)), 0.0)


EXTRAS = {
    "kl": _xlogx,
    "chi2": lambda t: (t - 1.0) ** 2,
    "tv": lambda t: 0.5 * np.abs(t - 1.0),
}


@dataclass(frozen=True, eq=False)
class DivergenceProfile:
    """Directed hockey-stick profiles on an ``alpha`` grid plus f-divergences.

    ``forward[a] = H_alpha(Q1, Q0)`` and ``reverse[a] = H_alpha(Q0, Q1)``;
    ``extras`` holds ``D_f(Q1 || Q0)`` for the named generators.
    """

    alphas: np.ndarray
    forward: np.ndarray
    reverse: np.ndarray
    extras: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            **self.meta,
            "extras": {k: float(v) for k, v in self.extras.items()},
            "alphas": [float(a) for a in self.alphas],
            "forward": [float(v) for v in self.forward],
            "reverse": [float(v) for v in self.reverse],
        }

    def to_csv(self) -> str:
        """CSV with a one-line ``#``-prefixed JSON header."""
        buf = io.StringIO()
        head = {**self.meta, "extras": {k: float(v) for k, v in self.extras.items()}}
        buf.write("# " + json.dumps(head, sort_keys=True) + "\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["alpha", "forward", "reverse"])
        for a, f, r in zip(self.alphas, self.forward, self.reverse):
            wr.writerow([repr(float(a)), repr(float(f)), repr(float(r))])
        return buf.getvalue()


def divergence_profile(law: ScalarLaw, alphas) -> DivergenceProfile:
    """Profiles of a mean-one likelihood-ratio law ``L`` under ``Q0``."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    v, w = np.asarray(law.values), np.asarray(law.weights)
    fwd = np.clip(v[None, :] - alphas[:, None], 0.0, None) @ w
    rev = np.clip(1.0 - alphas[:, None] * v[None, :], 0.0, None) @ w
    extras = {name: float(w @ f(v)) for name, f in EXTRAS.items()}
    meta = {"n": int(getattr(law, "n", 1))}
    return DivergenceProfile(alphas, fwd, rev, extras, meta)


def envelope(eps0: float, n: int, alphas=None) -> DivergenceProfile:
    """Profile of binary randomized response after shuffling ``n`` users."""
    if alphas is None:
        alphas = default_alphas(eps0, n)
    prof = divergence_profile(nfold_average(endpoint_law(eps0), n), alphas)
    prof.meta.update(eps0=float(eps0), n=int(n))
    return prof


@dataclass(frozen=True)
class PairSlack:
    i: int
    j: int
    forward: float
    reverse: float


@dataclass(frozen=True)
class EnvelopeReport:
    eps0: float
    n: int
    alphas: np.ndarray
    pairs: list
    min_slack: float
    passed: bool

    def __bool__(self):
        return self.passed

    def to_json(self) -> dict:
        return {
            "eps0": self.eps0,
            "n": self.n,
            "alphas": [float(a) for a in self.alphas],
            "min_slack": self.min_slack,
            "passed": self.passed,
            "pairs": [
                {"i": p.i, "j": p.j, "forward_slack": p.forward, "reverse_slack": p.reverse} for p in self.pairs
            ],
        }


def pair_profile(rho: AnchoredLaw, i: int, j: int, n: int, alphas) -> DivergenceProfile:
    return divergence_profile(nfold_average(pairwise_lr_law(rho, i, j), n), alphas)


def envelope_check(rho: AnchoredLaw, eps0: float, n: int, alphas=None, tol: float = ENVELOPE_TOL) -> EnvelopeReport:
    """Compare every ordered row pair of ``rho`` with the shuffled BRR envelope.

    Raises:
        NotFeasible: if ``rho`` is not ``eps0``-LDP.
    """
    if not ldp_check(rho, eps0):
        raise NotFeasible(f"law is not {eps0}-LDP")
    if alphas is None:
        alphas = default_alphas(eps0, n)
    env = envelope(eps0, n, alphas)
    pairs = []
    for i, j in itertools.permutations(range(rho.d), 2):
        p = pair_profile(rho, i, j, n, alphas)
        pairs.append(
            PairSlack(i, j, float((env.forward - p.forward).min()), float((env.reverse - p.reverse).min()))
        )
    lo = min(min(p.forward, p.reverse) for p in pairs)
    return EnvelopeReport(float(eps0), int(n), np.asarray(alphas), pairs, lo, bool(lo >= -tol))


@dataclass(frozen=True)
class RigidityVerdict:
    """Grid-level comparison of an averaged law with the shuffled endpoint law.

    ``status`` is ``"SATURATED"``, ``"GAP"`` or ``"INCONSISTENT"``.  A grid can
    only under-approximate saturation at every ``alpha``.
    """

    status: str
    alpha: float | None = None
    size: float = 0.0
    direction: str | None = None
    forward_gap: np.ndarray | None = None
    reverse_gap: np.ndarray | None = None

    def __str__(self):
        if self.status == "GAP":
            return f"GAP(alpha={self.alpha:.6g}, size={self.size:.6g}, {self.direction})"
        return self.status


def rigidity_probe(mu: ScalarLaw, eps0: float, n: int, alphas=None, tol: float = SATURATION_TOL) -> RigidityVerdict:
    """Look for a grid point where ``mu`` falls strictly below the envelope.

    Raises:
        NotFeasible: if ``mu`` leaves ``[e^-eps0, e^eps0]`` or has mean other than 1.
    """
    a, b = math.exp(-eps0), math.exp(eps0)
    v = np.asarray(mu.values)
    if v.min() < a * (1 - SUPPORT_RTOL) or v.max() > b * (1 + SUPPORT_RTOL):
        raise NotFeasible(f"support [{v.min():.6g}, {v.max():.6g}] leaves [{a:.6g}, {b:.6g}]")
    if abs(mu.mean() - 1.0) > 1e-10:
        raise NotFeasible(f"law has mean {mu.mean():.12g}, expected 1")
    if alphas is None:
        alphas = default_alphas(eps0, n)
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    env = envelope(eps0, n, alphas)
    got = divergence_profile(nfold_average(mu, n), alphas)
    fg = env.forward - got.forward
    rg = env.reverse - got.reverse
    kf, kr = int(np.argmax(np.abs(fg))), int(np.argmax(np.abs(rg)))
    if max(abs(fg[kf]), abs(rg[kr])) < tol:
        star = endpoint_law(eps0)
        same = mu.size == star.size and np.allclose(mu.values, star.values, atol=1e-9) and np.allclose(
            mu.weights, star.weights, atol=1e-9
        )
        return RigidityVerdict("SATURATED" if same else "INCONSISTENT", forward_gap=fg, reverse_gap=rg)
    if abs(fg[kf]) >= abs(rg[kr]):
        return RigidityVerdict("GAP", float(alphas[kf]), float(fg[kf]), "forward", fg, rg)
    return RigidityVerdict("GAP", float(alphas[kr]), float(rg[kr]), "reverse", fg, rg)


def _histograms(K: int, n: int) -> np.ndarray:
    """All count vectors of length ``K`` summing to ``n``."""
    rows = []
    for combo in itertools.combinations_with_replacement(range(K), n):
        rows.append(np.bincount(combo, minlength=K))
    return np.array(rows, dtype=np.int64).reshape(-1, K)


def brute_force_shuffle(W: Channel, i: int, j: int, n: int, alphas, max_outcomes: int = MAX_ATOMS) -> DivergenceProfile:
    """Directed profiles from an explicit enumeration of shuffled outputs.

    The histogram of the ``n`` messages is sufficient, so ``Q0`` is the
    multinomial law under row ``i`` and ``Q1`` replaces one draw by row ``j``.

    Raises:
        TooLarge: if ``K^n`` exceeds ``max_outcomes``.
    """
    if not isinstance(W, Channel):
        W = Channel(W)
    K = W.K
    if K**n > max_outcomes:
        raise TooLarge(f"K^n = {K}^{n} exceeds {max_outcomes}")
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    p, q = W.W[i], W.W[j]
    H = _histograms(K, n)
    fact = np.array([math.factorial(c) for c in range(n + 1)], dtype=float)
    mult = math.factorial(n) / fact[H].prod(axis=1)
    Q0 = mult * (p[None, :] ** H).prod(axis=1)
    Q1 = np.zeros(len(H))
    for y in range(K):
        Hy = H.copy()
        Hy[:, y] -= 1
        ok = Hy[:, y] >= 0
        Hy[~ok, y] = 0
        # multinomial(n-1; h - e_y) = multinomial(n; h) h_y / n
        Q1 += np.where(ok, q[y] * mult * H[:, y] / n * (p[None, :] ** Hy).prod(axis=1), 0.0)
    fwd = np.clip(Q1[None, :] - alphas[:, None] * Q0[None, :], 0.0, None).sum(axis=1)
    rev = np.clip(Q0[None, :] - alphas[:, None] * Q1[None, :], 0.0, None).sum(axis=1)
    pos = Q0 > 0
    if (Q1[~pos] > 0).any():
        extras = {name: math.inf for name in EXTRAS}
        extras["tv"] = float(0.5 * np.abs(Q1 - Q0).sum())
    else:
        L = Q1[pos] / Q0[pos]
        extras = {name: float(Q0[pos] @ f(L)) for name, f in EXTRAS.items()}
    return DivergenceProfile(alphas, fwd, rev, extras, {"n": int(n), "i": int(i), "j": int(j)})
