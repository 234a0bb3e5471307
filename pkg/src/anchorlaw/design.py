"""Covariance, Fisher objects, canonical risks and the chi* budget.

The canonical estimator is ``theta_hat = 1/d + H Sigma^{-1} Xbar``.  Writing
``q_k = x_k' Sigma^{-2} x_k`` for atom ``k``, both exact risks reduce to

    n R_fc(theta)  = sum_k w_k (theta . a_k) q_k - (d - 1) / d
    n R_iid(theta) = sum_k w_k (theta . a_k) q_k - |theta - 1/d|^2

so the fixed-composition risk is affine in ``theta`` and the i.i.d. risk is
concave.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import check_composition
from .errors import InvalidComposition, InvalidDimension, InvalidParameter, OutOfRegime, SingularCovariance
from .simplex import AnchoredLaw, SimplexBasis, build_basis

EIG_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class MomentStats:
    """Second-moment objects of an anchored law.

    Attributes:
        sigma: ``Sigma = sum_k w_k x_k x_k'`` in the law's basis.
        b_rows: ``B_i = sum_k w_k a_k[i] x_k x_k'`` for each row ``i``.
        trace: ``tr Sigma``.
        min_eig: Smallest eigenvalue of ``Sigma``.
        singular: ``min_eig < 1e-12``.
    """

    sigma: np.ndarray
    b_rows: np.ndarray
    trace: float
    min_eig: float
    singular: bool


def moment_stats(rho: AnchoredLaw) -> MomentStats:
    X = rho.points
    w = rho.weights
    sigma = X.T @ (w[:, None] * X)
    sigma = 0.5 * (sigma + sigma.T)
    WA = w[:, None] * rho.templates
    B = np.einsum("ki,ka,kb->iab", WA, X, X)
    # trace from templates is basis-free and exact: |x|^2 = |a|^2 - d
    trace = math.fsum(w * ((rho.templates**2).sum(axis=1) - rho.d))
    ev = np.linalg.eigvalsh(sigma)
    return MomentStats(sigma, B, trace, float(ev[0]), bool(ev[0] < EIG_FLOOR))


def _inverse(sigma: np.ndarray):
    """Symmetric inverse, or ``None`` below the eigenvalue floor."""
    ev, V = np.linalg.eigh(sigma)
    if ev[0] < EIG_FLOOR:
        return None
    return (V / ev) @ V.T


def atom_scores(rho: AnchoredLaw):
    """``q_k = x_k' Sigma^{-2} x_k`` for every atom, or ``None`` if singular."""
    X = rho.points
    inv = _inverse(X.T @ (rho.weights[:, None] * X))
    if inv is None:
        return None
    Z = X @ inv
    return (Z * Z).sum(axis=1)


@dataclass(frozen=True, eq=False)
class ChiStar:
    """``chi* = max_{i != j} chi_ij`` with the pairwise matrix; may be ``inf``."""

    value: float
    matrix: np.ndarray
    pair: tuple

    def __float__(self):
        return self.value


def chi_star(rho: AnchoredLaw) -> ChiStar:
    """Pairwise chi-square budgets ``chi_ij = sum_k w_k (a_j - a_i)^2 / a_i``.

    Terms with ``a_i = a_j = 0`` count as 0 and terms with ``a_i = 0 < a_j`` as
    ``+inf``.
    """
    T = rho.templates
    w = rho.weights
    pos = T > 0
    inv = np.where(pos, w[:, None] / np.where(pos, T, 1.0), 0.0)
    # expand (a_j - a_i)^2 / a_i = a_j^2 / a_i - 2 a_j + a_i over atoms with a_i > 0
    M = inv.T @ T**2
    lin = (w[:, None] * pos).T @ T  # sum over a_i > 0 of w a_j
    own = (w[:, None] * T).sum(axis=0)
    chi = M - 2.0 * lin + own[:, None]
    sing = ((~pos).astype(float) * w[:, None]).T @ pos.astype(float) > 0
    chi = np.where(sing, np.inf, np.maximum(chi, 0.0))
    np.fill_diagonal(chi, 0.0)
    d = rho.d
    off = chi + np.diag(np.full(d, -np.inf))
    i, j = np.unravel_index(int(np.argmax(off)), off.shape)
    return ChiStar(float(off[i, j]), chi, (int(i), int(j)))


def _check_n(n):
    if n < 1:
        raise InvalidParameter("n must be at least 1")


def _risk_core(rho: AnchoredLaw, theta: np.ndarray):
    q = atom_scores(rho)
    if q is None:
        return None
    # compensated sum: large orbit laws have ~10^5 atoms
    return math.fsum(rho.weights * (rho.templates @ theta) * q)


def risk_fc(rho: AnchoredLaw, theta, n: int, check_counts: bool = True) -> float:
    """Exact fixed-composition risk of the canonical estimator; ``inf`` if singular.

    Raises:
        InvalidComposition: if ``theta`` is not a composition or ``n theta`` is
            not integer-valued (when ``check_counts``).
    """
    _check_n(n)
    theta = check_composition(theta, rho.d)
    if check_counts and np.abs(n * theta - np.round(n * theta)).max() > 1e-9:
        raise InvalidComposition("fixed composition needs integer counts n * theta")
    core = _risk_core(rho, theta)
    if core is None:
        return math.inf
    return (core - (rho.d - 1) / rho.d) / n


def risk_iid(rho: AnchoredLaw, theta, n: int) -> float:
    """Exact i.i.d. risk of the canonical estimator; ``inf`` if singular."""
    _check_n(n)
    theta = check_composition(theta, rho.d)
    core = _risk_core(rho, theta)
    if core is None:
        return math.inf
    u = theta - 1.0 / rho.d
    return (core - float(u @ u)) / n


def worst_risk_fc(rho: AnchoredLaw, n: int):
    """Maximum fixed-composition risk, attained at a vertex. Returns ``(value, i)``."""
    _check_n(n)
    q = atom_scores(rho)
    if q is None:
        return math.inf, 0
    per_vertex = (rho.weights * q) @ rho.templates
    i = int(np.argmax(per_vertex))
    return float((per_vertex[i] - (rho.d - 1) / rho.d) / n), i


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(v) + 1)
    r = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[r] / (r + 1), 0.0)


def worst_risk_iid(rho: AnchoredLaw, n: int):
    """Exact maximum of the i.i.d. risk over compositions. Returns ``(value, theta)``.

    The risk is ``g . theta - |theta - 1/d|^2`` up to ``1/n`` with
    ``g_i = sum_k w_k q_k a_k[i]``, so the maximizer is the projection of
    ``1/d + g/2`` onto the simplex.
    """
    _check_n(n)
    d = rho.d
    q = atom_scores(rho)
    if q is None:
        return math.inf, np.full(d, 1.0 / d)
    g = (rho.weights * q) @ rho.templates
    theta = project_simplex(1.0 / d + g / 2.0)
    u = theta - 1.0 / d
    return float((g @ theta - u @ u) / n), theta


def composition_grid(d: int, resolution: int) -> np.ndarray:
    """All compositions with coordinates in ``{0, 1/r, ..., 1}``."""
    rows = []

    def rec(prefix, left, slots):
        if slots == 1:
            rows.append(prefix + [left])
            return
        for c in range(left + 1):
            rec(prefix + [c], left - c, slots - 1)

    rec([], resolution, d)
    return np.array(rows, dtype=float) / resolution


def worst_risk_iid_grid(rho: AnchoredLaw, n: int, resolution: int = 50):
    """Grid lower estimate of the worst i.i.d. risk. Returns ``(value, theta)``."""
    _check_n(n)
    G = composition_grid(rho.d, resolution)
    q = atom_scores(rho)
    if q is None:
        return math.inf, G[0]
    g = (rho.weights * q) @ rho.templates
    U = G - 1.0 / rho.d
    vals = (G @ g - (U * U).sum(axis=1)) / n
    k = int(np.argmax(vals))
    return float(vals[k]), G[k]


def canonical_estimate(rho: AnchoredLaw, xbar: np.ndarray) -> np.ndarray:
    inv = _inverse(moment_stats(rho).sigma)
    if inv is None:
        raise SingularCovariance("Sigma is singular; the canonical estimator is undefined")
    return 1.0 / rho.d + rho.basis.H @ (inv @ xbar)


def simulate_risk(
    rho: AnchoredLaw,
    theta,
    n: int,
    samples: int,
    seed: int,
    mode: str = "iid",
    chunk: int = 200_000,
):
    """Monte Carlo mean squared error of the canonical estimator.

    Returns:
        ``(mean, standard_error)`` over ``samples`` independent experiments.

    Raises:
        SingularCovariance: if ``Sigma`` is singular.
    """
    _check_n(n)
    theta = check_composition(theta, rho.d)
    inv = _inverse(moment_stats(rho).sigma)
    if inv is None:
        raise SingularCovariance("Sigma is singular; the canonical estimator is undefined")
    if mode not in ("iid", "fc"):
        raise InvalidParameter(f"unknown sampling mode {mode!r}")
    rng = np.random.default_rng(seed)
    X = rho.points
    Z = X @ inv  # rows Sigma^{-1} x_k
    h = rho.basis.H.T @ (theta - 1.0 / rho.d)
    rows = (rho.weights[:, None] * rho.templates).T  # row i law over atoms
    rows = rows / rows.sum(axis=1, keepdims=True)
    if mode == "fc":
        counts_i = np.round(n * theta).astype(int)
        if counts_i.sum() != n or np.abs(n * theta - counts_i).max() > 1e-9:
            raise InvalidComposition("fixed composition needs integer counts n * theta")
    else:
        q = rows.T @ theta
        q = q / q.sum()
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        if mode == "iid":
            C = rng.multinomial(n, q, size=m)
        else:
            C = np.zeros((m, rho.size), dtype=np.int64)
            for i, c in enumerate(counts_i):
                if c:
                    C += rng.multinomial(c, rows[i], size=m)
        err = C @ Z / n - h
        e = (err * err).sum(axis=1)
        total += e.sum()
        total_sq += (e * e).sum()
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return float(mean), float(math.sqrt(var / samples))


# -- augmented randomized response and the low-budget regime -------------------

def t_lambda(d: int, lam: float) -> float:
    return d * (lam - 1.0) / (d + lam - 1.0)


def c_one(d: int, lam: float) -> float:
    """``chi*`` of singleton randomized response: ``(l-1)^2 (l+1) / (l (d+l-1))``."""
    return (lam - 1.0) ** 2 * (lam + 1.0) / (lam * (d + lam - 1.0))


def lambda_star(d: int) -> float:
    return math.sqrt(d - 1)


def c_star(d: int) -> float:
    """End of the low-budget regime, ``C_1(sqrt(d-1))``."""
    return c_one(d, lambda_star(d))


def augmented_rr_trace(d: int, p: float, lam: float) -> float:
    return p * d * (lam - 1.0) ** 2 / (d + lam - 1.0) ** 2 * (d - 1)


def augmented_rr(d: int, p: float, lam: float, basis: SimplexBasis | None = None) -> AnchoredLaw:
    """Mass ``1 - p`` at the center and ``p/d`` on each singleton template.

    The singleton template has ``lam * beta`` on one coordinate and ``beta``
    elsewhere, ``beta = d / (d + lam - 1)``.

    Raises:
        InvalidParameter: if ``lam <= 1`` or ``p`` is outside ``[0, 1]``.
    """
    if not lam > 1:
        raise InvalidParameter("lambda must exceed 1")
    if not 0 <= p <= 1:
        raise InvalidParameter("p must lie in [0, 1]")
    if d < 2:
        raise InvalidDimension("d must be at least 2")
    beta = d / (d + lam - 1.0)
    T = np.full((d + 1, d), beta)
    T[np.arange(d), np.arange(d)] = lam * beta
    T[d] = 1.0
    w = np.r_[np.full(d, p / d), 1.0 - p]
    return AnchoredLaw(w, T, basis)


def trace_cap_constant(d: int) -> float:
    """``K_d = d (d-1) / (d + 2 sqrt(d-1))``."""
    if d < 3:
        raise InvalidDimension("the trace cap needs d >= 3")
    return d * (d - 1) / (d + 2.0 * math.sqrt(d - 1))


def trace_cap(d: int, C: float) -> float:
    if C < 0:
        raise InvalidParameter("budget must be nonnegative")
    return trace_cap_constant(d) * C


def trace_cap_check(rho: AnchoredLaw) -> float:
    """Slack ``K_d chi*(rho) - tr Sigma(rho)``; nonnegative for every law."""
    return trace_cap_constant(rho.d) * chi_star(rho).value - moment_stats(rho).trace


@dataclass(frozen=True, eq=False)
class FiniteNOptimum:
    d: int
    C: float
    n: int
    iid: float
    fc: float
    p: float
    law: AnchoredLaw


def finite_n_optimum(d: int, C: float, n: int, basis: SimplexBasis | None = None) -> FiniteNOptimum:
    """Exact canonical optimum under ``chi* <= C`` for ``C <= C*(d)``.

    Raises:
        OutOfRegime: if ``C > C*(d)``; use the frontier instead.
    """
    if d < 3:
        raise InvalidDimension("the low-budget optimum needs d >= 3")
    if not C > 0:
        raise InvalidParameter("budget must be positive")
    _check_n(n)
    cs = c_star(d)
    if C > cs * (1.0 + 1e-12):
        raise OutOfRegime(f"C = {C} exceeds C*({d}) = {cs:.10g}; use the frontier")
    iid = (d - 1) * (d + 2.0 * math.sqrt(d - 1)) / (n * d * C)
    fc = iid - (d - 1) / (n * d)
    p = min(C / cs, 1.0)
    law = augmented_rr(d, p, lambda_star(d), basis or build_basis(d))
    return FiniteNOptimum(d, float(C), int(n), iid, fc, p, law)
