"""Coordinatewise van Trees lower bounds with a product quartic prior.

Each of the ``m = d - 1`` coordinates of ``u`` (with ``theta = 1/d + H u``)
gets the prior density ``phi(t / r) / r`` where ``phi(t) = 15/16 (1 - t^2)^2``
on ``[-1, 1]``.  The Bayes risk of any estimator is then at least
``m^2 / (E tr I(u) + J)`` with ``J = m J0 / r^2``.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy import integrate
from scipy.special import roots_legendre

from .design import finite_n_optimum
from .errors import InvalidParameter
from .simplex import AnchoredLaw, SimplexBasis, build_basis


def quartic_density(t):
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) < 1, 15.0 / 16.0 * (1.0 - t * t) ** 2, 0.0)


def quartic_derivative(t):
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) < 1, -15.0 / 4.0 * t * (1.0 - t * t), 0.0)


def location_information(density=quartic_density, derivative=quartic_derivative, tol: float = 1e-10) -> float:
    """``J0 = int phi'^2 / phi`` over ``(-1, 1)`` by adaptive quadrature."""
    def integrand(t):
        p = float(density(t))
        return float(derivative(t)) ** 2 / p if p > 0 else 0.0

    val, _ = integrate.quad(integrand, -1.0, 1.0, epsabs=tol, epsrel=tol, limit=200)
    return val


@functools.lru_cache(maxsize=None)
def _j0() -> float:
    return location_information()


def vt_prior_info(m: int, r: float) -> float:
    """Prior information ``J = m J0 / r^2`` of the product prior of half-width ``r``."""
    if m < 1:
        raise InvalidParameter("m must be at least 1")
    if not r > 0:
        raise InvalidParameter("prior radius must be positive")
    return m * _j0() / r**2


def vantrees_bound(m: int, fisher_trace: float, prior_info: float) -> float:
    """``m^2 / (E tr I + J)``.

    Raises:
        InvalidParameter: if the denominator is not positive.
    """
    den = fisher_trace + prior_info
    if not den > 0:
        raise InvalidParameter("van Trees denominator must be positive")
    return m * m / den


def max_prior_radius(basis: SimplexBasis) -> float:
    """Largest half-width keeping the prior box inside the composition simplex.

    ``theta_i = 1/d + gamma_i . u`` stays nonnegative on the box when
    ``r |gamma_i|_1 <= 1/d`` for every ``i``.
    """
    return (1.0 / basis.d) / float(np.abs(basis.gamma).sum(axis=1).max())


def fisher_trace_integral(rho: AnchoredLaw, n: int, r: float, nodes: int = 40) -> float:
    """``E tr I(u)`` under the product prior, ``I(u) = n int x x' / (1 + u.x) drho``.

    Tensor Gauss-Legendre quadrature in ``u``; the integrand is smooth on the
    box when the box lies inside the simplex.
    """
    m = rho.d - 1
    if nodes**m > 5_000_000:
        raise InvalidParameter(f"tensor quadrature with {nodes}^{m} nodes is too large")
    if r > max_prior_radius(rho.basis) * (1 + 1e-12):
        raise InvalidParameter("prior box leaves the composition simplex")
    t, wt = roots_legendre(nodes)
    wt = wt * quartic_density(t)
    U = np.stack(np.meshgrid(*([r * t] * m), indexing="ij"), axis=-1).reshape(-1, m)
    W = np.ones(1)
    for _ in range(m):
        W = np.outer(W, wt).ravel()
    X = rho.points
    sq = (X * X).sum(axis=1)
    tilt = 1.0 + U @ X.T  # (nodes^m, K)
    per_u = (rho.weights * sq / tilt).sum(axis=1)
    return float(n * (W @ per_u) / W.sum())


def lowbudget_bound(d: int, C: float, n: int, r: float | None = None, nodes: int = 40, basis: SimplexBasis | None = None):
    """Van Trees bound for the optimal low-budget law against its exact risk.

    Uses the prior radius ``r = (n C)^(-1/4)`` unless given.

    Returns:
        dict with the bound, the closed-form optimum and their ratio.
    """
    basis = basis or build_basis(d)
    opt = finite_n_optimum(d, C, n, basis)
    if r is None:
        r = (n * C) ** -0.25
    m = d - 1
    fisher = fisher_trace_integral(opt.law, n, r, nodes)
    J = vt_prior_info(m, r)
    bound = vantrees_bound(m, fisher, J)
    return {
        "d": d,
        "C": C,
        "n": n,
        "r": r,
        "r_max": max_prior_radius(basis),
        "fisher_trace": fisher,
        "prior_info": J,
        "bound": bound,
        "optimum": opt.iid,
        "ratio": bound / opt.iid,
    }
