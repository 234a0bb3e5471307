"""Seeded random generators for laws, channels and scalar likelihood-ratio laws."""

from __future__ import annotations

import math

import numpy as np

from .channel import Channel, ScalarLaw, reconstruct
from .simplex import AnchoredLaw, SimplexBasis


def _capped_templates(d: int, k: int, lam: float, rng: np.random.Generator) -> np.ndarray:
    """Templates with every coordinate ratio at most ``lam``."""
    E = np.exp(rng.uniform(0.0, math.log(lam), size=(k, d)))
    # push some rows onto the cap so the extremes get exercised
    hit = rng.random(k) < 0.5
    E[hit, np.argmax(E[hit], axis=1)] = E[hit].min(axis=1) * lam
    return d * E / E.sum(axis=1, keepdims=True)


def _ratio_ok(b: np.ndarray, lam: float | None) -> bool:
    if b.min() < 0:
        return False
    if lam is None:
        return True
    return b.max() <= lam * b.min() * (1 + 1e-12)


def _balance(w: np.ndarray, T: np.ndarray, lam: float | None, rng: np.random.Generator):
    """Append one atom ``b = (1 - t m) / (1 - t)`` so the mixture is mean-zero.

    ``m = w @ T``; ``t`` is a random fraction of the largest feasible value,
    found by bisection since the feasible ``t`` form an interval around 0.
    """
    m = w @ T
    lo, hi = 0.0, 1.0 / m.max()
    if not _ratio_ok((1 - hi * m) / (1 - hi) if hi < 1 else np.ones_like(m), lam):
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if _ratio_ok((1 - mid * m) / (1 - mid), lam):
                lo = mid
            else:
                hi = mid
        tmax = lo
    else:
        tmax = hi
    t = min(tmax * rng.uniform(0.3, 1.0), 1 - 1e-9)
    b = (1.0 - t * m) / (1.0 - t)
    return np.r_[t * w, 1.0 - t], np.vstack([T, b])


def random_law(
    d: int,
    k: int,
    rng: np.random.Generator,
    eps0: float | None = None,
    basis: SimplexBasis | None = None,
    concentration: float = 1.0,
) -> AnchoredLaw:
    """Random anchored law with about ``k`` atoms.

    With ``eps0`` every template satisfies ``a_i <= e^eps0 a_j``.
    """
    k1 = max(k - 1, 1)
    if eps0 is None:
        T = rng.dirichlet(np.full(d, concentration), size=k1) * d
        lam = None
    else:
        lam = math.exp(eps0)
        T = _capped_templates(d, k1, lam, rng)
    w = rng.dirichlet(np.ones(k1))
    w, T = _balance(w, T, lam, rng)
    return AnchoredLaw(w, T, basis)


def random_channel(d: int, K: int, rng: np.random.Generator, eps0: float | None = None) -> Channel:
    """Random channel; with ``eps0`` it is built from a capped law so it is ``eps0``-LDP."""
    if eps0 is None:
        return Channel(rng.dirichlet(np.ones(K), size=d))
    return reconstruct(random_law(d, K, rng, eps0=eps0))


def random_feasible_scalar(eps0: float, rng: np.random.Generator, k: int = 3) -> ScalarLaw:
    """Mean-one law on ``[e^-eps0, e^eps0]`` with positive mass strictly inside."""
    a, b = math.exp(-eps0), math.exp(eps0)
    v = np.exp(rng.uniform(-eps0, eps0, size=k))
    w = rng.dirichlet(np.ones(k))
    m = w @ v
    end = a if m > 1 else b
    s = (m - 1.0) / (m - end)
    return ScalarLaw(np.r_[v, end], np.r_[(1 - s) * w, s])


def random_templates(d: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Templates with a random number of distinct levels, some near the boundary."""
    conc = rng.choice([0.1, 0.3, 1.0, 3.0], size=size)
    G = rng.gamma(conc[:, None], size=(size, d))
    G += 1e-300
    return d * G / G.sum(axis=1, keepdims=True)


def random_interior_base(d: int, rng: np.random.Generator, basis: SimplexBasis, floor: float = 0.02) -> np.ndarray:
    theta = floor + (1 - d * floor) * rng.dirichlet(np.ones(d))
    return basis.H.T @ (theta - 1.0 / d)
