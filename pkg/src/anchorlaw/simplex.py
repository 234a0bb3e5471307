"""Regular-simplex gauge, templates and finitely supported anchored laws.

A law is stored by its *template* coordinates ``a = 1 + H x`` (nonnegative,
summing to ``d``); anchored coordinates ``x = H^T (a - 1)`` are derived from
a :class:`SimplexBasis` on demand.  Everything that is a scalar function of
the law (traces, budgets, risks, divergences) is therefore basis-free, while
vector quantities follow whichever basis the law carries.
"""

from __future__ import annotations

import functools
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidDimension, InvalidLaw, OutsidePolytope

logger = logging.getLogger(__name__)

MERGE_TOL = 1e-10
MEMBERSHIP_TOL = 1e-9
MEAN_TOL = 1e-10
WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SimplexBasis:
    """Orthonormal frame ``H`` of the zero-sum subspace of R^d.

    Attributes:
        d: Alphabet size.
        H: ``d x (d-1)`` matrix with orthonormal, zero-sum columns.
    """

    d: int
    H: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        if H.shape != (self.d, self.d - 1):
            raise InvalidDimension(f"H must have shape ({self.d}, {self.d - 1}), got {H.shape}")
        if not np.allclose(H.T @ H, np.eye(self.d - 1), atol=1e-12, rtol=0):
            raise InvalidDimension("columns of H are not orthonormal")
        if not np.allclose(H.sum(axis=0), 0.0, atol=1e-12):
            raise InvalidDimension("columns of H do not sum to zero")
        H.setflags(write=False)
        object.__setattr__(self, "H", H)

    @property
    def m(self) -> int:
        return self.d - 1

    @functools.cached_property
    def gamma(self) -> np.ndarray:
        """Vertex vectors ``gamma_i = H^T e_i`` stacked as rows, shape ``(d, d-1)``."""
        g = self.H.copy()
        g.setflags(write=False)
        return g

    def rotated(self, Q: np.ndarray) -> "SimplexBasis":
        """Return the basis ``H Q`` for an orthogonal ``(d-1) x (d-1)`` matrix ``Q``."""
        return SimplexBasis(self.d, self.H @ Q)


@functools.lru_cache(maxsize=None)
def build_basis(d: int) -> SimplexBasis:
    """Deterministic Helmert basis of the zero-sum subspace.

    Column ``k`` (1-based) is ``(1, ..., 1, -k, 0, ..., 0) / sqrt(k (k + 1))``.
    """
    if int(d) != d or d < 2:
        raise InvalidDimension(f"d must be an integer >= 2, got {d}")
    d = int(d)
    H = np.zeros((d, d - 1))
    for k in range(1, d):
        H[:k, k - 1] = 1.0
        H[k, k - 1] = -float(k)
        H[:, k - 1] /= np.sqrt(k * (k + 1.0))
    return SimplexBasis(d, H)


def random_basis(d: int, rng: np.random.Generator) -> SimplexBasis:
    """A uniformly random orthonormal frame (Helmert frame times a Haar rotation)."""
    base = build_basis(d)
    if d == 2:
        return base.rotated(np.array([[rng.choice([-1.0, 1.0])]]))
    Z = rng.standard_normal((d - 1, d - 1))
    Q, R = np.linalg.qr(Z)
    Q = Q * np.sign(np.diag(R))
    return base.rotated(Q)


def permutation_action(basis: SimplexBasis, perm: Sequence[int]) -> np.ndarray:
    """Matrix ``P = H^T Pi H`` of the coordinate permutation ``perm`` on R^{d-1}.

    ``perm[i]`` is the image of coordinate ``i``: template ``a`` is mapped to
    ``b`` with ``b[perm[i]] = a[i]``.
    """
    d = basis.d
    Pi = np.zeros((d, d))
    Pi[list(perm), np.arange(d)] = 1.0
    return basis.H.T @ Pi @ basis.H


# -- templates ---------------------------------------------------------------

def template_stats(a: np.ndarray):
    """Vectorized ``(A, B, S, C)`` statistics of templates (rows of ``a``).

    ``A = sum 1/a_i`` (``inf`` if a coordinate is zero), ``B = sum a_i^2``,
    ``S = B - d`` and ``C = (A B - d^2) / (d (d - 1))``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    d = a.shape[1]
    with np.errstate(divide="ignore"):
        A = np.where((a <= 0).any(axis=1), np.inf, (1.0 / np.where(a > 0, a, 1.0)).sum(axis=1))
    B = (a * a).sum(axis=1)
    S = B - d
    with np.errstate(invalid="ignore"):
        C = (A * B - d * d) / (d * (d - 1))
    return A, B, S, C


@dataclass(frozen=True, eq=False)
class Template:
    """A point of the template simplex ``{a >= 0, sum a = d}``."""

    a: np.ndarray

    def __post_init__(self):
        a = _clean_template(np.asarray(self.a, dtype=float))
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def d(self) -> int:
        return self.a.shape[0]

    @property
    def A(self) -> float:
        return float(template_stats(self.a)[0][0])

    @property
    def B(self) -> float:
        return float(template_stats(self.a)[1][0])

    @property
    def S(self) -> float:
        return float(template_stats(self.a)[2][0])

    @property
    def C(self) -> float:
        return float(template_stats(self.a)[3][0])


def _clean_template(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    if a.ndim != 1 or a.shape[0] < 2:
        raise InvalidDimension("a template is a vector of length d >= 2")
    d = a.shape[0]
    if abs(a.sum() - d) > 1e-9:
        raise OutsidePolytope(f"template coordinates sum to {a.sum():.12g}, expected {d}")
    if (a < -MEMBERSHIP_TOL).any():
        raise OutsidePolytope(f"negative template coordinate {a.min():.12g}")
    a[a < 0] = 0.0
    return a


def to_template(x, basis: SimplexBasis) -> np.ndarray:
    """Template ``a = 1 + H x`` of an anchored point."""
    x = np.asarray(x, dtype=float).reshape(basis.m)
    a = 1.0 + basis.H @ x
    if (a < -MEMBERSHIP_TOL).any():
        raise OutsidePolytope(f"point lies outside the simplex polytope (min coordinate {a.min():.3g})")
    a[a < 0] = 0.0
    return a


def from_template(a, basis: SimplexBasis) -> np.ndarray:
    """Anchored point ``x = H^T (a - 1)`` of a template."""
    a = _clean_template(a)
    if a.shape[0] != basis.d:
        raise InvalidDimension("template length does not match the basis")
    return basis.H.T @ (a - 1.0)


# -- laws ----------------------------------------------------------------------

def _canonicalize(weights: np.ndarray, templates: np.ndarray, tol: float = MERGE_TOL):
    """Merge atoms closer than ``tol`` (max norm) and sort lexicographically."""
    if len(weights) == 0:
        return weights, templates
    keys = np.round(templates / tol)
    order = np.lexsort(keys.T[::-1])
    T = templates[order]
    w = weights[order]
    if len(w) == 1:
        return w, T
    jump = np.abs(np.diff(T, axis=0)).max(axis=1) >= tol
    group = np.concatenate([[0], np.cumsum(jump)])
    n_groups = group[-1] + 1
    if n_groups == len(w):
        return w, T
    W = np.bincount(group, weights=w, minlength=n_groups)
    merged = np.zeros((n_groups, T.shape[1]))
    np.add.at(merged, group, w[:, None] * T)
    merged /= W[:, None]
    return W, merged


@dataclass(frozen=True, eq=False)
class AnchoredLaw:
    """Finitely supported mean-zero law on the simplex polytope.

    Construction merges atoms whose templates agree within ``1e-10`` and sorts
    the atoms lexicographically by template, so two equal laws have identical
    arrays.  Zero-weight atoms are dropped.

    Attributes:
        weights: Atom probabilities, shape ``(K,)``.
        templates: Atom templates, shape ``(K, d)``.
        basis: Frame used for anchored coordinates.
    """

    weights: np.ndarray
    templates: np.ndarray
    basis: SimplexBasis = field(default=None)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        T = np.array(self.templates, dtype=float)
        if T.ndim != 2 or T.shape[0] != w.shape[0]:
            raise InvalidLaw("templates must be a (K, d) array matching the weights")
        d = T.shape[1]
        basis = self.basis if self.basis is not None else build_basis(d)
        if basis.d != d:
            raise InvalidDimension(f"basis is for d={basis.d}, templates have d={d}")
        if (w < 0).any():
            raise InvalidLaw("weights must be nonnegative")
        keep = w > 0
        w, T = w[keep], T[keep]
        if len(w) == 0:
            raise InvalidLaw("a law needs at least one atom with positive weight")
        if abs(w.sum() - 1.0) > WEIGHT_TOL * max(1.0, np.sqrt(len(w))):
            raise InvalidLaw(f"weights sum to {w.sum():.12g}, expected 1")
        if np.abs(T.sum(axis=1) - d).max() > 1e-9:
            raise OutsidePolytope("template coordinates must sum to d")
        if T.min() < -MEMBERSHIP_TOL:
            raise OutsidePolytope(f"negative template coordinate {T.min():.12g}")
        T[T < 0] = 0.0
        resid = np.abs(w @ T - 1.0).max()
        if resid > MEAN_TOL:
            raise InvalidLaw(f"law is not mean-zero (template mean residual {resid:.3g})")
        w, T = _canonicalize(w, T)
        w.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "templates", T)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def from_points(cls, weights, points, basis: SimplexBasis) -> "AnchoredLaw":
        """Build a law from anchored coordinates in ``basis``."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if P.shape[1] != basis.m:
            raise InvalidDimension(f"points must have {basis.m} coordinates")
        T = 1.0 + P @ basis.H.T
        return cls(weights, T, basis)

    @property
    def d(self) -> int:
        return self.templates.shape[1]

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @functools.cached_property
    def points(self) -> np.ndarray:
        """Anchored coordinates ``x_k = H^T (a_k - 1)``, shape ``(K, d-1)``."""
        return (self.templates - 1.0) @ self.basis.H

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def with_basis(self, basis: SimplexBasis) -> "AnchoredLaw":
        return AnchoredLaw(self.weights, self.templates, basis)

    def mix(self, other: "AnchoredLaw", t: float) -> "AnchoredLaw":
        """The mixture ``t * self + (1 - t) * other``."""
        if other.d != self.d:
            raise InvalidDimension("cannot mix laws of different dimension")
        w = np.concatenate([t * self.weights, (1.0 - t) * other.weights])
        T = np.vstack([self.templates, other.templates])
        return AnchoredLaw(w, T, self.basis)

    def allclose(self, other: "AnchoredLaw", atol: float = 1e-10) -> bool:
        """Atomwise comparison of two canonical laws."""
        if self.d != other.d or self.size != other.size:
            return False
        return bool(
            np.allclose(self.weights, other.weights, atol=atol, rtol=0)
            and np.allclose(self.templates, other.templates, atol=atol, rtol=0)
        )

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "atoms": [{"w": float(w), "a": [float(v) for v in a]} for w, a in zip(self.weights, self.templates)],
        }

    @classmethod
    def from_json(cls, obj: dict, basis: SimplexBasis | None = None) -> "AnchoredLaw":
        try:
            d = int(obj["d"])
            atoms = obj["atoms"]
            w = [float(at["w"]) for at in atoms]
            T = [[float(v) for v in at["a"]] for at in atoms]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidLaw(f"malformed law JSON: {exc}") from exc
        T = np.array(T, dtype=float).reshape(len(w), -1)
        if T.shape[1] != d:
            raise InvalidLaw("atom template length differs from d")
        return cls(w, T, basis)

    def __repr__(self):
        return f"AnchoredLaw(d={self.d}, atoms={self.size})"


def dirac_center(d: int, basis: SimplexBasis | None = None) -> AnchoredLaw:
    """The null law concentrated at the origin (all-rows-equal channel)."""
    return AnchoredLaw([1.0], np.ones((1, d)), basis)


def _levels(a: np.ndarray, tol: float):
    vals = np.sort(a)[::-1]
    levels, counts = [vals[0]], [1]
    for v in vals[1:]:
        if levels[-1] - v < tol:
            counts[-1] += 1
        else:
            levels.append(v)
            counts.append(1)
    return levels, counts


def distinct_permutations(a, tol: float = MERGE_TOL) -> np.ndarray:
    """All distinct coordinate permutations of ``a`` (coordinates equal within ``tol`` are tied)."""
    a = np.asarray(a, dtype=float)
    d = a.shape[0]
    levels, counts = _levels(a, tol)
    rows = np.full((1, d), -1, dtype=np.int64)
    for lev, cnt in enumerate(counts[:-1]):
        n_free = int((rows[0] < 0).sum())
        free = np.nonzero(rows < 0)[1].reshape(len(rows), n_free)
        combos = np.array(list(itertools.combinations(range(n_free), cnt)), dtype=np.int64)
        out = np.repeat(rows, len(combos), axis=0)
        pos = free[:, combos].reshape(-1, cnt)
        out[np.arange(len(out))[:, None], pos] = lev
        rows = out
    rows[rows < 0] = len(counts) - 1
    return np.asarray(levels)[rows]


def orbit_law(a, basis: SimplexBasis | None = None) -> AnchoredLaw:
    """Uniform law on the distinct permutations of template ``a``.

    The result is exchangeable, and its mean is zero because the orbit
    average of any template is the all-ones vector.
    """
    a = _clean_template(a)
    P = distinct_permutations(a)
    # every column of an orbit holds the same levels, so the column mean is the
    # mean of one row; shift it to 1 to absorb the tie tolerance
    P = P + (1.0 - math.fsum(P[0]) / len(a))
    return AnchoredLaw(np.full(len(P), 1.0 / len(P)), P, basis)


def symmetrize(rho: AnchoredLaw) -> AnchoredLaw:
    """Average of a law over all ``d!`` coordinate permutations."""
    ws, Ts = [], []
    for w, a in zip(rho.weights, rho.templates):
        P = distinct_permutations(a)
        ws.append(np.full(len(P), w / len(P)))
        Ts.append(P)
    return AnchoredLaw(np.concatenate(ws), np.vstack(Ts), rho.basis)


def is_exchangeable(rho: AnchoredLaw, atol: float = 1e-10) -> bool:
    return symmetrize(rho).allclose(rho, atol=atol)


def _affine_rank(rho: AnchoredLaw, tol: float) -> int:
    # (1, x_k) are independent iff the templates a_k = 1 + H x_k are
    return int(np.linalg.matrix_rank(rho.templates, tol=tol * max(1.0, rho.d)))


def is_extreme(rho: AnchoredLaw, tol: float = 1e-9) -> bool:
    """True iff the support has at most ``d`` affinely independent points."""
    if rho.size > rho.d:
        return False
    return _affine_rank(rho, tol) == rho.size


def split_non_extreme(rho: AnchoredLaw, tol: float = 1e-9):
    """Write a non-extreme law as the midpoint of two distinct feasible laws.

    Returns:
        ``(rho_plus, rho_minus)`` with ``rho = (rho_plus + rho_minus) / 2``.

    Raises:
        InvalidLaw: if ``rho`` is extreme.
    """
    if is_extreme(rho, tol):
        raise InvalidLaw("law is extreme; no midpoint decomposition exists")
    _, sv, Vt = np.linalg.svd(rho.templates.T)
    c = Vt[-1]
    if rho.size <= rho.d and sv[-1] > tol * max(1.0, rho.d):
        raise InvalidLaw("law is extreme; no midpoint decomposition exists")
    nz = np.abs(c) > 1e-15
    eps = 0.5 * np.min(rho.weights[nz] / np.abs(c[nz]))
    plus = AnchoredLaw(rho.weights + eps * c, rho.templates, rho.basis)
    minus = AnchoredLaw(rho.weights - eps * c, rho.templates, rho.basis)
    return plus, minus
