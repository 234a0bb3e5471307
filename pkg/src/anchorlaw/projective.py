"""Projective maps, fibers of anchored laws and inter-fiber transport.

For a base ``h`` in the simplex spanned by the vertex vectors, the map
``T_h(x) = x / (1 + h.x)`` sends the tilted law ``q_h = (1 + h.x) rho`` to the
fiber ``eta_h``.  With ``theta = 1/d + H h`` the barycentric coordinates of
``h``, the tilt factor is ``1 + h.x = theta . a(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ScalarLaw
from .errors import BoundaryBase, InvalidBase, NotRealizable, OnFiberKernel
from .simplex import MERGE_TOL, AnchoredLaw, SimplexBasis, build_basis

INTERIOR_TOL = 1e-10
KERNEL_TOL = 1e-12
FIBER_MEAN_TOL = 1e-8


def barycentric(h, basis: SimplexBasis) -> np.ndarray:
    """Barycentric coordinates ``theta = 1/d + H h`` of a base point."""
    h = np.asarray(h, dtype=float).reshape(basis.m)
    return 1.0 / basis.d + basis.H @ h


def vertex_base(i: int, basis: SimplexBasis) -> np.ndarray:
    return basis.gamma[i].copy()


def is_interior(h, basis: SimplexBasis, tol: float = INTERIOR_TOL) -> bool:
    return bool(barycentric(h, basis).min() > tol)


def project_point(x, h) -> np.ndarray:
    """``T_h(x) = x / (1 + h.x)``.

    Raises:
        OnFiberKernel: if ``1 + h.x <= 1e-12``.
    """
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    s = 1.0 + x @ h
    if np.any(s <= KERNEL_TOL):
        raise OnFiberKernel(f"1 + h.x = {np.min(s):.3g}; the point is not seen by this fiber")
    return x / s[..., None] if x.ndim > 1 else x / s


def unproject_point(y, h) -> np.ndarray:
    """``S_h(y) = y / (1 - h.y)``, the inverse of :func:`project_point`."""
    y = np.asarray(y, dtype=float)
    h = np.asarray(h, dtype=float)
    s = 1.0 - y @ h
    if np.any(s <= 0):
        raise OnFiberKernel("1 - h.y must be positive on a fiber")
    return y / s[..., None] if y.ndim > 1 else y / s


def _canonical_points(weights: np.ndarray, points: np.ndarray, basis: SimplexBasis):
    """Merge coincident fiber atoms and sort by lifted coordinates."""
    if len(weights) == 0:
        return weights, points
    lifted = points @ basis.H.T
    order = np.lexsort(np.round(lifted / MERGE_TOL).T[::-1])
    w, P, L = weights[order], points[order], lifted[order]
    if len(w) > 1:
        jump = np.abs(np.diff(L, axis=0)).max(axis=1) >= MERGE_TOL
        group = np.concatenate([[0], np.cumsum(jump)])
        n = group[-1] + 1
        if n < len(w):
            W = np.bincount(group, weights=w, minlength=n)
            M = np.zeros((n, P.shape[1]))
            np.add.at(M, group, w[:, None] * P)
            # atoms may carry zero weight; keep their point instead of dividing by 0
            first = np.searchsorted(group, np.arange(n))
            P = np.where(W[:, None] > 0, M / np.where(W > 0, W, 1.0)[:, None], P[first])
            w = W
    return w, P


@dataclass(frozen=True, eq=False)
class Fiber:
    """Finitely supported fiber ``eta_h`` at base ``h``.

    Attributes:
        base: Base point ``h`` in basis coordinates.
        weights: Fiber atom weights ``w (1 + h.x)``; they sum to 1.
        points: Fiber atoms ``y = T_h(x)``, shape ``(K, d-1)``.
        lost_mass: rho-mass of atoms on the kernel face ``1 + h.x = 0``.
            Zero at interior bases.
        basis: Frame of ``base`` and ``points``.
    """

    base: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    lost_mass: float
    basis: SimplexBasis

    def __post_init__(self):
        w, P = _canonical_points(
            np.asarray(self.weights, dtype=float), np.atleast_2d(np.asarray(self.points, dtype=float)), self.basis
        )
        for arr in (w, P):
            arr.setflags(write=False)
        h = np.array(self.base, dtype=float).reshape(self.basis.m)
        h.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "base", h)

    @property
    def d(self) -> int:
        return self.basis.d

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def theta(self) -> np.ndarray:
        return barycentric(self.base, self.basis)

    def is_interior(self, tol: float = INTERIOR_TOL) -> bool:
        return bool(self.theta.min() > tol)

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def slack(self) -> np.ndarray:
        """``1 + (gamma_i - h).y`` for every atom and vertex, shape ``(K, d)``."""
        return 1.0 + self.points @ (self.basis.gamma - self.base).T

    def allclose(self, other: "Fiber", atol: float = 1e-10) -> bool:
        return bool(
            self.size == other.size
            and np.allclose(self.base, other.base, atol=atol, rtol=0)
            and np.allclose(self.weights, other.weights, atol=atol, rtol=0)
            and np.allclose(self.points, other.points, atol=atol, rtol=0)
            and abs(self.lost_mass - other.lost_mass) <= atol
        )

    def to_json(self) -> dict:
        """Basis-free form: base and atoms are lifted through ``H``."""
        H = self.basis.H
        return {
            "d": self.d,
            "h": [float(v) for v in H @ self.base],
            "theta": [float(v) for v in self.theta],
            "lost_mass": float(self.lost_mass),
            "atoms": [
                {"w": float(w), "a": [float(v) for v in 1.0 + H @ y]} for w, y in zip(self.weights, self.points)
            ],
        }

    @classmethod
    def from_json(cls, obj: dict, basis: SimplexBasis | None = None) -> "Fiber":
        d = int(obj["d"])
        basis = basis or build_basis(d)
        H = basis.H
        h = H.T @ np.asarray(obj["h"], dtype=float)
        w = np.array([float(at["w"]) for at in obj["atoms"]])
        A = np.array([at["a"] for at in obj["atoms"]], dtype=float).reshape(len(w), d)
        return cls(h, w, (A - 1.0) @ H, float(obj.get("lost_mass", 0.0)), basis)


def _check_base(h, basis: SimplexBasis) -> np.ndarray:
    theta = barycentric(h, basis)
    if theta.min() < -INTERIOR_TOL:
        raise InvalidBase(f"base lies outside the vertex simplex (barycentric min {theta.min():.3g})")
    return theta


def fiber(rho: AnchoredLaw, h) -> Fiber:
    """Fiber of ``rho`` at base ``h``.

    Atoms with tilt ``1 + h.x <= 1e-12`` sit on the kernel face; their
    rho-mass is reported as ``lost_mass`` and they do not enter the fiber.
    """
    basis = rho.basis
    h = np.asarray(h, dtype=float).reshape(basis.m)
    theta = _check_base(h, basis)
    tilt = rho.templates @ theta
    seen = tilt > KERNEL_TOL
    lost = float(rho.weights[~seen].sum())
    x = rho.points[seen]
    w = rho.weights[seen] * tilt[seen]
    y = x / tilt[seen][:, None]
    return Fiber(h, w, y, lost, basis)


def transport(f: Fiber, k) -> Fiber:
    """Move an interior fiber from its base ``h`` to base ``k``.

    Weights scale by ``1 + (k - h).y`` and points map by ``T_{k-h}``.

    Raises:
        BoundaryBase: if ``f`` is not at an interior base.
    """
    if not f.is_interior() or f.lost_mass > 0:
        raise BoundaryBase("transport needs a fiber at an interior base")
    basis = f.basis
    k = np.asarray(k, dtype=float).reshape(basis.m)
    _check_base(k, basis)
    delta = k - f.base
    s = 1.0 + f.points @ delta
    s = np.where(s < 0, 0.0, s)
    keep = s > 0
    w = f.weights[keep] * s[keep]
    y = f.points[keep] / s[keep][:, None]
    # a fiber weight v at h is rho-mass v (1 - h.y)
    lost = float((f.weights[~keep] * (1.0 - f.points[~keep] @ f.base)).sum())
    return Fiber(k, w, y, lost, basis)


def _recenter_weights(w: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Smallest weight correction making ``w @ T = 1`` and ``sum w = 1``."""
    A = np.vstack([T.T, np.ones(len(w))])
    r = np.concatenate([1.0 - w @ T, [1.0 - w.sum()]])
    dw = np.linalg.lstsq(A, r, rcond=None)[0]
    return w + dw


def reconstruct_from_fiber(f: Fiber, mean_tol: float = FIBER_MEAN_TOL) -> AnchoredLaw:
    """The unique anchored law whose fiber at an interior base is ``f``.

    Raises:
        BoundaryBase: if the base is on the boundary.
        NotRealizable: if the fiber mean exceeds ``mean_tol``.
    """
    if not f.is_interior() or f.lost_mass > 0:
        raise BoundaryBase("reconstruction is only unique at interior bases")
    resid = float(np.linalg.norm(f.mean()))
    if resid > mean_tol:
        raise NotRealizable(f"fiber mean has norm {resid:.3g}; only mean-zero fibers are realizable")
    s = 1.0 - f.points @ f.base
    if (s <= 0).any():
        raise NotRealizable("fiber atom violates 1 - h.y > 0")
    w = f.weights * s
    x = f.points / s[:, None]
    T = 1.0 + x @ f.basis.H.T
    w = w / w.sum()
    if np.abs(w @ T - 1.0).max() > 1e-12:
        w = _recenter_weights(w, T)
        if (w < 0).any():
            raise NotRealizable("cannot recenter the reconstructed law with nonnegative weights")
    return AnchoredLaw(w, T, f.basis)


def shadow_law(f: Fiber, k) -> ScalarLaw:
    """Law of the one-user likelihood ratio ``1 + (k - h).Y`` under the fiber."""
    k = np.asarray(k, dtype=float).reshape(f.basis.m)
    v = 1.0 + f.points @ (k - f.base)
    if (v < -1e-12).any():
        raise OnFiberKernel("target base is not dominated by this fiber")
    return ScalarLaw(np.clip(v, 0.0, None), f.weights / f.weights.sum())
