"""Channels, their anchored laws, LDP checks and pairwise likelihood-ratio laws."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidChannel, InvalidComposition, SingularPair
from .simplex import AnchoredLaw, SimplexBasis

logger = logging.getLogger(__name__)

RATIO_SLACK = 1e-10
SCALAR_MERGE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic ``d x K`` matrix; row ``i`` is the output law given input ``i``."""

    W: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] < 2 or W.shape[1] < 1:
            raise InvalidChannel(f"channel must be a d x K matrix with d >= 2, got shape {W.shape}")
        if not np.isfinite(W).all():
            raise InvalidChannel("channel entries must be finite")
        if W.min() < -1e-12 or W.max() > 1 + 1e-12:
            raise InvalidChannel("channel entries must lie in [0, 1]")
        sums = W.sum(axis=1)
        bad = np.abs(sums - 1.0) > 1e-10
        if bad.any():
            i = int(np.argmax(bad))
            raise InvalidChannel(f"row {i} sums to {sums[i]:.12g}, expected 1")
        W = np.clip(W, 0.0, 1.0)
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def K(self) -> int:
        return self.W.shape[1]

    def to_json(self) -> dict:
        return {"d": self.d, "K": self.K, "rows": self.W.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Channel":
        try:
            rows = np.array(obj["rows"], dtype=float)
            d, K = int(obj["d"]), int(obj["K"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidChannel(f"malformed channel JSON: {exc}") from exc
        if rows.shape != (d, K):
            raise InvalidChannel(f"rows have shape {rows.shape}, header says ({d}, {K})")
        return cls(rows)

    @classmethod
    def from_csv(cls, text: str) -> "Channel":
        """Parse one row per input symbol; a non-numeric first line is a header."""
        rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
        if not rows:
            raise InvalidChannel("empty CSV")
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]
        try:
            data = [[float(c) for c in r] for r in rows]
        except ValueError as exc:
            raise InvalidChannel(f"non-numeric CSV entry: {exc}") from exc
        if len({len(r) for r in data}) != 1:
            raise InvalidChannel("CSV rows have different lengths")
        return cls(np.array(data))

    @classmethod
    def load(cls, path) -> "Channel":
        path = Path(path)
        text = path.read_text()
        if path.suffix.lower() == ".csv":
            return cls.from_csv(text)
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidChannel(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_json(obj)


def binary_rr(eps0: float) -> Channel:
    """Binary randomized response with local parameter ``eps0``."""
    e = math.exp(eps0)
    p = e / (1.0 + e)
    return Channel([[p, 1.0 - p], [1.0 - p, p]])


@dataclass(frozen=True)
class AnchorResult:
    law: AnchoredLaw
    dropped_columns: int
    merged_columns: int
    mean_residual: float


def anchor_with_diagnostics(channel: Channel, basis: SimplexBasis | None = None) -> AnchorResult:
    """Anchor a channel and report what the reduction did.

    Columns with zero row average carry no probability under any input and
    are dropped; columns with identical templates are merged.
    """
    if not isinstance(channel, Channel):
        channel = Channel(channel)
    W = channel.W
    wbar = W.mean(axis=0)
    keep = wbar > 0
    dropped = int((~keep).sum())
    if dropped:
        logger.info("dropped %d output column(s) with zero row average", dropped)
    T = (W[:, keep] / wbar[keep]).T
    law = AnchoredLaw(wbar[keep] / wbar[keep].sum(), T, basis)
    merged = int(keep.sum()) - law.size
    return AnchorResult(law, dropped, merged, float(np.linalg.norm(law.mean())))


def anchor(channel: Channel, basis: SimplexBasis | None = None) -> AnchoredLaw:
    """Anchored law ``sum_y Wbar(y) delta_{x(y)}`` of a channel."""
    return anchor_with_diagnostics(channel, basis).law


def reconstruct(rho: AnchoredLaw) -> Channel:
    """Channel with one output per atom: ``W(k | i) = w_k a_k[i]``."""
    W = (rho.weights[:, None] * rho.templates).T
    # absorb rounding so rows are stochastic to machine precision
    W = W / W.sum(axis=1, keepdims=True)
    return Channel(W)


def check_composition(theta, d: int, tol: float = 1e-10) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != d:
        raise InvalidComposition(f"composition has length {theta.shape[0]}, expected {d}")
    if (theta < -tol).any() or abs(theta.sum() - 1.0) > tol:
        raise InvalidComposition("composition must be nonnegative and sum to 1")
    return np.clip(theta, 0.0, None)


def composition_to_base(theta, basis: SimplexBasis) -> np.ndarray:
    """Centered composition coordinate ``h = H^T (theta - 1/d)``."""
    theta = check_composition(theta, basis.d)
    return basis.H.T @ (theta - 1.0 / basis.d)


def mixture(rho: AnchoredLaw, theta) -> np.ndarray:
    """Weights of the one-user output law under input composition ``theta``.

    Atom ``k`` receives ``w_k (1 + h_theta . x_k) = w_k (theta . a_k)``; the
    returned array is aligned with ``rho.weights``.
    """
    theta = check_composition(theta, rho.d)
    return rho.weights * (rho.templates @ theta)


@dataclass(frozen=True)
class LDPReport:
    passed: bool
    eps0: float
    worst_log_ratio: float
    worst_pair: tuple
    worst_atom: int

    def __bool__(self):
        return self.passed


def ldp_check(rho: AnchoredLaw, eps0: float) -> LDPReport:
    """Check ``a_i <= e^eps0 a_j`` for every atom and every pair of coordinates."""
    T = rho.templates
    hi = T.max(axis=1)
    lo = T.min(axis=1)
    with np.errstate(divide="ignore"):
        logr = np.where(lo > 0, np.log(np.where(lo > 0, hi, 1.0) / np.where(lo > 0, lo, 1.0)), np.inf)
    k = int(np.argmax(logr))
    worst = float(logr[k])
    pair = (int(np.argmax(T[k])), int(np.argmin(T[k])))
    lam = math.exp(eps0)
    passed = bool(np.all(hi <= lam * lo * (1.0 + RATIO_SLACK)))
    return LDPReport(passed, float(eps0), worst, pair, k)


@dataclass(frozen=True, eq=False)
class ScalarLaw:
    """Finitely supported law on ``[0, inf)`` with sorted, merged values."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if v.shape != w.shape or len(v) == 0:
            raise ValueError("values and weights must be nonempty and of equal length")
        if not np.isfinite(v).all() or (v < 0).any():
            raise ValueError("values must be finite and nonnegative")
        if (w < 0).any():
            raise ValueError("weights must be nonnegative")
        keep = w > 0
        v, w = merge_atoms(v[keep], w[keep])
        if abs(w.sum() - 1.0) > 1e-10:
            raise ValueError(f"weights sum to {w.sum():.12g}, expected 1")
        v.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return len(self.values)

    def mean(self) -> float:
        return float(self.weights @ self.values)

    def expect(self, f) -> float:
        return float(self.weights @ f(self.values))

    def allclose(self, other: "ScalarLaw", atol: float = 1e-12) -> bool:
        return (
            self.size == other.size
            and np.allclose(self.values, other.values, atol=atol, rtol=0)
            and np.allclose(self.weights, other.weights, atol=atol, rtol=0)
        )

    def __repr__(self):
        pairs = ", ".join(f"{v:.6g}: {w:.6g}" for v, w in zip(self.values[:6], self.weights[:6]))
        more = ", ..." if self.size > 6 else ""
        return f"{type(self).__name__}({{{pairs}{more}}})"


def merge_atoms(values: np.ndarray, weights: np.ndarray, rtol: float = SCALAR_MERGE_RTOL):
    """Sort atoms by value and merge neighbours equal within ``rtol``."""
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    if len(v) < 2:
        return v.copy(), w.copy()
    gap = np.diff(v)
    scale = np.maximum(np.abs(v[1:]), np.abs(v[:-1]))
    jump = gap > rtol * np.maximum(scale, 1e-300)
    group = np.concatenate([[0], np.cumsum(jump)])
    n = group[-1] + 1
    if n == len(v):
        return v, w
    W = np.bincount(group, weights=w, minlength=n)
    V = np.bincount(group, weights=w * v, minlength=n) / W
    return V, W


def pairwise_lr_law(rho: AnchoredLaw, i: int, j: int) -> ScalarLaw:
    """Law of ``dW(.|j)/dW(.|i)`` under row ``i``.

    Atom ``k`` has row-``i`` probability ``w_k a_k[i]`` and ratio
    ``a_k[j] / a_k[i]``.  Atoms with ``a_k[i] = a_k[j] = 0`` carry no row-``i``
    mass and are skipped.

    Raises:
        SingularPair: if some atom has ``a_k[i] = 0 < a_k[j]``.
    """
    d = rho.d
    if not (0 <= i < d and 0 <= j < d) or i == j:
        raise ValueError(f"need distinct rows in [0, {d}), got ({i}, {j})")
    ai = rho.templates[:, i]
    aj = rho.templates[:, j]
    if ((ai <= 0) & (aj > 0)).any():
        raise SingularPair(f"row {j} charges outputs that row {i} does not")
    keep = ai > 0
    p = rho.weights[keep] * ai[keep]
    return ScalarLaw(aj[keep] / ai[keep], p / p.sum())
