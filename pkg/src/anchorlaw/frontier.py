"""The global chi* frontier ``F_d(C0) = sup {tr Sigma : chi* <= C0}``.

For exchangeable laws ``chi* = E C(a)`` and ``tr Sigma = E S(a)``, so the
frontier is the upper concave envelope of the template curve ``(C(a), S(a))``.
Only two-level templates can touch it, so we sample those, take the planar
upper hull and read off two-orbit certificates.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .plotting import line_svg

CENTER = (0, 1.0)  # (s, lam) label of the all-ones template


@dataclass(frozen=True)
class FrontierConfig:
    """Sampling of two-level templates.

    Attributes:
        n_lambda: Log-spaced level ratios per subset size.
        lambda_max: Largest level ratio.
        refine_tol: Stop refining once new samples rise less than this above the hull.
        max_rounds: Cap on refinement rounds.
    """

    n_lambda: int = 400
    lambda_max: float = 1e3
    refine_tol: float = 1e-9
    max_rounds: int = 60


def two_level_stats(d: int, s, lam):
    """``(C, S)`` of the template with ``s`` coordinates ``lam`` times the others."""
    s = np.asarray(s, dtype=float)
    lam = np.asarray(lam, dtype=float)
    beta = d / (d + s * (lam - 1.0))
    alpha = lam * beta
    A = s / alpha + (d - s) / beta
    B = s * alpha**2 + (d - s) * beta**2
    return (A * B - d * d) / (d * (d - 1)), B - d


def two_level_template(d: int, s: int, lam: float) -> np.ndarray:
    if s == 0:
        return np.ones(d)
    beta = d / (d + s * (lam - 1.0))
    a = np.full(d, beta)
    a[:s] = lam * beta
    return a


def upper_hull(C: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Indices of the upper concave hull, left to right (monotone chain)."""
    order = np.lexsort((-S, C))
    hull = []
    for k in order:
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            cross = (C[j] - C[i]) * (S[k] - S[i]) - (S[j] - S[i]) * (C[k] - C[i])
            if cross >= 0:
                hull.pop()
            else:
                break
        if hull and C[hull[-1]] == C[k]:
            continue
        hull.append(k)
    return np.array(hull)


@dataclass(frozen=True, eq=False)
class FrontierCurve:
    """Frontier values on a budget grid with two-orbit certificates.

    Each certificate row is ``(s_a, lam_a, s_b, lam_b, t)``: mixing the orbit
    laws of templates ``a`` and ``b`` with weights ``1 - t`` and ``t`` gives
    budget ``C0`` and trace ``F``.  The center template is labelled ``s = 0``,
    ``lam = 1``.  Past :attr:`c_max` the curve is held flat at the last sampled
    vertex, which only bounds the frontier from below.
    """

    d: int
    grid: np.ndarray
    values: np.ndarray
    certificates: np.ndarray
    vertices: np.ndarray  # rows (C, S, s, lam)

    @property
    def c_max(self) -> float:
        """Budget of the last sampled hull vertex; beyond it values are lower estimates."""
        return float(self.vertices[-1, 0])

    def evaluate(self, C0) -> np.ndarray:
        return _evaluate(self.vertices, np.atleast_1d(np.asarray(C0, dtype=float)))[0]

    def certificate_residual(self) -> float:
        """Largest mismatch between certificates and ``(C0, F)``."""
        c = self.certificates
        Ca, Sa = _stats_of(self.d, c[:, 0], c[:, 1])
        Cb, Sb = _stats_of(self.d, c[:, 2], c[:, 3])
        t = c[:, 4]
        cc = (1 - t) * Ca + t * Cb
        ss = (1 - t) * Sa + t * Sb
        # past the last vertex the budget is not exhausted; only F must match
        inside = self.grid <= self.vertices[-1, 0]
        err_c = np.where(inside, np.abs(cc - self.grid), 0.0)
        return float(max(err_c.max(), np.abs(ss - self.values).max()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["C0", "F", "cert_s_a", "cert_lambda_a", "cert_s_b", "cert_lambda_b", "t"])
        for c0, f, cert in zip(self.grid, self.values, self.certificates):
            wr.writerow([repr(float(c0)), repr(float(f)), int(cert[0]), repr(float(cert[1])), int(cert[2]),
                         repr(float(cert[3])), repr(float(cert[4]))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "C0": [float(v) for v in self.grid],
            "F": [float(v) for v in self.values],
            "certificates": [
                {"s_a": int(c[0]), "lambda_a": float(c[1]), "s_b": int(c[2]), "lambda_b": float(c[3]), "t": float(c[4])}
                for c in self.certificates
            ],
        }


def _stats_of(d, s, lam):
    s = np.asarray(s, dtype=float)
    lam = np.asarray(lam, dtype=float)
    C, S = two_level_stats(d, np.where(s == 0, 1, s), np.where(s == 0, 1.0, lam))
    return np.where(s == 0, 0.0, C), np.where(s == 0, 0.0, S)


def _evaluate(V: np.ndarray, C0: np.ndarray):
    """Hull interpolation; ties at a vertex go to the segment on its left."""
    Cv, Sv = V[:, 0], V[:, 1]
    last = len(Cv) - 1
    k = np.searchsorted(Cv, C0, side="left")  # first vertex with Cv >= C0
    inner = (k > 0) & (k <= last)
    b = np.where(inner, k, np.where(k > last, last, 0))
    a = np.where(inner, k - 1, b)
    span = np.where(inner, Cv[b] - Cv[a], 1.0)
    t = np.where(inner, (C0 - Cv[a]) / span, 0.0)
    vals = (1 - t) * Sv[a] + t * Sv[b]
    certs = np.column_stack([V[a, 2], V[a, 3], V[b, 2], V[b, 3], t])
    return vals, certs


def _hull_vertices(d, labels_s, labels_l, C, S):
    idx = upper_hull(C, S)
    # the frontier is nondecreasing: keep the hull up to its highest point
    top = int(np.argmax(S[idx]))
    idx = idx[: top + 1]
    return idx, np.column_stack([C[idx], S[idx], labels_s[idx], labels_l[idx]])


def frontier(d: int, grid, config: FrontierConfig | None = None) -> FrontierCurve:
    """Upper concave envelope of two-level templates, evaluated on ``grid``.

    Raises:
        InvalidParameter: on an empty or negative grid.
    """
    cfg = config or FrontierConfig()
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0 or (grid < 0).any() or not np.isfinite(grid).all():
        raise InvalidParameter("budget grid must be a nonempty list of nonnegative numbers")
    if d < 2:
        raise InvalidParameter("d must be at least 2")
    base = np.geomspace(1.0, cfg.lambda_max, cfg.n_lambda + 1)[1:]
    logs = {}
    for s in range(1, d):
        extra = [math.sqrt((d - s) / s)] if d - s > s else []
        lam = np.unique(np.concatenate([base, [x for x in extra if 1 < x <= cfg.lambda_max]]))
        logs[s] = np.log(lam)

    def assemble():
        ls = np.concatenate([[0]] + [np.full(len(v), s) for s, v in logs.items()])
        ll = np.concatenate([[1.0]] + [np.exp(v) for v in logs.values()])
        C, S = _stats_of(d, ls, ll)
        return ls, ll, C, S

    ls, ll, C, S = assemble()
    idx, V = _hull_vertices(d, ls, ll, C, S)
    for _ in range(cfg.max_rounds):
        added = False
        for s_v in np.unique(V[1:, 2]).astype(int):
            arr = logs[s_v]
            on_hull = np.searchsorted(arr, np.log(V[V[:, 2] == s_v, 3]))
            on_hull = np.clip(on_hull, 0, len(arr) - 1)
            # candidate midpoints on both sides of every hull vertex of this orbit
            left = np.where(on_hull > 0, 0.5 * (arr[np.maximum(on_hull - 1, 0)] + arr[on_hull]), 0.5 * arr[on_hull])
            right = 0.5 * (arr[on_hull] + arr[np.minimum(on_hull + 1, len(arr) - 1)])
            mids = np.unique(np.concatenate([left, right[on_hull + 1 < len(arr)]]))
            Cn, Sn = two_level_stats(d, s_v, np.exp(mids))
            rise = Sn - _evaluate(V, Cn)[0]
            mids = mids[rise > cfg.refine_tol]
            if len(mids):
                logs[s_v] = np.unique(np.concatenate([arr, mids]))
                added = True
        if not added:
            break
        ls, ll, C, S = assemble()
        idx, V = _hull_vertices(d, ls, ll, C, S)
    vals, certs = _evaluate(V, grid)
    return FrontierCurve(d, grid, vals, certs, V)


def svg_plot(curve: FrontierCurve) -> str:
    """SVG line plot of the frontier over its grid."""
    return line_svg(curve.grid, curve.values, "C0", "F", f"d = {curve.d}")
