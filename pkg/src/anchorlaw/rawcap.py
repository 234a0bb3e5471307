"""Exact canonical design under a raw local cap ``a_i <= lam a_j``.

The exchangeable optimizers are subset-selection laws: the orbit of the
two-level template with ``s`` coordinates at ``alpha_s = lam beta_s`` and the
rest at ``beta_s = d / (d + s (lam - 1))``.  Their trace is

    T(s) = d s (d - s) (lam - 1)^2 / (d + s (lam - 1))^2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

from .design import chi_star, risk_fc, risk_iid, trace_cap_constant
from .errors import InvalidParameter
from .simplex import AnchoredLaw, SimplexBasis, orbit_law

TIE_TOL = 1e-12
REGIME_GUARD = 10.0

TABLE_D = (3, 5, 10, 20)
TABLE_EPS = ("0.5", "1", "2")

# printed four-decimal values of the reference phase diagram
TABLE1_GOLDEN = {
    (3, "0.5"): (1, "0.1897", "21.0899", "20.4232"),
    (3, "1"): (1, "0.7957", "5.0268", "4.3601"),
    (3, "2"): (1, "2.7783", "1.4397", "0.7731"),
    (5, "0.5"): (2, "0.3184", "50.2587", "49.4587"),
    (5, "1"): (1, "1.3083", "12.2298", "11.4298"),
    (5, "2"): (1, "6.2940", "2.5421", "1.7421"),
    (10, "0.5"): (4, "0.6367", "127.2172", "126.3172"),
    (10, "1"): (3, "2.6996", "30.0041", "29.1041"),
    (10, "2"): (1, "13.6775", "5.9221", "5.0221"),
    (20, "0.5"): (8, "1.2734", "283.4902", "282.5402"),
    (20, "1"): (5, "5.4176", "66.6344", "65.6844"),
    (20, "2"): (2, "27.3551", "13.1968", "12.2468"),
}

TABLE2_GOLDEN = {
    (3, "0.5"): (1, "0.1897", "0.1907", "1.1118"),
    (3, "1"): (1, "0.7957", "0.8812", "5.1358"),
    (3, "2"): (1, "2.7783", "5.0813", "29.6160"),
    (5, "0.5"): (2, "0.3184", "0.3579", "3.2208"),
    (5, "1"): (1, "1.3083", "1.3359", "12.0229"),
    (5, "2"): (1, "6.2940", "9.0427", "81.3841"),
    (10, "0.5"): (4, "0.6367", "0.8052", "12.8832"),
    (10, "1"): (3, "2.6996", "3.4977", "55.9634"),
    (10, "2"): (1, "13.6775", "15.9062", "254.4990"),
    (20, "0.5"): (8, "1.2734", "1.7944", "51.5326"),
    (20, "1"): (5, "5.4176", "7.3780", "211.8811"),
    (20, "2"): (2, "27.3551", "35.4483", "1017.9961"),
}


def round4(x: float) -> str:
    """Round half-even to four decimals on the exact binary value of ``x``."""
    return str(Decimal(x).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


def _check(d: int, lam: float, s: int | None = None):
    if d < 2:
        raise InvalidParameter("d must be at least 2")
    if not lam > 1:
        raise InvalidParameter("lambda must exceed 1")
    if s is not None and not 1 <= s <= d - 1:
        raise InvalidParameter(f"subset size must lie in 1..{d - 1}, got {s}")


def subset_template(d: int, lam: float, s: int) -> np.ndarray:
    """Sorted two-level template with ``s`` high coordinates."""
    _check(d, lam, s)
    beta = d / (d + s * (lam - 1.0))
    a = np.full(d, beta)
    a[:s] = lam * beta
    return a


def subset_law(d: int, lam: float, s: int, basis: SimplexBasis | None = None) -> AnchoredLaw:
    """Orbit law of the ``s``-subset template."""
    return orbit_law(subset_template(d, lam, s), basis)


def subset_trace(d: int, lam: float, s) -> np.ndarray | float:
    s = np.asarray(s, dtype=float)
    return d * s * (d - s) * (lam - 1.0) ** 2 / (d + s * (lam - 1.0)) ** 2


@dataclass(frozen=True)
class TCurve:
    d: int
    lam: float
    values: np.ndarray  # T(s) for s = 1..d-1
    phase_set: tuple
    s_star: int
    t_star: float


def t_curve(d: int, lam: float) -> TCurve:
    """``T(s)`` over ``s = 1..d-1`` with its maximizing set (ties within 1e-12 kept)."""
    if d < 2:
        raise InvalidParameter("d must be at least 2")
    s = np.arange(1, d)
    if lam <= 1:
        vals = np.zeros(d - 1)
    else:
        vals = subset_trace(d, lam, s)
    top = vals.max()
    phase = tuple(int(v) for v in s[vals >= top - TIE_TOL * max(1.0, top)])
    return TCurve(d, float(lam), vals, phase, min(phase), float(top))


@dataclass(frozen=True)
class RawCapReport:
    d: int
    eps0: float
    lam: float
    phase_set: tuple
    s_star: int
    trace_opt: float
    n_times_risk_iid: float
    n_times_risk_fc: float

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "eps0": self.eps0,
            "lambda": self.lam,
            "phase_set": list(self.phase_set),
            "s_star": self.s_star,
            "T_star": self.trace_opt,
            "nR_iid": self.n_times_risk_iid,
            "nR_fc": self.n_times_risk_fc,
        }


def rawcap_optimum(d: int, eps0: float, n: int = 1) -> RawCapReport:
    """Optimal subset size and exact worst-case risks under the raw ``eps0`` cap."""
    if not eps0 > 0:
        raise InvalidParameter("eps0 must be positive")
    if n < 1:
        raise InvalidParameter("n must be at least 1")
    lam = math.exp(eps0)
    tc = t_curve(d, lam)
    iid = (d - 1) ** 2 / tc.t_star
    return RawCapReport(d, float(eps0), lam, tc.phase_set, tc.s_star, tc.t_star, iid, iid - (d - 1) / d)


def rawcap_risks(d: int, eps0: float, n: int, s: int | None = None):
    """``(risk_iid, risk_fc)`` of a subset law at its worst compositions.

    The law is exchangeable, so the i.i.d. risk peaks at the uniform
    composition and the fixed-composition risk is the same at every vertex.
    """
    lam = math.exp(eps0)
    if s is None:
        s = t_curve(d, lam).s_star
    rho = subset_law(d, lam, s)
    e0 = np.zeros(d)
    e0[0] = 1.0
    return risk_iid(rho, np.full(d, 1.0 / d), n), risk_fc(rho, e0, n)


@dataclass(frozen=True)
class BudgetRow:
    d: int
    eps0: float
    s_star: int
    exact: float
    kd_chi: float
    crude: float
    chi: float

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "eps0": self.eps0,
            "s_star": self.s_star,
            "T_exact": self.exact,
            "Kd_chi": self.kd_chi,
            "crude": self.crude,
            "chi_star": self.chi,
        }


def rawcap_vs_budget(d: int, eps0: float) -> BudgetRow:
    """Exact raw-cap trace against ``K_d chi*`` and ``d(d-1) chi*`` at the optimizer."""
    rep = rawcap_optimum(d, eps0)
    chi = chi_star(subset_law(d, rep.lam, rep.s_star)).value
    return BudgetRow(d, rep.eps0, rep.s_star, rep.trace_opt, trace_cap_constant(d) * chi, d * (d - 1) * chi, chi)


@dataclass(frozen=True)
class VaryingCapEntry:
    n: int
    lam: float
    bound: float
    n_trace: float
    in_regime: bool


def varying_cap(d: int, lams, ns) -> list:
    """Benchmark ``(d-1)^2 / (n T*(lam_n))`` along a sequence of caps.

    Entries with ``n T* < 10`` are flagged as outside the asymptotic regime.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    ns = np.atleast_1d(np.asarray(ns))
    if lams.shape != ns.shape:
        lams, ns = np.broadcast_arrays(lams, ns)
    out = []
    for lam, n in zip(lams, ns):
        if not lam > 1 or n < 1:
            raise InvalidParameter("need lambda > 1 and n >= 1 in every entry")
        t = t_curve(d, float(lam)).t_star
        nt = float(n) * t
        out.append(VaryingCapEntry(int(n), float(lam), (d - 1) ** 2 / nt, nt, nt >= REGIME_GUARD))
    return out


# -- reference tables -----------------------------------------------------------

@dataclass
class TableResult:
    rows: list
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def table1() -> TableResult:
    """Phase diagram and risk constants for the reference grid, rounded to 4 d.p."""
    res = TableResult([])
    for d in TABLE_D:
        for e in TABLE_EPS:
            rep = rawcap_optimum(d, float(e))
            row = (d, e, rep.s_star, round4(rep.trace_opt), round4(rep.n_times_risk_iid), round4(rep.n_times_risk_fc))
            res.rows.append(row)
            if row[2:] != TABLE1_GOLDEN[(d, e)]:
                res.mismatches.append((row, TABLE1_GOLDEN[(d, e)]))
    return res


def table2() -> TableResult:
    """Raw-cap trace against the budget-based bounds for the reference grid."""
    res = TableResult([])
    for d in TABLE_D:
        for e in TABLE_EPS:
            r = rawcap_vs_budget(d, float(e))
            row = (d, e, r.s_star, round4(r.exact), round4(r.kd_chi), round4(r.crude))
            res.rows.append(row)
            if row[2:] != TABLE2_GOLDEN[(d, e)]:
                res.mismatches.append((row, TABLE2_GOLDEN[(d, e)]))
    return res


TABLE1_HEADER = ("d", "eps0", "s_star", "T_star", "nR_iid", "nR_fc")
TABLE2_HEADER = ("d", "eps0", "s_star", "T_exact", "Kd_chi", "crude")


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    return buf.getvalue()
