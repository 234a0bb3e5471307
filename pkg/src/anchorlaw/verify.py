"""Seeded property suites shared by the CLI ``verify`` command and the tests."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import anchor, binary_rr, ldp_check, reconstruct
from .design import augmented_rr, chi_star, lambda_star, moment_stats, trace_cap_check, worst_risk_fc
from .projective import fiber, reconstruct_from_fiber, transport
from .sampling import random_channel, random_feasible_scalar, random_interior_base, random_law
from .shuffle import brute_force_shuffle, default_alphas, endpoint_law, envelope_check, pair_profile, rigidity_probe
from .simplex import symmetrize


@dataclass
class SuiteResult:
    """Outcome of one property suite.

    ``worst`` is the smallest slack seen (a negative slack beyond ``-tol`` is a
    failure) or the largest error, depending on ``kind``.
    """

    name: str
    cases: int = 0
    failures: int = 0
    worst: float = math.inf
    kind: str = "slack"
    tol: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failures == 0 and self.cases > 0

    def record_slack(self, slack: float):
        self.cases += 1
        self.worst = min(self.worst, slack)
        if slack < -self.tol:
            self.failures += 1

    def record_error(self, err: float):
        self.cases += 1
        self.worst = err if self.worst == math.inf else max(self.worst, err)
        if not err <= self.tol:
            self.failures += 1

    def summary(self) -> str:
        label = "min slack" if self.kind == "slack" else "max error"
        status = "PASS" if self.ok else "FAIL"
        return f"{self.name}: {status} {self.cases - self.failures}/{self.cases} ({label} {self.worst:.3e}, tol {self.tol:g})"


def suite_envelope(seed: int, count: int = 200, tol: float = 1e-10) -> SuiteResult:
    """Random eps0-LDP channels never beat the shuffled BRR envelope."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("envelope", tol=tol)
    for _ in range(count):
        eps0 = float(rng.choice([0.5, 1.0, 2.0]))
        d = int(rng.integers(2, 6))
        K = int(rng.integers(2, 6))
        n = int(rng.integers(1, 6))
        rho = random_law(d, K, rng, eps0=eps0)
        rep = envelope_check(rho, eps0, n, tol=tol)
        res.record_slack(rep.min_slack)
    for eps0 in (0.5, 1.0, 2.0):
        for n in range(1, 6):
            rep = envelope_check(anchor(binary_rr(eps0)), eps0, n)
            gap = max(abs(p.forward) for p in rep.pairs)
            gap = max(gap, max(abs(p.reverse) for p in rep.pairs))
            if gap >= 1e-12:
                res.failures += 1
                res.notes.append(f"BRR eps0={eps0} n={n} slack {gap:.3e}")
    return res


def suite_oracle(seed: int, count: int = 100, tol: float = 1e-10) -> SuiteResult:
    """Histogram enumeration agrees with the scalar-shadow profile."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("oracle", kind="error", tol=tol)
    for _ in range(count):
        d = int(rng.integers(2, 5))
        K = int(rng.integers(2, 5))
        W = random_channel(d, K, rng)
        rho = anchor(W)
        span = ldp_check(rho, 0.0).worst_log_ratio
        for n in range(1, 6):
            alphas = default_alphas(span, 1) if span > 0 else np.ones(1)
            err = 0.0
            for i, j in itertools.permutations(range(d), 2):
                bf = brute_force_shuffle(W, i, j, n, alphas)
                sh = pair_profile(rho, i, j, n, alphas)
                err = max(err, np.abs(bf.forward - sh.forward).max(), np.abs(bf.reverse - sh.reverse).max())
            res.record_error(float(err))
    return res


def suite_tracecap(seed: int, count: int = 500, tol: float = 1e-9) -> SuiteResult:
    """``tr Sigma <= K_d chi*`` on random laws and equality for augmented RR at ``lambda*``."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("tracecap", tol=tol)
    for _ in range(count):
        d = int(rng.integers(3, 9))
        rho = random_law(d, int(rng.integers(2, 2 * d)), rng, concentration=float(rng.choice([0.3, 1.0, 5.0])))
        res.record_slack(trace_cap_check(rho))
    for d in range(3, 9):
        for p in (0.1, 0.5, 1.0):
            s = trace_cap_check(augmented_rr(d, p, lambda_star(d)))
            if abs(s) >= 1e-12:
                res.failures += 1
                res.notes.append(f"augmented RR d={d} p={p} slack {s:.3e}")
    return res


def suite_transport(seed: int, count: int = 100, tol: float = 1e-10) -> SuiteResult:
    """Channel and fiber round trips plus transport triangles."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("transport", kind="error", tol=tol)
    for _ in range(count):
        d = int(rng.integers(2, 6))
        rho = random_law(d, int(rng.integers(2, 6)), rng)
        B = rho.basis
        back = anchor(reconstruct(rho))
        err = _law_error(back, rho)
        g, h, k = (random_interior_base(d, rng, B) for _ in range(3))
        f = fiber(rho, h)
        err = max(err, _law_error(reconstruct_from_fiber(f), rho))
        direct = fiber(rho, k)
        via = transport(transport(fiber(rho, g), h), k)
        tri = _fiber_error(via, direct)
        err = max(err, _fiber_error(transport(f, k), direct))
        res.record_error(err)
        if tri > 1e-9:
            res.failures += 1
            res.notes.append(f"transport triangle error {tri:.3e}")
    return res


def _law_error(a, b) -> float:
    if a.size != b.size:
        return math.inf
    return float(max(np.abs(a.weights - b.weights).max(), np.abs(a.templates - b.templates).max()))


def _fiber_error(a, b) -> float:
    if a.size != b.size:
        return math.inf
    return float(max(np.abs(a.weights - b.weights).max(), np.abs(a.points - b.points).max()))


def suite_symmetrization(seed: int, count: int = 200, tol: float = 1e-10) -> SuiteResult:
    """Symmetrizing never raises chi* or the worst fixed-composition risk."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("symmetrization", tol=tol)
    for _ in range(count):
        d = int(rng.integers(2, 6))
        rho = random_law(d, int(rng.integers(2, 6)), rng)
        sym = symmetrize(rho)
        slack = chi_star(rho).value - chi_star(sym).value
        r0, _ = worst_risk_fc(rho, 1)
        r1, _ = worst_risk_fc(sym, 1)
        if math.isinf(r0):
            rslack = math.inf
        else:
            rslack = r0 - r1
        sig = moment_stats(sym).sigma
        iso = np.abs(sig - np.trace(sig) / (d - 1) * np.eye(d - 1)).max()
        res.record_slack(min(slack, rslack))
        if iso > 1e-12:
            res.failures += 1
            res.notes.append(f"symmetrized covariance off isotropy by {iso:.3e}")
    return res


def suite_rigidity(seed: int, count: int = 100, gap: float = 1e-6) -> SuiteResult:
    """Every feasible non-endpoint law shows a grid gap; the endpoint law saturates."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("rigidity", tol=0.0)
    for _ in range(count):
        eps0 = float(rng.choice([0.5, 1.0, 2.0]))
        n = int(rng.integers(1, 6))
        mu = random_feasible_scalar(eps0, rng, k=int(rng.integers(1, 4)))
        v = rigidity_probe(mu, eps0, n)
        size = abs(v.size) if v.status == "GAP" else 0.0
        res.record_slack(size - gap)
    for eps0 in (0.5, 1.0, 2.0):
        for n in range(1, 6):
            if rigidity_probe(endpoint_law(eps0), eps0, n).status != "SATURATED":
                res.failures += 1
                res.notes.append(f"endpoint law not saturated at eps0={eps0}, n={n}")
    return res


def suite_tables(seed: int = 0) -> SuiteResult:
    from .rawcap import table1, table2

    res = SuiteResult("tables", kind="error", tol=0.0)
    for t in (table1(), table2()):
        res.record_error(float(len(t.mismatches)))
        res.notes.extend(str(m) for m in t.mismatches)
    return res


SUITES = {
    "envelope": suite_envelope,
    "oracle": suite_oracle,
    "tracecap": suite_tracecap,
    "transport": suite_transport,
    "symmetrization": suite_symmetrization,
    "rigidity": suite_rigidity,
    "tables": suite_tables,
}
