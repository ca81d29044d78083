"""Assembly of the critical-probability lower bounds.

Two modes: the closed-form bound 1/(8(d-1)), exact as a rational, and the
chain-improved bound 1/(8(d-1) L0^2) where L0 is a certified upper bound on
the schedule-maximised path-growth ratio produced by :mod:`entperc.certify`.
Also houses the Chernoff rate used by the direct path-count argument and the
truncated / closed-form series bounding the expected number of good paths
reaching radius r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import certify
from .chain import candidate_minimum
from .errors import DivergentParametersError
from .interval import Interval


def chernoff_rate(alpha: float, d: int) -> float:
    """Closed lower bound of the binomial large-deviation rate.

    -log 2 + log(2d-1) - (1-alpha) log(2d-2); may be negative for small
    alpha, in which case the downstream inequality it feeds is trivial.
    """
    return -math.log(2.0) + math.log(2 * d - 1) - (1.0 - alpha) * math.log(2 * d - 2)


def chernoff_rate_exact(alpha: float, d: int) -> float:
    """Binomial relative-entropy rate for a fraction alpha of successes
    against success probability 1/(2d-1)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    q = 1.0 / (2 * d - 1)

    def xlog(t, u):
        return 0.0 if t == 0.0 else t * math.log(t / u)

    return xlog(alpha, q) + xlog(1.0 - alpha, 1.0 - q)


def series_base(d: int, big_m: int, p: float) -> float:
    """Geometric base (2d-2)^(1+2/(M-2)) * p of the radius series."""
    if big_m < 4 or big_m % 2:
        raise ValueError("M must be an even integer >= 4")
    return (2 * d - 2) ** (1.0 + 2.0 / (big_m - 2)) * p


def expected_paths_sum(d: int, p: float, r: int, big_m: int, m_max: int) -> float:
    """Truncated double sum bounding the expected number of good paths that
    start at the origin and end at l1 distance r.

    Sums ((r+2m)/M + 1) 2^(r+2m+1) (2d-2)^((r+2m)(1-i/M)) p^((r+2m)(1-(i+1)/M))
    over m <= m_max and i < M/2; requires the geometric base below 1/4.
    """
    b = series_base(d, big_m, p)
    if b >= 0.25:
        raise DivergentParametersError(f"series base {b} >= 1/4")
    w = float(2 * d - 2)
    total = 0.0
    for m in range(m_max + 1):
        n = r + 2 * m
        pref = (n / big_m + 1.0) * 2.0 ** (n + 1)
        inner = 0.0
        for i in range(big_m // 2):
            inner += w ** (n * (1.0 - i / big_m)) * p ** (n * (1.0 - (i + 1) / big_m))
        total += pref * inner
    return total


def expected_paths_closed(d: int, p: float, r: int) -> float:
    """Closed form bounding the same series, with M tied to r as r or r-1.

    Equals 4b/((1-b)(1-4b)) (1 + (1+4b)/((r-1)(1-4b))) (2 sqrt(b))^r and
    decays like (2 sqrt(b))^r.
    """
    if r < 3:
        raise ValueError("r must be >= 3 so that M >= r-1 is a valid even choice")
    big_m = r if r % 2 == 0 else r - 1
    b = series_base(d, big_m, p)
    if b >= 0.25:
        raise DivergentParametersError(f"series base {b} >= 1/4")
    lead = 4.0 * b / ((1.0 - b) * (1.0 - 4.0 * b))
    corr = 1.0 + (1.0 + 4.0 * b) / ((r - 1) * (1.0 - 4.0 * b))
    return lead * corr * (2.0 * math.sqrt(b)) ** r


@dataclass(frozen=True)
class SeriesReport:
    """Side-by-side truncated-sum and closed-form path bounds."""

    d: int
    p: float
    r: int
    big_m: int
    m_max: int
    truncated_sum: float
    closed_form: float
    base: float


def series_report(d: int, p: float, r: int, m_max: int = 400) -> SeriesReport:
    big_m = r if r % 2 == 0 else r - 1
    return SeriesReport(
        d=d,
        p=p,
        r=r,
        big_m=big_m,
        m_max=m_max,
        truncated_sum=expected_paths_sum(d, p, r, big_m, m_max),
        closed_form=expected_paths_closed(d, p, r),
        base=series_base(d, big_m, p),
    )


def theorem1_bound(d: int) -> Fraction:
    """Closed-form critical-probability lower bound 1/(8(d-1))."""
    if d < 3:
        raise ValueError("the closed-form bound needs d >= 3")
    return Fraction(1, 8 * (d - 1))


def final_bound(d: int, l0: float) -> float:
    """Improved lower bound 1/(8(d-1) l0^2), rounded downward.

    With l0 = 1 this degenerates to the closed-form bound.
    """
    if not 0.0 < l0:
        raise ValueError("l0 must be positive")
    value = 1.0 / (Interval.exact(8 * (d - 1)) * Interval.exact(l0) ** 2)
    return value.lo


def conjecture_value(d: int, rate_lower: float) -> float:
    """Exploratory value exp(2 rate)/(2d-1)^2, rounded downward.

    Reported alongside the certified bound for comparison; never asserted as
    a theorem.
    """
    s = Interval(rate_lower, rate_lower)
    return ((s * 2.0).exp() / Interval.exact((2 * d - 1) ** 2)).lo


def ideal_ratio(d: int, rate_at_half: float) -> float:
    """(2d-1) exp(-rate)/(2 sqrt(2d-2)): the infinitely-fine-schedule ratio."""
    return (2 * d - 1) * math.exp(-rate_at_half) / (2.0 * math.sqrt(2 * d - 2))


def heuristic_l0(d: int, schedule: certify.AlphaSchedule, slack: float = 2e-5) -> float:
    """Slacked upper estimate of the schedule ratio from heuristic minima.

    Walks the schedule from the top with warm starts; the result is a target
    for certification, not itself certified.
    """
    vals = schedule.values
    rate = {}
    x0 = None
    for a in reversed(vals[1:-1]):
        q, v = candidate_minimum(d, a, starts=2, x0=x0)
        x0 = np.array([q.x, q.b, q.c])
        rate[a] = max(v, 0.0)
    w = float(2 * d - 2)
    cand = max(
        (2 * d - 1) * math.exp(-rate[vals[i - 1]]) / (2.0 * w ** (1.0 - vals[i]))
        for i in range(2, len(vals))
    )
    return math.nextafter(cand * math.exp(slack), math.inf)


@dataclass
class MarkovBoundResult:
    """Certified chain-improved bound plus its full provenance."""

    d: int
    value: float
    l0: float
    schedule: certify.AlphaSchedule
    certificate: certify.ScheduleCertificate
    conjectural: float | None = None

    @property
    def proven(self) -> bool:
        return self.certificate.proven

    def to_json_dict(self, include_times: bool = True) -> dict:
        out = {
            "d": self.d,
            "mode": "MarkovImproved",
            "value": self.value,
            "l0": self.l0,
            "roundingMode": "downward",
            "schedulePoints": len(self.schedule.values),
            "certificate": self.certificate.to_json_dict(include_times),
        }
        if self.conjectural is not None:
            out["conjectureValue"] = self.conjectural
            out["conjectureStatus"] = "conjectural"
        return out


def markov_bound(
    d: int,
    schedule: certify.AlphaSchedule | None = None,
    n_points: int | None = None,
    top_step: float | None = None,
    slack: float | None = None,
    l0: float | None = None,
    node_budget: int = certify.DEFAULT_NODE_BUDGET,
    shared: bool = True,
    with_conjecture: bool = True,
) -> MarkovBoundResult:
    """End-to-end certified chain-improved bound for dimension d.

    When ``l0`` is not supplied it is estimated heuristically from the
    schedule and then certified; the returned value is valid only when the
    certificate's verdict is Proven.  Desk-scale defaults: d = 3 aims within
    ~1e-4 relative of the ideal ratio; higher dimensions have far more
    headroom and use a coarser, faster schedule.
    """
    if n_points is None:
        n_points = 500 if d == 3 else 400
    if top_step is None:
        top_step = 1e-5 if d == 3 else 1e-4
    if slack is None:
        slack = 2e-5 if d == 3 else 1e-4
    if schedule is None:
        schedule = certify.build_schedule(d, n_points=n_points, top_step=top_step)
    if l0 is None:
        l0 = heuristic_l0(d, schedule, slack=slack)
    cert = certify.certify_schedule(d, schedule, l0, node_budget=node_budget,
                                    shared=shared)
    conj = None
    if with_conjecture and cert.proven:
        # the top-index threshold is a certified rate bound just below 0.5
        thr = certify.index_threshold(d, schedule.values[-1], l0)
        if thr > 0.0:
            conj = conjecture_value(d, thr)
    return MarkovBoundResult(
        d=d,
        value=final_bound(d, l0),
        l0=l0,
        schedule=schedule,
        certificate=cert,
        conjectural=conj,
    )
