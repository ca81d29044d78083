"""Certified lower bounds for the chain entropy rate via branch and bound.

The objective is the relative entropy of :mod:`entperc.chain` restricted to
pair-empirical matrices with descending-state mass ``alpha``, minimised over
the reduced coordinates (x, b, c).  Blocks are bounded from below by the best
of three certified methods:

* ``monotone``   - summand-wise analysis of the t*log(t/K) shape, valid up to
  the boundary of the feasible region;
* ``firstOrder`` - value at the lower corner plus the negative parts of an
  interval enclosure of the gradient over the block;
* ``secondOrder`` - corner value, corner gradient and the negative parts of
  interval Hessian bounds over the block.

All three run in outward-rounded interval arithmetic (:mod:`entperc.interval`)
over numpy arrays of blocks, so a whole frontier is bounded per pass.  Blocks
whose best bound stays below the threshold are bisected, cycling the split
axis x -> b -> c.  Every block's fate is independent of every other block, so
the final verdict does not depend on processing order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import interval as iv
from .chain import QParams, candidate_minimum, feasible_box
from .errors import EmptyIntersectionError

_INF = float("inf")

MONOTONE = "monotone"
FIRST_ORDER = "firstOrder"
SECOND_ORDER = "secondOrder"
_METHODS = (MONOTONE, FIRST_ORDER, SECOND_ORDER)

DEFAULT_NODE_BUDGET = 100_000_000
DEFAULT_MAX_DEPTH = 200
_CHUNK = 200_000


def as_threshold(value) -> float:
    """Smallest float >= the given exact threshold (sound to certify against)."""
    if isinstance(value, float):
        return value
    frac = value if isinstance(value, Fraction) else Fraction(str(value))
    f = float(frac)
    return f if Fraction(f) >= frac else math.nextafter(f, _INF)


@dataclass(frozen=True)
class ParamBox:
    """Axis-aligned block in (x, b, c) space at fixed alpha."""

    x: tuple[float, float]
    b: tuple[float, float]
    c: tuple[float, float]
    alpha: float
    depth: int = 0

    def as_row(self) -> np.ndarray:
        return np.array([[*self.x, *self.b, *self.c]])


@dataclass
class SigmaCertificate:
    """Outcome of one entropy-rate certification run."""

    d: int
    alpha: float
    threshold: float
    verdict: str  # "Proven" | "Failed" | "BudgetExceeded"
    nodes: int
    max_depth: int
    method_counts: dict[str, int]
    elapsed_seconds: float
    arithmetic: str = "interval-outward"
    witness: tuple[float, float, float] | None = None

    @property
    def proven(self) -> bool:
        return self.verdict == "Proven"

    def to_json_dict(self, include_times: bool = True) -> dict:
        out = {
            "d": self.d,
            "alpha": self.alpha,
            "threshold": self.threshold,
            "verdict": self.verdict,
            "nodes": self.nodes,
            "maxDepth": self.max_depth,
            "methodCounts": dict(self.method_counts),
            "arithmeticMode": self.arithmetic,
        }
        if include_times:
            out["elapsedSeconds"] = self.elapsed_seconds
        if self.witness is not None:
            out["witness"] = list(self.witness)
        return out


class _Blocks:
    """Interval ranges shared by the bounding methods.

    Built either from full blocks (lo < hi) or from corners (thin ranges),
    and from either a fixed alpha or an alpha range: a bound computed over an
    alpha range holds for every alpha in it, which lets one pass certify a
    whole group of schedule indices.  Derived quantities a, s, alpha - x and
    b + c carry directed rounding and are clipped to the nonnegative part,
    which only widens the enclosures of their values on the feasible region.
    """

    __slots__ = ("xlo", "xhi", "blo", "bhi", "clo", "chi",
                 "alo", "ahi", "slo", "shi", "rlo", "rhi", "plo", "phi",
                 "alpha_lo", "alpha_hi")

    def __init__(self, xlo, xhi, blo, bhi, clo, chi,
                 alpha_lo: float, alpha_hi: float):
        nad, nau = iv._nad, iv._nau
        self.alpha_lo, self.alpha_hi = alpha_lo, alpha_hi
        self.xlo, self.xhi = xlo, xhi
        self.blo, self.bhi = blo, bhi
        self.clo, self.chi = clo, chi
        self.alo = np.maximum(
            nad(nad(nad(nad(1.0 - 2.0 * bhi) - chi) - xhi) - alpha_hi), 0.0)
        self.ahi = nau(nau(nau(nau(1.0 - 2.0 * blo) - clo) - xlo) - alpha_lo)
        self.slo = np.maximum(nad(nad(nad(1.0 - bhi) - chi) - alpha_hi), 0.0)
        self.shi = nau(nau(nau(1.0 - blo) - clo) - alpha_lo)
        self.rlo = np.maximum(nad(alpha_lo - xhi), 0.0)  # alpha - x
        self.rhi = np.maximum(nau(alpha_hi - xlo), 0.0)
        self.plo = nad(blo + clo)  # b + c
        self.phi = nau(bhi + chi)

    def summands(self, d: int):
        """(q, u, pnum) descriptors of the seven entropy terms q*log(qR/(u*pnum))."""
        a_lo = np.full_like(self.xlo, self.alpha_lo)
        a_hi = np.full_like(self.xlo, self.alpha_hi)
        return (
            (self.alo, self.ahi, self.slo, self.shi, 2 * d - 3),
            (self.blo, self.bhi, self.slo, self.shi, 1),
            (self.xlo, self.xhi, self.slo, self.shi, 1),
            (self.blo, self.bhi, self.plo, self.phi, 2 * d - 2),
            (self.clo, self.chi, self.plo, self.phi, 1),
            (self.xlo, self.xhi, a_lo, a_hi, 2 * d - 2),
            (self.rlo, self.rhi, a_lo, a_hi, 1),
        )


def _block_ranges(rows: np.ndarray, alpha_lo: float, alpha_hi: float) -> _Blocks:
    xhi = np.minimum(rows[:, 1], alpha_hi)  # clip to the x <= alpha constraint
    return _Blocks(rows[:, 0], xhi, rows[:, 2], rows[:, 3], rows[:, 4], rows[:, 5],
                   alpha_lo, alpha_hi)


def _corner_ranges(rows: np.ndarray, alpha_lo: float, alpha_hi: float) -> _Blocks:
    x, b, c = rows[:, 0], rows[:, 2], rows[:, 4]
    return _Blocks(x, x, b, b, c, c, alpha_lo, alpha_hi)


def _feasible_mask(r: _Blocks) -> np.ndarray:
    """Blocks that may intersect {a >= 0, 0 <= x <= alpha} (conservative)."""
    return (r.xlo <= r.alpha_hi) & (r.ahi >= 0.0) & (r.xlo <= r.xhi)


def _stacked(r: _Blocks, d: int):
    """Seven summand descriptors stacked along one axis of length 7n."""
    summands = r.summands(d)
    qlo = np.concatenate([s[0] for s in summands])
    qhi = np.concatenate([s[1] for s in summands])
    ulo = np.concatenate([s[2] for s in summands])
    uhi = np.concatenate([s[3] for s in summands])
    n = r.xlo.shape[0]
    pnum = np.repeat(np.array([float(s[4]) for s in summands]), n)
    return qlo, qhi, ulo, uhi, pnum


def _monotone_lower(r: _Blocks, d: int) -> np.ndarray:
    """Summand-wise certified lower bound, valid on any block.

    Each term q log(qR/(u pnum)) is decreasing in u and has the t*log(t/K)
    shape in q: decreasing below K/e, increasing above, with minimum -K/e.
    q and u are decoupled here, which only lowers the bound.
    """
    nad, nau = iv._nad, iv._nau
    R = 2 * d - 1
    n = r.xlo.shape[0]
    qlo, qhi, _, uhi, pnum = _stacked(r, d)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        up = nau(uhi * pnum)
        k_hi = nau(nau(up * iv.INV_E_HI) / R)
        k_lo = nad(nad(nad(uhi * pnum) * iv.INV_E_LO) / R)
        at_hi = qhi <= k_lo  # entirely in the decreasing region
        at_lo = qlo >= k_hi  # entirely in the increasing region
        q_sel = np.where(at_hi, qhi, qlo)
        psi = nad(q_sel * iv.log_down(nad(nad(q_sel * R) / up)))
        psi = np.where(q_sel <= 0.0, 0.0, psi)
        val = np.where(at_hi | at_lo, psi, -k_hi)
        val = np.where((uhi <= 0.0) | (qhi <= 0.0), 0.0, val)
        total = np.zeros(n)
        for j in range(7):
            total = nad(total + val[j * n:(j + 1) * n])
    return total


def _value_iv(r: _Blocks, d: int):
    """Enclosure of the entropy over thin (corner) ranges.

    Assumes every summand has q_lo > 0 and u_lo > 0; callers mask corners on
    the boundary before calling.
    """
    nad, nau = iv._nad, iv._nau
    R = 2 * d - 1
    n = r.xlo.shape[0]
    qlo, qhi, ulo, uhi, pnum = _stacked(r, d)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        llo = iv.log_down(nad(nad(qlo * R) / nau(uhi * pnum)))
        lhi = iv.log_up(nau(nau(qhi * R) / nad(ulo * pnum)))
        # q >= 0: products take matching ends
        tlo = np.minimum(nad(qlo * llo), nad(qhi * llo))
        thi = np.maximum(nau(qlo * lhi), nau(qhi * lhi))
        flo = np.zeros(n)
        fhi = np.zeros(n)
        for j in range(7):
            flo = nad(flo + tlo[j * n:(j + 1) * n])
            fhi = nau(fhi + thi[j * n:(j + 1) * n])
    return flo, fhi


def _gradient_lower(r: _Blocks, d: int):
    """Lower ends of the entropy gradient over the ranges (can be -inf)."""
    nad, nau = iv._nad, iv._nau
    R = 2 * d - 1
    t = 2 * d - 3
    w = 2 * d - 2
    n = r.xlo.shape[0]
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        ratios = np.concatenate([
            nad(nad(r.xlo * t) / r.ahi),
            nad(r.xlo / nau(r.rhi * w)),
            nad(nad(nad(nad(r.blo * r.slo) * (t * t)) / nau(r.ahi * r.ahi)) / R),
            nad(nad(r.blo * R) / nau(r.phi * w)),
            nad(nad(r.slo * t) / nau(r.ahi * R)),
            nad(nad(r.clo * R) / r.phi),
        ])
        logs = iv.log_down(ratios)
        gx = nad(logs[0:n] + logs[n:2 * n])
        gb = nad(logs[2 * n:3 * n] + logs[3 * n:4 * n])
        gc = nad(logs[4 * n:5 * n] + logs[5 * n:6 * n])
    return gx, gb, gc


def _hessian_lower(r: _Blocks, d: int):
    """Lower ends of the six Hessian entries over the ranges (can be -inf)."""
    nad, nau = iv._nad, iv._nau
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        inv_a = nad(1.0 / r.ahi)
        neg = nau(nau(1.0 / r.slo) + nau(1.0 / r.plo))  # 1/s + 1/(b+c), upper
        hxx = nad(nad(nad(2.0 / r.xhi) + inv_a) + nad(1.0 / r.rhi))
        hxb = nad(2.0 / r.ahi)
        hxc = inv_a
        hbb = nad(nad(nad(2.0 / r.bhi) + nad(4.0 / r.ahi)) - neg)
        hbc = nad(nad(2.0 / r.ahi) - neg)
        hcc = nad(nad(nad(1.0 / r.chi) + inv_a) - neg)
    return hxx, hxb, hxc, hbb, hbc, hcc


def _neg_part_term(g_lo, width_hi):
    """min(0, g_lo) * width, rounded down, with 0*inf avoided."""
    with np.errstate(invalid="ignore"):
        prod = iv._nad(g_lo * width_hi)
    return np.where((g_lo >= 0.0) | (width_hi <= 0.0), 0.0, prod)


def _interior_corner_mask(rows: np.ndarray, alpha_lo: float, alpha_hi: float) -> np.ndarray:
    """Corners where value and gradient evaluations are strictly interior."""
    x, b, c = rows[:, 0], rows[:, 2], rows[:, 4]
    corner = _Blocks(x, x, b, b, c, c, alpha_lo, alpha_hi)
    return (
        (x > 0.0) & (b > 0.0) & (c > 0.0) & (x < alpha_lo)
        & (corner.alo > 0.0) & (corner.slo > 0.0)
    )


def _widths(rows: np.ndarray, alpha_hi: float):
    nau = iv._nau
    wx = nau(np.minimum(rows[:, 1], alpha_hi) - rows[:, 0])
    wb = nau(rows[:, 3] - rows[:, 2])
    wc = nau(rows[:, 5] - rows[:, 4])
    return np.maximum(wx, 0.0), np.maximum(wb, 0.0), np.maximum(wc, 0.0)


def _bound_blocks(rows: np.ndarray, d: int, alpha_lo: float, alpha_hi: float):
    """Certified lower bounds of the entropy over blocks, per method.

    Bounds hold simultaneously for every alpha in [alpha_lo, alpha_hi].
    Returns (bounds (n,3) array in method order, corner value enclosure
    (flo, fhi) with -inf/+inf where the corner is not strictly interior,
    feasibility mask).
    """
    nad = iv._nad
    r = _block_ranges(rows, alpha_lo, alpha_hi)
    feas = _feasible_mask(r)
    mono = _monotone_lower(r, d)

    interior = _interior_corner_mask(rows, alpha_lo, alpha_hi)
    cr = _corner_ranges(rows, alpha_lo, alpha_hi)
    cflo, cfhi = _value_iv(cr, d)
    cflo = np.where(interior, cflo, -_INF)
    cfhi = np.where(interior, cfhi, _INF)

    wx, wb, wc = _widths(rows, alpha_hi)

    bgx, bgb, bgc = _gradient_lower(r, d)
    first = nad(nad(nad(cflo + _neg_part_term(bgx, wx)) + _neg_part_term(bgb, wb))
                + _neg_part_term(bgc, wc))

    cgx, cgb, cgc = _gradient_lower(cr, d)
    hxx, hxb, hxc, hbb, hbc, hcc = _hessian_lower(r, d)
    with np.errstate(invalid="ignore", over="ignore"):
        quad = _neg_part_term(hxx, iv._nau(wx * wx))
        quad = nad(quad + _neg_part_term(hbb, iv._nau(wb * wb)))
        quad = nad(quad + _neg_part_term(hcc, iv._nau(wc * wc)))
        quad = nad(quad + _neg_part_term(hxb, iv._nau(2.0 * (wx * wb))))
        quad = nad(quad + _neg_part_term(hxc, iv._nau(2.0 * (wx * wc))))
        quad = nad(quad + _neg_part_term(hbc, iv._nau(2.0 * (wb * wc))))
    second = nad(cflo + _neg_part_term(cgx, wx))
    second = nad(second + _neg_part_term(cgb, wb))
    second = nad(second + _neg_part_term(cgc, wc))
    second = nad(second + 0.5 * quad)

    bounds = np.stack([mono, first, second], axis=1)
    bounds = np.where(np.isnan(bounds), -_INF, bounds)
    return bounds, (cflo, cfhi), feas


def box_lower_bound(box: ParamBox, d: int, method: str) -> float:
    """Certified lower bound of the entropy over one block, single method."""
    if method not in _METHODS:
        raise ValueError(f"unknown method {method!r}")
    rows = box.as_row()
    r = _block_ranges(rows, box.alpha, box.alpha)
    if not _feasible_mask(r)[0]:
        raise EmptyIntersectionError(f"{box} does not meet the feasible region")
    bounds, _, _ = _bound_blocks(rows, d, box.alpha, box.alpha)
    return float(bounds[0, _METHODS.index(method)])


def _split_rows(rows: np.ndarray, depth: np.ndarray):
    """Bisect each block on the axis depth % 3 (x -> b -> c cycle).

    Falls back to the next axis when the preferred one has collapsed to a
    point; blocks with no splittable axis are returned separately.
    """
    n = rows.shape[0]
    axis = (depth % 3).astype(np.int64)
    lo = np.empty(n)
    hi = np.empty(n)
    chosen = np.full(n, -1, dtype=np.int64)
    for attempt in range(3):
        cand = (axis + attempt) % 3
        clo = rows[np.arange(n), 2 * cand]
        chi = rows[np.arange(n), 2 * cand + 1]
        mid = 0.5 * (clo + chi)
        ok = (chosen < 0) & (mid > clo) & (mid < chi)
        chosen = np.where(ok, cand, chosen)
        lo = np.where(ok, clo, lo)
        hi = np.where(ok, chi, hi)
    splittable = chosen >= 0
    idx = np.nonzero(splittable)[0]
    stuck = rows[~splittable]
    if idx.size == 0:
        return np.empty((0, 6)), np.empty(0, dtype=depth.dtype), stuck
    sub = rows[idx]
    ax = chosen[idx]
    mid = 0.5 * (lo[idx] + hi[idx])
    left = sub.copy()
    right = sub.copy()
    rng = np.arange(idx.size)
    left[rng, 2 * ax + 1] = mid
    right[rng, 2 * ax] = mid
    children = np.concatenate([left, right], axis=0)
    cdepth = np.concatenate([depth[idx] + 1, depth[idx] + 1])
    return children, cdepth, stuck


def start_rows(alpha: float) -> np.ndarray:
    """Outer feasible block at the given alpha, as a rows array."""
    (x0, x1), (b0, b1), (c0, c1) = feasible_box(alpha)
    return np.array([[x0, x1, b0, b1, c0, c1]])


@dataclass
class _RunState:
    nodes: int = 0
    max_depth: int = 0
    method_counts: dict = field(default_factory=lambda: {m: 0 for m in _METHODS})
    failed_witness: tuple | None = None
    budget_hit: bool = False


def _certify_on(rows, depth, d, alpha_lo, alpha_hi, threshold, node_budget,
                max_depth, state: _RunState, keep_leaves: bool = False,
                detect_failure: bool = True):
    """Drive blocks to certification against the threshold.

    A bound certified over [alpha_lo, alpha_hi] holds for every alpha in the
    range.  Returns the leaf (rows, depth) pairs when ``keep_leaves`` (for
    the shared-partition mode), else None.  Sets state.failed_witness or
    state.budget_hit when the run cannot prove the bound; failure detection
    is only meaningful at a point alpha and is disabled for true ranges.
    """
    leaves = [] if keep_leaves else None
    stack = [(rows, depth)]
    while stack:
        rows, depth = stack.pop()
        if rows.shape[0] == 0:
            continue
        if rows.shape[0] > _CHUNK:
            stack.append((rows[_CHUNK:], depth[_CHUNK:]))
            rows, depth = rows[:_CHUNK], depth[:_CHUNK]
        if state.nodes + rows.shape[0] > node_budget:
            state.budget_hit = True
            if keep_leaves:
                leaves.append((rows, depth))
                leaves.extend(stack)
            return leaves
        state.nodes += rows.shape[0]
        state.max_depth = max(state.max_depth, int(depth.max(initial=0)))

        # cheap stage: feasibility and the monotone bound on the whole chunk
        r = _block_ranges(rows, alpha_lo, alpha_hi)
        feas = _feasible_mask(r)
        mono = np.where(feas, _monotone_lower(r, d), _INF)
        done = ~feas | (mono >= threshold)
        state.method_counts[MONOTONE] += int((feas & (mono >= threshold)).sum())

        # expensive stage: gradient/Hessian methods on the survivors only
        surv = np.nonzero(~done)[0]
        if surv.size:
            bounds, (cflo, cfhi), _ = _bound_blocks(rows[surv], d, alpha_lo,
                                                    alpha_hi)
            proven = bounds[:, 1:] >= threshold
            if detect_failure and alpha_lo == alpha_hi and np.any(cfhi < threshold):
                i = surv[int(np.argmax(cfhi < threshold))]
                state.failed_witness = (float(rows[i, 0]), float(rows[i, 2]),
                                        float(rows[i, 4]))
                return leaves
            state.method_counts[FIRST_ORDER] += int(proven[:, 0].sum())
            state.method_counts[SECOND_ORDER] += int((proven[:, 1]
                                                      & ~proven[:, 0]).sum())
            done[surv] = proven.any(axis=1)
        if keep_leaves and done.any():
            leaves.append((rows[done], depth[done]))
        todo = ~done
        if not todo.any():
            continue
        at_cap = depth[todo] >= max_depth
        if at_cap.any():
            state.budget_hit = True
            if keep_leaves:
                leaves.append((rows[todo][at_cap], depth[todo][at_cap]))
            rows_go, depth_go = rows[todo][~at_cap], depth[todo][~at_cap]
        else:
            rows_go, depth_go = rows[todo], depth[todo]
        if rows_go.shape[0] == 0:
            continue
        children, cdepth, stuck = _split_rows(rows_go, depth_go)
        if stuck.shape[0]:
            # cannot refine further; interval width exhausted
            state.budget_hit = True
            if keep_leaves:
                leaves.append((stuck, np.full(stuck.shape[0], max_depth,
                                              dtype=depth.dtype)))
        if children.shape[0]:
            stack.append((children, cdepth))
    return leaves


def _point_fails(d: int, alpha: float, threshold: float, point) -> bool:
    """True when the entropy at a feasible interior point is certifiably
    below the threshold."""
    x, b, c = point
    rows = np.array([[x, x, b, b, c, c]])
    if not _interior_corner_mask(rows, alpha, alpha)[0]:
        return False
    _, fhi = _value_iv(_corner_ranges(rows, alpha, alpha), d)
    return float(fhi[0]) < threshold


def _check_candidate(d, alpha, threshold, x0=None):
    """Certified Failed-detection at the heuristic minimiser, if conclusive."""
    q, _ = candidate_minimum(d, alpha, x0=x0)
    point = (q.x, q.b, q.c)
    return point if _point_fails(d, alpha, threshold, point) else None


def certify_sigma(d: int, alpha: float, threshold,
                  node_budget: int = DEFAULT_NODE_BUDGET,
                  max_depth: int = DEFAULT_MAX_DEPTH) -> SigmaCertificate:
    """Branch-and-bound certificate that the entropy rate at alpha is >= threshold.

    ``threshold`` may be a float, Fraction, or decimal string; non-floats are
    rounded up so the certificate also covers the exact decimal value.
    A ``Proven`` verdict means a finite partition of the outer feasible block
    was found on which every leaf's best-of-three bound clears the threshold.
    """
    t0 = time.perf_counter()
    thr = as_threshold(threshold)
    state = _RunState()

    if thr <= 0.0:
        # relative entropy is nonnegative: nothing to refine
        return SigmaCertificate(d, alpha, thr, "Proven", 0, 0,
                                {m: 0 for m in _METHODS},
                                time.perf_counter() - t0)

    witness = _check_candidate(d, alpha, thr)
    if witness is not None:
        return SigmaCertificate(d, alpha, thr, "Failed", 0, 0,
                                {m: 0 for m in _METHODS},
                                time.perf_counter() - t0, witness=witness)

    rows = start_rows(alpha)
    depth = np.zeros(1, dtype=np.int64)
    _certify_on(rows, depth, d, alpha, alpha, thr, node_budget, max_depth, state)
    if state.failed_witness is not None:
        verdict = "Failed"
    elif state.budget_hit:
        verdict = "BudgetExceeded"
    else:
        verdict = "Proven"
    return SigmaCertificate(d, alpha, thr, verdict, state.nodes, state.max_depth,
                            state.method_counts, time.perf_counter() - t0,
                            witness=state.failed_witness)


@dataclass(frozen=True)
class AlphaSchedule:
    """Strictly increasing fractions 0 = alpha_0 < ... < alpha_k = 0.5."""

    values: tuple[float, ...]

    def __post_init__(self):
        v = self.values
        if len(v) < 2 or v[0] != 0.0 or v[-1] != 0.5:
            raise ValueError("schedule must run from 0.0 to 0.5")
        if any(a >= b for a, b in zip(v, v[1:])):
            raise ValueError("schedule must be strictly increasing")

    @property
    def k(self) -> int:
        return len(self.values) - 1

    def digest(self) -> str:
        import hashlib

        payload = ",".join(repr(a) for a in self.values).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for a in self.values:
                fh.write(f"{a!r}\n")

    @classmethod
    def load(cls, path) -> "AlphaSchedule":
        with open(path) as fh:
            vals = tuple(float(line) for line in fh if line.strip())
        return cls(vals)


_DEFAULT_ALPHA1 = {3: 0.32, 4: 0.28, 5: 0.26}


def default_alpha1(d: int) -> float:
    """First positive schedule point; must satisfy the base-case inequality."""
    if d in _DEFAULT_ALPHA1:
        return _DEFAULT_ALPHA1[d]
    # generic safe choice: 90% of the largest alpha1 allowed at L0 ~ 0.97
    w = 2.0 * d - 2.0
    return 0.9 * (1.0 - math.log((2 * d - 1) / (2 * 0.97)) / math.log(w))


def build_schedule(d: int, n_points: int = 500, alpha1: float | None = None,
                   top_step: float = 1e-5) -> AlphaSchedule:
    """Geometric schedule: steps grow away from 0.5 by a solved-for ratio.

    ``n_points`` counts the values from alpha_1 to 0.5 inclusive; alpha_0 = 0
    is prepended.  The smallest step (at 0.5) is ``top_step``.
    """
    if alpha1 is None:
        alpha1 = default_alpha1(d)
    span = 0.5 - alpha1
    m = n_points - 1  # number of steps
    if m < 1 or span <= 0:
        raise ValueError("need at least two points below 0.5")
    if top_step * m >= span:
        steps = [span / m] * m
    else:
        def total(g):
            return top_step * (g**m - 1.0) / (g - 1.0)

        lo, hi = 1.0 + 1e-12, 4.0
        while total(hi) < span:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if total(mid) < span:
                lo = mid
            else:
                hi = mid
        g = 0.5 * (lo + hi)
        steps = [top_step * g**j for j in range(m)]
    vals = [0.5]
    for s in steps:
        vals.append(vals[-1] - s)
    vals = vals[::-1]
    vals[0] = alpha1
    return AlphaSchedule((0.0, *vals[:-1], 0.5))


def index_threshold(d: int, alpha_i: float, l0: float) -> float:
    """Entropy-rate threshold the schedule requires at the previous point.

    Upper-rounded value of log((2d-1)/2) + (alpha_i - 1) log(2d-2) - log(l0);
    certifying the rate >= this value yields
    (2d-1) exp(-rate) <= l0 * 2 * (2d-2)^(1-alpha_i).
    """
    half = iv.Interval.exact(Fraction(2 * d - 1, 2)).log()
    w = iv.Interval.exact(2 * d - 2).log()
    t = half + w * iv.Interval.exact(alpha_i - 1.0) - iv.Interval.exact(l0).log()
    return t.hi


def base_case_holds(d: int, alpha1: float, l0: float) -> bool:
    """Certified check of l0 * 2 * (2d-2)^(1-alpha_1) >= 2d-1."""
    w = iv.Interval.exact(2 * d - 2)
    lhs = iv.Interval.exact(l0) * 2.0 * (w.log() * (1.0 - alpha1)).exp()
    return lhs.lo >= float(2 * d - 1)


def schedule_ratio_upper(d: int, schedule: AlphaSchedule,
                         rate_lower: dict[float, float]) -> float:
    """Certified upper bound on the schedule-maximised path-growth ratio.

    ``rate_lower`` maps each alpha_1..alpha_{k-1} to a certified lower bound
    of the entropy rate there; the result bounds
    max_i (2d-1) exp(-rate(alpha_{i-1})) / (2 (2d-2)^(1-alpha_i)).
    """
    from .errors import MissingCertificateError

    vals = schedule.values
    w = iv.Interval.exact(2 * d - 2)
    best = 0.0
    for i in range(2, len(vals)):
        a_prev, a_i = vals[i - 1], vals[i]
        if a_prev not in rate_lower:
            raise MissingCertificateError(f"no certified rate at alpha={a_prev!r}")
        s = iv.Interval(rate_lower[a_prev], rate_lower[a_prev])
        num = iv.Interval.exact(2 * d - 1) * (-s).exp()
        den = iv.Interval.exact(2) * (w.log() * (1.0 - a_i)).exp()
        best = max(best, (num / den).hi)
    return best


@dataclass
class IndexRecord:
    """Per-index outcome of a schedule certification."""

    index: int
    alpha_prev: float
    alpha_i: float
    threshold: float
    verdict: str
    nodes: int


@dataclass
class ScheduleCertificate:
    d: int
    l0: float
    schedule_digest: str
    base_case: str  # "Proven" | "Failed"
    records: list[IndexRecord]
    nodes: int
    max_depth: int
    method_counts: dict[str, int]
    partition_size: int
    elapsed_seconds: float
    arithmetic: str = "interval-outward"

    @property
    def verdict(self) -> str:
        if self.base_case != "Proven" or any(r.verdict == "Failed" for r in self.records):
            return "Failed"
        if any(r.verdict == "BudgetExceeded" for r in self.records):
            return "BudgetExceeded"
        return "Proven"

    @property
    def proven(self) -> bool:
        return self.verdict == "Proven"

    def to_json_dict(self, include_times: bool = True) -> dict:
        out = {
            "d": self.d,
            "l0": self.l0,
            "scheduleHash": self.schedule_digest,
            "verdict": self.verdict,
            "baseCase": self.base_case,
            "nodes": self.nodes,
            "maxDepth": self.max_depth,
            "methodCounts": dict(self.method_counts),
            "partitionSize": self.partition_size,
            "arithmeticMode": self.arithmetic,
            "indices": [
                {
                    "i": r.index,
                    "alphaPrev": r.alpha_prev,
                    "alphaI": r.alpha_i,
                    "threshold": r.threshold,
                    "verdict": r.verdict,
                    "nodes": r.nodes,
                }
                for r in self.records
            ],
        }
        if include_times:
            out["elapsedSeconds"] = self.elapsed_seconds
        return out


# heuristic sensitivity of margin to alpha-range width used when grouping
# schedule indices; affects efficiency only, never soundness
_GROUP_SENSITIVITY = 6.0


def _build_groups(vals, thresholds, margins):
    """Group schedule indices so one alpha-range pass can certify each group.

    Greedy top-down: an index joins the current group while the accumulated
    alpha width times a sensitivity factor stays below a quarter of the
    smallest heuristic margin seen.  Returns groups as (indices, alpha_lo,
    alpha_hi, threshold) with indices descending.
    """
    groups = []
    i = len(vals) - 1
    while i >= 2:
        idxs = [i]
        a_hi = vals[i - 1]
        a_lo = vals[i - 1]
        thr = thresholds[i]
        min_margin = margins[i]
        j = i - 1
        while j >= 2:
            width = a_hi - vals[j - 1]
            mm = min(min_margin, margins[j])
            if width * _GROUP_SENSITIVITY > 0.25 * mm:
                break
            idxs.append(j)
            a_lo = vals[j - 1]
            min_margin = mm
            thr = max(thr, thresholds[j])
            j -= 1
        groups.append((idxs, a_lo, a_hi, thr))
        i = j
    return groups


def certify_schedule(d: int, schedule: AlphaSchedule, l0: float,
                     node_budget: int = DEFAULT_NODE_BUDGET,
                     max_depth: int = DEFAULT_MAX_DEPTH,
                     shared: bool = True) -> ScheduleCertificate:
    """Certify the per-index entropy-rate inequalities implied by l0.

    Indices run from the top of the schedule downward, grouped into alpha
    ranges certified in one pass where heuristic margins allow; in shared
    mode a single partition is refined as needed and kept across groups.
    The base case covering [alpha_0, alpha_1] is checked arithmetically.
    """
    t0 = time.perf_counter()
    vals = schedule.values
    k = len(vals) - 1
    base = "Proven" if base_case_holds(d, vals[1], l0) else "Failed"
    records: dict[int, IndexRecord] = {}
    total = _RunState()

    # heuristic walk down the schedule: candidate minima give failure
    # detection and grouping margins
    thresholds = {i: index_threshold(d, vals[i], l0) for i in range(2, k + 1)}
    margins = {}
    failed = set()
    x0 = None
    for i in range(k, 1, -1):
        alpha_prev, alpha_i = vals[i - 1], vals[i]
        thr = thresholds[i]
        if thr <= 0.0:
            # relative entropy is nonnegative: index holds with no refinement
            records[i] = IndexRecord(i, alpha_prev, alpha_i, thr, "Proven", 0)
            margins[i] = _INF
            continue
        q, v = candidate_minimum(d, alpha_prev, starts=0, x0=x0)
        x0 = np.array([q.x, q.b, q.c])
        margins[i] = max(v, 0.0) - thr
        if _point_fails(d, alpha_prev, thr, (q.x, q.b, q.c)):
            records[i] = IndexRecord(i, alpha_prev, alpha_i, thr, "Failed", 0)
            failed.add(i)

    groups = _build_groups(vals, thresholds, margins)

    # hull of the per-alpha outer boxes for every certified alpha
    a_min = vals[1]
    hull = np.array([[0.0, vals[-2], 0.0, 0.5 * (1.0 - a_min), 0.0, 1.0 - a_min]])
    p_rows, p_depth = hull, np.zeros(1, dtype=np.int64)

    for idxs, a_lo, a_hi, thr in groups:
        live = [i for i in idxs if i not in records]
        if not live:
            continue
        if any(i in failed for i in idxs):
            # certify the non-failed ones individually below
            for i in live:
                cert = certify_sigma(d, vals[i - 1], thresholds[i],
                                     node_budget=node_budget - total.nodes,
                                     max_depth=max_depth)
                records[i] = IndexRecord(i, vals[i - 1], vals[i], thresholds[i],
                                         cert.verdict, cert.nodes)
                total.nodes += cert.nodes
            continue
        state = _RunState()
        budget_left = node_budget - total.nodes
        if shared:
            leaves = _certify_on(p_rows, p_depth, d, a_lo, a_hi, thr,
                                 budget_left, max_depth, state,
                                 keep_leaves=True, detect_failure=False)
            p_rows = np.concatenate([r for r, _ in leaves], axis=0)
            p_depth = np.concatenate([dd for _, dd in leaves])
        else:
            rows = start_rows(a_hi)
            _certify_on(rows, np.zeros(1, dtype=np.int64), d, a_lo, a_hi, thr,
                        budget_left, max_depth, state, detect_failure=False)
        verdict = "BudgetExceeded" if state.budget_hit else "Proven"
        for i in live:
            records[i] = IndexRecord(i, vals[i - 1], vals[i], thresholds[i],
                                     verdict, state.nodes if i == idxs[0] else 0)
        total.nodes += state.nodes
        total.max_depth = max(total.max_depth, state.max_depth)
        for m, v in state.method_counts.items():
            total.method_counts[m] += v

    ordered = [records[i] for i in sorted(records)]
    return ScheduleCertificate(
        d=d,
        l0=l0,
        schedule_digest=schedule.digest(),
        base_case=base,
        records=ordered,
        nodes=total.nodes,
        max_depth=total.max_depth,
        method_counts=total.method_counts,
        partition_size=int(p_rows.shape[0]),
        elapsed_seconds=time.perf_counter() - t0,
    )
