"""Outward-rounded interval arithmetic with verified log/exp enclosures.

Certification code in this package never trusts libm: the four IEEE-754
operations are correctly rounded by the standard and are widened one ulp
outward with ``nextafter``, while ``log`` and ``exp`` are evaluated through
argument reduction plus a truncated series whose remainder is bounded and
added to the enclosure.  Every function here therefore returns a true
mathematical enclosure of the exact result.

Two layers are provided:

* vectorised kernels operating on ``(lo, hi)`` pairs of numpy arrays, used by
  the branch-and-bound certifier where throughput matters;
* a small scalar :class:`Interval` convenience class used when assembling
  certificates.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

_INF = float("inf")


def _enclose_fraction(value: Fraction) -> tuple[float, float]:
    """Smallest double interval containing an exact rational."""
    f = float(value)
    as_frac = Fraction(f)
    lo = f if as_frac <= value else math.nextafter(f, -_INF)
    hi = f if as_frac >= value else math.nextafter(f, _INF)
    return lo, hi


def _enclose_decimal(digits: str, slack: str) -> tuple[float, float]:
    """Enclosure of an irrational constant given a decimal approximation
    whose absolute error is provably below ``slack``."""
    approx = Fraction(digits)
    eps = Fraction(slack)
    return _enclose_fraction(approx - eps)[0], _enclose_fraction(approx + eps)[1]


# 40-digit truncations; truncation error < 1e-39 in both cases.
LN2_LO, LN2_HI = _enclose_decimal("0.6931471805599453094172321214581765680755", "1e-39")
INV_E_LO, INV_E_HI = _enclose_decimal("0.3678794411714423215955237701614608674458", "1e-39")

_ATANH_N = 9
_ATANH_COEFFS = [_enclose_fraction(Fraction(1, 2 * j + 1)) for j in range(_ATANH_N + 1)]
_EXP_N = 13
_EXP_COEFFS = [_enclose_fraction(Fraction(1, math.factorial(j))) for j in range(_EXP_N + 1)]
_EXP_FACT_NEXT = float(math.factorial(_EXP_N + 1))  # 14! < 2**53, exact


# Outward rounding by multiplicative widening: for finite y = fl(a op b) the
# exact result lies within ulp(y)/2, and |y|*2^-51 + 1e-307 >= ulp(y) for
# normal as well as subnormal y, so the rounded-to-nearest subtraction
# (addition) lands strictly below (above) the exact value.  This is 2-4 ulps
# wide instead of nextafter's 1 ulp but vectorises far better; infinities are
# passed through unchanged like nextafter would.
_WIDEN = 2.0**-51
_TINY = 1e-307


def _nad(x):
    y = x - (np.abs(x) * _WIDEN + _TINY)
    return np.where(np.isfinite(x), y, x)


def _nau(x):
    y = x + (np.abs(x) * _WIDEN + _TINY)
    return np.where(np.isfinite(x), y, x)


def iv_add(alo, ahi, blo, bhi):
    return _nad(alo + blo), _nau(ahi + bhi)


def iv_sub(alo, ahi, blo, bhi):
    return _nad(alo - bhi), _nau(ahi - blo)


def iv_mul(alo, ahi, blo, bhi):
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return _nad(lo), _nau(hi)


def iv_scale(alo, ahi, c: float):
    """Multiply by an exact scalar."""
    if c >= 0:
        return _nad(alo * c), _nau(ahi * c)
    return _nad(ahi * c), _nau(alo * c)


def iv_div_pos(alo, ahi, blo, bhi):
    """Division by an interval known to satisfy ``blo > 0``."""
    q1 = alo / blo
    q2 = alo / bhi
    q3 = ahi / blo
    q4 = ahi / bhi
    lo = np.minimum(np.minimum(q1, q2), np.minimum(q3, q4))
    hi = np.maximum(np.maximum(q1, q2), np.maximum(q3, q4))
    return _nad(lo), _nau(hi)


def iv_sq(alo, ahi):
    a1 = alo * alo
    a2 = ahi * ahi
    hi = _nau(np.maximum(a1, a2))
    straddles = (alo <= 0.0) & (ahi >= 0.0)
    lo = np.where(straddles, 0.0, _nad(np.minimum(a1, a2)))
    return lo, hi


def _log_reduced(x):
    """Enclosure of log(x) for positive finite normal/subnormal arrays.

    Reduction: x = m * 2^e with m in [sqrt(1/2), sqrt(2)), then
    log m = 2 atanh(t) with t = (m-1)/(m+1), |t| < 0.172, summed to order
    t^(2N+1) with the (positive) tail bounded by u^(N+1)/((2N+3)(1-u)),
    u = t^2.
    """
    m, e = np.frexp(x)
    double_it = m < 0.7071067811865476
    m = np.where(double_it, m * 2.0, m)
    e = (e - double_it).astype(np.float64)

    num = m - 1.0  # exact: m in [0.5, 2)
    den = m + 1.0
    den_lo, den_hi = _nad(den), _nau(den)
    q1 = num / den_lo
    q2 = num / den_hi
    t_lo = _nad(np.minimum(q1, q2))
    t_hi = _nau(np.maximum(q1, q2))

    u_lo, u_hi = iv_sq(t_lo, t_hi)

    # The series has positive coefficients and u >= 0, so the lower and upper
    # Horner chains can run independently on u_lo and u_hi.
    c_lo, c_hi = _ATANH_COEFFS[_ATANH_N]
    s_lo = np.full_like(m, c_lo)
    s_hi = np.full_like(m, c_hi)
    for j in range(_ATANH_N - 1, -1, -1):
        c_lo, c_hi = _ATANH_COEFFS[j]
        s_lo = _nad(_nad(s_lo * u_lo) + c_lo)
        s_hi = _nau(_nau(s_hi * u_hi) + c_hi)
    # positive series tail
    power = u_hi
    for _ in range(_ATANH_N):
        power = _nau(power * u_hi)
    tail_den = _nad((2 * _ATANH_N + 3) * _nad(1.0 - u_hi))
    s_hi = _nau(s_hi + _nau(power / tail_den))

    at_lo, at_hi = iv_mul(t_lo, t_hi, s_lo, s_hi)
    at_lo = at_lo * 2.0
    at_hi = at_hi * 2.0

    e1 = e * LN2_LO
    e2 = e * LN2_HI
    el_lo = _nad(np.minimum(e1, e2))
    el_hi = _nau(np.maximum(e1, e2))
    return iv_add(el_lo, el_hi, at_lo, at_hi)


def log_iv(lo, hi):
    """Enclosure of log over an interval array; ``lo <= 0`` maps to -inf."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    return log_down(lo), log_up(hi)


def log_down(x):
    """Lower bound of log(x) elementwise; x <= 0 maps to -inf, +inf to +inf."""
    x = np.asarray(x, dtype=np.float64)
    regular = (x > 0.0) & np.isfinite(x)
    r = _log_reduced(np.where(regular, x, 1.0))[0]
    return np.where(regular, r, np.where(x <= 0.0, -_INF, _INF))


def log_up(x):
    """Upper bound of log(x) elementwise; x <= 0 maps to -inf, +inf to +inf."""
    x = np.asarray(x, dtype=np.float64)
    regular = (x > 0.0) & np.isfinite(x)
    r = _log_reduced(np.where(regular, x, 1.0))[1]
    return np.where(regular, r, np.where(x <= 0.0, -_INF, _INF))


def log_point_iv(x):
    """Enclosure of log at exact (point) array arguments; one reduction pass."""
    x = np.asarray(x, dtype=np.float64)
    pos = x > 0.0
    rlo, rhi = _log_reduced(np.where(pos, x, 1.0))
    return np.where(pos, rlo, -_INF), np.where(pos, rhi, -_INF)


def _exp_point(x):
    """Enclosure of exp(x) elementwise for |x| <= 700."""
    k = np.rint(x * 1.4426950408889634)
    k1 = k * LN2_LO
    k2 = k * LN2_HI
    kl_lo = _nad(np.minimum(k1, k2))
    kl_hi = _nau(np.maximum(k1, k2))
    r_lo = _nad(x - kl_hi)
    r_hi = _nau(x - kl_lo)

    c_lo, c_hi = _EXP_COEFFS[_EXP_N]
    s_lo = np.full_like(x, c_lo)
    s_hi = np.full_like(x, c_hi)
    for j in range(_EXP_N - 1, -1, -1):
        s_lo, s_hi = iv_mul(s_lo, s_hi, r_lo, r_hi)
        c_lo, c_hi = _EXP_COEFFS[j]
        s_lo, s_hi = iv_add(s_lo, s_hi, c_lo, c_hi)
    rm = np.maximum(np.abs(r_lo), np.abs(r_hi))
    power = rm
    for _ in range(_EXP_N):
        power = _nau(power * rm)
    tail_den = _nad(_EXP_FACT_NEXT * _nad(1.0 - rm / (_EXP_N + 2)))
    tail = _nau(power / tail_den)
    s_lo = _nad(s_lo - tail)
    s_hi = _nau(s_hi + tail)

    ki = k.astype(np.int64)
    return np.ldexp(s_lo, ki), np.ldexp(s_hi, ki)


def exp_iv(lo, hi):
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if np.any(np.abs(lo[np.isfinite(lo)]) > 700) or np.any(np.abs(hi[np.isfinite(hi)]) > 700):
        raise ValueError("exp_iv argument outside [-700, 700]")
    rlo = _exp_point(np.where(np.isfinite(lo), lo, 0.0))[0]
    rlo = np.where(np.isneginf(lo), 0.0, np.where(np.isposinf(lo), _INF, rlo))
    rhi = _exp_point(np.where(np.isfinite(hi), hi, 0.0))[1]
    rhi = np.where(np.isposinf(hi), _INF, np.where(np.isneginf(hi), 0.0, rhi))
    rlo = np.maximum(rlo, 0.0)
    return rlo, rhi


def _scalar_down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _scalar_up(x: float) -> float:
    return math.nextafter(x, _INF)


class Interval:
    """Closed scalar interval [lo, hi] with outward rounding."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float | None = None):
        hi = lo if hi is None else hi
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", float(lo))
        object.__setattr__(self, "hi", float(hi))

    def __setattr__(self, *args):
        raise AttributeError("Interval is immutable")

    @classmethod
    def exact(cls, value) -> "Interval":
        """Exact enclosure of an int, float or Fraction."""
        if isinstance(value, Fraction):
            return cls(*_enclose_fraction(value))
        if isinstance(value, int) and abs(value) > 2**53:
            return cls(*_enclose_fraction(Fraction(value)))
        return cls(float(value), float(value))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, value) -> bool:
        if isinstance(value, Fraction):
            return Fraction(self.lo) <= value <= Fraction(self.hi)
        return self.lo <= value <= self.hi

    @staticmethod
    def _coerce(other) -> "Interval":
        if isinstance(other, Interval):
            return other
        return Interval.exact(other)

    def __add__(self, other):
        o = self._coerce(other)
        return Interval(_scalar_down(self.lo + o.lo), _scalar_up(self.hi + o.hi))

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        o = self._coerce(other)
        return Interval(_scalar_down(self.lo - o.hi), _scalar_up(self.hi - o.lo))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        products = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(_scalar_down(min(products)), _scalar_up(max(products)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.lo <= 0.0 <= o.hi:
            return Interval(-_INF, _INF)
        quotients = (self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi)
        return Interval(_scalar_down(min(quotients)), _scalar_up(max(quotients)))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int) or exponent < 0:
            raise TypeError("only nonnegative integer powers")
        result = Interval(1.0, 1.0)
        for _ in range(exponent):
            result = result * self
        return result

    def log(self) -> "Interval":
        if self.hi <= 0.0:
            raise ValueError(f"log of nonpositive interval {self!r}")
        rlo, rhi = log_iv(np.array([self.lo]), np.array([self.hi]))
        return Interval(float(rlo[0]), float(rhi[0]))

    def exp(self) -> "Interval":
        rlo, rhi = exp_iv(np.array([self.lo]), np.array([self.hi]))
        return Interval(float(rlo[0]), float(rhi[0]))
