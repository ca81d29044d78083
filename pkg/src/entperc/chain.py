"""Three-state chain for descending-step statistics of lattice walks.

The chain states are W1 (neutral step), W2 (ascending step), W3 (descending
step).  This module holds the exact transition matrix, the relative-entropy
objective over pair-empirical matrices of the constrained shape

    [[a, b, x],
     [b, c, 0],
     [x, 0, alpha - x]]

with ``a + 2b + c + x + alpha = 1``, its gradient and Hessian in the reduced
variables (x, b, c), and a floating-point multi-start minimiser producing
candidate (non-certified) minima.  Certified lower bounds live in
:mod:`entperc.certify`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import optimize

from .errors import BoundaryPointError, InfeasibleQError

W1, W2, W3 = 0, 1, 2

_FEAS_TOL = 1e-12


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic 3x3 matrix with exact rational entries."""

    d: int
    rows: tuple[tuple[Fraction, ...], ...]

    def as_floats(self) -> np.ndarray:
        return np.array([[float(p) for p in row] for row in self.rows])

    def stationary(self) -> tuple[Fraction, Fraction, Fraction]:
        d = self.d
        return (Fraction(d - 1, d), Fraction(1, 2 * d), Fraction(1, 2 * d))


def transition_matrix(d: int) -> TransitionMatrix:
    """Chain transition matrix in dimension d >= 2.

    Rows/columns ordered (W1, W2, W3); the W2<->W3 transitions are forbidden.
    """
    if d < 2:
        raise ValueError("dimension must be >= 2")
    r = 2 * d - 1
    rows = (
        (Fraction(2 * d - 3, r), Fraction(1, r), Fraction(1, r)),
        (Fraction(2 * d - 2, r), Fraction(1, r), Fraction(0)),
        (Fraction(2 * d - 2, r), Fraction(0), Fraction(1, r)),
    )
    return TransitionMatrix(d, rows)


@dataclass(frozen=True)
class QParams:
    """Reduced coordinates of a pair-empirical matrix with mass alpha in W3."""

    x: float
    b: float
    c: float
    alpha: float

    @property
    def a(self) -> float:
        return 1.0 - 2.0 * self.b - self.c - self.x - self.alpha

    @property
    def row1_sum(self) -> float:
        # a + b + x simplifies to 1 - b - c - alpha
        return 1.0 - self.b - self.c - self.alpha

    def feasible(self, tol: float = _FEAS_TOL) -> bool:
        return (
            -tol <= self.x <= self.alpha + tol
            and self.b >= -tol
            and self.c >= -tol
            and 0.0 - tol <= self.alpha <= 0.5 + tol
            and self.a >= -tol
        )

    def validate(self) -> None:
        if not self.feasible():
            raise InfeasibleQError(f"infeasible parameters {self}")

    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.a, self.b, self.x],
                [self.b, self.c, 0.0],
                [self.x, 0.0, self.alpha - self.x],
            ]
        )


def _xlogq(q: float, u: float, pi: float) -> float:
    """q * log(q / (u * pi)) with the 0 log 0 = 0 convention."""
    if q <= 0.0:
        return 0.0
    return q * math.log(q / (u * pi))


def entropy(q: QParams, d: int) -> float:
    """Relative entropy H(q, pi) of the pair-empirical matrix w.r.t. the chain.

    Nonnegative on the feasible set; zero exactly at the stationary product
    measure (alpha = 1/(2d) there).
    """
    q.validate()
    r = 2.0 * d - 1.0
    a = max(q.a, 0.0)
    x = max(q.x, 0.0)
    b = max(q.b, 0.0)
    c = max(q.c, 0.0)
    alpha = q.alpha
    xr = max(alpha - x, 0.0)
    s = 1.0 - b - c - alpha
    bc = b + c
    total = 0.0
    total += _xlogq(a, s, (2.0 * d - 3.0) / r)
    total += _xlogq(b, s, 1.0 / r)
    total += _xlogq(x, s, 1.0 / r)
    total += _xlogq(b, bc, (2.0 * d - 2.0) / r)
    total += _xlogq(c, bc, 1.0 / r)
    total += _xlogq(x, alpha, (2.0 * d - 2.0) / r)
    total += _xlogq(xr, alpha, 1.0 / r)
    return total


def entropy_gradient(q: QParams, d: int) -> np.ndarray:
    """Gradient of the entropy in (x, b, c), the variable a eliminated.

    Requires a strictly interior point; raises BoundaryPointError where any
    log argument vanishes.
    """
    q.validate()
    x, b, c, alpha = q.x, q.b, q.c, q.alpha
    a = q.a
    s = q.row1_sum
    if min(x, b, c, a, alpha - x, s, b + c) <= 0.0:
        raise BoundaryPointError(f"gradient undefined on the boundary: {q}")
    r = 2.0 * d - 1.0
    t = 2.0 * d - 3.0
    w = 2.0 * d - 2.0
    gx = math.log(x * t / a) + math.log(x / ((alpha - x) * w))
    gb = math.log(b * s * t * t / (a * a * r)) + math.log(b * r / ((b + c) * w))
    gc = math.log(s * t / (a * r)) + math.log(c * r / (b + c))
    return np.array([gx, gb, gc])


def entropy_hessian(q: QParams, d: int) -> np.ndarray:
    """Hessian of the entropy in (x, b, c)."""
    q.validate()
    x, b, c, alpha = q.x, q.b, q.c, q.alpha
    a = q.a
    s = q.row1_sum
    if min(x, b, c, a, alpha - x, s, b + c) <= 0.0:
        raise BoundaryPointError(f"Hessian undefined on the boundary: {q}")
    ia, is_, ibc = 1.0 / a, 1.0 / s, 1.0 / (b + c)
    hxx = 2.0 / x + ia + 1.0 / (alpha - x)
    hxb = 2.0 * ia
    hxc = ia
    hbb = 2.0 / b + 4.0 * ia - is_ - ibc
    hbc = 2.0 * ia - is_ - ibc
    hcc = 1.0 / c + ia - is_ - ibc
    return np.array([[hxx, hxb, hxc], [hxb, hbb, hbc], [hxc, hbc, hcc]])


def feasible_box(alpha: float) -> tuple[tuple[float, float], ...]:
    """Outer box of the feasible (x, b, c) region at a given alpha.

    x <= alpha, 2b <= 1 - alpha and c <= 1 - alpha follow from a >= 0; at
    alpha = 0.5 this is the block [0, 0.5] x [0, 0.25] x [0, 0.5].
    """
    return ((0.0, alpha), (0.0, 0.5 * (1.0 - alpha)), (0.0, 1.0 - alpha))


def _random_feasible(rng: np.random.Generator, alpha: float) -> np.ndarray:
    box = feasible_box(alpha)
    while True:
        v = rng.uniform([lo for lo, _ in box], [hi for _, hi in box])
        q = QParams(v[0], v[1], v[2], alpha)
        if q.a > 1e-6 and alpha - v[0] > 1e-9 and min(v) > 1e-9:
            return v


def candidate_minimum(
    d: int,
    alpha: float,
    starts: int = 24,
    seed: int = 20240,
    x0: np.ndarray | None = None,
) -> tuple[QParams, float]:
    """Multi-start heuristic minimum of the entropy at fixed alpha.

    Returns the best local minimiser found and its (plain floating point)
    value: an upper bound for the true infimum, not a certificate.  ``x0``
    seeds an extra warm start, useful when walking a schedule of alphas.
    """
    if not 0.0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 0.5]")
    rng = np.random.default_rng(seed)

    def objective(v):
        q = QParams(v[0], v[1], v[2], alpha)
        if not q.feasible(tol=0.0) or min(v[0], v[1], v[2], q.a, alpha - v[0]) <= 0.0:
            return 1e6
        return entropy(q, d)

    def gradient(v):
        q = QParams(v[0], v[1], v[2], alpha)
        try:
            return entropy_gradient(q, d)
        except (BoundaryPointError, InfeasibleQError):
            return np.zeros(3)

    eps = 1e-12
    box = feasible_box(alpha)
    bounds = [(eps, hi - eps) for _, hi in box]
    constraints = [
        {
            "type": "ineq",
            "fun": lambda v: 1.0 - 2.0 * v[1] - v[2] - v[0] - alpha - eps,
            "jac": lambda v: np.array([-1.0, -2.0, -1.0]),
        }
    ]
    guesses = [] if x0 is None else [np.asarray(x0, dtype=float)]
    # near-stationary interior point as a deterministic anchor
    guesses.append(np.array([0.5 * alpha, 0.1 * (1 - alpha), 0.05 * (1 - alpha)]))
    guesses.extend(_random_feasible(rng, alpha) for _ in range(starts))

    best_v, best_val = None, math.inf
    for g in guesses:
        res = optimize.minimize(
            objective,
            g,
            jac=gradient,
            method="SLSQP",
            bounds=bounds,
            constraints=constraints,
            options={"maxiter": 400, "ftol": 1e-16},
        )
        val = objective(res.x)
        if val < best_val:
            best_val, best_v = val, res.x
    q = QParams(best_v[0], best_v[1], best_v[2], alpha)
    return q, best_val
