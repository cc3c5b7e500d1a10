"""Exponent algebra for the dispersive space-time estimates.

Exponents live in [2, infinity]; infinity is first-class with reciprocal 0.
Equalities are tested in exact rational arithmetic whenever all inputs are
int/Fraction (floats fall back to a 1e-12 tolerance), since the admissibility
constraints are equality-brittle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

INF = math.inf

Exponent = float | int | Fraction

_EQ_TOL = 1e-12


def _is_exact(*vals) -> bool:
    return all(isinstance(v, (int, Fraction)) or v == INF for v in vals)


def reciprocal(q: Exponent):
    """1/q with 1/inf = 0 (exact when q is rational)."""
    if q == INF:
        return Fraction(0)
    if isinstance(q, (int, Fraction)):
        return Fraction(1, 1) / Fraction(q)
    return 1.0 / q


def dual_exponent(q: Exponent):
    """Holder dual: 1/q + 1/q' = 1 (exact in rational arithmetic)."""
    if q == INF:
        return Fraction(1)
    if isinstance(q, (int, Fraction)):
        qf = Fraction(q)
        if qf == 1:
            return INF
        return qf / (qf - 1)
    return INF if q == 1.0 else q / (q - 1.0)


@dataclass(frozen=True)
class ExponentPair:
    q: Exponent
    r: Exponent

    def __post_init__(self) -> None:
        for name, v in (("q", self.q), ("r", self.r)):
            if v != INF and not v >= 2:
                raise ValueError(f"{name} must lie in [2, inf], got {v}")


def is_radial_admissible(pair: ExponentPair, dim: int, boundary: bool = False) -> bool:
    """Open-range condition 1/q < (N - 1/2)(1/2 - 1/r) for spherically
    symmetric data; the boundary variant allows equality everywhere except
    the excluded endpoint (2, (4N-2)/(2N-3))."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    lhs = reciprocal(pair.q)
    if _is_exact(pair.q, pair.r):
        rhs = (Fraction(2 * dim - 1, 2)) * (Fraction(1, 2) - reciprocal(pair.r))
        if not boundary:
            return lhs < rhs
        if lhs > rhs:
            return False
        on_excluded = (
            pair.q != INF
            and pair.r != INF
            and Fraction(pair.q) == 2
            and Fraction(pair.r) == Fraction(4 * dim - 2, 2 * dim - 3)
        )
        return not on_excluded
    rhs = (dim - 0.5) * (0.5 - float(reciprocal(pair.r)))
    lhs = float(lhs)
    if not boundary:
        return lhs < rhs - _EQ_TOL
    if lhs > rhs + _EQ_TOL:
        return False
    q_ex, r_ex = 2.0, (4 * dim - 2) / (2 * dim - 3)
    on_excluded = abs(float(pair.q) - q_ex) <= _EQ_TOL and abs(
        float(pair.r) - r_ex
    ) <= _EQ_TOL
    return not on_excluded


def is_alpha_admissible(pair: ExponentPair, dim: int, alpha) -> bool:
    """Scaling line 2a/q + N/r = N/2 (with q, r in [2, inf])."""
    if not (isinstance(alpha, (int, Fraction)) or alpha > 0):
        raise ValueError("alpha must be positive")
    if _is_exact(pair.q, pair.r, alpha):
        lhs = 2 * Fraction(alpha) * reciprocal(pair.q) + dim * reciprocal(pair.r)
        return lhs == Fraction(dim, 2)
    lhs = 2 * float(alpha) * float(reciprocal(pair.q)) + dim * float(reciprocal(pair.r))
    return abs(lhs - dim / 2) <= _EQ_TOL


@dataclass(frozen=True)
class GapReport:
    lower_line: bool   # 2a/q + N/r = N/2 - gamma
    upper_line: bool   # 2a/q~ + N/r~ = N/2 + gamma
    ordering: bool     # dual(q~) < q
    all: bool


def gap_condition(
    pair: ExponentPair,
    pair_tilde: ExponentPair,
    dim: int,
    alpha,
    gamma,
) -> GapReport:
    """The inhomogeneous-estimate gap conditions between a pair and a dual
    pair, plus the ordering dual(q~) < q; returns per-condition flags."""
    if _is_exact(pair.q, pair.r, pair_tilde.q, pair_tilde.r, alpha, gamma):
        a, g = Fraction(alpha), Fraction(gamma)
        lower = 2 * a * reciprocal(pair.q) + dim * reciprocal(pair.r) == Fraction(
            dim, 2
        ) - g
        upper = 2 * a * reciprocal(pair_tilde.q) + dim * reciprocal(
            pair_tilde.r
        ) == Fraction(dim, 2) + g
        dual_qt = dual_exponent(pair_tilde.q)  # in [1, 2], never inf
        ordering = pair.q == INF or Fraction(dual_qt) < Fraction(pair.q)
    else:
        a, g = float(alpha), float(gamma)
        lower = (
            abs(
                2 * a * float(reciprocal(pair.q))
                + dim * float(reciprocal(pair.r))
                - (dim / 2 - g)
            )
            <= _EQ_TOL
        )
        upper = (
            abs(
                2 * a * float(reciprocal(pair_tilde.q))
                + dim * float(reciprocal(pair_tilde.r))
                - (dim / 2 + g)
            )
            <= _EQ_TOL
        )
        dual_qt = dual_exponent(pair_tilde.q)
        ordering = float(dual_qt) < float(pair.q)
    return GapReport(lower, upper, ordering, lower and upper and ordering)


@dataclass(frozen=True)
class StrichartzExponents:
    """The diagonal solution-norm pair and the admissible derivative pair."""

    q_s: Exponent
    r_s: Exponent
    q_w: Exponent
    r_w: Exponent


def strichartz_exponents(dim: int, alpha) -> StrichartzExponents:
    """q_S = r_S = 2(N+2a)/(N-2a); q_W = q_S, r_W = 2N(N+2a)/(N^2+4a^2).

    Requires N > 2a (the Sobolev compatibility of the two norms).
    """
    exact = isinstance(alpha, (int, Fraction))
    a = Fraction(alpha) if exact else float(alpha)
    if dim <= 2 * a:
        raise ValueError(f"need dim > 2*alpha, got dim={dim}, alpha={alpha}")
    qs = 2 * (dim + 2 * a) / (dim - 2 * a)
    rw = 2 * dim * (dim + 2 * a) / (dim**2 + 4 * a**2)
    return StrichartzExponents(q_s=qs, r_s=qs, q_w=qs, r_w=rw)


def enumerate_admissible(
    dim: int,
    alpha: Fraction | int,
    denominator_bound: int,
    radial: str = "strict",
) -> list[ExponentPair]:
    """All rational pairs with denominators <= bound on the scaling line that
    are radial-admissible ('strict' or 'boundary'), sorted by q.

    The boundary variant additionally includes (inf, 2).  alpha must be
    rational: the scaling line then maps rational r to rational q.
    """
    if denominator_bound < 2:
        raise ValueError("denominator_bound must be >= 2")
    if radial not in ("strict", "boundary"):
        raise ValueError("radial must be 'strict' or 'boundary'")
    if not isinstance(alpha, (int, Fraction)):
        raise ValueError("enumerate_admissible requires rational alpha")
    a = Fraction(alpha)
    boundary = radial == "boundary"
    two_star = Fraction(2 * dim, dim - 2 * a)  # r at q = 2
    found: dict[tuple, ExponentPair] = {}
    if boundary:
        pair = ExponentPair(INF, Fraction(2))
        if is_alpha_admissible(pair, dim, a):
            found[("inf", Fraction(2))] = pair
    for den in range(1, denominator_bound + 1):
        num_lo = 2 * den + 1
        num_hi = math.floor(two_star * den)
        for num in range(num_lo, num_hi + 1):
            r = Fraction(num, den)
            if r.denominator > denominator_bound:
                continue
            slope = Fraction(dim, 2) - dim / r
            if slope <= 0:
                continue
            q = 2 * a / slope
            if q < 2 or q.denominator > denominator_bound:
                continue
            pair = ExponentPair(q, r)
            if not is_radial_admissible(pair, dim, boundary=boundary):
                continue
            found[(q, r)] = pair
    # r = two_star exactly (q = 2) if representable
    if two_star.denominator <= denominator_bound:
        pair = ExponentPair(Fraction(2), two_star)
        if is_radial_admissible(pair, dim, boundary=boundary):
            found[(Fraction(2), two_star)] = pair

    def sort_key(p: ExponentPair):
        return (float(p.q), float(p.r))

    return sorted(found.values(), key=sort_key)
