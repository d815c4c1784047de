"""Positive real roots of low-degree polynomials.

Roots are isolated with an exact Sturm sequence (coefficients converted to
rationals, so the count is exact for the floating-point polynomial), refined
by bisection and polished with Newton steps. Coefficients are ordered from the
highest power down, as in ``numpy.polyval``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

BISECT_WIDTH = 1e-12
MERGE_RTOL = 1e-8


def _trim(p: list[Fraction]) -> list[Fraction]:
    i = 0
    while i < len(p) - 1 and p[i] == 0:
        i += 1
    return p[i:]


def _rational(coeffs: Sequence[float]) -> list[Fraction]:
    return _trim([Fraction(c) for c in coeffs])


def _deriv(p: list[Fraction]) -> list[Fraction]:
    n = len(p) - 1
    return _trim([c * (n - k) for k, c in enumerate(p[:-1])]) or [Fraction(0)]


def _divmod(a: list[Fraction], b: list[Fraction]) -> tuple[list[Fraction], list[Fraction]]:
    a = list(a)
    q = [Fraction(0)] * max(1, len(a) - len(b) + 1)
    while len(a) >= len(b) and any(a):
        c = a[0] / b[0]
        shift = len(a) - len(b)
        q[len(q) - 1 - shift] = c
        for k, bk in enumerate(b):
            a[k] -= c * bk
        a = _trim(a[1:]) if len(a) > 1 else [Fraction(0)]
    return _trim(q), a


def _is_zero(p: list[Fraction]) -> bool:
    return all(c == 0 for c in p)


def _gcd(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    while not _is_zero(b):
        a, b = b, _divmod(a, b)[1]
    return [c / a[0] for c in a]


def _eval(p: Sequence, x):
    acc = 0 * x
    for c in p:
        acc = acc * x + c
    return acc


def sturm_sequence(coeffs: Sequence[float]) -> list[list[Fraction]]:
    p = _rational(coeffs)
    seq = [p, _deriv(p)]
    while len(seq[-1]) > 1 or seq[-1][0] != 0:
        rem = _divmod(seq[-2], seq[-1])[1]
        if _is_zero(rem):
            break
        seq.append([-c for c in rem])
    return seq


def _sign_changes(values) -> int:
    signs = [v > 0 for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def sturm_count(coeffs: Sequence[float], lo: float, hi: float) -> int:
    """Number of distinct real roots in the half-open interval (lo, hi]."""
    seq = sturm_sequence(coeffs)
    return _count(seq, Fraction(lo), Fraction(hi))


def _count(seq, lo: Fraction, hi: Fraction) -> int:
    return _sign_changes([_eval(p, lo) for p in seq]) - _sign_changes([_eval(p, hi) for p in seq])


def cauchy_bound(coeffs: Sequence[float]) -> float:
    p = _rational(coeffs)
    lead = abs(p[0])
    return float(1 + max((abs(c) / lead for c in p[1:]), default=Fraction(0)))


def count_positive_roots(coeffs: Sequence[float]) -> int:
    p = _rational(coeffs)
    if len(p) == 1:
        return 0
    return sturm_count(coeffs, 0.0, cauchy_bound(coeffs))


@dataclass(frozen=True)
class Root:
    value: float
    multiplicity: int = 1


def _newton_polish(p: Sequence[float], dp: Sequence[float], x: float, steps: int = 2) -> float:
    for _ in range(steps):
        d = _eval(dp, x)
        if d == 0:
            break
        y = x - _eval(p, x) / d
        if not y > 0:
            break
        # Accept only if the residual does not grow.
        if abs(_eval(p, y)) <= abs(_eval(p, x)):
            x = y
    return x


def positive_roots(coeffs: Sequence[float], *, merge_rtol: float = MERGE_RTOL) -> list[Root]:
    """Sorted positive real roots with multiplicities.

    The squarefree part is isolated with Sturm counts; each isolating interval
    is bisected to ``BISECT_WIDTH`` (relative for large roots) and the midpoint
    is polished by two Newton steps on the squarefree part. Roots closer
    than ``merge_rtol`` are merged.
    """
    p = _rational(coeffs)
    if len(p) <= 1:
        return []
    g = _gcd(p, _deriv(p))
    sqf = _divmod(p, g)[0] if len(g) > 1 else p
    sqf = [c / sqf[0] for c in sqf]
    seq = [sqf, _deriv(sqf)]
    while len(seq[-1]) > 1:
        rem = _divmod(seq[-2], seq[-1])[1]
        if _is_zero(rem):
            break
        seq.append([-c for c in rem])

    hi0 = Fraction(cauchy_bound([float(c) for c in sqf]))
    stack = [(Fraction(0), hi0)]
    intervals = []
    while stack:
        lo, hi = stack.pop()
        k = _count(seq, lo, hi)
        if k == 0:
            continue
        if k == 1:
            intervals.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        stack.append((mid, hi))
        stack.append((lo, mid))
    intervals.sort()

    pf = [float(c) for c in sqf]
    dpf = [float(c) for c in _deriv(sqf)]
    roots: list[Root] = []
    for lo, hi in intervals:
        x = _bisect(sqf, lo, hi)
        mult = 1 + (_multiplicity_near(g, lo, hi) if len(g) > 1 else 0)
        x = _newton_polish(pf, dpf, x)
        roots.append(Root(x, mult))
    return _merge(roots, merge_rtol)


def _multiplicity_near(g: list[Fraction], lo: Fraction, hi: Fraction) -> int:
    """Extra multiplicity contributed by a root of gcd(p, p') inside (lo, hi]."""
    extra = 0
    while len(g) > 1:
        seq = [g, _deriv(g)]
        while len(seq[-1]) > 1:
            rem = _divmod(seq[-2], seq[-1])[1]
            if _is_zero(rem):
                break
            seq.append([-c for c in rem])
        if _count(seq, lo, hi) == 0:
            break
        extra += 1
        g = _gcd(g, _deriv(g))
    return extra


def _bisect(p: list[Fraction], lo: Fraction, hi: Fraction) -> float:
    """Bisect a simple root of ``p`` isolated in (lo, hi] in floating point."""
    pf = [float(c) for c in p]
    a, b = float(lo), float(hi)
    fa = _eval(p, lo)
    # A root exactly at lo lies outside (lo, hi]; the sign just right of it is
    # the sign of p' there (p is squarefree).
    sa = fa > 0 if fa != 0 else _eval(_deriv(p), lo) > 0
    for _ in range(200):
        if b - a <= BISECT_WIDTH * max(1.0, abs(a)):
            break
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = _eval(pf, m)
        if fm == 0:
            return m
        if (fm > 0) == sa:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _merge(roots: list[Root], rtol: float) -> list[Root]:
    out: list[Root] = []
    for r in roots:
        if out and abs(r.value - out[-1].value) <= rtol * max(abs(r.value), abs(out[-1].value)):
            prev = out.pop()
            out.append(Root(0.5 * (prev.value + r.value), prev.multiplicity + r.multiplicity))
        else:
            out.append(r)
    return out
