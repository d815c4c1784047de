"""Fixed points of the ratio map: symmetric branch, asymmetric branch, stability.

Symmetric fixed points (u = v) solve ``theta3 * u = f(u)`` for a rational
function ``f``. Asymmetric ones are found in the variables ``s = u + v`` and
``t = u v``: two relations, each linear in ``t``, eliminate ``t`` and leave a
quadratic in ``s``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .model import ThetaParams
from .polyroots import count_positive_roots, positive_roots
from .recursion import RatioPoint, ratio_map_terms, ratio_step

RESIDUAL_TOL = 1e-9
MERGE_TOL = 1e-8
STABILITY_MARGIN = 1e-6


class RegimeError(ValueError):
    """Quantity undefined for these parameters (outside its regime)."""


class Branch(enum.Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"


class Stability(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class FixedPoint:
    point: RatioPoint
    branch: Branch
    residual: float
    spectral_radius: float
    stability: Stability

    @property
    def stable(self) -> bool:
        return self.stability is Stability.STABLE


# -- the symmetric branch ---------------------------------------------------

def _f_polys(thetas: ThetaParams) -> tuple[np.ndarray, np.ndarray]:
    tt, t1 = thetas.theta_tilde, thetas.theta1
    num = np.array([tt * tt * t1 + 2 * tt + t1, 2 * (tt + 1), t1])
    den = np.array([2 * (t1 + 1), 4 * tt, tt * tt * t1])
    return num, den


def f_symmetric(u, thetas: ThetaParams):
    num, den = _f_polys(thetas)
    return np.polyval(num, u) / np.polyval(den, u)


def f_prime(u, thetas: ThetaParams):
    num, den = _f_polys(thetas)
    n, d = np.polyval(num, u), np.polyval(den, u)
    dn, dd = np.polyval(np.polyder(num), u), np.polyval(np.polyder(den), u)
    return (dn * d - n * dd) / (d * d)


def inflection_cubic(thetas: ThetaParams) -> np.ndarray:
    """Cubic K with f'' = -2 (theta_tilde - 1) K(u) / den(u)**3."""
    T, a = thetas.theta_tilde, thetas.theta1
    return np.array([
        8 * (a + 1) * (T * T * a + T * a + 2 * T + a + 1),
        6 * a * (a + 1) * (T**3 * a + T * T * a + 2 * T * T + 2 * T * a + 2 * T + 2 * a + 2),
        12 * T * a * (T + 2) * (a + 1),
        -T * T * a * ((T + 1) * (T * T + 2) * a * a + 2 * (T * T + T + 1) * a - 8 * (T + 2)),
    ])


def f_second(u, thetas: ThetaParams):
    _, den = _f_polys(thetas)
    T = thetas.theta_tilde
    return -2 * (T - 1) * np.polyval(inflection_cubic(thetas), u) / np.polyval(den, u) ** 3


def inflection_point(thetas: ThetaParams) -> float | None:
    """Positive zero of f'', if any (at most one: K has one sign change)."""
    if thetas.theta_tilde == 1:
        return None
    roots = positive_roots(inflection_cubic(thetas))
    return roots[0].value if roots else None


def theta1_star(thetas: ThetaParams) -> float:
    """theta1 above which f has an inflection point on u > 0.

    Positive root in theta1 of the constant term of the inflection cubic.
    """
    T = thetas.theta_tilde
    disc = 9 * T**4 + 26 * T**3 + 35 * T**2 + 50 * T + 33
    return (-(T * T + T + 1) + math.sqrt(disc)) / ((T * T + 2) * (T + 1))


def theta1_star_printed(thetas: ThetaParams) -> float:
    """The same threshold with ``+(T^2 + T + 1)`` in the numerator, as it is
    usually quoted. It does not mark where the inflection point appears."""
    T = thetas.theta_tilde
    disc = 9 * T**4 + 26 * T**3 + 35 * T**2 + 50 * T + 33
    return (T * T + T + 1 + math.sqrt(disc)) / ((T * T + 2) * (T + 1))


def symmetric_cubic(thetas: ThetaParams) -> np.ndarray:
    """theta3*u*den(u) - num(u), whose positive roots are the symmetric fixed points."""
    num, den = _f_polys(thetas)
    return thetas.theta3 * np.append(den, 0.0) - np.insert(num, 0, 0.0)


def symmetric_roots(thetas: ThetaParams):
    """Positive roots of the symmetric equation, with multiplicities."""
    out = []
    t3 = thetas.theta3
    for r in positive_roots(symmetric_cubic(thetas)):
        u = r.value
        if r.multiplicity == 1:
            for _ in range(3):
                g = t3 * u - f_symmetric(u, thetas)
                dg = t3 - f_prime(u, thetas)
                if dg == 0:
                    break
                nu = u - g / dg
                if not nu > 0 or abs(t3 * nu - f_symmetric(nu, thetas)) >= abs(g):
                    break
                u = nu
        out.append(type(r)(float(u), r.multiplicity))
    return out


def solve_symmetric(thetas: ThetaParams) -> list[float]:
    return [r.value for r in symmetric_roots(thetas)]


def symmetric_solution_count(thetas: ThetaParams) -> int:
    return len(symmetric_roots(thetas))


def quartic_coefficients(thetas: ThetaParams) -> tuple[float, float, float, float, float]:
    """Coefficients (A, B, C, D, E) of the tangency quartic, u f'(u) = f(u) cleared.

    The constant term is theta_tilde^2 * theta1^2 (product of the constant
    terms of numerator and denominator of f).
    """
    T, a = thetas.theta_tilde, thetas.theta1
    A = 2 * (a + 1) * (T * T * a + 2 * T + a)
    B = 8 * (T + 1) * (a + 1)
    C = -(T**4) * a * a - 2 * a * T**3 - a * a * T * T + 8 * T * T + 8 * T + 6 * a * a + 6 * a
    D = 8 * T * a
    E = T * T * a * a
    return A, B, C, D, E


def tangency_roots(thetas: ThetaParams) -> list[float]:
    """Positive u where the line through the origin touches f."""
    return [r.value for r in positive_roots(quartic_coefficients(thetas))]


def theta1_star_star(thetas: ThetaParams) -> float:
    """theta1 beyond which the quartic coefficient C is negative."""
    T = thetas.theta_tilde
    if T * T <= 2:
        raise RegimeError("theta1** requires theta_tilde^2 > 2")
    c2 = 6 - T**4 - T * T
    c1 = 6 - 2 * T**3
    c0 = 8 * T * T + 8 * T
    # c2 < 0 < c0: exactly one positive root.
    return (-c1 - math.sqrt(c1 * c1 - 4 * c2 * c0)) / (2 * c2)


def eta_thresholds(thetas: ThetaParams) -> tuple[float, float]:
    roots = tangency_roots(thetas)
    if len(roots) < 2:
        raise RegimeError(f"need two tangency roots, found {len(roots)}")
    etas = sorted(float(f_symmetric(u, thetas) / u) for u in roots)
    return etas[0], etas[1]


@dataclass(frozen=True)
class SymmetricAnalysis:
    theta1_star: float
    inflection_u: float | None
    quartic: tuple[float, float, float, float, float]
    tangency_roots: tuple[float, ...]
    eta1: float | None
    eta2: float | None
    root_count: int
    roots: tuple[float, ...] = ()
    theta1_star_star: float | None = None


def symmetric_analysis(thetas: ThetaParams) -> SymmetricAnalysis:
    try:
        e1, e2 = eta_thresholds(thetas)
    except RegimeError:
        e1 = e2 = None
    try:
        t1ss = theta1_star_star(thetas)
    except RegimeError:
        t1ss = None
    roots = solve_symmetric(thetas)
    return SymmetricAnalysis(
        theta1_star=theta1_star(thetas),
        inflection_u=inflection_point(thetas),
        quartic=quartic_coefficients(thetas),
        tangency_roots=tuple(tangency_roots(thetas)),
        eta1=e1,
        eta2=e2,
        root_count=len(roots),
        roots=tuple(roots),
        theta1_star_star=t1ss,
    )


# -- the asymmetric branch ----------------------------------------------------

def _division_relation(thetas: ThetaParams) -> tuple[np.ndarray, float]:
    """t * den = num(s), from dividing the two fixed-point equations."""
    T, a = thetas.theta_tilde, thetas.theta1
    return np.array([a, 2.0, a]), T * T * a + a - 2 * T


def _difference_relation(thetas: ThetaParams, theta3: float | None = None
                         ) -> tuple[np.ndarray, float]:
    """t * den = num(s), from subtracting the equations and cancelling (u - v)."""
    T, a = thetas.theta_tilde, thetas.theta1
    t3 = thetas.theta3 if theta3 is None else theta3
    num = np.array([t3 * a, 2 * t3 * T - a * (T * T - 1), t3 * T * T * a - 2 * (T - 1)])
    return num, 2 * t3 * (a - 1)


def t_from_s_ratio(s: float, thetas: ThetaParams) -> float:
    num, den = _difference_relation(thetas)
    if den == 0:
        raise RegimeError("theta1 = 1: the difference relation does not involve t")
    return float(np.polyval(num, s) / den)


def t_from_s_ratio_printed(s: float, thetas: ThetaParams) -> float:
    """The difference relation with theta2 in place of theta3, as often quoted."""
    T, a, t2 = thetas.theta_tilde, thetas.theta1, thetas.theta2
    if a == 1:
        raise RegimeError("theta1 = 1")
    num = a * t2 * s * s + (2 * t2 * T - a * (T * T - 1)) * s + T * T * a * t2 - 2 * (T - 1)
    return num / (2 * thetas.theta3 * (a - 1))


def t_from_s_division(s: float, thetas: ThetaParams) -> float:
    num, den = _division_relation(thetas)
    if den == 0:
        raise RegimeError("theta_tilde^2 theta1 + theta1 - 2 theta_tilde = 0")
    return float(np.polyval(num, s) / den)


def _s_polynomial(thetas: ThetaParams, theta3: float | None = None) -> np.ndarray:
    nd, dd = _division_relation(thetas)
    nr, dr = _difference_relation(thetas, theta3)
    return nr * dd - nd * dr


def s_quadratic(thetas: ThetaParams) -> np.ndarray:
    """Quadratic in s whose roots make the two t relations agree (cleared denominators)."""
    q = _s_polynomial(thetas)
    if not np.any(np.abs(q) > 1e-14 * max(1.0, np.max(np.abs(_s_polynomial(thetas, 1.0))))):
        raise RegimeError("theta_tilde = 1: the two t relations coincide")
    return q


def _quadratic_roots(c: np.ndarray) -> list[float]:
    c2, c1, c0 = (float(x) for x in c)
    if c2 == 0:
        return [] if c1 == 0 else [-c0 / c1]
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    q = -0.5 * (c1 + math.copysign(sq, c1))
    roots = [q / c2, c0 / q] if q != 0 else [0.0, 0.0]
    return sorted(roots)


def asymmetric_s_roots(thetas: ThetaParams) -> list[float]:
    """Positive roots s of the eliminated quadratic, checked against both t relations."""
    q = s_quadratic(thetas)
    roots = [s for s in _quadratic_roots(q) if s > 0]
    nd, dd = _division_relation(thetas)
    nr, dr = _difference_relation(thetas)
    for s in roots:
        lhs = np.polyval(nr, s) * dd
        rhs = np.polyval(nd, s) * dr
        scale = max(abs(lhs), abs(rhs), 1.0)
        if abs(lhs - rhs) > 1e-10 * scale:
            raise ArithmeticError(f"s = {s} does not satisfy both t relations")
    return roots


def t_from_s(s: float, thetas: ThetaParams) -> float:
    """t for a root s, taken from whichever relation has a nonzero t coefficient."""
    try:
        return t_from_s_division(s, thetas)
    except RegimeError:
        return t_from_s_ratio(s, thetas)


def s_star(thetas: ThetaParams) -> float:
    """s beyond which the division relation gives a realizable t < s^2 / 4."""
    T, a = thetas.theta_tilde, thetas.theta1
    lead = a * (T * T - 3) - 2 * T
    if lead <= 0:
        raise RegimeError("s* requires theta1 (theta_tilde^2 - 3) - 2 theta_tilde > 0")
    return (4 + math.sqrt(16 + 4 * a * lead)) / lead


def single_root_threshold(thetas: ThetaParams) -> float:
    """theta3 below which the s equation has exactly one positive root."""
    T, a = thetas.theta_tilde, thetas.theta1
    num = 2 * (a * (T * T + 1) - 2 * T)
    den = a * (a * (T**3 + T * T + 2 * T + 2) - 2 * (T * T + T + 1))
    if den <= 0 or num <= 0:
        raise RegimeError("single-root threshold undefined for these parameters")
    return num / den


def parabola_coefficients(thetas: ThetaParams) -> np.ndarray:
    """Right-hand side of ``(theta1 (T + 1) s + 2) / theta3 = p(s)``.

    Obtained at run time as the theta3-linear part of the eliminated quadratic
    divided by (T - 1) times the division-relation denominator.
    """
    T = thetas.theta_tilde
    _, dd = _division_relation(thetas)
    if T == 1 or dd == 0:
        raise RegimeError("parabola undefined for theta_tilde = 1 or vanishing denominator")
    qa = _s_polynomial(thetas, 1.0) - _s_polynomial(thetas, 0.0)
    return qa / ((T - 1) * dd)


def k0_slope(thetas: ThetaParams) -> float:
    """Slope of the line through (0, 2/theta3) tangent to the parabola at some s > 0."""
    c2, c1, c0 = parabola_coefficients(thetas)
    gap = c0 - 2 / thetas.theta3
    if c2 <= 0 or gap <= 0:
        raise RegimeError("no tangent line from the intercept to the parabola")
    return float(c1 + 2 * math.sqrt(c2 * gap))


def asymmetric_tangency_theta3(thetas: ThetaParams) -> float:
    """theta3 at which theta3 = theta1 (T + 1) / k0 holds with k0 taken at that theta3.

    k0 depends on theta3 through the intercept 2/theta3, so the threshold is
    the positive root (in c = 1/theta3) of the tangency discriminant
    (c1 - L c)^2 - 4 c2 (c0 - 2 c) = 0 with L = theta1 (T + 1), restricted to a
    tangency at s > 0 and an intercept below the parabola.
    """
    c2, c1, c0 = parabola_coefficients(thetas)
    L = thetas.theta1 * (thetas.theta_tilde + 1)
    cands = [c for c in _quadratic_roots(np.array([L * L, 8 * c2 - 2 * c1 * L, c1 * c1 - 4 * c2 * c0]))
             if c > 0 and c0 - 2 * c > 0 and L * c - c1 > 0]
    if c2 <= 0 or not cands:
        raise RegimeError("no tangency of the s line for any theta3")
    return 1 / min(cands)


def recover_uv(s: float, t: float) -> tuple[float, float]:
    if not (t > 0 and t < s * s / 4):
        raise ValueError(f"(s, t) = ({s}, {t}) not realizable by distinct positive u, v")
    r = math.sqrt(s * s - 4 * t)
    u = (s + r) / 2
    return u, t / u


# -- stability --------------------------------------------------------------

def _jacobian_entries(u, v, thetas: ThetaParams):
    """Entries (j11, j12, j21, j22) of the ratio map's Jacobian; works on arrays."""
    T, a1 = thetas.theta_tilde, thetas.theta1
    a = T * T * a1
    nu, nv, d = ratio_map_terms(u, v, thetas)
    dnu_du, dnu_dv = 2 * T * (1 + v) + 2 * a * u, 2 * T * u + 2 + 2 * a1 * v
    dnv_du, dnv_dv = 2 + 2 * T * v + 2 * a1 * u, 2 * T * (1 + u) + 2 * a * v
    dd_du, dd_dv = 2 * T + 2 * a1 * u + 2 * v, 2 * T + 2 * a1 * v + 2 * u
    scale = thetas.theta3 * d * d
    return ((dnu_du * d - nu * dd_du) / scale, (dnu_dv * d - nu * dd_dv) / scale,
            (dnv_du * d - nv * dd_du) / scale, (dnv_dv * d - nv * dd_dv) / scale)


def jacobian(p: RatioPoint, thetas: ThetaParams) -> np.ndarray:
    j11, j12, j21, j22 = _jacobian_entries(p.u, p.v, thetas)
    return np.array([[j11, j12], [j21, j22]])


def fixed_point_residual(p: RatioPoint, thetas: ThetaParams) -> float:
    q = ratio_step(p, thetas)
    return max(abs(q.u - p.u), abs(q.v - p.v)) / max(1.0, p.u, p.v)


def classify_radius(rho: float, margin: float = STABILITY_MARGIN) -> Stability:
    if rho < 1 - margin:
        return Stability.STABLE
    if rho > 1 + margin:
        return Stability.UNSTABLE
    return Stability.MARGINAL


def stability_of(p: RatioPoint, thetas: ThetaParams) -> tuple[float, Stability]:
    if fixed_point_residual(p, thetas) >= 1e-6:
        raise ValueError(f"{p} is not a fixed point")
    rho = float(np.max(np.abs(np.linalg.eigvals(jacobian(p, thetas)))))
    return rho, classify_radius(rho)


# -- assembling all fixed points ----------------------------------------------

def _newton_batch(u0, v0, thetas: ThetaParams, max_iter: int = 60,
                  tol: float = 1e-14) -> np.ndarray:
    """Newton on F(u, v) = map(u, v) - (u, v) from many starts at once.

    Iterates in log coordinates so every iterate stays positive. Returns an
    (n, 2) array with NaN rows for starts that failed.
    """
    x = np.log(np.asarray(u0, dtype=float)).ravel()
    y = np.log(np.asarray(v0, dtype=float)).ravel()
    active = np.ones(x.shape, dtype=bool)
    failed = np.zeros(x.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            u, v = np.exp(x), np.exp(y)
            nu, nv, d = ratio_map_terms(u, v, thetas)
            fu = nu / (thetas.theta3 * d) - u
            fv = nv / (thetas.theta3 * d) - v
            j11, j12, j21, j22 = _jacobian_entries(u, v, thetas)
            # d/dlog u = u * d/du
            a11, a12 = (j11 - 1) * u, j12 * v
            a21, a22 = j21 * u, (j22 - 1) * v
            det = a11 * a22 - a12 * a21
            dx = np.clip((-fu * a22 + fv * a12) / det, -2.0, 2.0)
            dy = np.clip((-fv * a11 + fu * a21) / det, -2.0, 2.0)
            dx = np.where(active, dx, 0.0)
            dy = np.where(active, dy, 0.0)
            x, y = x + dx, y + dy
            bad = ~np.isfinite(x) | ~np.isfinite(y) | (np.abs(x) > 700) | (np.abs(y) > 700)
            x[bad], y[bad] = 0.0, 0.0
            failed |= bad
            active &= ~failed & (np.maximum(np.abs(dx), np.abs(dy)) >= tol)
            if not active.any():
                break
    out = np.column_stack([np.exp(x), np.exp(y)])
    out[failed] = np.nan
    return out


def _newton(p: tuple[float, float], thetas: ThetaParams, max_iter: int = 60
            ) -> tuple[float, float] | None:
    u, v = _newton_batch([p[0]], [p[1]], thetas, max_iter)[0]
    if not np.isfinite(u) or fixed_point_residual(RatioPoint(u, v), thetas) > RESIDUAL_TOL:
        return None
    return float(u), float(v)


def polish(p: tuple[float, float], thetas: ThetaParams) -> tuple[float, float]:
    """A few Newton steps from an already accurate fixed point."""
    better = _newton(p, thetas, max_iter=4)
    return p if better is None else better


def _fixed_point_box(thetas: ThetaParams) -> tuple[float, float]:
    """Every fixed point lies in [lo, hi]^2: the map's image is bounded termwise."""
    T = thetas.theta_tilde
    ratios = (T**-2, 1 / T, 1.0, T, T * T)
    return min(ratios) / thetas.theta3, max(ratios) / thetas.theta3


def _close(p, q, tol: float = MERGE_TOL) -> bool:
    return all(abs(a - b) <= tol * max(1.0, abs(a), abs(b)) for a, b in zip(p, q))


def _dedupe(points):
    out = []
    for p in sorted(points):
        if not any(_close(p, q) for q in out):
            out.append(p)
    return out


def newton_fixed_points(thetas: ThetaParams, grid: int = 20) -> list[tuple[float, float]]:
    """All fixed points found by Newton from a grid x grid log-spaced set of starts.

    Independent of the symmetric/asymmetric reduction; used to cross-check it.
    """
    lo, hi = _fixed_point_box(thetas)
    starts = np.geomspace(lo / 2, hi * 2, grid)
    U0, V0 = np.meshgrid(starts, starts, indexing="ij")
    found = []
    for u, v in _newton_batch(U0, V0, thetas):
        if np.isfinite(u) and fixed_point_residual(RatioPoint(u, v), thetas) <= RESIDUAL_TOL:
            found.append((float(u), float(v)))
    return _dedupe(found)


@dataclass(frozen=True)
class FixedPointSet:
    points: tuple[FixedPoint, ...]
    asymmetric_note: str | None = None
    s_roots: tuple[float, ...] = field(default=())

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def stable(self) -> list[FixedPoint]:
        return [p for p in self.points if p.stable]


def _make(p: tuple[float, float], branch: Branch, thetas: ThetaParams) -> FixedPoint:
    rp = RatioPoint(*p)
    rho, cls = stability_of(rp, thetas)
    return FixedPoint(rp, branch, fixed_point_residual(rp, thetas), rho, cls)


def asymmetric_pairs(thetas: ThetaParams) -> tuple[list[tuple[float, float]], tuple[float, ...]]:
    """Asymmetric fixed points (both orientations) and the admissible s values."""
    pairs = []
    used = []
    for s in asymmetric_s_roots(thetas):
        t = t_from_s(s, thetas)
        if not (0 < t < s * s / 4) or math.isclose(t, s * s / 4, rel_tol=1e-12):
            continue
        u, v = polish(recover_uv(s, t), thetas)
        if fixed_point_residual(RatioPoint(u, v), thetas) > RESIDUAL_TOL:
            continue
        used.append(s)
        pairs.append((u, v))
        pairs.append((v, u))
    return pairs, tuple(used)


def all_fixed_points(thetas: ThetaParams) -> FixedPointSet:
    sym = [(u, u) for u in solve_symmetric(thetas)]
    note = None
    try:
        asym, s_used = asymmetric_pairs(thetas)
    except RegimeError as exc:
        asym, s_used, note = [], (), str(exc)
    points = [_make(p, Branch.SYMMETRIC, thetas) for p in _dedupe(sym)]
    for p in _dedupe(asym):
        if not any(_close(p, q.point.as_tuple()) for q in points):
            points.append(_make(p, Branch.ASYMMETRIC, thetas))
    points.sort(key=lambda fp: fp.point.as_tuple())
    return FixedPointSet(tuple(points), note, s_used)
