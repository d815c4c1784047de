import math

import numpy as np
import pytest
import sympy as sp

from pottscayley import fixed_points as fp
from pottscayley.model import ThetaParams
from pottscayley.polyroots import count_positive_roots
from pottscayley.recursion import RatioPoint, ratio_step

ONES = ThetaParams(1, 1, 1, 1)
T_, A_, U_ = sp.symbols("T a u", positive=True)


def tilde(T, a, t3=1.0, theta2=1.0):
    return ThetaParams.from_tilde(T, a, t3, theta2)


def sign_scan_count(th, n=10_000):
    lo, hi = fp._fixed_point_box(th)
    u = np.geomspace(lo / 2, hi * 2, n)
    g = th.theta3 * u - fp.f_symmetric(u, th)
    s = np.sign(g)
    return int(np.sum(s[1:] * s[:-1] < 0))


# -- f and its derivatives -------------------------------------------------------

def test_f_collapses_when_tilde_and_theta1_one():
    u = np.geomspace(1e-3, 1e3, 50)
    np.testing.assert_allclose(fp.f_symmetric(u, ONES), 1.0, rtol=1e-15)


def test_f_limits():
    th = tilde(2.3, 1.7)
    T, a = th.theta_tilde, th.theta1
    assert fp.f_symmetric(1e12, th) == pytest.approx((T * T * a + 2 * T + a) / (2 * (a + 1)), rel=1e-9)
    assert fp.f_symmetric(1e-12, th) == pytest.approx(1 / T**2, rel=1e-9)


def test_derivatives_against_finite_differences():
    th = tilde(1.8, 3.5)
    for u in (0.05, 0.4, 1.0, 3.0, 20.0):
        h = 1e-5 * u
        fd1 = (fp.f_symmetric(u + h, th) - fp.f_symmetric(u - h, th)) / (2 * h)
        fd2 = (fp.f_symmetric(u + h, th) - 2 * fp.f_symmetric(u, th) + fp.f_symmetric(u - h, th)) / h**2
        assert fp.f_prime(u, th) == pytest.approx(fd1, rel=1e-7)
        assert fp.f_second(u, th) == pytest.approx(fd2, rel=1e-4, abs=1e-8)


def test_inflection_cubic_matches_symbolic_second_derivative():
    N = (T_**2 * A_ + 2 * T_ + A_) * U_**2 + 2 * (T_ + 1) * U_ + A_
    D = 2 * (A_ + 1) * U_**2 + 4 * T_ * U_ + T_**2 * A_
    f2 = sp.diff(N / D, U_, 2)
    for T, a in [(1.5, 2.0), (3.0, 0.4), (0.6, 5.0)]:
        th = tilde(T, a)
        for u in (0.1, 1.3, 7.0):
            exact = float(f2.subs({T_: T, A_: a, U_: u}))
            assert fp.f_second(u, th) == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("T", [1.5, 2.0, 5.0])
def test_f_increasing_when_tilde_above_one(T):
    u = np.geomspace(1e-6, 1e6, 2000)
    for a in (0.3, 1.0, 4.0, 30.0):
        assert np.all(fp.f_prime(u, tilde(T, a)) > 0)


@pytest.mark.parametrize("T", [0.3, 0.8])
def test_f_decreasing_when_tilde_below_one(T):
    u = np.geomspace(1e-6, 1e6, 2000)
    for a in (0.3, 1.0, 4.0, 30.0):
        assert np.all(fp.f_prime(u, tilde(T, a)) < 0)


def _f2_sign_changes(th):
    u = np.geomspace(1e-9, 1e9, 20_001)
    s = np.sign(np.polyval(fp.inflection_cubic(th), u))
    return int(np.sum(s[1:] * s[:-1] < 0))


@pytest.mark.parametrize("T", [1.5, 2.0, 5.0])
def test_inflection_appears_at_theta1_star(T):
    star = fp.theta1_star(tilde(T, 1.0))
    assert _f2_sign_changes(tilde(T, star * 1.01)) == 1
    assert _f2_sign_changes(tilde(T, star * 0.99)) == 0
    assert fp.inflection_point(tilde(T, star * 1.01)) is not None
    assert fp.inflection_point(tilde(T, star * 0.99)) is None


def test_theta1_star_values():
    # quoted form at theta_tilde = 1: (3 + sqrt(153)) / 6
    assert fp.theta1_star_printed(ONES) == pytest.approx((3 + math.sqrt(153)) / 6, rel=1e-15)
    assert fp.theta1_star_printed(ONES) == pytest.approx(2.561553, abs=1e-6)
    assert fp.theta1_star(ONES) == pytest.approx((-3 + math.sqrt(153)) / 6, rel=1e-15)
    # theta_tilde = 2: sqrt(625) = 25, so (-7 + 25) / 18 = 1
    assert fp.theta1_star(tilde(2, 1)) == pytest.approx(1.0, rel=1e-15)
    tail = [fp.theta1_star(tilde(T, 1)) for T in (1e2, 1e3, 1e4)]
    assert tail[0] > tail[1] > tail[2] > 0
    assert tail[2] * 1e4 == pytest.approx(2.0, rel=1e-3)


@pytest.mark.parametrize("T", [1.5, 2.0, 5.0])
def test_quoted_theta1_star_misses_the_inflection(T):
    """Between the two forms f already has an inflection point."""
    lo, hi = fp.theta1_star(tilde(T, 1)), fp.theta1_star_printed(tilde(T, 1))
    assert lo < hi
    assert _f2_sign_changes(tilde(T, 0.5 * (lo + hi))) == 1


# -- symmetric roots -------------------------------------------------------------

def test_solve_symmetric_trivial_cases():
    assert fp.solve_symmetric(ONES) == pytest.approx([1.0])
    th = ThetaParams(1, 1, 1, 2.5)
    assert fp.solve_symmetric(th) == pytest.approx([1 / 2.5], rel=1e-14)


def test_symmetric_root_residuals():
    rng = np.random.default_rng(0)
    for _ in range(100):
        th = tilde(*np.exp(rng.uniform(-1, 2, 3)))
        for u in fp.solve_symmetric(th):
            assert abs(th.theta3 * u - fp.f_symmetric(u, th)) < 1e-12 * max(1.0, th.theta3 * u)


def test_symmetric_count_matches_sign_scan():
    rng = np.random.default_rng(1)
    seen = set()
    for k in range(200):
        if k % 2:
            # draws from the region where three roots are common
            T = rng.uniform(2.2, 6)
            th0 = tilde(T, rng.uniform(5, 40))
            try:
                e1, e2 = fp.eta_thresholds(th0)
            except fp.RegimeError:
                e1, e2 = 0.5, 2.0
            th = th0.replace(theta3=float(rng.uniform(0.8 * e1, 1.2 * e2)))
        else:
            th = tilde(*np.exp(rng.uniform(-1.5, 2.5, 3)))
        n = fp.symmetric_solution_count(th)
        assert n == sign_scan_count(th)
        seen.add(n)
    assert seen == {1, 3}


def test_decreasing_f_gives_one_root():
    rng = np.random.default_rng(2)
    for _ in range(50):
        th = tilde(rng.uniform(0.1, 0.99), np.exp(rng.uniform(-2, 4)), np.exp(rng.uniform(-2, 2)))
        assert fp.symmetric_solution_count(th) == 1


# -- the tangency quartic ----------------------------------------------------------

def test_quartic_matches_symbolic_derivation():
    N = (T_**2 * A_ + 2 * T_ + A_) * U_**2 + 2 * (T_ + 1) * U_ + A_
    D = 2 * (A_ + 1) * U_**2 + 4 * T_ * U_ + T_**2 * A_
    # u f' = f  <=>  N D - u (N' D - N D') = 0
    poly = sp.Poly(sp.expand(N * D - U_ * (sp.diff(N, U_) * D - N * sp.diff(D, U_))), U_)
    for T, a in [(1.0, 1.0), (2.0, 4.0), (0.7, 3.3)]:
        exact = [float(c.subs({T_: T, A_: a})) for c in poly.all_coeffs()]
        assert fp.quartic_coefficients(tilde(T, a)) == pytest.approx(exact, rel=1e-14)


def test_quartic_values():
    assert fp.quartic_coefficients(ONES) == (16, 32, 24, 8, 1)
    A, B, C, D, E = fp.quartic_coefficients(tilde(2, 4))
    assert C == pytest.approx(-216)
    assert C < 0 and 4 > fp.theta1_star_star(tilde(2, 4))


def test_quartic_leading_and_trailing_positive():
    rng = np.random.default_rng(3)
    for _ in range(200):
        A, B, C, D, E = fp.quartic_coefficients(tilde(*np.exp(rng.uniform(-3, 3, 2))))
        assert min(A, B, D, E) > 0


def test_tangency_roots_are_tangencies():
    th = tilde(2.5, 15)
    roots = fp.tangency_roots(th)
    assert len(roots) == 2
    for u in roots:
        assert abs(u * fp.f_prime(u, th) - fp.f_symmetric(u, th)) < 1e-10
    assert fp.tangency_roots(ONES) == []


def test_positive_C_means_no_tangency():
    for T in np.linspace(1.1, 5, 25):
        for a in np.linspace(1.1, 10, 25):
            th = tilde(T, a)
            C = fp.quartic_coefficients(th)[2]
            n = len(fp.tangency_roots(th))
            assert n == count_positive_roots(fp.quartic_coefficients(th))
            if C > 0:
                assert n == 0
            else:
                assert n in (0, 2)


def test_theta1_star_star():
    expected = (-10 + math.sqrt(100 + 4 * 14 * 48)) / 28
    th = tilde(2, 1)
    t = fp.theta1_star_star(th)
    assert t == pytest.approx(expected, rel=1e-14)
    assert t == pytest.approx(1.5286, abs=1e-4)
    assert fp.quartic_coefficients(th.replace(theta1=t * (1 - 1e-9)))[2] > 0
    assert fp.quartic_coefficients(th.replace(theta1=t * (1 + 1e-9)))[2] < 0
    with pytest.raises(fp.RegimeError):
        fp.theta1_star_star(tilde(1.4, 1))
    near = [fp.theta1_star_star(tilde(math.sqrt(2 + eps), 1)) for eps in (1e-2, 1e-4, 1e-6)]
    assert near[0] < near[1] < near[2] and near[2] > 1e3


# -- eta window ----------------------------------------------------------------

WINDOW = tilde(2.5, 15)


def _cubic_discriminant(c):
    a, b, cc, d = c
    disc = 18 * a * b * cc * d - 4 * b**3 * d + b * b * cc * cc - 4 * a * cc**3 - 27 * a * a * d * d
    scale = max(abs(x) for x in c) ** 4
    return disc / scale


def test_eta_makes_double_root():
    e1, e2 = fp.eta_thresholds(WINDOW)
    assert 0 < e1 < e2
    for e in (e1, e2):
        assert abs(_cubic_discriminant(fp.symmetric_cubic(WINDOW.replace(theta3=e)))) < 1e-8


def test_eta_window_counts():
    e1, e2 = fp.eta_thresholds(WINDOW)
    mid = math.sqrt(e1 * e2)
    assert fp.symmetric_solution_count(WINDOW.replace(theta3=mid)) == 3
    assert fp.symmetric_solution_count(WINDOW.replace(theta3=e1 * (1 + 1e-6))) == 3
    assert fp.symmetric_solution_count(WINDOW.replace(theta3=e2 * (1 - 1e-6))) == 3
    assert fp.symmetric_solution_count(WINDOW.replace(theta3=e1 * (1 - 1e-6))) == 1
    assert fp.symmetric_solution_count(WINDOW.replace(theta3=e2 * (1 + 1e-6))) == 1
    # exactly at eta the double root sits on a rounding knife edge; the
    # simple root must survive either way
    tang = fp.tangency_roots(WINDOW)
    for e in (e1, e2):
        roots = [r.value for r in fp.symmetric_roots(WINDOW.replace(theta3=e))]
        far = [r for r in roots if min(abs(r - t) / t for t in tang) > 1e-3]
        assert len(far) == 1


def test_eta_out_of_regime():
    with pytest.raises(fp.RegimeError):
        fp.eta_thresholds(ONES)


def test_lemma_window_by_sweep():
    """theta3 sweep: 1 -> 3 -> 1 with transitions at eta1, eta2."""
    e1, e2 = fp.eta_thresholds(WINDOW)
    t3 = np.geomspace(e1 / 1.5, e2 * 1.5, 400)
    counts = [fp.symmetric_solution_count(WINDOW.replace(theta3=t)) for t in t3]
    inside = (t3 > e1) & (t3 < e2)
    assert all(c == 3 for c, i in zip(counts, inside) if i)
    assert all(c == 1 for c, i in zip(counts, inside) if not i)


# -- asymmetric branch ----------------------------------------------------------

def _asymmetric_newton_points(th):
    return [p for p in fp.newton_fixed_points(th) if abs(p[0] - p[1]) > 1e-6 * max(p)]


FIVE = tilde(2.5, 15, 0.8913002298049636, theta2=2.0)


@pytest.mark.parametrize("th", [FIVE, tilde(4, 3, 1.22, 1.7), tilde(3, 5, 1.0, 0.5)])
def test_t_relations_hold_at_asymmetric_points(th):
    pts = _asymmetric_newton_points(th)
    assert pts
    for u, v in pts:
        s, t = u + v, u * v
        assert fp.t_from_s_ratio(s, th) == pytest.approx(t, rel=1e-9)
        assert fp.t_from_s_division(s, th) == pytest.approx(t, rel=1e-9)


def test_quoted_ratio_relation_fails_when_theta2_differs_from_theta3():
    th = FIVE
    assert th.theta2 != th.theta3
    u, v = _asymmetric_newton_points(th)[0]
    assert abs(fp.t_from_s_ratio_printed(u + v, th) - u * v) > 0.1 * u * v


def test_quoted_ratio_relation_agrees_when_theta2_equals_theta3():
    th = ThetaParams(1.6, 2.7, 1.3, 1.3)
    for s in (0.3, 1.0, 4.5):
        assert fp.t_from_s_ratio_printed(s, th) == pytest.approx(fp.t_from_s_ratio(s, th), rel=1e-14)


def test_t_relation_regimes():
    with pytest.raises(fp.RegimeError):
        fp.t_from_s_ratio(1.0, tilde(2, 1.0))
    with pytest.raises(fp.RegimeError):
        fp.t_from_s_division(1.0, ONES)
    th = tilde(2.0, 3.0)
    assert fp.t_from_s_division(1e-12, th) == pytest.approx(3 / (4 * 3 + 3 - 4), rel=1e-9)


def test_s_quadratic_s_coefficient():
    """Linear coefficient of the eliminated quadratic, in its normalized form,
    is 2 [theta1 (T^2 + T + 2) - 2 (T + 1)]."""
    for T, a in [(2.5, 15), (3, 4), (1.7, 0.6)]:
        th = tilde(T, a)
        c2, c1, c0 = fp.parabola_coefficients(th)
        P = a * (T * T + 1) - 2 * T
        assert c2 * P == pytest.approx(a * (a * (T + 1) - 2), rel=1e-12)
        assert c1 * P == pytest.approx(2 * (a * (T * T + T + 2) - 2 * (T + 1)), rel=1e-12)
        assert c0 * P == pytest.approx(a * (a * (T**3 + T * T + 2 * T + 2) - 2 * (T * T + T + 1)), rel=1e-12)


def test_single_root_below_threshold():
    th = tilde(3, 5)
    thr = fp.single_root_threshold(th)
    assert len(fp.asymmetric_s_roots(th.replace(theta3=thr * 0.9))) == 1
    assert len(fp.asymmetric_s_roots(th.replace(theta3=thr * 0.5))) == 1


def test_k0_tangency():
    th0 = tilde(2.5, 15)
    t3 = fp.asymmetric_tangency_theta3(th0)
    th = th0.replace(theta3=t3)
    k0 = fp.k0_slope(th)
    assert th.theta1 * (th.theta_tilde + 1) / k0 == pytest.approx(t3, rel=1e-12)
    c2, c1, c0 = fp.s_quadratic(th)
    assert abs(c1 * c1 - 4 * c2 * c0) < 1e-8 * c1 * c1
    # steeper line: two crossings; shallower: none
    assert len(fp.asymmetric_s_roots(th0.replace(theta3=t3 * 0.999))) == 2
    assert len(fp.asymmetric_s_roots(th0.replace(theta3=t3 * 1.001))) == 0


def test_k0_scan():
    th = FIVE
    c2, c1, c0 = fp.parabola_coefficients(th)
    k0 = fp.k0_slope(th)
    s = np.linspace(1e-6, 50, 200_001)

    def crossings(k):
        g = np.polyval([c2, c1, c0], s) - k * s - 2 / th.theta3
        return int(np.sum(np.sign(g[1:]) != np.sign(g[:-1])))

    assert crossings(k0 * 1.01) == 2
    assert crossings(k0 * 0.99) == 0


def test_s_star():
    th = tilde(2.5, 15)
    ss = fp.s_star(th)
    for d in (0.01, 0.1, 1):
        s = ss * (1 + d)
        assert fp.t_from_s_division(s, th) < s * s / 4
        s = ss * (1 - d) if d < 1 else ss * 0.5
        assert fp.t_from_s_division(s, th) > s * s / 4
    with pytest.raises(fp.RegimeError):
        fp.s_star(tilde(math.sqrt(3), 5))
    with pytest.raises(fp.RegimeError):
        fp.s_star(tilde(2, 3))


def test_admissible_s_exceeds_s_star():
    th = FIVE
    fps = fp.all_fixed_points(th)
    assert len(fps.s_roots) == 1
    assert fps.s_roots[0] > fp.s_star(th)
    all_s = fp.asymmetric_s_roots(th)
    assert sum(s > fp.s_star(th) for s in all_s) == 1


def test_recover_uv():
    assert fp.recover_uv(5, 6) == pytest.approx((3, 2))
    u, v = fp.recover_uv(2, 1 - 1e-8)
    assert u == pytest.approx(1 + 1e-4, rel=1e-6) and v == pytest.approx(1 - 1e-4, rel=1e-6)
    with pytest.raises(ValueError):
        fp.recover_uv(2, 1)


# -- assembly and stability --------------------------------------------------------

def test_all_fixed_points_trivial():
    fps = fp.all_fixed_points(ONES)
    assert len(fps) == 1
    p = fps.points[0]
    assert p.point.as_tuple() == (1, 1) and p.stable and p.spectral_radius == 0


def test_fixture_point(five_fixture, five_thetas):
    fps = fp.all_fixed_points(five_thetas)
    assert len(fps) == five_fixture["total_solutions"] == 5
    assert len(fps.stable) == 3
    for got, want in zip(fps, five_fixture["fixed_points"]):
        assert got.point.u == pytest.approx(want["u"], rel=1e-11)
        assert got.point.v == pytest.approx(want["v"], rel=1e-11)
        assert got.branch.value == want["branch"]
        assert got.stability.value == want["stability"]


def test_reflection_closure_when_field_zero():
    rng = np.random.default_rng(8)
    for _ in range(30):
        th = tilde(rng.uniform(1.5, 5), np.exp(rng.uniform(0, 3)), 1.0)
        pts = {(round(p.point.u, 9), round(p.point.v, 9)) for p in fp.all_fixed_points(th)}
        assert pts == {(v, u) for u, v in pts}


def test_agrees_with_multistart_newton():
    rng = np.random.default_rng(10)
    multi = 0
    for k in range(150):
        if k % 3 == 0:
            th = tilde(rng.uniform(2.2, 5), rng.uniform(2, 20), rng.uniform(0.5, 1.3))
        else:
            th = tilde(*np.exp(rng.uniform(-1, 2, 3)))
        mine = [p.point.as_tuple() for p in fp.all_fixed_points(th)]
        newton = fp.newton_fixed_points(th)
        assert len(mine) == len(newton)
        for p in mine:
            assert any(fp._close(p, q) for q in newton)
        multi += len(mine) > 1
    assert multi > 10


def test_all_points_have_small_residual():
    rng = np.random.default_rng(12)
    for _ in range(100):
        th = tilde(*np.exp(rng.uniform(-1, 2.5, 3)))
        for p in fp.all_fixed_points(th):
            assert p.residual < 1e-9


def test_degenerate_theta1_one_handled():
    th = tilde(3.0, 1.0, 0.9)
    fps = fp.all_fixed_points(th)
    newton = fp.newton_fixed_points(th)
    assert len(fps) == len(newton)


def _fd_jacobian(p, th, h=1e-6):
    J = np.empty((2, 2))
    for k in range(2):
        e = np.zeros(2)
        step = h * max(1.0, p[k])
        e[k] = step
        a = ratio_step(RatioPoint(*(np.array(p) + e)), th)
        b = ratio_step(RatioPoint(*(np.array(p) - e)), th)
        J[:, k] = (np.array(a.as_tuple()) - np.array(b.as_tuple())) / (2 * step)
    return J


def test_jacobian_finite_differences():
    rng = np.random.default_rng(13)
    for _ in range(300):
        th = tilde(*np.exp(rng.uniform(-1.5, 1.5, 3)))
        p = tuple(np.exp(rng.uniform(-2, 2, 2)))
        J = fp.jacobian(RatioPoint(*p), th)
        fd = _fd_jacobian(p, th)
        scale = max(np.max(np.abs(fd)), 1e-3)
        assert np.max(np.abs(J - fd)) <= 1e-6 * scale


def test_jacobian_zero_at_trivial_point():
    assert np.max(np.abs(fp.jacobian(RatioPoint(1, 1), ONES))) < 1e-15
    rho, cls = fp.stability_of(RatioPoint(1, 1), ONES)
    assert rho < 1e-12 and cls is fp.Stability.STABLE


def test_stability_rejects_non_fixed_point():
    with pytest.raises(ValueError):
        fp.stability_of(RatioPoint(2, 3), tilde(2, 2))


def test_classify_radius_margin():
    assert fp.classify_radius(0.5) is fp.Stability.STABLE
    assert fp.classify_radius(1 + 1e-7) is fp.Stability.MARGINAL
    assert fp.classify_radius(1.1) is fp.Stability.UNSTABLE
