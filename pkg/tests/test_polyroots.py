import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from pottscayley.polyroots import count_positive_roots, positive_roots, sturm_count

x = sp.symbols("x")


def _sympy_distinct_positive(coeffs):
    poly = sp.Poly([sp.Rational(c) for c in coeffs], x)
    return poly.count_roots(0, None) - (1 if poly.eval(0) == 0 else 0) if poly.degree() > 0 else 0


def test_simple_cubic():
    roots = positive_roots([1, -6, 11, -6])
    assert [r.value for r in roots] == pytest.approx([1, 2, 3], abs=1e-13)
    assert all(r.multiplicity == 1 for r in roots)


def test_double_root_reported_once():
    roots = positive_roots([1, -4, 5, -2])  # (x-1)^2 (x-2)
    assert [(round(r.value, 12), r.multiplicity) for r in roots] == [(1.0, 2), (2.0, 1)]


def test_no_positive_roots():
    assert positive_roots([1, 2, 1]) == []
    assert positive_roots([1, 0, 1]) == []
    assert positive_roots([5.0]) == []


def test_sturm_count_interval():
    assert sturm_count([1, -6, 11, -6], 0, 1.5) == 1
    assert sturm_count([1, -6, 11, -6], 1.5, 10) == 2


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(min_value=-50, max_value=50, allow_nan=False).filter(lambda c: abs(c) > 1e-3),
                min_size=3, max_size=5))
def test_count_matches_exact_sympy(coeffs):
    # sympy counts distinct real roots in [0, inf) exactly from the same rationals
    assert count_positive_roots(coeffs) == _sympy_distinct_positive(coeffs)
    roots = positive_roots(coeffs)
    assert len(roots) <= count_positive_roots(coeffs)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(min_value=0.01, max_value=100), min_size=1, max_size=4, unique=True))
def test_recovers_planted_roots(planted):
    planted = sorted(planted)
    gaps = np.diff(planted)
    if len(gaps) and np.min(gaps / np.array(planted[1:])) < 1e-3:
        return
    coeffs = np.poly(planted)
    got = [r.value for r in positive_roots(coeffs)]
    assert got == pytest.approx(planted, rel=1e-7)
