import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from ostrovsky_lab.resonance_identities import (
    SUM_BOUND,
    CaseLabel,
    FrequencyTriple,
    ZeroFrequencyError,
    case_condition,
    factor_small_window,
    gamma_sequence,
    identity_2011,
    identity_2044,
    identity_A,
    identity_B,
    in_root_windows,
    identity_suite,
    relative_residual,
    resonance,
    resonance_bounds,
    resonance_definition,
    root_windows,
)

TOL = 1e-12

# dyadic rationals are exact in both float and Fraction
dyadic = st.builds(lambda m, e: m * 2.0**e, st.integers(-2**20, 2**20).filter(bool), st.integers(-20, 0))


def F(x):
    return Fraction(x)


def p_exact(x: Fraction) -> Fraction:
    return x**3 - 1 / x


def h_exact(x1: Fraction, x2: Fraction) -> Fraction:
    x = x1 + x2
    return -(3 * x * x1 * x2 + (x1 * x1 + x1 * x2 + x2 * x2) / (x * x1 * x2))


def close(value, exact: Fraction, tol=TOL):
    return abs(value - float(exact)) <= tol * (1 + abs(float(exact)))


# identity_A / identity_B

def test_identity_a_examples():
    assert identity_A(1.0, 1.0) == (0.0, 0.0)
    for a, b in ((2.0, 1.0), (1.0, -0.5)):
        lhs, rhs = identity_A(a, b)
        assert relative_residual(lhs, rhs) <= TOL


def test_identity_b_examples():
    lhs, rhs = identity_B(1.0, 1.0)
    assert lhs == pytest.approx(7.5, abs=1e-14) and rhs == pytest.approx(7.5, abs=1e-14)
    lhs, rhs = identity_B(1.0, -2.0)
    assert relative_residual(lhs, rhs) <= TOL
    assert identity_B(0.3, 2.5)[0] > 0 and identity_B(0.3, 2.5)[1] > 0


@pytest.mark.parametrize("fn", [identity_A, identity_B])
def test_identities_reject_zero(fn):
    for a, b in ((0.0, 1.0), (1.0, 0.0), (1.0, -1.0)):
        with pytest.raises(ZeroFrequencyError):
            fn(a, b)


@given(dyadic, dyadic)
def test_identity_a_against_exact(a, b):
    assume(a + b != 0)
    A, B = F(a), F(b)
    exact = p_exact(A) + p_exact(B) - (A + B) ** 3 / 4 + 4 / (A + B)
    lhs, rhs = identity_A(a, b)
    assert close(lhs, exact) and close(rhs, exact)


@given(dyadic, dyadic)
def test_identity_b_against_exact(a, b):
    assume(a + b != 0)
    A, B = F(a), F(b)
    exact = p_exact(A + B) - p_exact(A) - p_exact(B)
    lhs, rhs = identity_B(a, b)
    assert close(lhs, exact) and close(rhs, exact)


# resonance

def test_resonance_examples():
    t = FrequencyTriple(1.0, 1.0)
    assert abs(resonance(t)) == pytest.approx(7.5, abs=1e-14)
    with pytest.raises(ZeroFrequencyError):
        resonance(FrequencyTriple(2.0, -2.0))
    with pytest.raises(ZeroFrequencyError):
        FrequencyTriple(0.0, 1.0)
    with pytest.raises(ValueError):
        FrequencyTriple(np.inf, 1.0)


def test_resonance_tau_telescopes():
    a = resonance_definition(FrequencyTriple(1.5, -0.25, 3.0, 7.0))
    b = resonance_definition(FrequencyTriple(1.5, -0.25, 9.5, 0.5))
    assert a == pytest.approx(b, rel=1e-15)


@given(dyadic, dyadic, dyadic, dyadic)
def test_resonance_against_exact(x1, x2, t1, t2):
    assume(x1 + x2 != 0)
    exact = h_exact(F(x1), F(x2))
    t = FrequencyTriple(x1, x2, t1, t2)
    assert close(resonance(t), exact)
    assert close(resonance_definition(t), exact)


def test_resonance_bounds_examples():
    lo, hi = resonance_bounds(FrequencyTriple(1.0, 1.0))
    assert (lo, hi) == (6.0, 12.0)
    t = FrequencyTriple(100.0, 100.0)
    lo, hi = resonance_bounds(t)
    assert lo == pytest.approx(6e6) and lo <= abs(resonance(t)) <= hi
    t = FrequencyTriple(0.01, 0.01)
    lo, hi = resonance_bounds(t)
    frac = (3 * 1e-4) / (0.02 * 1e-4)
    assert lo == pytest.approx(frac) and lo <= abs(resonance(t)) <= hi


@given(dyadic, dyadic)
def test_resonance_sandwich(x1, x2):
    assume(x1 + x2 != 0)
    t = FrequencyTriple(x1, x2)
    lo, hi = resonance_bounds(t)
    h = abs(resonance(t))
    assert lo * (1 - 1e-14) <= h <= hi * (1 + 1e-14)


# modulation splits

def test_modulation_split_examples():
    assert identity_2011(FrequencyTriple(1.5, 1.5, 0.3, -0.2))[1] == 0.0
    lhs, rhs = identity_2011(FrequencyTriple(1.5, 1.5, 0.3, -0.2))
    assert abs(lhs) <= 1e-14
    lhs, rhs = identity_2011(FrequencyTriple(2.0, 1.0))
    assert relative_residual(lhs, rhs) <= TOL
    _, r_pos = identity_2011(FrequencyTriple(2.0, 0.5))
    _, r_neg = identity_2011(FrequencyTriple(-2.0, -0.5))
    assert r_neg == pytest.approx(-r_pos, rel=1e-15)


@given(dyadic, dyadic, dyadic, dyadic)
def test_modulation_split_against_exact(x1, x2, t1, t2):
    assume(x1 + x2 != 0)
    X1, X2, T1, T2 = map(F, (x1, x2, t1, t2))
    X = X1 + X2
    exact = (T1 + T2) - X**3 / 4 + 4 / X - (T1 - p_exact(X1)) - (T2 - p_exact(X2))
    lhs, rhs = identity_2011(FrequencyTriple(x1, x2, t1, t2))
    assert close(lhs, exact) and close(rhs, exact)


def test_mirrored_split_examples():
    # xi1 = -xi gives xi2 = 2 xi, so the squared factor vanishes
    lhs, rhs = identity_2044(1.5, -1.5, 0.7, 0.1)
    assert rhs == 0.0 and abs(lhs) <= 1e-13
    lhs, rhs = identity_2044(3.0, 1.0, 0.0, 0.0)
    assert relative_residual(lhs, rhs) <= TOL
    a = identity_2044(3.0, 1.0, 0.25, 0.5)[0]
    b = identity_2044(3.0, 1.0, 0.25 + 4.0, 0.5 + 4.0)[0]
    assert a == pytest.approx(b, rel=1e-14)
    with pytest.raises(ZeroFrequencyError):
        identity_2044(1.0, 1.0, 0.0, 0.0)


@given(dyadic, dyadic, dyadic, dyadic)
def test_mirrored_split_against_exact(x, x1, tau, t1):
    assume(x != x1)
    X, X1, TAU, T1 = map(F, (x, x1, tau, t1))
    X2, T2 = X - X1, TAU - T1
    exact = T2 - X2**3 / 4 + 4 / X2 - (TAU - p_exact(X)) + (T1 - p_exact(X1))
    lhs, rhs = identity_2044(x, x1, tau, t1)
    assert close(lhs, exact) and close(rhs, exact)


def test_identity_suite_passes():
    rep = identity_suite(samples=100_000, seed=0)
    assert rep.samples == 100_000
    assert set(rep.max_residual) >= {"identity_A", "identity_B", "resonance_closed_form", "modulation_split",
                                 "mirrored_split"}
    assert rep.passed(), rep.max_residual
    with pytest.raises(ValueError):
        identity_suite(samples=0)


def test_identity_suite_deterministic():
    assert identity_suite(1000, seed=3) == identity_suite(1000, seed=3)


# gamma sequence

def gamma_oracle(j):
    vals = [j / 2]
    while vals[-1] >= 8:
        vals.append(2 * math.log2(vals[-1]))
    return vals


def test_gamma_j16():
    g = gamma_sequence(16)
    assert g.values == (8.0, 6.0)
    assert g.terminal_in_range
    assert g.S == pytest.approx(8**-0.5, abs=1e-5)


def test_gamma_j4096():
    g = gamma_sequence(2**12)
    assert g.values[:2] == (2048.0, 22.0)
    assert g.values[2] == pytest.approx(8.92, abs=0.01)
    assert g.values[3] == pytest.approx(6.31, abs=0.01)
    assert g.terminal_in_range
    assert g.S == pytest.approx(0.570, abs=1e-3)


def test_gamma_errors():
    with pytest.raises(ValueError):
        gamma_sequence(15)
    with pytest.raises(TypeError):
        gamma_sequence(16.0)


@given(st.integers(16, 2**20))
def test_gamma_properties(j):
    g = gamma_sequence(j)
    assert list(g.values) == pytest.approx(gamma_oracle(j), rel=1e-15)
    assert all(a > b for a, b in zip(g.values, g.values[1:]))
    assert g.values[-1] < 8 <= min(g.values[:-1])
    assert g.N <= math.log2(j) + 4
    if g.terminal_in_range:
        assert g.S <= SUM_BOUND
        assert g.lower_bound_claim()


def test_gamma_terminal_always_in_range():
    # gamma >= 8 forces 2 log2 gamma >= 6, so the landing never undershoots
    assert all(gamma_sequence(j).terminal_in_range for j in range(16, 1 << 16))


# case split

def test_case_examples():
    assert case_condition(FrequencyTriple(1.0, -2.0)) is CaseLabel.SIGN_SPLIT
    assert case_condition(FrequencyTriple(10.0, 10.0)) is CaseLabel.FACTOR_LARGE
    # xi1 = xi2 = a with a^2 = 2 / (2a)^2 puts the factor at 1 - 4/6 = 1/3
    a = 0.5**0.25
    t = FrequencyTriple(a, a)
    assert case_condition(t) is CaseLabel.FACTOR_SMALL
    assert factor_small_window(t)
    with pytest.raises(ZeroFrequencyError):
        case_condition(FrequencyTriple(1.0, -1.0))


def test_root_windows_shape():
    assert root_windows(0.5) == []
    assert len(root_windows(1.5)) == 1  # 32/9 <= xi^4 < 32/3
    assert len(root_windows(2.0)) == 2
    with pytest.raises(ZeroFrequencyError):
        root_windows(0.0)


@given(dyadic, dyadic, st.booleans())
def test_case_partition_and_windows(x1, x2, mirrored):
    assume(x1 + x2 != 0)
    t = FrequencyTriple(x1, x2)
    label = case_condition(t, mirrored)
    assert label in set(CaseLabel)
    if label is CaseLabel.FACTOR_SMALL:
        assert factor_small_window(t, mirrored)
        if not mirrored:
            assert in_root_windows(t.xi, x1)


def test_case_vectorized_matches_scalar(rng):
    x1 = rng.uniform(-3, 3, 500)
    x2 = rng.uniform(-3, 3, 500)
    labels = case_condition(FrequencyTriple(x1, x2))
    for a, b, lab in zip(x1, x2, labels):
        assert case_condition(FrequencyTriple(a, b)) is lab
