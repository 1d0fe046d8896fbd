import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ostrovsky_lab.bilinear_lab import (
    UNCLASSIFIED,
    BilinearTarget,
    ConvLemma,
    DyadicSupportSpec,
    GridMismatchError,
    HypothesisError,
    InfeasibleSpecError,
    bilinear_lhs,
    convolution_ratio,
    convolve,
    convolve_direct,
    default_conv_plan,
    lemma31_case,
    make_trial_field,
    matching_cases,
    measured_separation,
    probe_convolution_lemma,
    probe_lattice,
    probe_lemma31,
    support_columns,
)
from ostrovsky_lab.bourgain_norms import xmod_norm, y_norm
from ostrovsky_lab.spectral_core import japanese


def small_lattice(n=16, xi_max=4.0):
    return probe_lattice(xi_max, n_xi=n, n_tau=n, tau_extent=8.0)


def random_field(t, rng):
    vals = rng.standard_normal(t.shape) + 1j * rng.standard_normal(t.shape)
    vals[:, t.xi == 0.0] = 0
    return t.with_values(vals)


# trial fields

def test_trial_field_j0_support_and_norm():
    t = probe_lattice(8.0)
    F = make_trial_field(DyadicSupportSpec(j=0), t, seed=1)
    assert F.l2() == pytest.approx(1.0, rel=1e-12)
    cols = support_columns(F)
    assert cols.size and np.all(japanese(cols) < 2) and np.all(cols != 0)


def test_trial_field_separation_scan():
    t = probe_lattice(16.0)
    F = make_trial_field(DyadicSupportSpec(j=2, sign=1), t, seed=0)
    G = make_trial_field(DyadicSupportSpec(j=None, separation=2.0), t, seed=1, partner=F)
    a, b = support_columns(F), support_columns(G)
    assert np.min(np.abs(a[:, None] - b[None, :])) >= 2.0
    assert measured_separation(a, b) >= 2.0


def test_trial_field_sign_pattern():
    t = probe_lattice(16.0)
    F = make_trial_field(DyadicSupportSpec(j=2, sign=1), t, seed=0)
    G = make_trial_field(DyadicSupportSpec(j=2, sign_pattern="opposite"), t, seed=1, partner=F)
    assert np.all(support_columns(G) < 0)


def test_trial_field_deterministic():
    t = probe_lattice(8.0)
    a = make_trial_field(DyadicSupportSpec(j=1), t, seed=[3, 4])
    b = make_trial_field(DyadicSupportSpec(j=1), t, seed=[3, 4])
    assert np.array_equal(a.values, b.values)


def test_trial_field_infeasible():
    t = probe_lattice(8.0)
    with pytest.raises(InfeasibleSpecError):
        make_trial_field(DyadicSupportSpec(j=10), t, seed=0)
    with pytest.raises(ValueError):
        DyadicSupportSpec(j=-1)


# convolution

def test_delta_is_identity(rng):
    t = small_lattice()
    G = random_field(t, rng)
    d = np.zeros(t.shape, dtype=complex)
    d[np.argmin(np.abs(t.tau)), np.argmin(np.abs(t.xi))] = 1.0 / t.cell_area
    out = convolve(t.with_values(d), G)
    assert np.max(np.abs(out.values - G.values)) <= 1e-12


def test_convolution_matches_direct_oracle(rng):
    t = small_lattice()
    F, G = random_field(t, rng), random_field(t, rng)
    fast, slow = convolve(F, G), convolve_direct(F, G)
    assert np.max(np.abs(fast.values - slow.values)) <= 1e-10 * max(1.0, np.max(np.abs(slow.values)))


def test_convolution_commutes(rng):
    t = probe_lattice(8.0, n_xi=64, n_tau=64)
    F, G = random_field(t, rng), random_field(t, rng)
    assert np.max(np.abs(convolve(F, G).values - convolve(G, F).values)) <= 1e-12 * np.max(
        np.abs(convolve(F, G).values))


def test_convolution_support_rule(rng):
    t = small_lattice()
    f = np.zeros(t.shape, dtype=complex)
    g = np.zeros(t.shape, dtype=complex)
    f[8, 9:11] = rng.standard_normal(2)
    g[9, 10:12] = rng.standard_normal(2)
    out = convolve(t.with_values(f), t.with_values(g))
    big = np.any(np.abs(out.values) > 1e-12, axis=0)  # fft round-off elsewhere
    xs = set(np.round(out.xi[big] / t.dxi).astype(int))
    sums = {a + b for a in (1, 2) for b in (2, 3)}
    assert xs <= sums


def test_convolution_grid_mismatch():
    with pytest.raises(GridMismatchError):
        convolve(small_lattice(16, 4.0), small_lattice(16, 8.0))


# convolution probes

def test_zero_g_ratio_is_zero():
    rep = probe_convolution_lemma("L21a", [4, 5], samples=3, zero_g=True)
    assert rep.max_ratio == [0.0, 0.0]


def test_l23_ratio_scales_with_declared_separation():
    plan = default_conv_plan(ConvLemma.L23, 5)
    a = 2.0**5
    F = make_trial_field(plan.f, plan.template, seed=0)
    G = make_trial_field(plan.g, plan.template, seed=1)
    r1 = convolution_ratio(ConvLemma.L23, F, G, declared_k=0.1 * a)
    r2 = convolution_ratio(ConvLemma.L23, F, G, declared_k=0.2 * a)
    assert r2 / r1 == pytest.approx(math.sqrt(2), rel=0.2)
    with pytest.raises(HypothesisError):
        convolution_ratio(ConvLemma.L23, F, G, declared_k=a)


def test_l21a_bounded_across_scales():
    rep = probe_convolution_lemma("L21a", [4, 5, 6, 7, 8], samples=50, seed=0)
    assert rep.bounded(2.0), rep.max_ratio


def test_l22_rejects_wrong_case():
    plan = default_conv_plan(ConvLemma.L21a, 4)
    F = make_trial_field(plan.f, plan.template, seed=0)
    G = make_trial_field(plan.g, plan.template, seed=1)
    with pytest.raises(HypothesisError, match="L22"):
        convolution_ratio(ConvLemma.L22a, F, G)


# dyadic case table

@pytest.mark.parametrize("triple, case, const", [
    ((5, 50, 50), "ii", 2.0 ** (-15 / 8)),
    ((40, 41, 20), "iii", 2.0**-5),
    ((0, 35, 35), "vi", 1.0),
])
def test_dyadic_case_examples(triple, case, const):
    got, c = lemma31_case(*triple)
    assert got == case and c == pytest.approx(const, rel=1e-15)


def test_dyadic_case_unclassified_and_errors():
    assert lemma31_case(1, 30, 41) == (UNCLASSIFIED, None)
    with pytest.raises(ValueError):
        lemma31_case(-1, 0, 0)


@given(st.integers(0, 29), st.integers(0, 80), st.integers(0, 80))
def test_case_exclusive_on_realizable_range(j, j1, j2):
    # every probe lattice sits far below shell 30 in at least two slots
    if sum(x < 30 for x in (j, j1, j2)) >= 2:
        assert matching_cases(j, j1, j2) == ["i"]
    assert len(matching_cases(j, j1, j2)) <= 1


@given(st.integers(0, 80), st.integers(0, 80), st.integers(0, 80))
def test_case_overlap_only_on_ii_v_boundary(j, j1, j2):
    hits = matching_cases(j, j1, j2)
    if len(hits) > 1:
        assert hits == ["ii", "v"] and j == j1 - 10
        assert lemma31_case(j, j1, j2)[0] == "ii"


def test_case_overlap_is_literal():
    assert matching_cases(30, 40, 30) == ["ii", "v"]


# bilinear output

def test_bilinear_lhs_zero():
    t = probe_lattice(8.0)
    G = make_trial_field(DyadicSupportSpec(j=1), t, seed=0)
    assert bilinear_lhs(t, G, None) == 0.0


def test_bilinear_lhs_single_cells():
    t = probe_lattice(8.0, n_xi=32, n_tau=32)
    it, ix = 16, 16 + 3
    f = np.zeros(t.shape, dtype=complex)
    g = np.zeros(t.shape, dtype=complex)
    f[it, ix] = 2.0
    g[it, 16 + 2] = 1.5
    F, G = t.with_values(f), t.with_values(g)
    # output cell: tau index 16 + (16 - 16) and xi offset 3 + 2
    tau, xi = t.tau[it], t.xi[16 + 5]
    mult = xi / japanese(tau - (xi**3 - 1 / xi))
    value = abs(mult * 2.0 * 1.5 * t.cell_area)
    H = np.zeros(t.shape, dtype=complex)
    H[it, 16 + 5] = value
    assert bilinear_lhs(F, G, None) == pytest.approx(xmod_norm(t.with_values(H)), rel=1e-12)
    assert bilinear_lhs(F, G, None, BilinearTarget.Y) == pytest.approx(y_norm(t.with_values(H)), rel=1e-12)


def test_bilinear_lhs_swap_symmetry():
    t = probe_lattice(16.0)
    F = make_trial_field(DyadicSupportSpec(j=2, sign=1), t, seed=0)
    G = make_trial_field(DyadicSupportSpec(j=1), t, seed=1)
    for target in BilinearTarget:
        a, b = bilinear_lhs(F, G, 2, target), bilinear_lhs(G, F, 2, target)
        assert a == pytest.approx(b, rel=1e-12)


# dyadic probes

def test_probe_case_ii_bounded():
    rep = probe_lemma31("ii", [2, 3, 4, 5, 6], samples=30)
    assert rep.bounded(2.0), rep.max_ratio


def test_probe_case_v_bounded():
    rep = probe_lemma31("v", [6, 7, 8, 9], samples=30)
    assert rep.bounded(2.0), rep.max_ratio


def test_probe_zero_fields():
    rep = probe_lemma31("v", [6, 7], samples=2, zero_fields=True)
    assert rep.max_ratio == [0.0, 0.0]


def test_probe_deterministic():
    a = probe_lemma31("iii", [4, 5], samples=3, seed=7)
    b = probe_lemma31("iii", [4, 5], samples=3, seed=7)
    assert a.to_csv() == b.to_csv()
