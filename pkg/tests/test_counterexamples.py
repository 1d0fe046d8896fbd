from fractions import Fraction

import numpy as np
import pytest

from ostrovsky_lab.bourgain_norms import NormSpec
from ostrovsky_lab.counterexamples import (
    centered_rect,
    counterexample_rect,
    example1_experiment,
    example2_experiment,
    indicator_norm,
    product_norm,
    tabulate_convolution,
)
from ostrovsky_lab.geometry import QuadratureSettings, indicator_convolution_value
from ostrovsky_lab.reports import fit_log2_slope

DEFAULT_N = [2.0**k for k in range(6, 11)]
LARGE_N = [2.0**k for k in range(16, 21)]


def exact_modulation(tau: Fraction, xi: Fraction) -> Fraction:
    return tau - xi**3 + 1 / xi


def test_rect_vertices_at_64():
    r = counterexample_rect(64)
    v = r.vertices
    assert v[0] == (262144.0, 64.0)
    assert v[1][0] == 262144.0 + 512.0
    assert v[1][1] == pytest.approx(64 + 1 / 24, abs=1e-13)


def test_rect_closure_and_area():
    for N in (64, 1024, 2.0**20):
        r = counterexample_rect(N)
        assert r.closure_residual() <= 1e-9 * N**1.5
    area = counterexample_rect(1024).area
    assert area * 1024**0.5 == pytest.approx(1 / 9, rel=0.05)


def test_rect_rejects_small_n():
    with pytest.raises(ValueError):
        counterexample_rect(32)


@pytest.mark.parametrize("N", [64, 256, 4096])
def test_rect_lies_in_unit_modulation_band(rng, N):
    r = counterexample_rect(N)
    e1, e2 = r.edges
    v1 = r.local_vertices[0]
    ot, ox = r.origin_offset
    for s, t in rng.uniform(0, 1, (200, 2)):
        tau = Fraction(ot) + Fraction(v1[0]) + Fraction(s) * Fraction(e1[0]) + Fraction(t) * Fraction(e2[0])
        xi = Fraction(ox) + Fraction(v1[1]) + Fraction(s) * Fraction(e1[1]) + Fraction(t) * Fraction(e2[1])
        assert abs(exact_modulation(tau, xi)) < 1


def test_indicator_l2_norm_is_sqrt_area():
    r = counterexample_rect(256)
    assert indicator_norm(r, NormSpec.xsb(0, 0)) == pytest.approx(r.area**0.5, rel=1e-12)
    assert indicator_norm(r, NormSpec.hs(0.0)) == pytest.approx(r.area**0.5, rel=1e-12)
    with pytest.raises(ValueError):
        indicator_norm(r, NormSpec.xmod())


@pytest.mark.parametrize("b", [0.6, 1.0])
def test_indicator_norm_scales_like_inverse_n(b):
    vals = [indicator_norm(counterexample_rect(N), NormSpec.xsb(-0.75, b)) * N for N in DEFAULT_N]
    assert max(vals) / min(vals) <= 1.10


@pytest.mark.parametrize("shape", ["rect", "centered"])
def test_indicator_norm_converges_under_refinement(shape):
    r = counterexample_rect(512) if shape == "rect" else centered_rect(512)
    spec = NormSpec.xsb(-0.75, 0.4)
    q = QuadratureSettings()
    assert indicator_norm(r, spec, quad=q) == pytest.approx(indicator_norm(r, spec, quad=q.refined()),
                                                            rel=1e-3)


def test_convolution_value_far_away_is_zero():
    r = counterexample_rect(64)
    assert indicator_convolution_value(r, r.reflected(), (1e3, 0.0)) == 0.0


def test_convolution_at_origin_is_area():
    r = counterexample_rect(256)
    got = indicator_convolution_value(r, r.reflected(), (0.0, 0.0))
    # exact rational shoelace oracle on the stored vertices
    v = [(Fraction(t), Fraction(x)) for t, x in r.local_vertices]
    twice = sum(a[0] * b[1] - b[0] * a[1] for a, b in zip(v, v[1:] + v[:1]))
    assert got == pytest.approx(float(abs(twice) / 2), rel=1e-9)


def test_tabulated_convolution_integrates_to_area_product():
    r = counterexample_rect(128)
    for q in (r.reflected(), r.centered()):
        s = tabulate_convolution(r, q)
        assert np.sum(s.weights * s.values) == pytest.approx(r.area * q.area, rel=1e-10)


def test_example1_product_norm_monotone_in_b():
    for N in (64, 512):
        r = counterexample_rect(N)
        s = tabulate_convolution(r, r.reflected())
        vals = [product_norm(s, -0.75, b - 1) for b in (0.6, 0.8, 1.0)]
        assert vals[0] < vals[1] < vals[2]


def test_experiment_argument_checks():
    with pytest.raises(ValueError):
        example1_experiment(DEFAULT_N, 0.5)
    with pytest.raises(ValueError):
        example2_experiment(DEFAULT_N, 0.5)
    with pytest.raises(ValueError):
        example1_experiment([64, 128], 0.6)
    with pytest.raises(ValueError):
        example1_experiment([32, 64, 128], 0.6)


def test_example1_slope_b06_small_range():
    rep = example1_experiment([2.0**k for k in range(6, 10)], 0.6)
    assert rep.slope == pytest.approx(0.15, abs=0.05)


def test_example1_slope_b1():
    rep = example1_experiment(DEFAULT_N, 1.0)
    assert rep.slope == pytest.approx(0.75, abs=0.05)
    assert rep.series_slopes["u_norm"] == pytest.approx(-1.0, abs=0.05)


def test_example1_slope_b06_large_n():
    # the same ratio once the lower-order phase term has died out
    rep = example1_experiment(LARGE_N, 0.6)
    assert rep.slope == pytest.approx(0.15, abs=0.01)


@pytest.mark.parametrize("b", [0.4, 0.0])
def test_example2_v_norm_law(b):
    rep = example2_experiment(LARGE_N, b)
    v = rep.series["v_norm"]
    scaled = [val * N ** (-(6 * b - 1) / 4) for val, N in zip(v, LARGE_N)]
    slope, _ = fit_log2_slope(np.log2(LARGE_N), scaled)
    assert slope == pytest.approx(0.0, abs=0.05)


@pytest.mark.parametrize("b, expected", [(0.4, 1.15), (0.0, 1.75)])
def test_example2_ratio_slope(b, expected):
    rep = example2_experiment(LARGE_N, b)
    assert rep.slope == pytest.approx(expected, abs=0.1)


@pytest.mark.parametrize("b", [0.4, 0.0])
def test_example2_measured_ratio_slope(b):
    # product norm ~ N^{-1/2}, u ~ N^{-1}, v ~ N^{(6b-1)/4}
    rep = example2_experiment(LARGE_N, b)
    assert rep.series_slopes["product_norm"] == pytest.approx(-0.5, abs=0.01)
    assert rep.slope == pytest.approx((3 - 6 * b) / 4, abs=0.01)
    assert rep.slope > 0
