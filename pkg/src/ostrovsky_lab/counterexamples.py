"""Exact-geometry reproduction of the two standard-space counterexamples.

``u`` has Fourier transform equal to the indicator of a thin slab ``Rec(N)``
along the characteristic curve near ``(N^3, N)``.  Example 1 pairs it with its
reflection (high x high -> low), Example 2 with the slab translated to the
origin (high x low -> high).  All norms are computed by tensor Gauss-Legendre
quadrature over affine parameterizations, and ``F(uv)`` by exact clipping,
so no uniform lattice is ever needed.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bourgain_norms import NormSpec, Variant
from .geometry import (
    Parallelogram,
    QuadratureSettings,
    composite_rule,
    graded_panels,
    convolution_on_affine_grid,
    integrate_over_parallelogram,
    xi_zero_breaks,
)
from .reports import ProbeReport, fit_log2_slope
from .spectral_core import DEFAULT_PARAMS, PhaseParams, japanese, phase_increment


def counterexample_rect(N: float) -> Parallelogram:
    """The slab with vertices ``(N^3, N)``, ``(N^3 + N^{3/2}, N + a)``,
    ``((N + a)^3, N + a)``, ``(N^3 + 1/3 + N^{-3/2}/27, N)``, ``a = N^{-1/2}/3``.
    """
    if not N >= 64:
        raise ValueError(f"N must be >= 64, got {N}")
    a = N**-0.5 / 3.0
    # (N + a)^3 - N^3 expanded, so local coordinates carry no N^3 cancellation
    top_right = 3 * N * N * a + 3 * N * a * a + a**3
    verts = (
        (0.0, 0.0),
        (N**1.5, a),
        (top_right, a),
        (1.0 / 3.0 + N**-1.5 / 27.0, 0.0),
    )
    return Parallelogram(verts, (float(N) ** 3, float(N)))


def centered_rect(N: float) -> Parallelogram:
    """``R_0``: the slab translated so its center is the origin."""
    return counterexample_rect(N).centered()


def _frame_modulation(offsets: Sequence[tuple[float, float]], params: PhaseParams):
    """Anchor for ``tau - p(xi)`` near the point ``sum(offsets)``.

    Returns ``(base, xi0, shift)`` with ``xi0`` a float close to the exact
    frame frequency, ``shift`` the rounding remainder, and ``base`` the
    modulation at ``(exact frame tau, xi0)``, evaluated in rational
    arithmetic.  Offsets near ``(N^3, N)`` sit on the characteristic curve,
    so a float evaluation would lose everything to cancellation.
    """
    ft = sum((Fraction(o[0]) for o in offsets), Fraction(0))
    fx = sum((Fraction(o[1]) for o in offsets), Fraction(0))
    xi0 = float(fx)
    shift = float(fx - Fraction(xi0))
    if xi0 == 0.0:
        return float(ft), 0.0, shift
    x = Fraction(xi0)
    base = ft - (x**3 - Fraction(params.gamma) / x)
    return float(base), xi0, shift


def _local_modulation(offsets, dtau, dxi, params: PhaseParams):
    """``tau - p(xi)`` at absolute point ``sum(offsets) + (dtau, dxi)``."""
    base, xi0, shift = _frame_modulation(offsets, params)
    dxi = np.asarray(dxi, dtype=float) + shift
    if xi0 == 0.0:
        with np.errstate(divide="ignore"):
            return base + dtau - (dxi**3 - params.gamma / dxi)
    return base + dtau - phase_increment(xi0, dxi, params)


def indicator_norm(
    p: Parallelogram,
    spec: NormSpec,
    params: PhaseParams = DEFAULT_PARAMS,
    quad: QuadratureSettings = QuadratureSettings(),
) -> float:
    """``|| <xi>^s <tau - p(xi)>^b I_P ||_{L^2}`` by quadrature over ``P``.

    Only the weighted-L^2 variants (``Xsb`` and ``Hs``) make sense here.
    """
    if spec.variant not in (Variant.XSB, Variant.HS):
        raise ValueError(f"indicator_norm supports Xsb and Hs, not {spec.variant.value}")
    s, b = spec.s, spec.b
    ox = p.origin_offset[1]

    def integrand(dtau, dxi):
        xi = ox + dxi
        w = japanese(xi) ** (2 * s)
        if b != 0.0:
            w = w * japanese(_local_modulation([p.origin_offset], dtau, dxi, params)) ** (2 * b)
        return w

    if s == 0.0 and b == 0.0:
        return math.sqrt(p.area)
    return math.sqrt(integrate_over_parallelogram(p, integrand, s_breaks=xi_zero_breaks(p), quad=quad))


@dataclass(frozen=True)
class ConvolutionSamples:
    """``F(uv) = I_P * I_Q`` tabulated on a quadrature rule over ``P ⊕ Q``."""

    offsets: tuple[tuple[float, float], tuple[float, float]]  # local frame = their exact sum
    dtau: np.ndarray
    dxi: np.ndarray
    weights: np.ndarray  # includes the Jacobian
    values: np.ndarray


def _aligned_base(p: Parallelogram, q: Parallelogram) -> np.ndarray:
    """Local base vertex of ``q`` written as ``base + [0,1] e1 + [0,1] e2``
    with ``p``'s edges; raises unless ``q`` is a translate of ``±p``."""
    base = np.asarray(q.local_vertices[0], dtype=float)
    for pe, qe in zip(p.edges, q.edges):
        tol = 1e-10 * float(np.linalg.norm(pe))
        if np.linalg.norm(qe - pe) <= tol:
            continue
        if np.linalg.norm(qe + pe) <= tol:
            base = base + qe
            continue
        raise ValueError("only translates of one parallelogram (or its reflection) are supported")
    return base


def tabulate_convolution(
    p: Parallelogram, q: Parallelogram, quad: QuadratureSettings = QuadratureSettings()
) -> ConvolutionSamples:
    """Quadrature nodes over the Minkowski sum of two translates of one slab.

    The sum is ``oP + oQ + c + alpha e1 + beta e2`` with ``alpha, beta in
    [-1, 1]``; the convolution is piecewise bilinear with kinks on
    ``alpha = 0`` and ``beta = 0``, which are panel breaks.
    """
    q_base = _aligned_base(p, q)
    e1, e2 = p.edges
    c = (np.asarray(p.local_vertices[0], dtype=float) + q_base) + e1 + e2
    breaks_a = [0.0]
    if e2[1] == 0.0 and e1[1] != 0.0:
        frame_x = float(Fraction(p.origin_offset[1]) + Fraction(q.origin_offset[1]) + Fraction(c[1]))
        a0 = -frame_x / e1[1]
        if -1.0 < a0 < 1.0:
            breaks_a.append(a0)
    a_nodes, a_w = composite_rule(graded_panels(-1.0, 1.0, breaks_a, quad.levels, quad.ratio), quad.order)
    b_nodes, b_w = composite_rule(graded_panels(-1.0, 1.0, [0.0], 2, 0.5), quad.order)
    A, B = np.meshgrid(a_nodes, b_nodes, indexing="ij")
    dtau = c[0] + A * e1[0] + B * e2[0]
    dxi = c[1] + A * e1[1] + B * e2[1]
    jac = abs(e1[0] * e2[1] - e1[1] * e2[0])
    W = np.outer(a_w, b_w) * jac
    vals = convolution_on_affine_grid(p, q, (c[0], c[1]), A, B)
    return ConvolutionSamples((p.origin_offset, q.origin_offset), dtau, dxi, W, vals)


def product_norm(samples: ConvolutionSamples, s: float, b: float,
                 params: PhaseParams = DEFAULT_PARAMS) -> float:
    """``|| xi <xi>^s <tau - p(xi)>^b (I_P * I_Q) ||_{L^2}`` i.e. the norm of
    ``dx(uv)`` in ``X^{s,b}`` up to the unimodular factor ``i``."""
    _, xi0, shift = _frame_modulation(samples.offsets, params)
    xi = xi0 + (samples.dxi + shift)
    mod = _local_modulation(samples.offsets, samples.dtau, samples.dxi, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = xi**2 * japanese(xi) ** (2 * s) * japanese(mod) ** (2 * b)
    w = np.where(xi == 0.0, 0.0, w)
    return math.sqrt(float(np.sum(samples.weights * w * samples.values**2)))


def _check_n_list(n_list: Sequence[float]):
    if len(n_list) < 3:
        raise ValueError("need at least three values of N")
    if min(n_list) < 64:
        raise ValueError("every N must be >= 64")


def example1_experiment(
    n_list: Sequence[float],
    b: float,
    params: PhaseParams = DEFAULT_PARAMS,
    quad: QuadratureSettings = QuadratureSettings(),
) -> ProbeReport:
    """High x high -> low: ``u = I_Rec``, ``v = I_{-Rec}``."""
    if not 0.5 < b <= 1.0:
        raise ValueError(f"Example 1 needs b in (1/2, 1], got {b}")
    _check_n_list(n_list)
    u_norms, prod_norms, ratios = [], [], []
    for N in n_list:
        rec = counterexample_rect(N)
        refl = rec.reflected()
        nu = indicator_norm(rec, NormSpec.xsb(-0.75, b), params, quad)
        nv = indicator_norm(refl, NormSpec.xsb(-0.75, b), params, quad)
        prod = product_norm(tabulate_convolution(rec, refl, quad), -0.75, b - 1.0, params)
        u_norms.append(nu)
        prod_norms.append(prod)
        ratios.append(prod / (nu * nv))
    return _example_report("example1", n_list, b, ratios, {
        "u_norm": u_norms, "v_norm": u_norms, "product_norm": prod_norms,
    }, target=(6 * b - 3) / 4, component=(6 * b - 3) / 4)


def example2_experiment(
    n_list: Sequence[float],
    b: float,
    params: PhaseParams = DEFAULT_PARAMS,
    quad: QuadratureSettings = QuadratureSettings(),
) -> ProbeReport:
    """High x low -> high: ``u = I_Rec``, ``v = I_{R_0}``.

    The product is measured in ``X^{-3/4, b-1}``.
    """
    if not 0.0 <= b < 0.5:
        raise ValueError(f"Example 2 needs b in [0, 1/2), got {b}")
    _check_n_list(n_list)
    u_norms, v_norms, prod_norms, ratios = [], [], [], []
    for N in n_list:
        rec = counterexample_rect(N)
        r0 = rec.centered()
        nu = indicator_norm(rec, NormSpec.xsb(-0.75, b), params, quad)
        nv = indicator_norm(r0, NormSpec.xsb(-0.75, b), params, quad)
        prod = product_norm(tabulate_convolution(rec, r0, quad), -0.75, b - 1.0, params)
        u_norms.append(nu)
        v_norms.append(nv)
        prod_norms.append(prod)
        ratios.append(prod / (nu * nv))
    # product ~ N^{-1/2}, u ~ N^{-1}, v ~ N^{(6b-1)/4}
    return _example_report("example2", n_list, b, ratios, {
        "u_norm": u_norms, "v_norm": v_norms, "product_norm": prod_norms,
    }, target=(7 - 6 * b) / 4, component=(3 - 6 * b) / 4)


def _example_report(name, n_list, b, ratios, series, target: float,
                    component: float) -> ProbeReport:
    """``target`` is the ratio slope the example aims for, ``component`` the one
    implied by the asymptotic exponents of the three norms."""
    logs = [math.log2(N) for N in n_list]
    slopes = {key: fit_log2_slope(logs, vals)[0] for key, vals in series.items()}
    return ProbeReport.from_values(
        name=name,
        scales=list(n_list),
        ratios=[[r] for r in ratios],
        scale_kind="N",
        seed=None,
        series={k: list(v) for k, v in series.items()},
        series_slopes=slopes,
        extra={"b": b, "product_norm": "X^{-3/4,b-1}", "target_ratio_slope": target,
               "component_ratio_slope": component},
    )
