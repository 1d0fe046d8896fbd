"""Empirical probes of the dyadic convolution and bilinear estimates.

Random trial fields with prescribed dyadic support are convolved on a
uniform (tau, xi) lattice and the ratio LHS/RHS of each estimate is
recorded per scale.  Random inputs only ever give lower bounds on the
operator norm, so what a probe certifies is non-violation: the largest
ratio does not grow across the scales that fit on the lattice.

The exact-geometry counterexample experiments live in
:mod:`ostrovsky_lab.counterexamples` and are re-exported here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .bourgain_norms import (
    SpacetimeField,
    decompose,
    default_tau_extent,
    tau_lattice,
    xmod_norm,
    xsb1_norm,
    y_norm,
)
from .counterexamples import (  # noqa: F401  (re-exported)
    centered_rect,
    counterexample_rect,
    example1_experiment,
    example2_experiment,
    indicator_norm,
    product_norm,
    tabulate_convolution,
)
from .geometry import Parallelogram, indicator_convolution_value  # noqa: F401
from .reports import ProbeReport
from .resonance_identities import FrequencyTriple, case_codes
from .spectral_core import DEFAULT_PARAMS, PhaseParams, japanese

DEFAULT_POINTS = 256
GROWTH_FACTOR = 2.0


class InfeasibleSpecError(ValueError):
    """The requested support is empty on the lattice."""


class HypothesisError(ValueError):
    """Trial supports violate a hypothesis of the probed estimate."""


class GridMismatchError(ValueError):
    """Fields live on different lattices."""


# ---------------------------------------------------------------------------
# lattices and trial fields


def probe_lattice(xi_max: float, n_xi: int = DEFAULT_POINTS, n_tau: int = DEFAULT_POINTS,
                  tau_extent: float | None = None,
                  params: PhaseParams = DEFAULT_PARAMS) -> SpacetimeField:
    """Zero field on ``xi = dxi * (-n/2 .. n/2 - 1)`` with ``dxi = xi_max / (n/2)``."""
    if n_xi < 8 or n_xi % 2:
        raise ValueError("n_xi must be even and >= 8")
    dxi = xi_max / (n_xi // 2)
    xi = (np.arange(n_xi) - n_xi // 2) * dxi
    if tau_extent is None:
        tau_extent = default_tau_extent(xi, params)
    tau = tau_lattice(n_tau, tau_extent)
    return SpacetimeField(tau, xi, np.zeros((tau.size, xi.size), dtype=complex), params)


class SignPattern(str, enum.Enum):
    OPPOSITE = "opposite"
    SAME = "same"
    ANY = "any"


@dataclass(frozen=True)
class DyadicSupportSpec:
    """Admissible support of a trial field.

    ``j`` selects the shell ``A_j`` (``None`` for every shell), ``k_max``
    caps the modulation shell, ``sign`` fixes the sign of xi (0 for either),
    ``sign_pattern`` is the sign relative to a partner field and
    ``separation`` a lower bound on ``|xi - xi'|`` (or ``|xi + xi'|`` when
    ``separation_kind == "sum"``) against the partner's support.
    """

    j: int | None = 0
    k_max: int | None = None
    sign: int = 0
    sign_pattern: SignPattern = SignPattern.ANY
    separation: float = 0.0
    separation_kind: str = "difference"
    region: str | None = None  # "D", "Dc" or None
    xi_window: tuple[float, float] | None = None

    def __post_init__(self):
        if self.j is not None and self.j < 0:
            raise ValueError("j must be nonnegative")
        if self.separation < 0:
            raise ValueError("separation must be nonnegative")
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or 1")
        if self.separation_kind not in ("difference", "sum"):
            raise ValueError("separation_kind is 'difference' or 'sum'")
        if self.region not in (None, "D", "Dc"):
            raise ValueError("region is 'D', 'Dc' or None")
        object.__setattr__(self, "sign_pattern", SignPattern(self.sign_pattern))


def support_columns(F: SpacetimeField) -> np.ndarray:
    """Frequencies of the nonzero columns of ``F``."""
    return F.xi[np.any(F.values != 0, axis=0)]


def support_mask(spec: DyadicSupportSpec, template: SpacetimeField,
                 partner: SpacetimeField | None = None) -> np.ndarray:
    xi = template.xi
    cols = xi != 0.0
    if spec.j is not None:
        cols &= template.j_index() == spec.j
    if spec.sign:
        cols &= np.sign(xi) == spec.sign
    if spec.xi_window is not None:
        lo, hi = spec.xi_window
        cols &= (xi >= lo) & (xi <= hi)
    if partner is not None:
        pcols = support_columns(partner)
        if pcols.size == 0:
            raise InfeasibleSpecError("partner field is zero")
        if spec.sign_pattern is not SignPattern.ANY:
            psigns = np.unique(np.sign(pcols))
            if psigns.size != 1:
                raise InfeasibleSpecError("sign pattern needs a single-signed partner")
            want = -psigns[0] if spec.sign_pattern is SignPattern.OPPOSITE else psigns[0]
            cols &= np.sign(xi) == want
        if spec.separation > 0:
            other = -pcols if spec.separation_kind == "sum" else pcols
            gap = np.min(np.abs(xi[:, None] - other[None, :]), axis=1)
            cols &= gap >= spec.separation
    mask = np.broadcast_to(cols[None, :], template.shape).copy()
    if spec.k_max is not None:
        mask &= template.k_index() <= spec.k_max
    if spec.region == "D":
        mask &= template.region_D_mask()
    elif spec.region == "Dc":
        mask &= ~template.region_D_mask()
    return mask


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def make_trial_field(spec: DyadicSupportSpec, template: SpacetimeField, seed,
                     partner: SpacetimeField | None = None) -> SpacetimeField:
    """Complex Gaussian amplitudes on the admissible support, unit L^2 norm."""
    mask = support_mask(spec, template, partner)
    if not mask.any():
        raise InfeasibleSpecError(f"empty support for {spec}")
    rng = _generator(seed)
    n = int(mask.sum())
    vals = np.zeros(template.shape, dtype=complex)
    vals[mask] = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    F = template.with_values(vals)
    return F.with_values(vals / F.l2())


# ---------------------------------------------------------------------------
# convolution


def _crop_offset(full_start: float, target_start: float, step: float) -> int:
    off = (target_start - full_start) / step
    r = round(off)
    if abs(off - r) > 1e-6:
        raise GridMismatchError("output lattice is not aligned with the input lattice")
    return int(r)


def convolve(F: SpacetimeField, G: SpacetimeField) -> SpacetimeField:
    """``(F * G)(tau, xi) = integral F(tau1, xi1) G(tau - tau1, xi - xi1)``.

    Linear (zero-padded) convolution scaled by the cell area, cropped back
    to the common lattice.
    """
    if not F.same_lattice(G):
        raise GridMismatchError("convolve needs fields on the same lattice")
    full = fftconvolve(F.values, G.values, mode="full") * F.cell_area
    it = _crop_offset(2 * F.tau[0], F.tau[0], F.dtau)
    ix = _crop_offset(2 * F.xi[0], F.xi[0], F.dxi)
    m, n = F.shape
    return F.with_values(full[it:it + m, ix:ix + n])


def convolve_direct(F: SpacetimeField, G: SpacetimeField) -> SpacetimeField:
    """Quadruple-loop reference for :func:`convolve` (small lattices only)."""
    if not F.same_lattice(G):
        raise GridMismatchError("convolve needs fields on the same lattice")
    m, n = F.shape
    it = _crop_offset(2 * F.tau[0], F.tau[0], F.dtau)
    ix = _crop_offset(2 * F.xi[0], F.xi[0], F.dxi)
    out = np.zeros((m, n), dtype=complex)
    f, g = F.values, G.values
    for a in range(m):
        for b in range(n):
            acc = 0j
            for c in range(m):
                d1 = a + it - c
                if not 0 <= d1 < m:
                    continue
                for d in range(n):
                    d2 = b + ix - d
                    if 0 <= d2 < n:
                        acc += f[c, d] * g[d1, d2]
            out[a, b] = acc * F.cell_area
    return F.with_values(out)


# ---------------------------------------------------------------------------
# convolution-estimate probes


class ConvLemma(str, enum.Enum):
    L21a = "L21a"
    L21b = "L21b"
    L22a = "L22a"
    L22b = "L22b"
    L23 = "L23"
    L24a = "L24a"
    L24b = "L24b"
    L25a = "L25a"
    L25b = "L25b"
    L26 = "L26"

    @property
    def family(self) -> str:
        return self.value[:3]

    @property
    def output_side(self) -> bool:
        """Estimates of ``f * g`` on ``Omega ∩ B_k`` with ``g`` in weighted L^2."""
        return self.family in ("L24", "L25", "L26")


@dataclass(frozen=True)
class ConvPlan:
    """Everything a single scale of a convolution probe needs."""

    template: SpacetimeField
    f: DyadicSupportSpec
    g: DyadicSupportSpec
    omega: DyadicSupportSpec | None = None  # output region for L24-L26


def _hs_l2(F: SpacetimeField, power: float) -> float:
    """``|| |xi|^power F ||_{L^2}``; the xi = 0 column must vanish."""
    nz = F.xi != 0.0
    if np.any(F.values[:, ~nz] != 0):
        raise HypothesisError("|xi|^a weighted norm needs a zero xi = 0 column")
    w = np.zeros_like(F.xi)
    w[nz] = np.abs(F.xi[nz]) ** (2 * power)
    return math.sqrt(F.cell_area * float(np.sum(w[None, :] * np.abs(F.values) ** 2)))


def _pair_grid(a: np.ndarray, b: np.ndarray):
    A, B = np.meshgrid(a, b, indexing="ij")
    return A.ravel(), B.ravel()


def measured_separation(a: np.ndarray, b: np.ndarray, kind: str = "difference") -> float:
    if a.size == 0 or b.size == 0:
        return math.inf
    other = -b if kind == "sum" else b
    return float(np.min(np.abs(a[:, None] - other[None, :])))


def check_hypotheses(lemma: ConvLemma, F: SpacetimeField, G: SpacetimeField,
                     omega_mask: np.ndarray | None, declared_k: float) -> float:
    """Validate the supports against the lemma and return the K entering the RHS.

    Raises :class:`HypothesisError` naming the violated condition.
    """
    lemma = ConvLemma(lemma)
    f_cols = support_columns(F)
    if not lemma.output_side:
        g_cols = support_columns(G)
        if f_cols.size == 0 or g_cols.size == 0:
            return max(declared_k, 1.0)
        x1, x2 = _pair_grid(f_cols, g_cols)
        keep = (x1 + x2) != 0.0
        labels = case_codes(FrequencyTriple(x1[keep], x2[keep])) if keep.any() else np.array([0])
        if lemma.family == "L21" and np.any(labels == 2):
            raise HypothesisError("L21 needs xi1 xi2 < 0 or |1 - 4/(3 xi^2 xi1 xi2)| > 1/2 on every pair")
        if lemma.family == "L22" and np.any(labels != 2):
            raise HypothesisError("L22 needs xi1 xi2 >= 0 and |1 - 4/(3 xi^2 xi1 xi2)| <= 1/2 on every pair")
        k_meas = measured_separation(f_cols, g_cols, "difference")
        if lemma.family == "L22" and k_meas < 2.0:
            raise HypothesisError(f"L22 needs inf |xi1 - xi2| >= 2, measured {k_meas}")
    else:
        if omega_mask is None:
            omega_mask = np.ones(F.shape, dtype=bool)
        o_cols = F.xi[np.any(omega_mask, axis=0)]
        if f_cols.size == 0 or o_cols.size == 0:
            return max(declared_k, 1.0)
        x, x1 = _pair_grid(o_cols, f_cols)
        x2 = x - x1
        keep = (x2 != 0.0) & (x != 0.0)
        if keep.any():
            labels = case_codes(FrequencyTriple(x1[keep], x2[keep]), mirrored=True)
        else:
            labels = np.array([0])
        if lemma.family == "L24" and np.any(labels == 2):
            raise HypothesisError("L24 needs xi xi1 > 0 or |1 + 4/(3 xi xi1 xi2^2)| > 1/2 on every pair")
        if lemma.family == "L25" and np.any(labels != 2):
            raise HypothesisError("L25 needs xi xi1 <= 0 and |1 + 4/(3 xi xi1 xi2^2)| <= 1/2 on every pair")
        k_meas = measured_separation(o_cols, f_cols, "sum")
        if lemma.family == "L25" and k_meas < 2.0:
            raise HypothesisError(f"L25 needs inf |xi1 + xi| >= 2, measured {k_meas}")
    if declared_k > 0:
        if k_meas < declared_k * (1 - 1e-12):
            raise HypothesisError(f"declared separation {declared_k} exceeds measured {k_meas}")
        return declared_k
    if not k_meas > 0:
        raise HypothesisError("separation must be positive")
    return k_meas


def convolution_ratio(lemma: ConvLemma, F: SpacetimeField, G: SpacetimeField,
                      omega_mask: np.ndarray | None = None, declared_k: float = 0.0) -> float:
    """LHS/RHS of one convolution estimate (constant ``C = 1``)."""
    lemma = ConvLemma(lemma)
    K = check_hypotheses(lemma, F, G, omega_mask, declared_k)
    FG = convolve(F, G)
    if not lemma.output_side:
        power = 0.25 if lemma in (ConvLemma.L21a, ConvLemma.L22a) else 0.5
        lhs = _hs_l2(FG.with_values(np.where(FG.xi[None, :] == 0, 0, FG.values)), power)
        rhs = xsb1_norm(F, 0.0, 0.5) * xsb1_norm(G, 0.0, 0.5)
        if power == 0.5:
            rhs *= K**-0.5
        return _safe_ratio(lhs, rhs)
    if omega_mask is None:
        omega_mask = np.ones(F.shape, dtype=bool)
    quarter = lemma in (ConvLemma.L24a, ConvLemma.L25a)
    vals = np.where(omega_mask, FG.values, 0.0) if not quarter else FG.values
    k_idx = np.maximum(FG.k_index(), resolvable_shell(FG))
    fnorm = xsb1_norm(F, 0.0, 0.5)
    gnorm = _hs_l2(G, -0.25 if quarter else -0.5)
    best = 0.0
    for k in np.unique(k_idx):
        mass = math.sqrt(FG.cell_area * float(np.sum(np.abs(vals[k_idx == k]) ** 2)))
        rhs = fnorm * gnorm * (2.0 ** (k / 4) if quarter else 2.0 ** (k / 2) * K**-0.5)
        best = max(best, _safe_ratio(mass, rhs))
    return best


def resolvable_shell(F: SpacetimeField) -> int:
    """Smallest modulation shell the lattice can tell apart.

    Inside one cell ``tau - p(xi)`` varies by about ``dtau + max|p'| dxi``;
    shells below that width are merged into it.
    """
    xi = F.xi[F.xi != 0.0]
    slope = float(np.max(3 * xi**2 + F.params.gamma / xi**2))
    spread = F.dtau + slope * F.dxi
    return max(int(math.ceil(math.log2(spread))), 0)


def _safe_ratio(lhs: float, rhs: float) -> float:
    if lhs == 0.0:
        return 0.0
    if not rhs > 0:
        return math.inf
    return lhs / rhs


def _scale_lattice(j: int, margin: int = 2, n: int = DEFAULT_POINTS) -> SpacetimeField:
    return probe_lattice(2.0 ** (j + margin), n_xi=n, n_tau=n)


def _small_factor_window(xi1: float) -> tuple[float, float]:
    """Range of a small partner frequency ``e`` with ``x e (x + e)^2`` in
    ``[8/9, 8/3]`` for every ``x`` in ``[xi1, xi1 + 1/4]`` (and ``e <= 1/4``)."""
    return 8.0 / 9.0 / xi1**3, 8.0 / 3.0 / (xi1 + 0.5) ** 3


def default_conv_plan(lemma: ConvLemma, j: int) -> ConvPlan:
    """A feasible plan for scale ``j`` on a 256 x 256 lattice."""
    lemma = ConvLemma(lemma)
    fam = lemma.family
    if fam == "L21":
        t = _scale_lattice(j)
        return ConvPlan(t, DyadicSupportSpec(j=j, sign=1), DyadicSupportSpec(j=j, sign=-1))
    if fam == "L23":
        # same shell and sign, split into two windows a quarter-shell apart
        t = _scale_lattice(j)
        a = 2.0**j
        return ConvPlan(t, DyadicSupportSpec(j=j, sign=1, xi_window=(a, 1.375 * a)),
                        DyadicSupportSpec(j=j, sign=1, xi_window=(1.625 * a, 2 * a)))
    if fam == "L22":
        # xi1 ~ 2^j and xi2 ~ xi1^{-3}: needs a fine lattice, so only small j fit
        xi1 = 2.0**j + 2.0
        lo, hi = _small_factor_window(xi1)
        dxi = (hi - lo) / 4.0
        n = int(2 ** math.ceil(math.log2(2 * (xi1 + 1) / dxi)))
        if n > 4096:
            raise InfeasibleSpecError(f"L22 at j={j} needs a {n}-point xi lattice")
        t = probe_lattice(dxi * n / 2, n_xi=n, n_tau=64)
        return ConvPlan(t, DyadicSupportSpec(j=None, xi_window=(xi1, xi1 + 0.25)),
                        DyadicSupportSpec(j=None, xi_window=(lo, hi)))
    if fam in ("L24", "L26"):
        t = _scale_lattice(j)
        # positive outputs against positive f: xi xi1 > 0 and inf |xi1 + xi| > 0
        omega = DyadicSupportSpec(j=None, sign=1)
        return ConvPlan(t, DyadicSupportSpec(j=j, sign=1), DyadicSupportSpec(j=None), omega)
    # L25: xi xi1 < 0 with |xi| xi1 (|xi| + xi1)^2 in [8/9, 8/3] and |xi1 - |xi|| >= 2
    xi1 = 2.0**j + 2.0
    lo, hi = _small_factor_window(xi1)
    dxi = (hi - lo) / 4.0
    n = int(2 ** math.ceil(math.log2(2 * (xi1 + 1) / dxi)))
    if n > 4096:
        raise InfeasibleSpecError(f"L25 at j={j} needs a {n}-point xi lattice")
    t = probe_lattice(dxi * n / 2, n_xi=n, n_tau=64)
    return ConvPlan(t, DyadicSupportSpec(j=None, xi_window=(xi1, xi1 + 0.25)),
                    DyadicSupportSpec(j=None),
                    DyadicSupportSpec(j=None, xi_window=(-hi, -lo)))


def _sample_seed(seed: int, scale_idx: int, sample: int) -> list[int]:
    return [int(seed), int(scale_idx), int(sample)]


def probe_convolution_lemma(
    lemma: ConvLemma,
    scales: Sequence[int],
    samples: int = 50,
    seed: int = 0,
    plan: Callable[[int], ConvPlan] | None = None,
    zero_g: bool = False,
) -> ProbeReport:
    """Max/median LHS/RHS of a convolution estimate per scale ``j``."""
    lemma = ConvLemma(lemma)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    plan = plan or (lambda j: default_conv_plan(lemma, j))
    ratios, meta = [], []
    for si, j in enumerate(scales):
        p = plan(j)
        omega_mask = None if p.omega is None else support_mask(p.omega, p.template)
        declared = p.g.separation if not lemma.output_side else p.f.separation
        row = []
        for s in range(samples):
            rng = _generator(_sample_seed(seed, si, s))
            F = make_trial_field(replace(p.f, separation=0.0), p.template, rng)
            if zero_g:
                G = p.template
            else:
                G = make_trial_field(p.g, p.template, rng, partner=F)
            row.append(convolution_ratio(lemma, F, G, omega_mask, declared))
        ratios.append(row)
        meta.append({"j": j, "xi_max": float(p.template.xi[-1]), "n_xi": p.template.shape[1]})
    rep = ProbeReport.from_values(f"conv_{lemma.value}", scales, ratios, "j", seed,
                                  extra={"lemma": lemma.value, "lattices": meta})
    rep.extra["bounded"] = rep.bounded(GROWTH_FACTOR)
    return rep


# ---------------------------------------------------------------------------
# dyadic bilinear estimate


CASE_IDS = ("i", "ii", "iii", "iv", "v", "vi", "vii", "viii")
UNCLASSIFIED = "UNCLASSIFIED"


def _case_predicates(j: int, j1: int, j2: int) -> dict[str, bool]:
    big = 30
    return {
        "i": sum(x < big for x in (j, j1, j2)) >= 2,
        "ii": j1 >= big and j2 >= big and abs(j1 - j2) <= 10 and 0 < j < j1 - 9,
        "iii": j >= big and j1 >= big and abs(j - j1) <= 10 and 0 < j2 < j - 10,
        "iv": j >= big and j2 >= big and abs(j - j2) <= 10 and 0 < j1 < j - 10,
        "v": min(j, j1, j2) >= big and abs(j - j1) <= 10 and abs(j - j2) <= 10,
        "vi": j1 >= big and j2 >= big and j == 0,
        "vii": j >= big and j1 >= big and j2 == 0,
        "viii": j >= big and j2 >= big and j1 == 0,
    }


def matching_cases(j: int, j1: int, j2: int) -> list[str]:
    """Every case whose side conditions hold, in enumeration order."""
    for v in (j, j1, j2):
        if v < 0:
            raise ValueError("dyadic indices are nonnegative")
    return [c for c, ok in _case_predicates(j, j1, j2).items() if ok]


def case_constant(case: str, j: int, j1: int, j2: int) -> float:
    if case == "ii":
        return 2.0 ** (-3.0 * j / 8.0)
    if case == "iii":
        return 2.0 ** (-(j - j2) / 4.0)
    if case == "iv":
        return 2.0 ** (-(j - j1) / 4.0)
    if case in CASE_IDS:
        return 1.0
    raise ValueError(f"unknown case {case!r}")


def lemma31_case(j: int, j1: int, j2: int) -> tuple[str, float | None]:
    """First matching case and its predicted constant, or ``UNCLASSIFIED``.

    Cases (ii) and (v) share the boundary ``j = j1 - 10``; the earlier case
    in the enumeration wins (see :func:`matching_cases`).
    """
    hits = matching_cases(j, j1, j2)
    if not hits:
        return UNCLASSIFIED, None
    return hits[0], case_constant(hits[0], j, j1, j2)


class BilinearTarget(str, enum.Enum):
    XMOD = "XMOD"
    Y = "Y"


def bilinear_output(F: SpacetimeField, G: SpacetimeField, j: int | None = None) -> SpacetimeField:
    """``I_{A_j} xi <tau - p(xi)>^{-1} (F * G)``; ``j = None`` keeps every shell."""
    FG = convolve(F, G)
    mult = FG.xi[None, :] / japanese(FG.modulation())
    vals = mult * FG.values
    if j is not None:
        vals = np.where(FG.j_index()[None, :] == j, vals, 0.0)
    return FG.with_values(vals)


def bilinear_lhs(F: SpacetimeField, G: SpacetimeField, j: int | None,
                 target: BilinearTarget = BilinearTarget.XMOD) -> float:
    H = bilinear_output(F, G, j)
    if BilinearTarget(target) is BilinearTarget.XMOD:
        return xmod_norm(H)
    return y_norm(H)


@dataclass(frozen=True)
class Lemma31Plan:
    """Shell pattern ``(j1, j2)`` and signs used to probe one case at output shell ``j``.

    Shell gaps of 30/10 do not fit on a 256-point lattice; each plan keeps
    the geometry of its case (which frequencies are high, which are low,
    which signs interact) with gaps that do.
    """

    case: str
    j: int
    j1: int
    j2: int
    sign1: int
    sign2: int
    xi_max: float

    def template(self, n: int = DEFAULT_POINTS) -> SpacetimeField:
        return probe_lattice(self.xi_max, n_xi=n, n_tau=n)


def lemma31_plan(case: str, j: int) -> Lemma31Plan:
    if case == "ii":  # high x high -> low, opposite signs
        return Lemma31Plan(case, j, j + 4, j + 4, 1, -1, 2.0 ** (j + 5))
    if case == "iii":  # high x low -> high
        return Lemma31Plan(case, j, j, j - 3, 1, 0, 2.0 ** (j + 2))
    if case == "iv":
        return Lemma31Plan(case, j, j - 3, j, 0, 1, 2.0 ** (j + 2))
    if case == "v":  # comparable shells, same sign
        return Lemma31Plan(case, j, j - 1, j - 1, 1, 1, 2.0 ** (j + 2))
    raise ValueError(f"no probe plan for case {case!r}")


DEFAULT_J_RANGES = {"ii": (1, 2, 3, 4, 5), "iii": (4, 5, 6, 7, 8), "iv": (4, 5, 6, 7, 8),
                    "v": (6, 7, 8, 9)}


def probe_lemma31(case: str, j_range: Sequence[int] | None = None, samples: int = 30,
                  seed: int = 0, target: BilinearTarget = BilinearTarget.XMOD,
                  zero_fields: bool = False, n: int = DEFAULT_POINTS) -> ProbeReport:
    """Per-``j`` max over samples of ``lhs / (C(j, j1, j2) ||F||_X ||G||_X)``."""
    j_range = tuple(j_range if j_range is not None else DEFAULT_J_RANGES[case])
    ratios, plans = [], []
    for si, j in enumerate(j_range):
        plan = lemma31_plan(case, j)
        if min(plan.j1, plan.j2) < 0:
            raise InfeasibleSpecError(f"case {case} at j={j} needs negative shells")
        C = case_constant(case, plan.j, plan.j1, plan.j2)
        t = plan.template(n)
        row = []
        for s in range(samples):
            rng = _generator(_sample_seed(seed, si, s))
            F = make_trial_field(DyadicSupportSpec(j=plan.j1, sign=plan.sign1), t, rng)
            G = make_trial_field(DyadicSupportSpec(j=plan.j2, sign=plan.sign2), t, rng)
            if zero_fields:
                F, G = t, t
            lhs = bilinear_lhs(F, G, plan.j, target)
            row.append(_safe_ratio(lhs, C * xmod_norm(F) * xmod_norm(G)) if lhs else 0.0)
        ratios.append(row)
        plans.append({"j": plan.j, "j1": plan.j1, "j2": plan.j2, "C": C})
    rep = ProbeReport.from_values(f"lemma31_{case}", j_range, ratios, "j", seed,
                                  extra={"case": case, "target": BilinearTarget(target).value,
                                         "plans": plans})
    rep.extra["bounded"] = rep.bounded(GROWTH_FACTOR)
    return rep


def block_table(F: SpacetimeField) -> str:
    """CSV of ``(j, k, mass)`` dyadic block masses."""
    return decompose(F).to_csv()
