"""Dyadic decomposition and Bourgain-type norms of space-time fields.

A :class:`SpacetimeField` holds samples of a space-time Fourier transform on
a uniform ``(tau, xi)`` lattice.  Every norm here is a Riemann sum with cell
area ``dtau * dxi``.

Dyadic shells:  ``A_j = {2^j <= <xi> < 2^{j+1}}`` and
``B_k = {2^k <= <tau - p(xi)> < 2^{k+1}}``.  Region
``D = {|xi| <= 1/8, |tau| >= |xi|^{-3}}`` is where the modified norm falls
back to plain ``X^{-3/4, 1/2}``.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .spectral_core import (
    DEFAULT_PARAMS,
    PhaseDomainError,
    PhaseParams,
    SpaceGrid,
    SpectralState,
    free_evolution,
    japanese,
    phase,
    phase_masked,
)

MOD_S = -0.75
MOD_B = 0.5


class NormError(ValueError):
    """Invalid input for a norm evaluation."""


# ---------------------------------------------------------------------------
# dyadic indices


def _dyadic(x) -> np.ndarray:
    # floor(log2 <x>) with an exact correction for values on shell boundaries
    br = japanese(np.asarray(x, dtype=float))
    k = np.floor(np.log2(br)).astype(np.int64)
    k = np.where(np.ldexp(1.0, k) > br, k - 1, k)
    k = np.where(np.ldexp(1.0, k + 1) <= br, k + 1, k)
    return np.maximum(k, 0)


def dyadic_index_xi(xi):
    """Unique ``j >= 0`` with ``2^j <= <xi> < 2^{j+1}``."""
    out = _dyadic(xi)
    return int(out) if out.ndim == 0 else out


def dyadic_index_mod(tau, xi, params: PhaseParams = DEFAULT_PARAMS):
    """Unique ``k >= 0`` with ``2^k <= <tau - p(xi)> < 2^{k+1}``."""
    out = _dyadic(np.asarray(tau, dtype=float) - phase(xi, params))
    return int(out) if out.ndim == 0 else out


def in_region_D(tau, xi):
    tau = np.asarray(tau, dtype=float)
    xi = np.asarray(xi, dtype=float)
    axi = np.abs(xi)
    nz = axi != 0.0
    with np.errstate(divide="ignore"):
        thresh = np.where(nz, 1.0 / np.where(nz, axi, 1.0) ** 3, np.inf)
    out = nz & (axi <= 0.125) & (np.abs(tau) >= thresh)
    return bool(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# fields


def default_tau_extent(xi: np.ndarray, params: PhaseParams = DEFAULT_PARAMS) -> float:
    """Half-width covering every characteristic ``tau = p(xi)`` four times over."""
    a = np.abs(xi[xi != 0.0])
    return float(np.max(4.0 * (a**3 + params.gamma / a)))


def tau_lattice(m_points: int, extent: float) -> np.ndarray:
    """Symmetric uniform lattice of ``m_points`` values containing 0."""
    if m_points < 8:
        raise ValueError("tau lattice needs at least 8 points")
    dtau = 2.0 * extent / m_points
    return (np.arange(m_points) - m_points // 2) * dtau


@dataclass(frozen=True)
class SpacetimeField:
    tau: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    params: PhaseParams = DEFAULT_PARAMS

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        xi = np.asarray(self.xi, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        if tau.ndim != 1 or tau.size < 8:
            raise ValueError("tau lattice must be 1-D with at least 8 points")
        if vals.shape != (tau.size, xi.size):
            raise ValueError(f"values shape {vals.shape} != ({tau.size}, {xi.size})")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        for name, arr in (("tau", tau), ("xi", xi)):
            d = np.diff(arr)
            if np.any(d <= 0) or np.ptp(d) > 1e-9 * abs(d[0]):
                raise ValueError(f"{name} lattice must be uniform and increasing")
        for arr in (tau, xi, vals):
            arr.setflags(write=False)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "values", vals)

    @classmethod
    def on_grid(cls, grid: SpaceGrid, m_points: int = 256, extent: float | None = None,
                values=None, params: PhaseParams = DEFAULT_PARAMS) -> "SpacetimeField":
        xi = grid.frequencies
        if extent is None:
            extent = default_tau_extent(xi, params)
        tau = tau_lattice(m_points, extent)
        if values is None:
            values = np.zeros((tau.size, xi.size), dtype=complex)
        return cls(tau, xi, values, params)

    @property
    def dtau(self) -> float:
        return float(self.tau[1] - self.tau[0])

    @property
    def dxi(self) -> float:
        return float(self.xi[1] - self.xi[0])

    @property
    def cell_area(self) -> float:
        return self.dtau * self.dxi

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_values(self, values) -> "SpacetimeField":
        return SpacetimeField(self.tau, self.xi, values, self.params)

    def same_lattice(self, other: "SpacetimeField") -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.tau, other.tau)
            and np.array_equal(self.xi, other.xi)
            and self.params == other.params
        )

    def modulation(self) -> np.ndarray:
        """``tau - p(xi)`` per cell; the xi = 0 column gets ``tau``."""
        return self.tau[:, None] - phase_masked(self.xi, self.params)[None, :]

    def j_index(self) -> np.ndarray:
        return _dyadic(self.xi)

    def k_index(self) -> np.ndarray:
        return _dyadic(self.modulation())

    def region_D_mask(self) -> np.ndarray:
        return in_region_D(self.tau[:, None], self.xi[None, :])

    def zero_column(self) -> np.ndarray:
        return self.values[:, self.xi == 0.0]

    def l2(self) -> float:
        return math.sqrt(self.cell_area * float(np.sum(np.abs(self.values) ** 2)))


# ---------------------------------------------------------------------------
# block decomposition


@dataclass(frozen=True)
class BlockDecomposition:
    masses: dict[tuple[int, int], float]
    d_mass: float
    dc_mass: float

    def total_sq(self) -> float:
        return math.fsum(m * m for m in self.masses.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "k", "mass"])
        for (j, k) in sorted(self.masses):
            w.writerow([j, k, repr(self.masses[(j, k)])])
        return buf.getvalue()


def _block_sums(weights_sq: np.ndarray, j: np.ndarray, k: np.ndarray) -> dict[tuple[int, int], float]:
    jj = np.broadcast_to(j, weights_sq.shape).ravel()
    kk = k.ravel()
    w = weights_sq.ravel()
    kmax = int(kk.max()) + 1
    keys = jj * kmax + kk
    order = np.argsort(keys, kind="stable")
    keys, w = keys[order], w[order]
    uniq, start = np.unique(keys, return_index=True)
    sums = np.add.reduceat(w, start) if w.size else np.array([])
    return {(int(u // kmax), int(u % kmax)): float(s) for u, s in zip(uniq, sums)}


def decompose(F: SpacetimeField) -> BlockDecomposition:
    """L^2 mass of ``F`` on every populated ``A_j ∩ B_k`` cell and on D / D^c."""
    sq = np.abs(F.values) ** 2 * F.cell_area
    blocks = _block_sums(sq, F.j_index()[None, :], F.k_index())
    masses = {key: math.sqrt(v) for key, v in blocks.items()}
    dmask = F.region_D_mask()
    return BlockDecomposition(
        masses=masses,
        d_mass=math.sqrt(float(np.sum(sq[dmask]))),
        dc_mass=math.sqrt(float(np.sum(sq[~dmask]))),
    )


# ---------------------------------------------------------------------------
# norm specs


class Variant(str, Enum):
    XSB = "Xsb"
    XSB1 = "Xsb1"
    XMOD = "Xmod"
    Y = "Y"
    HS = "Hs"


@dataclass(frozen=True)
class NormSpec:
    variant: Variant
    s: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant in (Variant.XMOD, Variant.Y) and (self.s, self.b) != (MOD_S, MOD_B):
            raise ValueError(f"{self.variant.value} is fixed at s=-3/4, b=1/2")

    @classmethod
    def xsb(cls, s: float, b: float) -> "NormSpec":
        return cls(Variant.XSB, s, b)

    @classmethod
    def xsb1(cls, s: float, b: float) -> "NormSpec":
        return cls(Variant.XSB1, s, b)

    @classmethod
    def xmod(cls) -> "NormSpec":
        return cls(Variant.XMOD, MOD_S, MOD_B)

    @classmethod
    def y(cls) -> "NormSpec":
        return cls(Variant.Y, MOD_S, MOD_B)

    @classmethod
    def hs(cls, s: float) -> "NormSpec":
        return cls(Variant.HS, s, 0.0)

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        m = re.fullmatch(r"\s*([A-Za-z0-9]+)\s*(?:\((.*)\))?\s*", text)
        if not m:
            raise ValueError(f"cannot parse norm spec {text!r}")
        name, argstr = m.group(1).lower(), m.group(2)
        args: dict[str, float] = {}
        if argstr and argstr.strip():
            for part in argstr.split(","):
                key, _, val = part.partition("=")
                key = key.strip().lower()
                if key not in ("s", "b") or not val.strip():
                    raise ValueError(f"bad norm parameter {part!r} in {text!r}")
                args[key] = float(val)
        table = {"xsb": Variant.XSB, "xsb1": Variant.XSB1, "xmod": Variant.XMOD,
                 "x": Variant.XMOD, "y": Variant.Y, "hs": Variant.HS}
        if name not in table:
            raise ValueError(f"unknown norm {name!r}")
        variant = table[name]
        if variant in (Variant.XMOD, Variant.Y):
            return cls(variant, args.get("s", MOD_S), args.get("b", MOD_B))
        if variant is Variant.HS:
            return cls(variant, args.get("s", 0.0), 0.0)
        return cls(variant, args.get("s", 0.0), args.get("b", 0.0))

    def __str__(self) -> str:
        if self.variant in (Variant.XMOD, Variant.Y):
            return self.variant.value
        if self.variant is Variant.HS:
            return f"Hs(s={self.s!r})"
        return f"{self.variant.value}(s={self.s!r},b={self.b!r})"


# ---------------------------------------------------------------------------
# norms


def _require_zero_column(F: SpacetimeField):
    zc = F.zero_column()
    if zc.size and np.any(zc != 0):
        raise NormError("modulation-weighted norms need a zero xi = 0 column")


def xsb_norm(F: SpacetimeField, s: float, b: float) -> float:
    if b != 0.0:
        _require_zero_column(F)
    w = japanese(F.xi)[None, :] ** (2 * s) * japanese(F.modulation()) ** (2 * b)
    return math.sqrt(F.cell_area * float(np.sum(w * np.abs(F.values) ** 2)))


def xsb1_norm(F: SpacetimeField, s: float, b: float) -> float:
    """``[sum_j 2^{2js} (sum_k 2^{bk} ||F||_{A_j ∩ B_k})^2]^{1/2}``."""
    if b != 0.0:
        _require_zero_column(F)
    masses = decompose(F).masses
    per_j: dict[int, list[float]] = {}
    for (j, k), m in masses.items():
        per_j.setdefault(j, []).append(2.0 ** (b * k) * m)
    total = math.fsum(
        2.0 ** (2 * s * j) * math.fsum(terms) ** 2 for j, terms in sorted(per_j.items())
    )
    return math.sqrt(total)


def restrict(F: SpacetimeField, mask: np.ndarray) -> SpacetimeField:
    return F.with_values(np.where(mask, F.values, 0.0))


def xmod_parts(F: SpacetimeField) -> tuple[float, float]:
    """``(D^c part in X^{-3/4,1/2,1}, D part in X^{-3/4,1/2})``."""
    dmask = F.region_D_mask()
    return (
        xsb1_norm(restrict(F, ~dmask), MOD_S, MOD_B),
        xsb_norm(restrict(F, dmask), MOD_S, MOD_B),
    )


def xmod_norm(F: SpacetimeField) -> float:
    dc, d = xmod_parts(F)
    return dc + d


def trapezoid_abs(values: np.ndarray, dx: float, axis: int = 0) -> np.ndarray:
    return np.trapezoid(np.abs(values), dx=dx, axis=axis)


def y_norm(F: SpacetimeField) -> float:
    """``|| <xi>^{-3/4} F ||_{L^2_xi L^1_tau}``, trapezoid in tau."""
    inner = trapezoid_abs(F.values, F.dtau, axis=0)
    w = japanese(F.xi) ** (2 * MOD_S)
    return math.sqrt(F.dxi * float(np.sum(w * inner**2)))


def lp_tau_norm(F: SpacetimeField, s: float, p: float) -> float:
    """``|| <xi>^s F ||_{L^2_xi L^p_tau}`` (trapezoid in tau)."""
    inner = np.trapezoid(np.abs(F.values) ** p, dx=F.dtau, axis=0) ** (1.0 / p)
    w = japanese(F.xi) ** (2 * s)
    return math.sqrt(F.dxi * float(np.sum(w * inner**2)))


def norm(F: SpacetimeField, spec: NormSpec) -> float:
    v = spec.variant
    if v is Variant.XSB:
        return xsb_norm(F, spec.s, spec.b)
    if v is Variant.XSB1:
        return xsb1_norm(F, spec.s, spec.b)
    if v is Variant.XMOD:
        return xmod_norm(F)
    if v is Variant.Y:
        return y_norm(F)
    return xsb_norm(F, spec.s, 0.0)


# ---------------------------------------------------------------------------
# embedding probe


@dataclass(frozen=True)
class EmbeddingRatios:
    xmod_over_xsb: float  # ||f||_X / ||f||_{X^{-3/4,b}}
    lp_over_xmod: float  # ||<xi>^{-3/4} f||_{L^2 L^p} / ||f||_X
    l1_over_xsb1: float  # ||<xi>^{-3/4} f||_{L^2 L^1} / ||f||_{X^{-3/4,1/2,1}}


def _ratio(a: float, b: float) -> float:
    if a == 0.0:
        return 0.0
    return a / b if b > 0 else math.inf


def probe_embedding_29(F: SpacetimeField, b: float, p: float = 4.0 / 3.0) -> EmbeddingRatios:
    """LHS/RHS ratios of the three embeddings of the modified space."""
    if not b > 0.5:
        raise ValueError(f"the X^(-3/4,b) embedding needs b > 1/2, got {b}")
    if not 1.0 < p <= 2.0:
        raise ValueError(f"p must lie in (1, 2], got {p}")
    x = xmod_norm(F)
    return EmbeddingRatios(
        xmod_over_xsb=_ratio(x, xsb_norm(F, MOD_S, b)),
        lp_over_xmod=_ratio(lp_tau_norm(F, MOD_S, p), x),
        l1_over_xsb1=_ratio(lp_tau_norm(F, MOD_S, 1.0), xsb1_norm(F, MOD_S, MOD_B)),
    )


# ---------------------------------------------------------------------------
# time-restricted norm


def cutoff(t) -> np.ndarray:
    """Smooth bump: 1 on [0, 1], 0 outside (-1, 2), C^infinity transitions."""
    t = np.asarray(t, dtype=float)

    def smooth_step(x):
        # 0 for x <= 0, 1 for x >= 1
        x = np.clip(x, 0.0, 1.0)
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        c = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
        return a / (a + c)

    up = smooth_step(t + 1.0)
    down = 1.0 - smooth_step(t - 1.0)
    return np.where(t <= 0.0, up, np.where(t >= 1.0, down, 1.0))


def spacetime_from_samples(times: np.ndarray, coeffs: np.ndarray, grid: SpaceGrid,
                           params: PhaseParams = DEFAULT_PARAMS) -> SpacetimeField:
    """Time Fourier transform of uniformly sampled coefficient histories.

    ``coeffs`` has shape ``(len(times), n)``.  The transform uses the kernel
    ``exp(+i t tau)`` so that a free wave ``exp(-i t p(xi))`` concentrates at
    ``tau = p(xi)``.  The scaling ``L / (2 pi)`` makes the result's
    ``L^2_{tau xi}`` norm equal the space-time ``L^2`` norm of the field.
    """
    m = times.size
    dt = float(times[1] - times[0])
    # exp(+i t tau) sums == m * ifft
    hat = np.fft.ifft(coeffs, axis=0) * m * dt
    tau_raw = 2.0 * math.pi * np.fft.fftfreq(m, d=dt)
    hat = hat * np.exp(1j * tau_raw * times[0])[:, None]
    order = np.argsort(tau_raw, kind="stable")
    tau = tau_raw[order]
    vals = hat[order] * (grid.domain_length / (2.0 * math.pi))
    return SpacetimeField(tau, grid.frequencies, vals, params)


def restriction_norm_upper(
    states: Sequence[SpectralState],
    T: float,
    params: PhaseParams = DEFAULT_PARAMS,
    pad_factor: int = 2,
) -> float:
    """Upper bound for the time-restricted modified norm of a trajectory on ``[0, T]``.

    The trajectory (uniform time stamps covering ``[0, T]``) is extended
    outside its range by free evolution from its end states, multiplied by the window
    ``psi(|t| / T)`` (identically 1 on ``[-T, T]``, vanishing beyond
    ``|t| = 2T``) and measured in the modified norm.  Any extension gives an
    upper bound for the infimum defining the restricted norm; this is the
    one reported.
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    if len(states) < 2:
        raise ValueError("need at least two states")
    grid = states[0].grid
    t_states = np.array([s.time for s in states])
    dt = float(t_states[1] - t_states[0])
    if np.ptp(np.diff(t_states)) > 1e-9 * dt:
        raise ValueError("trajectory time stamps must be uniform")
    if t_states[0] > 0.0 + 1e-12 or t_states[-1] < T - 1e-9:
        raise ValueError("trajectory must cover [0, T]")
    p = phase_masked(grid.frequencies, params)
    # time step small enough to put every characteristic inside the tau box
    pmax = default_tau_extent(grid.frequencies, params)
    dt_fine = min(dt, math.pi / pmax)
    n_half = int(math.ceil(2.0 * T / dt_fine))
    n_half = int(2 ** math.ceil(math.log2(max(n_half, 4))))
    dt_fine = 2.0 * T / n_half
    n_total = 2 * n_half * pad_factor
    times = (np.arange(n_total) - n_total // 2) * dt_fine
    C = np.array([s.coeffs for s in states])
    out = np.zeros((n_total, grid.n_points), dtype=complex)
    window = cutoff(np.abs(times) / T)
    for i, t in enumerate(times):
        if window[i] == 0.0:
            continue
        if t < t_states[0]:
            c = C[0] * np.exp(-1j * (t - t_states[0]) * p)
        elif t > t_states[-1]:
            c = C[-1] * np.exp(-1j * (t - t_states[-1]) * p)
        else:
            pos = (t - t_states[0]) / dt
            i0 = min(int(math.floor(pos)), len(states) - 2)
            w = pos - i0
            # interpolate in the interaction picture to avoid smearing fast phases
            a = C[i0] * np.exp(1j * t_states[i0] * p)
            b = C[i0 + 1] * np.exp(1j * t_states[i0 + 1] * p)
            c = ((1 - w) * a + w * b) * np.exp(-1j * t * p)
        out[i] = window[i] * c
    F = spacetime_from_samples(times, out, grid, params)
    return xmod_norm(F)


def free_trajectory(u0: SpectralState, T: float, n_steps: int,
                    params: PhaseParams = DEFAULT_PARAMS) -> list[SpectralState]:
    dt = T / n_steps
    return [free_evolution(u0, i * dt, params) for i in range(n_steps + 1)]
