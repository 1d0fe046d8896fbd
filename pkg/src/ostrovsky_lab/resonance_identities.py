"""Algebraic identities behind the bilinear estimates, the two-sided
resonance bound and the dyadic-sum recursion.

All frequency sums are formed in double-double arithmetic, so
``xi = xi1 + xi2`` holds exactly and near-resonant configurations (where
O(xi^3) terms cancel down to O(1)) keep full relative accuracy.  The phase
here is the default one, ``p(xi) = xi^3 - 1/xi``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .ddarith import DD, two_sum

RESIDUAL_TOL = 1e-12
SUM_BOUND = (math.sqrt(2.0) + 1.0) / 2.0


class ZeroFrequencyError(ValueError):
    """A frequency that must be nonzero is zero."""


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _nonzero(name: str, hi) -> None:
    if np.any(np.asarray(hi) == 0.0):
        raise ZeroFrequencyError(f"{name} must be nonzero")


def _phase_dd(x: DD) -> DD:
    return x**3 - 1.0 / x


def relative_residual(lhs, rhs):
    """``|lhs - rhs| / (1 + |lhs|)``."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    return _out(np.abs(lhs - rhs) / (1.0 + np.abs(lhs)))


@dataclass(frozen=True)
class FrequencyTriple:
    """Two input frequencies with their sum; scalars or equal-shape arrays.

    ``xi`` and ``tau`` are the exact sums held in double-double form;
    the float properties are their nearest doubles.
    """

    xi1: np.ndarray
    xi2: np.ndarray
    tau1: np.ndarray = 0.0
    tau2: np.ndarray = 0.0

    def __post_init__(self):
        arrs = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in
                                     (self.xi1, self.xi2, self.tau1, self.tau2)))
        for name, a in zip(("xi1", "xi2", "tau1", "tau2"), arrs):
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, a)
        _nonzero("xi1", self.xi1)
        _nonzero("xi2", self.xi2)

    @property
    def xi_dd(self) -> DD:
        return DD(*two_sum(self.xi1, self.xi2))

    @property
    def tau_dd(self) -> DD:
        return DD(*two_sum(self.tau1, self.tau2))

    @property
    def xi(self):
        return _out(self.xi_dd.to_float())

    @property
    def tau(self):
        return _out(self.tau_dd.to_float())

    def require_nonzero_sum(self) -> None:
        _nonzero("xi = xi1 + xi2", self.xi_dd.hi)


def identity_A(a, b):
    """Both sides of the symmetric-split identity for ``p(a) + p(b)``."""
    a, b = DD(a), DD(b)
    _nonzero("a", a.hi)
    _nonzero("b", b.hi)
    s = a + b
    _nonzero("a + b", s.hi)
    lhs = a**3 - 1.0 / a + b**3 - 1.0 / b - s**3 / 4.0 + 4.0 / s
    d = a - b
    rhs = 0.75 * s * d * d * (1.0 - 4.0 / (3.0 * a * b * s * s))
    return _out(lhs.to_float()), _out(rhs.to_float())


def identity_B(a, b):
    """Both sides of ``p(a + b) - p(a) - p(b)`` in factored form."""
    a, b = DD(a), DD(b)
    _nonzero("a", a.hi)
    _nonzero("b", b.hi)
    s = a + b
    _nonzero("a + b", s.hi)
    lhs = s**3 - 1.0 / s - a**3 + 1.0 / a - b**3 + 1.0 / b
    prod = a * b * s
    rhs = 3.0 * prod + (a * a + a * b + b * b) / prod
    return _out(lhs.to_float()), _out(rhs.to_float())


def _resonance_closed_dd(t: FrequencyTriple) -> DD:
    x1, x2 = DD(t.xi1), DD(t.xi2)
    prod = t.xi_dd * x1 * x2
    return -(3.0 * prod + (x1 * x1 + x1 * x2 + x2 * x2) / prod)


def _resonance_definition_dd(t: FrequencyTriple) -> DD:
    x1, x2, x = DD(t.xi1), DD(t.xi2), t.xi_dd
    t1, t2, tau = DD(t.tau1), DD(t.tau2), t.tau_dd
    return (tau - _phase_dd(x)) - (t1 - _phase_dd(x1)) - (t2 - _phase_dd(x2))


def resonance(t: FrequencyTriple):
    """Closed-form resonance function ``h``."""
    t.require_nonzero_sum()
    return _out(_resonance_closed_dd(t).to_float())


def resonance_definition(t: FrequencyTriple):
    """``h`` from its definition as a difference of three modulations."""
    t.require_nonzero_sum()
    return _out(_resonance_definition_dd(t).to_float())


def resonance_bounds(t: FrequencyTriple):
    """``(lower, 2 lower)`` with ``lower = max(3|x x1 x2|, (x1^2+x1x2+x2^2)/|x x1 x2|)``."""
    t.require_nonzero_sum()
    x1, x2 = DD(t.xi1), DD(t.xi2)
    prod = abs(t.xi_dd * x1 * x2)
    cubic = (3.0 * prod).to_float()
    frac = ((x1 * x1 + x1 * x2 + x2 * x2) / prod).to_float()
    lower = np.maximum(cubic, frac)
    return _out(lower), _out(2.0 * lower)


def identity_2011(t: FrequencyTriple):
    """Modulation identity with the midpoint phase ``xi^3/4 - 4/xi`` split off."""
    t.require_nonzero_sum()
    x1, x2, x = DD(t.xi1), DD(t.xi2), t.xi_dd
    t1, t2, tau = DD(t.tau1), DD(t.tau2), t.tau_dd
    lhs = tau - x**3 / 4.0 + 4.0 / x - (t1 - _phase_dd(x1)) - (t2 - _phase_dd(x2))
    d = x1 - x2
    rhs = 0.75 * x * d * d * (1.0 - 4.0 / (3.0 * x * x * x1 * x2))
    return _out(lhs.to_float()), _out(rhs.to_float())


def identity_2044(xi, xi1, tau, tau1):
    """Mirrored identity with ``xi2 = xi - xi1`` and ``tau2 = tau - tau1``."""
    x, x1 = DD(xi), DD(xi1)
    tau, t1 = DD(tau), DD(tau1)
    x2 = DD(*two_sum(x.hi, -x1.hi))
    t2 = DD(*two_sum(tau.hi, -t1.hi))
    for name, v in (("xi", x), ("xi1", x1), ("xi2", x2)):
        _nonzero(name, v.hi)
    lhs = t2 - x2**3 / 4.0 + 4.0 / x2 - (tau - _phase_dd(x)) + (t1 - _phase_dd(x1))
    w = 2.0 * x - x2
    rhs = 0.75 * x2 * w * w * (1.0 + 4.0 / (3.0 * x * x1 * x2 * x2))
    return _out(lhs.to_float()), _out(rhs.to_float())


# ---------------------------------------------------------------------------
# dyadic-sum recursion


@dataclass(frozen=True)
class GammaSequence:
    j: int
    values: tuple[float, ...]  # gamma_0 .. gamma_N
    S: float  # sum of gamma_n^{-1/2} for n < N
    terminal_in_range: bool

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def lower_bound_claim(self) -> bool:
        """``gamma_n >= 2^{N + 2 - n}`` for every ``n <= N``."""
        N = self.N
        return all(g >= 2.0 ** (N + 2 - n) for n, g in enumerate(self.values))

    def within_bound(self) -> bool:
        return self.S <= SUM_BOUND


def gamma_sequence(j: int) -> GammaSequence:
    """``gamma_0 = j/2``, ``gamma_{n+1} = 2 log2 gamma_n``, stop at the first value below 8."""
    if isinstance(j, bool) or not isinstance(j, (int, np.integer)):
        raise TypeError("j must be an integer")
    if j < 16:
        raise ValueError(f"j must be >= 16, got {j}")
    values = [j / 2.0]
    while values[-1] >= 8.0:
        values.append(2.0 * math.log2(values[-1]))
    S = math.fsum(g**-0.5 for g in values[:-1])
    return GammaSequence(int(j), tuple(values), S, 6.0 <= values[-1] < 8.0)


# ---------------------------------------------------------------------------
# case split


class CaseLabel(enum.Enum):
    SIGN_SPLIT = "sign_split"
    FACTOR_LARGE = "factor_large"
    FACTOR_SMALL = "factor_small"


def _factor(t: FrequencyTriple, mirrored: bool):
    x1, x2, x = DD(t.xi1), DD(t.xi2), t.xi_dd
    if mirrored:
        return (1.0 + 4.0 / (3.0 * x * x1 * x2 * x2)).to_float()
    return (1.0 - 4.0 / (3.0 * x * x * x1 * x2)).to_float()


def case_codes(t: FrequencyTriple, mirrored: bool = False) -> np.ndarray:
    """Vectorized labels: 0 sign split, 1 factor large, 2 factor small.

    The plain split looks at ``xi1 xi2`` and ``1 - 4/(3 xi^2 xi1 xi2)``; the
    mirrored one at ``xi xi1`` and ``1 + 4/(3 xi xi1 xi2^2)``.
    """
    t.require_nonzero_sum()
    if mirrored:
        split = np.sign(t.xi_dd.hi) * np.sign(t.xi1) > 0
    else:
        split = np.sign(t.xi1) * np.sign(t.xi2) < 0
    small = np.abs(_factor(t, mirrored)) <= 0.5
    return np.where(split, 0, np.where(small, 2, 1))


_LABELS = (CaseLabel.SIGN_SPLIT, CaseLabel.FACTOR_LARGE, CaseLabel.FACTOR_SMALL)


def case_condition(t: FrequencyTriple, mirrored: bool = False):
    """Label of a triple (or an object array of labels for array input)."""
    codes = case_codes(t, mirrored)
    if codes.ndim == 0:
        return _LABELS[int(codes)]
    return np.array([_LABELS[c] for c in codes.ravel()], dtype=object).reshape(codes.shape)


def factor_small_window(t: FrequencyTriple, mirrored: bool = False, rtol: float = 1e-12):
    """Whether the product lies in the window equivalent to a small factor.

    Plain: ``8/(9 xi^2) <= xi1 xi2 <= 8/(3 xi^2)``.
    Mirrored: ``8/(9 xi2^2) <= -xi xi1 <= 8/(3 xi2^2)``.
    """
    t.require_nonzero_sum()
    x = t.xi_dd.to_float()
    if mirrored:
        prod, scale = -x * t.xi1, t.xi2**2
    else:
        prod, scale = t.xi1 * t.xi2, x**2
    lo, hi = 8.0 / (9.0 * scale), 8.0 / (3.0 * scale)
    inside = (prod >= lo * (1 - rtol)) & (prod <= hi * (1 + rtol))
    return bool(inside) if np.ndim(inside) == 0 else inside


def root_windows(xi: float) -> list[tuple[float, float]]:
    """Intervals of ``xi1`` with ``8/(9 xi^2) <= xi1 (xi - xi1) <= 8/(3 xi^2)``.

    Two intervals symmetric about ``xi/2`` when ``xi^4 >= 32/3``, one when
    ``32/9 <= xi^4 < 32/3``, none below.
    """
    if xi == 0.0:
        raise ZeroFrequencyError("xi must be nonzero")
    outer = xi * xi - 32.0 / (9.0 * xi * xi)
    inner = xi * xi - 32.0 / (3.0 * xi * xi)
    if outer < 0.0:
        return []
    ro = math.sqrt(outer)
    if inner < 0.0:
        return [((xi - ro) / 2.0, (xi + ro) / 2.0)]
    ri = math.sqrt(inner)
    return [((xi - ro) / 2.0, (xi - ri) / 2.0), ((xi + ri) / 2.0, (xi + ro) / 2.0)]


def in_root_windows(xi: float, xi1: float, rtol: float = 1e-9) -> bool:
    slack = rtol * max(abs(xi), abs(xi1), 1.0)
    return any(lo - slack <= xi1 <= hi + slack for lo, hi in root_windows(xi))


# ---------------------------------------------------------------------------
# randomized check


@dataclass(frozen=True)
class IdentityReport:
    samples: int
    seed: int
    max_residual: dict[str, float]
    sandwich_failures: int

    @property
    def worst(self) -> float:
        return max(self.max_residual.values())

    def passed(self, tol: float = RESIDUAL_TOL) -> bool:
        return self.worst <= tol and self.sandwich_failures == 0


def log_uniform_signed(rng: np.random.Generator, size: int, log2_min: float,
                       log2_max: float) -> np.ndarray:
    mag = 2.0 ** rng.uniform(log2_min, log2_max, size)
    return np.where(rng.random(size) < 0.5, -mag, mag)


def identity_suite(samples: int = 100_000, seed: int = 0, log2_min: float = -10.0,
                   log2_max: float = 10.0) -> IdentityReport:
    """Max relative residual of every identity over log-uniform random frequencies.

    Also counts samples violating ``lower <= |h| <= 2 lower``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not log2_min < log2_max:
        raise ValueError("log2_min must be below log2_max")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    draw = lambda: log_uniform_signed(rng, samples, log2_min, log2_max)  # noqa: E731
    xi1, xi2, tau1, tau2 = draw(), draw(), draw(), draw()
    t = FrequencyTriple(xi1, xi2, tau1, tau2)
    t.require_nonzero_sum()
    res = {
        "identity_A": relative_residual(*identity_A(xi1, xi2)),
        "identity_B": relative_residual(*identity_B(xi1, xi2)),
        "resonance_closed_form": relative_residual(resonance_definition(t), resonance(t)),
        "modulation_split": relative_residual(*identity_2011(t)),
        "mirrored_split": relative_residual(*identity_2044(t.xi, xi1, t.tau, tau1)),
    }
    h = np.abs(resonance(t))
    lo, hi = resonance_bounds(t)
    bad = (h < lo * (1 - 1e-14)) | (h > hi * (1 + 1e-14))
    return IdentityReport(samples, seed, {k: float(np.max(v)) for k, v in res.items()},
                          int(np.count_nonzero(bad)))
