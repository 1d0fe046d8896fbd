"""Periodic grids, the Ostrovsky phase function and Fourier multipliers.

Conventions
-----------
A real field on ``[0, L)`` sampled at ``n`` points is written
``u(x) = sum_k c_k exp(i xi_k x)`` with ``xi_k = 2 pi k / L``.  The
coefficients ``c_k`` are stored in ascending frequency order (``fftshift``
order), so index ``n // 2`` is the zero mode.  Sobolev norms use the
continuous-measure normalisation ``||u||_{H^s}^2 = L sum_k <xi_k>^{2s} |c_k|^2``
which makes ``H^0`` the exact ``L^2(0, L)`` norm of the trigonometric
polynomial.

The zero mode is hard-zeroed: the equation only makes sense for mean-zero
data, because of the antiderivative term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

DEFAULT_DOMAIN_LENGTH = 2.0 * math.pi * 32.0


class PhaseDomainError(ValueError):
    """Raised when the phase is evaluated at its singular point xi = 0."""


class MeanZeroError(ValueError):
    """Raised when an operation needs a mean-zero state and gets something else."""


def japanese(x):
    """Japanese bracket ``<x> = (1 + x^2)^{1/2}``."""
    return np.sqrt(1.0 + np.square(x))


@dataclass(frozen=True)
class PhaseParams:
    beta: float = -1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.beta < 0:
            raise ValueError(f"beta must be negative, got {self.beta}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")


DEFAULT_PARAMS = PhaseParams()


def phase(xi, params: PhaseParams = DEFAULT_PARAMS):
    """Dispersion relation ``p(xi) = xi^3 - gamma / xi``.

    Works on scalars and arrays.  Any zero frequency raises
    :class:`PhaseDomainError`.
    """
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr == 0.0):
        raise PhaseDomainError("phase is singular at xi = 0")
    out = xi_arr**3 - params.gamma / xi_arr
    if out.ndim == 0:
        return float(out)
    return out


def phase_masked(xi, params: PhaseParams = DEFAULT_PARAMS) -> np.ndarray:
    """Phase on an array with the zero frequency mapped to 0 instead of raising."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    nz = xi != 0.0
    out[nz] = xi[nz] ** 3 - params.gamma / xi[nz]
    return out


def phase_increment(xi0: float, dxi, params: PhaseParams = DEFAULT_PARAMS):
    """``p(xi0 + dxi) - p(xi0)`` without cancellation for large ``xi0``."""
    dxi = np.asarray(dxi, dtype=float)
    cubic = 3.0 * xi0 * xi0 * dxi + 3.0 * xi0 * dxi * dxi + dxi**3
    return cubic + params.gamma * dxi / (xi0 * (xi0 + dxi))


@dataclass(frozen=True)
class SpaceGrid:
    n_points: int = 256
    domain_length: float = DEFAULT_DOMAIN_LENGTH

    def __post_init__(self):
        n = self.n_points
        if n < 8 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 8, got {n}")
        if not self.domain_length > 0:
            raise ValueError("domain_length must be positive")

    @property
    def frequencies(self) -> np.ndarray:
        k = np.arange(-self.n_points // 2, self.n_points // 2)
        return 2.0 * math.pi * k / self.domain_length

    @property
    def dxi(self) -> float:
        return 2.0 * math.pi / self.domain_length

    @property
    def zero_index(self) -> int:
        return self.n_points // 2

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_points) * (self.domain_length / self.n_points)

    @property
    def xi_max(self) -> float:
        return math.pi * self.n_points / self.domain_length

    def to_dict(self) -> dict:
        return {"n_points": self.n_points, "domain_length": self.domain_length}


@dataclass(frozen=True)
class SpectralState:
    grid: SpaceGrid
    coeffs: np.ndarray = field(repr=False)
    time: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n_points,):
            raise ValueError(
                f"coeffs has shape {c.shape}, grid expects ({self.grid.n_points},)"
            )
        c[self.grid.zero_index] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: SpaceGrid, time: float = 0.0) -> "SpectralState":
        return cls(grid, np.zeros(grid.n_points, dtype=complex), time)

    def with_coeffs(self, coeffs, time=None) -> "SpectralState":
        return replace(self, coeffs=coeffs, time=self.time if time is None else time)

    def is_real(self, rtol: float = 1e-12) -> bool:
        c = self.coeffs
        # index 0 is the unpaired Nyquist mode -n/2
        mirrored = np.conj(c[1:][::-1])
        scale = max(np.max(np.abs(c)), 1e-300)
        return bool(np.max(np.abs(c[1:] - mirrored)) <= rtol * scale)

    def __add__(self, other: "SpectralState") -> "SpectralState":
        _check_same_grid(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralState") -> "SpectralState":
        _check_same_grid(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def scaled(self, c: complex) -> "SpectralState":
        return self.with_coeffs(c * self.coeffs)


def _check_same_grid(a: SpectralState, b: SpectralState):
    if a.grid != b.grid:
        raise ValueError("states live on different grids")


def hs_norm(state: SpectralState, s: float) -> float:
    """Sobolev norm ``(L sum <xi>^{2s} |c|^2)^{1/2}``."""
    w = japanese(state.grid.frequencies) ** (2.0 * s)
    return math.sqrt(state.grid.domain_length * float(np.sum(w * np.abs(state.coeffs) ** 2)))


def forward_transform(samples, grid: SpaceGrid, time: float = 0.0) -> SpectralState:
    """Samples on ``grid.x`` to coefficients.  The mean is discarded."""
    u = np.asarray(samples)
    if u.shape != (grid.n_points,):
        raise ValueError(f"expected {grid.n_points} samples, got shape {u.shape}")
    coeffs = np.fft.fftshift(np.fft.fft(u)) / grid.n_points
    return SpectralState(grid, coeffs, time)


def raw_coefficients(samples, grid: SpaceGrid) -> np.ndarray:
    """Coefficients including the mean, for contracts that inspect the zero mode."""
    u = np.asarray(samples)
    if u.shape != (grid.n_points,):
        raise ValueError(f"expected {grid.n_points} samples, got shape {u.shape}")
    return np.fft.fftshift(np.fft.fft(u)) / grid.n_points


def inverse_transform(state: SpectralState, real: bool = True) -> np.ndarray:
    u = np.fft.ifft(np.fft.ifftshift(state.coeffs)) * state.grid.n_points
    return u.real if real else u


def free_evolution(
    state: SpectralState, t: float, params: PhaseParams = DEFAULT_PARAMS
) -> SpectralState:
    """Linear group: multiply each coefficient by ``exp(-i t p(xi))``."""
    mult = np.exp(-1j * t * phase_masked(state.grid.frequencies, params))
    return state.with_coeffs(state.coeffs * mult, time=state.time + t)


Symbol = Union[str, tuple]


def multiplier_symbol(grid: SpaceGrid, m: Symbol) -> np.ndarray:
    """Symbol of a Fourier multiplier on the grid frequencies.

    ``m`` is one of ``"dx"``, ``"dx3"``, ``"dxinv"``, ``("abs", a)`` for
    ``|xi|^a`` or ``("bracket", s)`` for ``<xi>^s``.  The zero mode of every
    symbol is 0 except for ``<xi>^s``, where it is 1.
    """
    xi = grid.frequencies
    nz = xi != 0.0
    out = np.zeros(xi.shape, dtype=complex)
    if m == "dx":
        out = 1j * xi
    elif m == "dx3":
        out = -1j * xi**3
    elif m == "dxinv":
        out[nz] = 1.0 / (1j * xi[nz])
    elif isinstance(m, tuple) and m[0] == "abs":
        out[nz] = np.abs(xi[nz]) ** m[1]
    elif isinstance(m, tuple) and m[0] == "bracket":
        out = japanese(xi) ** m[1] + 0j
    else:
        raise ValueError(f"unknown multiplier {m!r}")
    return out


def apply_multiplier(state: SpectralState, m: Symbol) -> SpectralState:
    return state.with_coeffs(state.coeffs * multiplier_symbol(state.grid, m))


def antiderivative_of_samples(samples, grid: SpaceGrid) -> SpectralState:
    """``dx^{-1}`` applied to raw samples; refuses data with nonzero mean."""
    c = raw_coefficients(samples, grid)
    scale = max(float(np.max(np.abs(c))), 1e-300)
    if abs(c[grid.zero_index]) > 1e-13 * scale:
        raise MeanZeroError("dx^{-1} needs mean-zero input")
    return apply_multiplier(SpectralState(grid, c), "dxinv")
