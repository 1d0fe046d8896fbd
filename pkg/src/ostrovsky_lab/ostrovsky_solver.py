"""Periodic pseudospectral solver for the Ostrovsky equation.

The evolution is ``u_t = u_xxx - dx^{-1} u + (1/2) (u^2)_x``; in Fourier
space ``c_t = -i p(xi) c + N(c)`` with ``p(xi) = xi^3 - gamma/xi``, so the
linear group is multiplication by ``exp(-i t p(xi))`` and the Duhamel map is

    Phi(u)(t) = S(t) u0 + (1/2) int_0^t S(t - s) dx(u(s)^2) ds.

Two schemes share this nonlinearity: a Lawson-type integrating-factor RK4
(production) and Picard iteration of ``Phi`` with trapezoid quadrature in the
interaction picture (diagnostic).
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .spectral_core import (
    DEFAULT_PARAMS,
    MeanZeroError,
    PhaseParams,
    SpaceGrid,
    SpectralState,
    forward_transform,
    free_evolution,
    hs_norm,
    inverse_transform,
    phase_masked,
    raw_coefficients,
)

CRITICAL_S = -0.75
BLOWUP_GROWTH = 10.0
PICARD_TOL = 1e-10


class Scheme(str, enum.Enum):
    PICARD = "picard"
    IF_RK4 = "if_rk4"


class Dealias(str, enum.Enum):
    TWO_THIRDS = "two_thirds"
    NONE = "none"


class BlowUpError(RuntimeError):
    """A run that was required to finish produced nonfinite or runaway values."""


@dataclass(frozen=True)
class SolverConfig:
    grid: SpaceGrid = field(default_factory=SpaceGrid)
    dt: float = 1e-3
    T: float = 1.0
    params: PhaseParams = DEFAULT_PARAMS
    scheme: Scheme = Scheme.IF_RK4
    dealias: Dealias = Dealias.TWO_THIRDS
    picard_iters: int = 30
    nonlinear: bool = True  # False drops the quadratic term (linear checks)

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "dealias", Dealias(self.dealias))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.T <= 1.0:
            raise ValueError("T must lie in (0, 1]")
        if self.dt > self.T:
            raise ValueError("dt must not exceed T")
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise ValueError("T must be an integer multiple of dt")
        if self.picard_iters < 1:
            raise ValueError("picard_iters must be positive")

    @property
    def n_steps(self) -> int:
        return round(self.T / self.dt)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "dt": self.dt,
            "T": self.T,
            "params": {"beta": self.params.beta, "gamma": self.params.gamma},
            "scheme": self.scheme.value,
            "dealias": self.dealias.value,
            "picard_iters": self.picard_iters,
            "nonlinear": self.nonlinear,
        }


@dataclass(frozen=True)
class Trajectory:
    states: tuple[SpectralState, ...]
    config: SolverConfig
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.states:
            raise ValueError("a trajectory needs at least one state")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    @property
    def final(self) -> SpectralState:
        return self.states[-1]

    @property
    def truncated(self) -> bool:
        return bool(self.diagnostics.get("blowup"))

    def norms(self, s: float = 0.0) -> np.ndarray:
        return np.array([hs_norm(u, s) for u in self.states])

    def sup_distance(self, other: "Trajectory", s: float = CRITICAL_S) -> float:
        """``sup_t ||u(t) - v(t)||_{H^s}`` over common time stamps."""
        if len(self.states) != len(other.states) or not np.allclose(self.times, other.times):
            raise ValueError("trajectories have different time stamps")
        return max(hs_norm(a - b, s) for a, b in zip(self.states, other.states))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "u"])
        x = self.config.grid.x
        for st in self.states:
            for xi, ui in zip(x, inverse_transform(st)):
                w.writerow([repr(float(st.time)), repr(float(xi)), repr(float(ui))])
        return buf.getvalue()

    def header(self, seed: int | None = None) -> dict:
        return {"config": self.config.to_dict(), "seed": seed, "n_states": len(self.states),
                "diagnostics": _jsonable(self.diagnostics)}


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=lambda o: o.item() if hasattr(o, "item") else str(o)))


# ---------------------------------------------------------------------------
# right-hand side


def dealias_mask(grid: SpaceGrid) -> np.ndarray:
    """Keep modes with ``|k| <= n/3``."""
    k = np.arange(-grid.n_points // 2, grid.n_points // 2)
    return np.abs(k) <= grid.n_points // 3


def nonlinearity(state: SpectralState, dealias: Dealias = Dealias.TWO_THIRDS) -> SpectralState:
    """Coefficients of ``(1/2) dx(u^2)``.

    With 2/3 dealiasing this is ``(1/2) P dx (P u)^2`` where ``P`` keeps
    ``|k| <= n/3``; that product is alias-free, so ``<u, N(u)> = 0`` exactly.
    """
    grid = state.grid
    c = state.coeffs
    if Dealias(dealias) is Dealias.TWO_THIRDS:
        mask = dealias_mask(grid)
        c = np.where(mask, c, 0.0)
    u = np.fft.ifft(np.fft.ifftshift(c)) * grid.n_points
    sq = np.fft.fftshift(np.fft.fft(u * u)) / grid.n_points
    out = 0.5j * grid.frequencies * sq
    if Dealias(dealias) is Dealias.TWO_THIRDS:
        out = np.where(mask, out, 0.0)
    return state.with_coeffs(out)


def _linear_factor(grid: SpaceGrid, h: float, params: PhaseParams) -> np.ndarray:
    return np.exp(-1j * h * phase_masked(grid.frequencies, params))


def step_if_rk4(state: SpectralState, dt: float, params: PhaseParams = DEFAULT_PARAMS,
                dealias: Dealias = Dealias.TWO_THIRDS, nonlinear: bool = True) -> SpectralState:
    """One integrating-factor RK4 step; the linear part is propagated exactly."""
    grid = state.grid
    if not nonlinear:
        return state.with_coeffs(_linear_factor(grid, dt, params) * state.coeffs, time=state.time + dt)
    E = _linear_factor(grid, dt, params)
    E2 = _linear_factor(grid, dt / 2, params)

    def N(c):
        return nonlinearity(state.with_coeffs(c), dealias).coeffs

    c = state.coeffs
    k1 = N(c)
    k2 = N(E2 * (c + 0.5 * dt * k1))
    k3 = N(E2 * c + 0.5 * dt * k2)
    k4 = N(E * c + dt * E2 * k3)
    new = E * c + (dt / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
    return state.with_coeffs(new, time=state.time + dt)


def _check_mean_zero(u0: SpectralState):
    if u0.coeffs[u0.grid.zero_index] != 0:
        raise MeanZeroError("initial data must be mean-zero")


def solve(u0: SpectralState, config: SolverConfig) -> Trajectory:
    """IF-RK4 trajectory at multiples of ``dt``; truncated on blow-up."""
    _check_mean_zero(u0)
    if u0.grid != config.grid:
        raise ValueError("initial data lives on a different grid than the config")
    u = u0.with_coeffs(u0.coeffs, time=0.0)
    states = [u]
    base = max(hs_norm(u, 0.0), 1e-300)
    diag: dict = {"blowup": None}
    for n in range(config.n_steps):
        u = step_if_rk4(u, config.dt, config.params, config.dealias, config.nonlinear)
        u = u.with_coeffs(u.coeffs, time=(n + 1) * config.dt)
        if not np.all(np.isfinite(u.coeffs)):
            diag["blowup"] = {"step": n + 1, "time": u.time, "reason": "nonfinite coefficients"}
            break
        norm = hs_norm(u, 0.0)
        if norm > BLOWUP_GROWTH * base:
            diag["blowup"] = {"step": n + 1, "time": u.time,
                              "reason": f"L2 norm grew by more than {BLOWUP_GROWTH}x"}
            break
        states.append(u)
    return Trajectory(tuple(states), config, diag)


# ---------------------------------------------------------------------------
# Picard iteration


def _cumulative_trapezoid(vals: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(vals)
    out[1:] = np.cumsum(0.5 * dt * (vals[1:] + vals[:-1]), axis=0)
    return out


def free_solution(u0: SpectralState, config: SolverConfig) -> Trajectory:
    states = [free_evolution(u0.with_coeffs(u0.coeffs, time=0.0), t, config.params)
              for t in config.times]
    return Trajectory(tuple(states), config, {"blowup": None})


def picard_step(u: Trajectory, u0: SpectralState) -> Trajectory:
    """``Phi(u)`` on the time stamps of ``u``.

    In the interaction picture ``Phi(u)(t) = S(t) [u0 + int_0^t S(-s) N(u(s)) ds]``;
    the integral is the trapezoid rule over the stored states.
    """
    cfg = u.config
    times = u.times
    expected = cfg.times
    if times.shape != expected.shape or not np.allclose(times, expected, atol=1e-12):
        raise ValueError("trajectory time stamps do not match the config")
    grid = cfg.grid
    ph = phase_masked(grid.frequencies, cfg.params)
    if cfg.nonlinear:
        integrand = np.array([
            np.exp(1j * t * ph) * nonlinearity(st, cfg.dealias).coeffs
            for t, st in zip(times, u.states)
        ])
    else:
        integrand = np.zeros((times.size, grid.n_points), dtype=complex)
    acc = _cumulative_trapezoid(integrand, cfg.dt)
    states = []
    for n, t in enumerate(times):
        c = np.exp(-1j * t * ph) * (u0.coeffs + acc[n])
        states.append(SpectralState(grid, c, float(t)))
    return Trajectory(tuple(states), cfg, {"blowup": None})


@dataclass
class PicardDiagnostics:
    distances: list[float]  # d_n = sup_t ||u^{n+1} - u^n||_{H^{-3/4}}
    converged: bool
    diverged: bool

    @property
    def iterations(self) -> int:
        return len(self.distances)

    @property
    def ratios(self) -> list[float]:
        d = self.distances
        return [d[i + 1] / d[i] if d[i] > 0 else 0.0 for i in range(len(d) - 1)]

    def to_dict(self) -> dict:
        return {"distances": self.distances, "ratios": self.ratios,
                "converged": self.converged, "diverged": self.diverged,
                "iterations": self.iterations}


def solve_picard(u0: SpectralState, config: SolverConfig) -> tuple[Trajectory, PicardDiagnostics]:
    """Iterate ``Phi`` from the free solution until ``d_n < 1e-10`` or the cap.

    Three consecutive increases of ``d_n`` are reported as divergence.
    """
    _check_mean_zero(u0)
    cfg = replace(config, scheme=Scheme.PICARD)
    u = free_solution(u0, cfg)
    dists: list[float] = []
    converged = diverged = False
    rises = 0
    for _ in range(cfg.picard_iters):
        nxt = picard_step(u, u0)
        d = nxt.sup_distance(u, CRITICAL_S)
        if not math.isfinite(d):
            diverged = True
            dists.append(d)
            break
        rises = rises + 1 if dists and d > dists[-1] else 0
        dists.append(d)
        u = nxt
        if d < PICARD_TOL:
            converged = True
            break
        if rises >= 3:
            diverged = True
            break
    diag = PicardDiagnostics(dists, converged, diverged)
    return Trajectory(u.states, cfg, {"blowup": None, "picard": diag.to_dict()}), diag


def fixed_point_residual(u: Trajectory, u0: SpectralState) -> float:
    return picard_step(u, u0).sup_distance(u, CRITICAL_S)


# ---------------------------------------------------------------------------
# experiments


def rescale_initial(u0: SpectralState, lam: float) -> SpectralState:
    """``u_lam(x) = lam^{-2} u0(x / lam)`` on the grid of period ``lam L``.

    Coefficient ``k`` keeps its index (its frequency becomes ``xi_k / lam``)
    and is multiplied by ``lam^{-2}``.
    """
    if not lam >= 1.0:
        raise ValueError(f"lambda must be >= 1, got {lam}")
    g = u0.grid
    new_grid = SpaceGrid(g.n_points, g.domain_length * lam)
    return SpectralState(new_grid, u0.coeffs / lam**2, u0.time)


@dataclass
class KdvLimitRow:
    gamma: float
    error: float  # sup_t ||u_gamma - u_kdv||_{L^2}


def kdv_limit_experiment(u0: SpectralState, gamma_list: Sequence[float],
                         config: SolverConfig) -> tuple[list[KdvLimitRow], bool]:
    """Distance to the ``gamma = 0`` run for each ``gamma``; also whether it is nonincreasing."""
    gammas = [float(g) for g in gamma_list]
    if any(g < 0 for g in gammas):
        raise ValueError("gamma values must be nonnegative")
    if any(b > a for a, b in zip(gammas, gammas[1:])):
        raise ValueError("gamma_list must be decreasing")

    def run(g: float) -> Trajectory:
        return _require_full(solve(u0, replace(config, params=replace(config.params, gamma=g))))

    # independent solves; map keeps the input order
    with ThreadPoolExecutor() as pool:
        runs = list(pool.map(run, [0.0] + gammas))
    ref = runs[0]
    rows = [KdvLimitRow(g, r.sup_distance(ref, 0.0)) for g, r in zip(gammas, runs[1:])]
    errs = [r.error for r in rows]
    return rows, all(b <= a for a, b in zip(errs, errs[1:]))


def _require_full(traj: Trajectory) -> Trajectory:
    if traj.truncated:
        raise BlowUpError(str(traj.diagnostics["blowup"]))
    return traj


def lipschitz_probe(u0: SpectralState, delta: float, config: SolverConfig,
                    w: SpectralState | None = None, seed: int = 0) -> float:
    """``sup_t ||u(u0 + delta w) - u(u0)||_{H^{-3/4}} / (delta ||w||_{H^{-3/4}})``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if w is None:
        w = builtin_data("random-band", u0.grid, seed=seed)
    nw = hs_norm(w, CRITICAL_S)
    if nw == 0:
        raise ValueError("perturbation direction is zero")
    w = w.scaled(1.0 / nw)
    a = _require_full(solve(u0, config))
    b = _require_full(solve(u0 + w.scaled(delta), config))
    return a.sup_distance(b, CRITICAL_S) / delta


def convergence_order(u0: SpectralState, config: SolverConfig, dt: float) -> float:
    """Observed order ``log2(|u_dt - u_{dt/2}| / |u_{dt/2} - u_{dt/4}|)`` at time ``T``."""
    finals = []
    for h in (dt, dt / 2, dt / 4):
        traj = _require_full(solve(u0, replace(config, dt=h)))
        finals.append(traj.final)
    e1 = hs_norm(finals[0] - finals[1], 0.0)
    e2 = hs_norm(finals[1] - finals[2], 0.0)
    return math.log2(e1 / e2)


# ---------------------------------------------------------------------------
# initial data

BUILTINS = ("gaussian", "sech2", "random-band")


def builtin_data(name: str, grid: SpaceGrid = SpaceGrid(), amplitude: float = 0.1,
                 width: float = 4.0, seed: int = 0) -> SpectralState:
    """Named mean-zero initial data (the sample mean is removed)."""
    x = grid.x
    xc = grid.domain_length / 2
    if name == "gaussian":
        u = amplitude * np.exp(-(((x - xc) / width) ** 2))
    elif name == "sech2":
        u = amplitude / np.cosh((x - xc) / width) ** 2
    elif name == "random-band":
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        k = np.arange(-grid.n_points // 2, grid.n_points // 2)
        band = (np.abs(k) >= 1) & (np.abs(k) <= max(2, grid.n_points // 16))
        c = np.zeros(grid.n_points, dtype=complex)
        pos = np.nonzero(band & (k > 0))[0]
        c[pos] = rng.standard_normal(pos.size) + 1j * rng.standard_normal(pos.size)
        c[grid.n_points - pos] = np.conj(c[pos])  # index of -k in shifted order
        u = np.real(np.fft.ifft(np.fft.ifftshift(c)) * grid.n_points)
        u = amplitude * u / np.max(np.abs(u))
    else:
        raise ValueError(f"unknown built-in data {name!r}; choose from {BUILTINS}")
    return forward_transform(u - np.mean(u), grid)


def load_csv(path: str, grid: SpaceGrid | None = None) -> SpectralState:
    """Initial data from a two-column CSV ``x,u``; the grid is inferred if not given."""
    data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#",
                      skiprows=_header_rows(path))
    if data.shape[1] != 2:
        raise ValueError("expected two columns: x, u")
    x, u = data[:, 0], data[:, 1]
    if grid is None:
        dx = x[1] - x[0]
        grid = SpaceGrid(x.size, dx * x.size)
    if x.size != grid.n_points or not np.allclose(x, grid.x, atol=1e-9 * grid.domain_length):
        raise ValueError("CSV samples do not sit on the grid points")
    c = raw_coefficients(u, grid)
    scale = max(float(np.max(np.abs(c))), 1e-300)
    if abs(c[grid.zero_index]) > 1e-12 * scale:
        raise MeanZeroError("initial data must have zero mean")
    return forward_transform(u, grid)


def _header_rows(path: str) -> int:
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.split(",")]
        return 0
    except ValueError:
        return 1


def save_csv(path: str, state: SpectralState) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u"])
        for xi, ui in zip(state.grid.x, inverse_transform(state)):
            w.writerow([repr(float(xi)), repr(float(ui))])
