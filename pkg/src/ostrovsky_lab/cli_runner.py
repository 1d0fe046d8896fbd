"""Command-line runner: one subcommand per experiment, CSV/JSON artifacts plus a manifest.

Parameters come from an optional flat ``key=value`` file (``--config``) and
the command line, which wins.  Every run writes its outputs into ``--out``
together with ``manifest.json`` listing each file's sha256, the resolved
parameters, their hash, the seed and library versions.

Exit codes: 0 ok, 2 configuration error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import csv
import difflib
import hashlib
import io
import json
import math
import os
import platform
import sys
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
import scipy

from . import __version__
from .bilinear_lab import (
    DEFAULT_J_RANGES,
    BilinearTarget,
    ConvLemma,
    probe_convolution_lemma,
    probe_lemma31,
)
from .bourgain_norms import (
    NormSpec,
    SpacetimeField,
    decompose,
    default_tau_extent,
    norm,
    tau_lattice,
)
from .counterexamples import example1_experiment, example2_experiment
from .ostrovsky_solver import (
    BUILTINS,
    PicardDiagnostics,
    SolverConfig,
    builtin_data,
    kdv_limit_experiment,
    lipschitz_probe,
    load_csv,
    rescale_initial,
    solve,
    solve_picard,
)
from .resonance_identities import gamma_sequence, identity_suite
from .spectral_core import PhaseParams, SpaceGrid, hs_norm, inverse_transform, phase_masked

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# argument helpers


def _list_of(conv, name):
    def parse(text):
        if isinstance(text, (list, tuple)):
            return list(text)
        items = [t.strip() for t in str(text).split(",") if t.strip()]
        if not items:
            raise argparse.ArgumentTypeError("empty list")
        try:
            return [conv(t) for t in items]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    parse.__name__ = name
    return parse


int_list = _list_of(int, "int_list")
float_list = _list_of(float, "float_list")


def _common(p: argparse.ArgumentParser, command: str):
    p.add_argument("--seed", type=int, default=0, help="64-bit seed for all randomness")
    p.add_argument("--out", default=os.path.join("runs", command), help="output directory")
    p.add_argument("--config", default=None, help="key=value parameter file")


def _grid_args(p: argparse.ArgumentParser, T: float):
    p.add_argument("--data", default="gaussian",
                   help=f"built-in ({', '.join(BUILTINS)}) or path to an x,u CSV")
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--width", type=float, default=4.0)
    p.add_argument("--n-points", type=int, default=256)
    p.add_argument("--domain-length", type=float, default=2 * math.pi * 32)
    p.add_argument("--T", type=float, default=T)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--dealias", choices=["two_thirds", "none"], default="two_thirds")
    p.add_argument("--picard-iters", type=int, default=30)


# ---------------------------------------------------------------------------
# output


class Artifacts:
    """Collects output files and writes them with a manifest."""

    def __init__(self, out: str):
        self.out = out
        self.files: dict[str, bytes] = {}

    def csv(self, name: str, header: Sequence[str], rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        self.files[name] = buf.getvalue().encode()

    def text(self, name: str, body: str) -> None:
        self.files[name] = body.encode()

    def json(self, name: str, obj) -> None:
        self.files[name] = (json.dumps(obj, indent=2, sort_keys=True, default=_jsonify) + "\n").encode()

    def write(self, command: str, params: dict, seed: int) -> dict:
        os.makedirs(self.out, exist_ok=True)
        for name, body in self.files.items():
            with open(os.path.join(self.out, name), "wb") as fh:
                fh.write(body)
        canon = json.dumps(params, sort_keys=True, default=_jsonify).encode()
        manifest = {
            "command": command,
            "parameters": params,
            "inputs_sha256": hashlib.sha256(canon).hexdigest(),
            "seed": seed,
            "versions": {"ostrovsky_lab": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version()},
            "files": {n: hashlib.sha256(b).hexdigest() for n, b in sorted(self.files.items())},
        }
        with open(os.path.join(self.out, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=_jsonify)
            fh.write("\n")
        return manifest


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _jsonify(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


# ---------------------------------------------------------------------------
# subcommands


@dataclass
class Outcome:
    status: int
    summary: dict


def _require(cond: bool, field: str, message: str):
    if not cond:
        raise ConfigError(field, message)


def run_identities(a, art: Artifacts) -> Outcome:
    _require(a.samples >= 1, "samples", "must be >= 1")
    _require(a.log2_min < a.log2_max, "log2_min", "must be below log2_max")
    rep = identity_suite(a.samples, a.seed, a.log2_min, a.log2_max)
    art.csv("identities.csv", ["identity", "max_relative_residual"], sorted(rep.max_residual.items()))
    summary = {"samples": rep.samples, "worst": rep.worst,
               "sandwich_failures": rep.sandwich_failures, "passed": rep.passed()}
    art.json("summary.json", summary)
    return Outcome(EXIT_OK, summary)


def run_gamma_seq(a, art: Artifacts) -> Outcome:
    _require(a.j_min >= 16, "j_min", "must be >= 16")
    _require(a.j_max >= a.j_min, "j_max", "must be >= j_min")
    rows, ok = [], True
    j = a.j_min
    while j <= a.j_max:
        g = gamma_sequence(j)
        ok &= g.within_bound() or not g.terminal_in_range
        rows.append([j, g.N, g.S, g.values[-1], g.terminal_in_range, g.within_bound(),
                     g.lower_bound_claim()])
        j *= 2
    art.csv("gamma_sequence.csv", ["j", "N", "sum", "terminal", "terminal_in_range",
                                   "within_bound", "lower_bound_claim"], rows)
    summary = {"rows": len(rows), "all_within_bound": bool(ok)}
    art.json("summary.json", summary)
    return Outcome(EXIT_OK, summary)


def _sample_field(a) -> SpacetimeField:
    grid = SpaceGrid(a.n_xi)
    xi = grid.frequencies
    tau = tau_lattice(a.n_tau, default_tau_extent(xi))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(a.seed)))
    T, X = np.meshgrid(tau, xi, indexing="ij")
    mod = T - phase_masked(X)
    envelope = np.exp(-((mod / a.mod_width) ** 2) - (X / a.xi_width) ** 2)
    vals = (rng.standard_normal(T.shape) + 1j * rng.standard_normal(T.shape)) * envelope
    vals[:, grid.zero_index] = 0.0
    return SpacetimeField(tau, xi, vals)


def run_norms(a, art: Artifacts) -> Outcome:
    _require(a.n_xi >= 8 and a.n_xi & (a.n_xi - 1) == 0, "n_xi", "must be a power of two >= 8")
    _require(a.n_tau >= 8, "n_tau", "must be >= 8")
    specs = []
    for text in a.norms.split(";"):
        try:
            specs.append(NormSpec.parse(text))
        except ValueError as exc:
            raise ConfigError("norms", str(exc)) from None
    F = _sample_field(a)
    rows = [[str(s), norm(F, s)] for s in specs]
    art.csv("norms.csv", ["norm", "value"], rows)
    art.text("blocks.csv", decompose(F).to_csv())
    summary = {str(s): v for s, v in rows}
    art.json("summary.json", summary)
    return Outcome(EXIT_OK, summary)


def _report_out(rep, art: Artifacts) -> dict:
    art.text("report.csv", rep.to_csv())
    art.text("report.json", rep.to_json() + "\n")
    out = {"slope": rep.slope, "growth_factor": rep.growth_factor()}
    if "bounded" in rep.extra:
        out["bounded"] = rep.extra["bounded"]
    return out


def run_probe_conv(a, art: Artifacts) -> Outcome:
    try:
        lemma = ConvLemma(a.lemma)
    except ValueError:
        raise ConfigError("lemma", f"unknown lemma {a.lemma!r}") from None
    _require(a.samples >= 1, "samples", "must be >= 1")
    rep = probe_convolution_lemma(lemma, a.scales, a.samples, a.seed)
    return Outcome(EXIT_OK, _report_out(rep, art))


def run_probe_bilinear(a, art: Artifacts) -> Outcome:
    _require(a.case in DEFAULT_J_RANGES, "case", f"probe cases are {sorted(DEFAULT_J_RANGES)}")
    _require(a.samples >= 1, "samples", "must be >= 1")
    rep = probe_lemma31(a.case, a.j_range, a.samples, a.seed, BilinearTarget(a.target))
    return Outcome(EXIT_OK, _report_out(rep, art))


def run_counterexample(a, art: Artifacts) -> Outcome:
    _require(a.example in (1, 2), "example", "must be 1 or 2")
    _require(len(a.n_list) >= 3, "n_list", "needs at least three values")
    _require(min(a.n_list) >= 64, "n_list", "every N must be >= 64")
    if a.example == 1:
        _require(0.5 < a.b <= 1.0, "b", "example 1 needs b in (1/2, 1]")
        rep = example1_experiment(a.n_list, a.b)
    else:
        _require(0.0 <= a.b < 0.5, "b", "example 2 needs b in [0, 1/2)")
        rep = example2_experiment(a.n_list, a.b)
    series = rep.series
    keys = sorted(series)
    art.csv("series.csv", ["N", "ratio"] + keys,
            [[N, r] + [series[k][i] for k in keys]
             for i, (N, r) in enumerate(zip(rep.scales, rep.max_ratio))])
    summary = _report_out(rep, art)
    summary.update({"series_slopes": rep.series_slopes,
                    "target_ratio_slope": rep.extra["target_ratio_slope"],
                    "component_ratio_slope": rep.extra["component_ratio_slope"]})
    art.json("summary.json", summary)
    return Outcome(EXIT_OK, summary)


def _initial_data(a):
    _require(a.n_points >= 8 and a.n_points & (a.n_points - 1) == 0,
             "n_points", "must be a power of two >= 8")
    _require(a.domain_length > 0, "domain_length", "must be positive")
    grid = SpaceGrid(a.n_points, a.domain_length)
    if a.data in BUILTINS:
        return builtin_data(a.data, grid, a.amplitude, a.width, a.seed)
    _require(os.path.isfile(a.data), "data", f"not a built-in name or a readable file: {a.data!r}")
    return load_csv(a.data, grid)


def _solver_config(a, scheme: str) -> SolverConfig:
    _require(a.dt > 0, "dt", "must be positive")
    _require(0 < a.T <= 1, "T", "must lie in (0, 1]")
    _require(a.dt <= a.T, "dt", "must not exceed T")
    n = round(a.T / a.dt)
    _require(abs(n * a.dt - a.T) <= 1e-9 * a.T, "dt", "T must be an integer multiple of dt")
    _require(a.gamma >= 0, "gamma", "must be nonnegative")
    _require(a.picard_iters >= 1, "picard_iters", "must be positive")
    grid = SpaceGrid(a.n_points, a.domain_length)
    return SolverConfig(grid, a.dt, a.T, PhaseParams(gamma=a.gamma), scheme, a.dealias,
                        a.picard_iters)


def _picard_rows(d: PicardDiagnostics):
    ratios = d.ratios
    return [[n, dn, ratios[n - 1] if n >= 1 else ""] for n, dn in enumerate(d.distances)]


def run_solve(a, art: Artifacts) -> Outcome:
    _require(a.every >= 1, "every", "must be >= 1")
    u0 = _initial_data(a)
    cfg = _solver_config(a, a.scheme)
    status = EXIT_OK
    summary: dict = {}
    if cfg.scheme.value == "picard":
        traj, diag = solve_picard(u0, cfg)
        art.csv("picard.csv", ["n", "distance", "ratio"], _picard_rows(diag))
        summary["picard"] = diag.to_dict()
        if diag.diverged:
            status = EXIT_DIVERGED
    else:
        traj = solve(u0, cfg)
        if traj.truncated:
            status = EXIT_DIVERGED
            summary["blowup"] = traj.diagnostics["blowup"]
    l2 = traj.norms(0.0)
    hm = traj.norms(-0.75)
    art.csv("norms.csv", ["t", "l2", "h_minus_3_4"], zip(traj.times, l2, hm))
    x = cfg.grid.x
    rows = []
    for st in traj.states[:: a.every]:
        rows.extend([st.time, xi, ui] for xi, ui in zip(x, inverse_transform(st)))
    art.csv("trajectory.csv", ["t", "x", "u"], rows)
    art.json("header.json", traj.header(a.seed))
    summary["l2_drift"] = float(np.max(np.abs(l2 / l2[0] - 1))) if l2[0] > 0 else 0.0
    summary["final_time"] = float(traj.times[-1])
    art.json("summary.json", summary)
    return Outcome(status, summary)


def run_picard(a, art: Artifacts) -> Outcome:
    u0 = _initial_data(a)
    cfg = _solver_config(a, "picard")
    traj, diag = solve_picard(u0, cfg)
    ref = solve(u0, replace(cfg, scheme="if_rk4"))
    art.csv("picard.csv", ["n", "distance", "ratio"], _picard_rows(diag))
    summary = diag.to_dict()
    if not ref.truncated:
        summary["cross_scheme_distance"] = traj.sup_distance(ref)
    art.json("summary.json", summary)
    return Outcome(EXIT_DIVERGED if diag.diverged else EXIT_OK, summary)


def run_kdv_limit(a, art: Artifacts) -> Outcome:
    _require(all(g >= 0 for g in a.gammas), "gammas", "must be nonnegative")
    _require(all(y < x for x, y in zip(a.gammas, a.gammas[1:])), "gammas", "must be strictly decreasing")
    u0 = _initial_data(a)
    cfg = _solver_config(a, "if_rk4")
    rows, monotone = kdv_limit_experiment(u0, a.gammas, cfg)
    art.csv("kdv_limit.csv", ["gamma", "error"], [[r.gamma, r.error] for r in rows])
    summary = {"nonincreasing": monotone, "errors": {str(r.gamma): r.error for r in rows}}
    art.json("summary.json", summary)
    return Outcome(EXIT_OK, summary)


def run_scaling_check(a, art: Artifacts) -> Outcome:
    _require(all(lam >= 1 for lam in a.lambdas), "lambdas", "every lambda must be >= 1")
    grid = SpaceGrid(a.n_points, a.domain_length)
    rows, ok = [], True
    for name in BUILTINS:
        u0 = builtin_data(name, grid, a.amplitude, a.width, a.seed)
        base = hs_norm(u0, -0.75)
        for lam in a.lambdas:
            val = hs_norm(rescale_initial(u0, lam), -0.75)
            bound = lam**-0.75 * base
            ok &= val <= bound * (1 + 1e-12)
            rows.append([name, lam, val, bound, val <= bound * (1 + 1e-12)])
    art.csv("scaling.csv", ["data", "lambda", "norm", "bound", "within_bound"], rows)
    summary = {"all_within_bound": bool(ok)}
    art.json("summary.json", summary)
    return Outcome(EXIT_OK, summary)


def run_lipschitz(a, art: Artifacts) -> Outcome:
    _require(all(d > 0 for d in a.deltas), "deltas", "must be positive")
    u0 = _initial_data(a)
    cfg = _solver_config(a, "if_rk4")
    rows = [[d, lipschitz_probe(u0, d, cfg, seed=a.seed + 1)] for d in a.deltas]
    art.csv("lipschitz.csv", ["delta", "ratio"], rows)
    r = [v for _, v in rows]
    summary = {"ratios": r, "spread": max(r) / min(r) - 1 if min(r) > 0 else math.inf}
    art.json("summary.json", summary)
    return Outcome(EXIT_OK, summary)


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class Command:
    name: str
    description: str
    configure: Callable[[argparse.ArgumentParser], None]
    run: Callable[..., Outcome]


def _cfg_identities(p):
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--log2-min", type=float, default=-10.0)
    p.add_argument("--log2-max", type=float, default=10.0)


def _cfg_gamma(p):
    p.add_argument("--j-min", type=int, default=16)
    p.add_argument("--j-max", type=int, default=2**20)


def _cfg_norms(p):
    p.add_argument("--n-xi", type=int, default=64)
    p.add_argument("--n-tau", type=int, default=64)
    p.add_argument("--xi-width", type=float, default=1.0)
    p.add_argument("--mod-width", type=float, default=4.0)
    p.add_argument("--norms", default="Xsb(s=-0.75,b=0.5);Xsb1(s=-0.75,b=0.5);Xmod;Y;Hs(s=-0.75)",
                   help="semicolon-separated norm specs")


def _cfg_conv(p):
    p.add_argument("--lemma", default="L21a", help=", ".join(m.value for m in ConvLemma))
    p.add_argument("--scales", type=int_list, default=[4, 5, 6, 7, 8])
    p.add_argument("--samples", type=int, default=50)


def _cfg_bilinear(p):
    p.add_argument("--case", default="ii", help=", ".join(sorted(DEFAULT_J_RANGES)))
    p.add_argument("--j-range", type=int_list, default=None, help="defaults depend on the case")
    p.add_argument("--samples", type=int, default=30)
    p.add_argument("--target", choices=[t.value for t in BilinearTarget],
                   default=BilinearTarget.XMOD.value)


def _cfg_counter(p):
    p.add_argument("--example", type=int, default=1)
    p.add_argument("--b", type=float, default=0.6)
    p.add_argument("--n-list", type=float_list, default=[64.0, 128.0, 256.0, 512.0, 1024.0])


def _cfg_solve(p):
    _grid_args(p, 1.0)
    p.add_argument("--scheme", choices=["if_rk4", "picard"], default="if_rk4")
    p.add_argument("--every", type=int, default=100, help="write every n-th state")


def _cfg_picard(p):
    _grid_args(p, 0.1)


def _cfg_kdv(p):
    _grid_args(p, 1.0)
    p.set_defaults(dt=1e-2)
    p.add_argument("--gammas", type=float_list, default=[0.1, 0.01, 0.001])


def _cfg_scaling(p):
    p.add_argument("--n-points", type=int, default=256)
    p.add_argument("--domain-length", type=float, default=2 * math.pi * 32)
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--width", type=float, default=4.0)
    p.add_argument("--lambdas", type=float_list, default=[1, 2, 4, 8, 16, 32, 64])


def _cfg_lipschitz(p):
    _grid_args(p, 1.0)
    p.set_defaults(dt=1e-2)
    p.add_argument("--deltas", type=float_list, default=[1e-2, 1e-3, 1e-4])


COMMANDS = {c.name: c for c in (
    Command("identities", "randomized residuals of the resonance identities", _cfg_identities, run_identities),
    Command("gamma-seq", "dyadic-sum recursion and its sum bound", _cfg_gamma, run_gamma_seq),
    Command("norms", "all norm variants and block masses of a sample field", _cfg_norms, run_norms),
    Command("probe-conv", "empirical ratios for a convolution estimate", _cfg_conv, run_probe_conv),
    Command("probe-bilinear", "empirical ratios for a dyadic bilinear case", _cfg_bilinear, run_probe_bilinear),
    Command("counterexample", "slab counterexamples to the standard bilinear estimate", _cfg_counter,
            run_counterexample),
    Command("solve", "integrate the equation from initial data", _cfg_solve, run_solve),
    Command("picard", "Picard iteration with contraction diagnostics", _cfg_picard, run_picard),
    Command("kdv-limit", "distance to the KdV run as the rotation vanishes", _cfg_kdv, run_kdv_limit),
    Command("scaling-check", "critical-norm decay under the scaling transform", _cfg_scaling,
            run_scaling_check),
    Command("lipschitz", "difference quotients of the data-to-solution map", _cfg_lipschitz, run_lipschitz),
)}


def list_experiments() -> str:
    width = max(len(n) for n in COMMANDS)
    lines = ["experiments:"]
    lines += [f"  {n.ljust(width)}  {c.description}" for n, c in COMMANDS.items()]
    return "\n".join(lines)


def build_parser(command: str) -> argparse.ArgumentParser:
    c = COMMANDS[command]
    p = argparse.ArgumentParser(prog=f"ostrovsky-lab {command}", description=c.description,
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    c.configure(p)
    _common(p, command)
    return p


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}", "expected key=value")
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _apply_config(p: argparse.ArgumentParser, values: dict[str, str]):
    actions = {a.dest: a for a in p._actions if a.dest != "help"}
    defaults = {}
    for key, val in values.items():
        if key not in actions or key == "config":
            raise ConfigError(key, "unknown parameter")
        act = actions[key]
        try:
            conv = act.type(val) if act.type else val
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(key, str(exc)) from None
        if act.choices is not None and conv not in act.choices:
            raise ConfigError(key, f"must be one of {list(act.choices)}")
        defaults[key] = conv
    p.set_defaults(**defaults)


def parse(argv: Sequence[str]) -> tuple[str, argparse.Namespace]:
    command, rest = argv[0], list(argv[1:])
    p = build_parser(command)
    args = p.parse_args(rest)
    if args.config:
        if not os.path.isfile(args.config):
            raise ConfigError("config", f"no such file {args.config!r}")
        _apply_config(p, read_config_file(args.config))
        args = p.parse_args(rest)
    return command, args


def run(command: str, args: argparse.Namespace) -> tuple[int, dict]:
    art = Artifacts(args.out)
    outcome = COMMANDS[command].run(args, art)
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "config")}
    manifest = art.write(command, params, args.seed)
    return outcome.status, {"summary": outcome.summary, "manifest": manifest}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        print(list_experiments())
        return EXIT_OK
    if argv[0] in ("-h", "--help"):
        print("usage: ostrovsky-lab <experiment> [options]\n")
        print(list_experiments())
        return EXIT_OK
    if argv[0] not in COMMANDS:
        near = difflib.get_close_matches(argv[0], list(COMMANDS), n=1)
        hint = f"; did you mean {near[0]!r}?" if near else ""
        print(f"error: unknown experiment {argv[0]!r}{hint}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        command, args = parse(argv)
        status, result = run(command, args)
    except SystemExit as exc:  # argparse errors and --help
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: invalid parameters for {argv[0]}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(result["summary"], indent=2, sort_keys=True, default=_jsonify))
    if status == EXIT_DIVERGED:
        print("numerical divergence detected", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
