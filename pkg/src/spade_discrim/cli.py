"""Command-line front end emitting plot-ready CSV/JSON.

Exit codes: 0 success, 1 usage or validation error, 2 numerical failure.

A ``--config`` file holds ``key = value`` lines whose keys are the long flag
names without dashes (``epsilon2``, ``x-grid``, ...); flags given on the
command line win over the file.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import chernoff
from .decision_rules import (
    FullLRT,
    SemiSeparation,
    crosstalk_p0,
    error_curve,
    error_probs_exact,
    gamma_coefficient,
    parse_rule,
    plan_experiment,
    rule_label,
    threshold,
)
from .errors import DegenerateError, NumericalFailure, RegimeError
from .montecarlo import (
    ENSEMBLE_HEADER,
    EnsembleRow,
    random_crosstalk,
    simulate_decisions,
    summarize,
)
from .optics import CrosstalkMatrix, identity_crosstalk, mode_probabilities, uniform_crosstalk

MODELS = ("identity", "uniform", "unitary_random", "file")

DEFAULTS = {
    "model": "uniform",
    "epsilon2": 0.01,
    "dmax": 2,
    "seed": 0,
    "x-grid": "0.003:0.5:60:log",
    "n-grid": "100:10000000:61:log",
    "x-list": "0.02,0.03,0.05,0.1",
    "test": "semi(0.02)",
    "xmin": 0.02,
    "pe-max": 0.05,
    "samples": 500,
    "trials": 10000,
    "blocks": 10,
    "method": "gaussian",
    "x": 0.05,
    "n": 1000,
    "out": "-",
    "crosstalk-file": None,
    "ensemble-out": None,
}


class UsageError(Exception):
    pass


def _fmt(v: float) -> str:
    return f"{v:.17g}"


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int
    scale: str = "lin"

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise UsageError(f"grid must be start:stop:count[:lin|log], got {text!r}")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise UsageError(f"bad number in grid {text!r}") from exc
        grid = cls(start, stop, count, parts[3] if len(parts) == 4 else "lin")
        grid.validate()
        return grid

    def validate(self):
        if self.count < 2:
            raise UsageError("grid count must be >= 2")
        if not self.start < self.stop:
            raise UsageError("grid needs start < stop")
        if self.scale not in ("lin", "log"):
            raise UsageError(f"grid scale must be lin or log, got {self.scale!r}")
        if self.scale == "log" and self.start <= 0:
            raise UsageError("log grid needs start > 0")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    def integer_values(self) -> np.ndarray:
        return np.unique(np.maximum(np.round(self.values()), 1).astype(np.int64))


@dataclass(frozen=True)
class RunConfig:
    model: str
    epsilon2: float
    d_modes: int
    seed: int
    x_grid: GridSpec
    n_grid: GridSpec
    out: str
    crosstalk_file: str | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise UsageError(f"model must be one of {MODELS}")
        if self.d_modes < 2:
            raise UsageError("--dmax must be >= 2")
        if self.epsilon2 < 0:
            raise UsageError("--epsilon2 must be >= 0")
        if self.model == "uniform" and (self.d_modes**2 - 1) * self.epsilon2 > 1:
            raise UsageError("uniform model needs (D^2-1)*epsilon2 <= 1")
        if self.model == "file" and not self.crosstalk_file:
            raise UsageError("--model file needs --crosstalk-file")

    def crosstalk(self, sample: int = 0) -> CrosstalkMatrix:
        if self.model == "identity":
            return identity_crosstalk(self.d_modes)
        if self.model == "uniform":
            return uniform_crosstalk(self.d_modes, self.epsilon2)
        if self.model == "unitary_random":
            return random_crosstalk(self.d_modes, self.epsilon2, self.seed + sample)
        try:
            return CrosstalkMatrix.from_json(Path(self.crosstalk_file).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read crosstalk file: {exc}") from exc


def read_config_file(path: str) -> dict:
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key = key.strip().lstrip("-").replace("_", "-")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _settings(args) -> dict:
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            merged[key] = value
    return merged


def _typed(settings: dict, key: str, kind):
    try:
        return kind(settings[key])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for {key}: {settings[key]!r}") from exc


def run_config(settings: dict) -> RunConfig:
    return RunConfig(
        model=settings["model"],
        epsilon2=_typed(settings, "epsilon2", float),
        d_modes=_typed(settings, "dmax", int),
        seed=_typed(settings, "seed", int),
        x_grid=GridSpec.parse(str(settings["x-grid"])),
        n_grid=GridSpec.parse(str(settings["n-grid"])),
        out=str(settings["out"]),
        crosstalk_file=settings["crosstalk-file"],
    )


def _emit(text: str, out: str):
    if out in ("-", ""):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# -- commands ----------------------------------------------------------------

SWEEP_HEADER = [
    "x", "xi_median", "xi_q25", "xi_q75", "xi_quantum",
    "xi_di_asymptotic", "xi_small_branch", "xi_large_branch",
]


def _branch(x: float, p0: float, branch: str) -> float:
    try:
        return chernoff.spade_chernoff_asymptotic(x, p0, branch).xi
    except (DegenerateError, RegimeError):
        return math.nan


def _finite_median(values) -> float:
    """Median over draws where the series applies; nan if it applies to none."""
    finite = [v for v in values if math.isfinite(v)]
    return summarize(finite).median if finite else math.nan


def cmd_chernoff_sweep(config: RunConfig, samples: int, ensemble_out: str | None = None) -> str:
    xs = config.x_grid.values()
    n_mat = samples if config.model == "unitary_random" else 1
    if n_mat < 1:
        raise UsageError("--samples must be >= 1")
    xi = np.empty((n_mat, len(xs)))
    p0s = np.empty(n_mat)
    ensemble = []
    for i in range(n_mat):
        C = config.crosstalk(i)
        dist0 = mode_probabilities(C, 0.0)
        p0s[i] = dist0.p10
        for j, x in enumerate(xs):
            xi[i, j] = chernoff.chernoff_exponent(dist0, mode_probabilities(C, x)).xi
            ensemble.append(EnsembleRow(i, C.seed if C.seed is not None else config.seed,
                                        C.realized_epsilon2, dist0.p10, float(x), xi[i, j]))
    rows = []
    for j, x in enumerate(xs):
        stats = summarize(xi[:, j])
        small = _finite_median([_branch(x, p, "x_much_less") for p in p0s])
        large = _finite_median([_branch(x, p, "x_much_greater") for p in p0s])
        rows.append([float(x), stats.median, stats.q25, stats.q75, float(x * x), float(x**4), small, large])
    if ensemble_out:
        lines = [ENSEMBLE_HEADER] + [r.csv_row() for r in ensemble]
        _emit("\n".join(lines) + "\n", ensemble_out)
    return _csv_text(SWEEP_HEADER, rows)


def _p0_gamma(C: CrosstalkMatrix) -> tuple[float, float]:
    return crosstalk_p0(C), gamma_coefficient(C)


def cmd_error_curves(config: RunConfig, test, x_list, method: str) -> str:
    if isinstance(test, FullLRT):
        raise UsageError("error curves need a thresholded test, not full_lrt")
    if method not in ("exact_binomial", "gaussian"):
        raise UsageError("--method must be exact_binomial or gaussian")
    C = config.crosstalk()
    p0, gamma = _p0_gamma(C)
    ns = config.n_grid.integer_values()
    label = rule_label(test)
    rows = []
    for x in x_list:
        p_x = mode_probabilities(C, x).p10
        alpha, beta, pe = error_curve(test, ns, p0, p_x, gamma, method)
        for k, n in enumerate(ns):
            rows.append([int(n), float(x), label, float(alpha[k]), float(beta[k]), float(pe[k])])
    return _csv_text(["N", "x", "test", "alpha", "beta", "pe"], rows)


def cmd_plan(x_min: float, epsilon2: float, pe_max: float, model: str, seed: int, d_modes: int = 2,
             crosstalk_file: str | None = None) -> str:
    if not 0 < pe_max < 0.5:
        raise UsageError("--pe-max must lie in (0, 1/2)")
    if not x_min > 0:
        raise UsageError("--xmin must be positive")
    config = RunConfig(model, epsilon2, d_modes, seed, GridSpec(0, 1, 2), GridSpec(1, 2, 2), "-", crosstalk_file)
    C = config.crosstalk()
    p0, gamma = _p0_gamma(C)
    if gamma <= 0:
        raise UsageError(f"gamma = {gamma:.6g} <= 0: crosstalk too strong for the planner")
    p_x = mode_probabilities(C, x_min).p10
    n = plan_experiment(x_min, p0, gamma, pe_max, p_x=p_x)
    spec = SemiSeparation(x_min)
    report = error_probs_exact(spec, n, p0, p_x, gamma)
    out = {
        "n_required": n,
        "threshold": threshold(spec, n, p0, gamma),
        "p0": p0,
        "gamma": gamma,
        "pe_at_n": report.pe,
        "method": "gaussian+exact-verify",
    }
    return json.dumps(out) + "\n"


def cmd_simulate(config: RunConfig, test, x: float, n: int, trials: int, blocks: int = 10) -> str:
    if n < 1:
        raise UsageError("--n must be >= 1")
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    blocks = max(1, min(blocks, trials))
    C = config.crosstalk()
    false_alarm, miss = simulate_decisions(test, C, x, n, trials, config.seed)
    rows = []
    for b, idx in enumerate(np.array_split(np.arange(trials), blocks)):
        a, m = float(false_alarm[idx].mean()), float(miss[idx].mean())
        rows.append([b, a, m, 0.5 * (a + m)])
    a, m = float(false_alarm.mean()), float(miss.mean())
    rows.append(["pooled", a, m, 0.5 * (a + m)])
    if isinstance(test, FullLRT):
        rows.append(["analytic", math.nan, math.nan, math.nan])
    else:
        p0, gamma = _p0_gamma(C)
        r = error_probs_exact(test, n, p0, mode_probabilities(C, x).p10, gamma)
        rows.append(["analytic", r.alpha, r.beta, r.pe])
    return _csv_text(["trial_block", "alpha_hat", "beta_hat", "pe_hat"], rows)


# -- argument parsing ----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--model", choices=MODELS, help="crosstalk model (default uniform)")
    p.add_argument("--epsilon2", type=float, help="crosstalk strength (default 0.01)")
    p.add_argument("--dmax", type=int, help="modes per axis D (default 2)")
    p.add_argument("--crosstalk-file", help="crosstalk JSON for --model file")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--out", help="output path, '-' for stdout (default)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spade-discrim", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("chernoff-sweep", help="Chernoff exponents versus x (CSV)")
    _common(p)
    p.add_argument("--x-grid", help="start:stop:count:lin|log (default 0.003:0.5:60:log)")
    p.add_argument("--samples", type=int, help="random crosstalks for unitary_random (default 500)")
    p.add_argument("--ensemble-out", help="also write per-draw rows: " + ENSEMBLE_HEADER)

    p = sub.add_parser("error-curves", help="alpha, beta, Pe versus N (CSV)")
    _common(p)
    p.add_argument("--n-grid", help="start:stop:count:lin|log (default 100:1e7:61:log)")
    p.add_argument("--test", help="original | naive | zeta(c,a) | semi(x_min) | binary_lrt(x)")
    p.add_argument("--x-list", help="comma-separated true separations (default 0.02,0.03,0.05,0.1)")
    p.add_argument("--method", choices=("exact_binomial", "gaussian"), help="default gaussian")

    p = sub.add_parser("plan", help="photons needed for a maximal Pe (JSON)")
    _common(p)
    p.add_argument("--xmin", type=float, help="minimal separation to detect (default 0.02)")
    p.add_argument("--pe-max", type=float, help="tolerated error probability (default 0.05)")

    p = sub.add_parser("simulate", help="Monte Carlo error rates with analytic footer (CSV)")
    _common(p)
    p.add_argument("--test", help="rule as for error-curves, or full_lrt(x)")
    p.add_argument("--x", type=float, help="true half-separation (default 0.05)")
    p.add_argument("--n", type=int, help="photons per record (default 1000)")
    p.add_argument("--trials", type=int, help="records per hypothesis (default 10000)")
    p.add_argument("--blocks", type=int, help="trial blocks reported separately (default 10)")
    return parser


def _dispatch(args) -> str:
    s = _settings(args)
    if args.command == "plan":
        return cmd_plan(_typed(s, "xmin", float), _typed(s, "epsilon2", float), _typed(s, "pe-max", float),
                        s["model"], _typed(s, "seed", int), _typed(s, "dmax", int), s["crosstalk-file"])
    config = run_config(s)
    if args.command == "chernoff-sweep":
        return cmd_chernoff_sweep(config, _typed(s, "samples", int), s["ensemble-out"])
    test = parse_rule(str(s["test"]))
    if args.command == "error-curves":
        try:
            x_list = [float(v) for v in str(s["x-list"]).split(",") if v.strip()]
        except ValueError as exc:
            raise UsageError(f"bad --x-list {s['x-list']!r}") from exc
        return cmd_error_curves(config, test, x_list, str(s["method"]))
    return cmd_simulate(config, test, _typed(s, "x", float), _typed(s, "n", int),
                        _typed(s, "trials", int), _typed(s, "blocks", int))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = _dispatch(args)
        _emit(text, str(_settings(args)["out"]))
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
