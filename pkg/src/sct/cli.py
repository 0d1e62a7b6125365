"""Command-line front end: ``sct dist | combine | simulate | figures | verify``.

Exit codes: 0 success, 1 usage or validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .combine import TRUNCATION, SctConfig, sct_test
from .verify import CHECKS, run_checks
from .simulate import METRICS, AlternativeSpec, CorrelationModel, PowerReport, SimulationConfig, grid_run
from .stable import StableNumericsError, StableParams, cdf, pdf, quantile

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

PRESETS = {"weak-dep": (1.5, 1.0), "strong-dep": (0.9, 1.0)}

CSV_COLUMNS = ("model", "rho", "method", "alpha", "beta", "metric", "value", "mc_se", "reps", "seed")


class UsageError(Exception):
    """Bad arguments or input files; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# run configuration


_CONFIG_KEYS = {
    "n", "reps", "level", "seed", "threads", "models", "alphas", "betas",
    "include_cct", "include_stouffer", "include_fisher", "include_bonferroni",
    "alternative", "truncation", "output_dir",
}
_MODEL_KEYS = {"type", "rho"}
_ALT_KEYS = {"gamma", "r", "sign_rule"}
_TRUNC_KEYS = {"lo", "hi"}


class ConfigError(UsageError):
    pass


@dataclass
class RunConfig:
    """Parsed simulation config file plus the output directory."""

    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    output_dir: Path = Path(".")


def _reject_unknown(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(map(str, unknown))}")


def parse_run_config(text: str) -> RunConfig:
    """Build a :class:`RunConfig` from YAML text; omitted keys take the SimulationConfig defaults."""
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    _reject_unknown(raw, _CONFIG_KEYS, "config")
    try:
        return RunConfig(SimulationConfig(**_simulation_kwargs(raw)), Path(raw.get("output_dir", ".")))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def _simulation_kwargs(raw):
    kwargs = {k: raw[k] for k in ("n", "reps", "level", "seed", "threads") if k in raw}
    for k in ("include_cct", "include_stouffer", "include_fisher", "include_bonferroni"):
        if k in raw:
            kwargs[k] = bool(raw[k])
    for k in ("alphas", "betas"):
        if k in raw:
            kwargs[k] = tuple(raw[k])
    if "models" in raw:
        models = []
        for i, m in enumerate(raw["models"]):
            _reject_unknown(m, _MODEL_KEYS, f"models[{i}]")
            if "type" not in m:
                raise ConfigError(f"models[{i}] needs a type")
            models.append(CorrelationModel(m["type"], m.get("rho", 0.0)))
        kwargs["models"] = tuple(models)
    if "alternative" in raw:
        alt = raw["alternative"]
        if alt is None:
            kwargs["alternative"] = None
        else:
            _reject_unknown(alt, _ALT_KEYS, "alternative")
            kwargs["alternative"] = AlternativeSpec(**alt)
    if "truncation" in raw:
        _reject_unknown(raw["truncation"], _TRUNC_KEYS, "truncation")
        t = raw["truncation"]
        kwargs["truncation"] = (float(t.get("lo", TRUNCATION[0])), float(t.get("hi", TRUNCATION[1])))
    return kwargs


def load_run_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    return parse_run_config(text)


# ---------------------------------------------------------------------------
# CSV


def _fmt_num(x: float) -> str:
    return f"{x:g}"


def report_csv(report: PowerReport) -> str:
    """Result rows as CSV text: fixed columns, LF endings, 6 decimals for proportions."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow(
            (r.model, _fmt_num(r.rho), r.method, r.alpha, r.beta, r.metric, f"{r.value:.6f}", f"{r.mc_se:.6f}", r.reps, r.seed)
        )
    return buf.getvalue()


def read_results_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise UsageError(f"{path}: unexpected columns {reader.fieldnames}")
        return list(reader)


# ---------------------------------------------------------------------------
# figures

_PANELS = (("size", "Size"), ("raw_power", "Raw power"), ("adj_power", "Size-adjusted power"))


def render_figures(rows: list[dict], out_dir) -> list[Path]:
    """One SVG per (model, rho): size, raw power and adjusted power against alpha.

    SCT results are drawn as one line per beta; CCT and Stouffer appear as
    single marked points at alpha = 1 and alpha = 2.  Size panels carry a
    reference line at 0.05.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = {}
    for r in rows:
        cells.setdefault((r["model"], r["rho"]), []).append(r)
    written = []
    with matplotlib.rc_context({"svg.hashsalt": "sct", "svg.fonttype": "none"}):
        for (model, rho), cell in sorted(cells.items()):
            fig, axes = plt.subplots(1, 3, figsize=(13, 4), sharex=True)
            for ax, (metric, title) in zip(axes, _PANELS):
                sub = [r for r in cell if r["metric"] == metric]
                betas = sorted({float(r["beta"]) for r in sub if r["method"] == "sct"})
                cmap = plt.get_cmap("viridis", max(len(betas), 1))
                for i, b in enumerate(betas):
                    pts = sorted((float(r["alpha"]), float(r["value"])) for r in sub if r["method"] == "sct" and float(r["beta"]) == b)
                    ax.plot(*zip(*pts), marker=".", color=cmap(i), label=f"beta={b:g}")
                for name, x, color in (("cct", 1.0, "red"), ("stouffer", 2.0, "black")):
                    for r in sub:
                        if r["method"] == name:
                            ax.plot([x], [float(r["value"])], "o", color=color, label=name.upper() if name == "cct" else "Stouffer")
                if metric == "size":
                    ax.axhline(0.05, color="grey", linestyle="--", linewidth=0.8)
                ax.set_title(title)
                ax.set_xlabel("alpha")
            axes[0].legend(fontsize=7, loc="best")
            fig.suptitle(f"{model}, rho={rho}")
            fig.tight_layout()
            path = out_dir / f"figure_{model}_rho{rho}.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            written.append(path)
    return written


# ---------------------------------------------------------------------------
# p-value input


def read_pvalues(path, weights_path=None):
    """p-values, one per line, with an optional second column of weights.

    Blank lines and ``#`` comments are skipped.  Weights, from the second
    column or from ``weights_path``, are rescaled to sum to one.
    """
    p, w = _read_columns(path, 2)
    if weights_path is not None:
        w, _ = _read_columns(weights_path, 1)
        if len(w) != len(p):
            raise UsageError(f"{weights_path}: {len(w)} weights for {len(p)} p-values")
    elif w and len(w) != len(p):
        raise UsageError(f"{path}: weights column must be given on every line or none")
    p = np.array(p)
    if np.any((p < 0.0) | (p > 1.0)):
        raise UsageError(f"{path}: p-values must lie in [0, 1]")
    if not w:
        return p, None
    w = np.array(w)
    if np.any(~np.isfinite(w) | (w <= 0.0)):
        raise UsageError("weights must be positive")
    return p, w / math.fsum(w)


def _read_columns(path, max_cols):
    first, second = [], []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) > max_cols:
            raise UsageError(f"{path}:{lineno}: expected at most {max_cols} column(s), got {len(parts)}")
        try:
            values = [float(v) for v in parts]
        except ValueError:
            raise UsageError(f"{path}:{lineno}: not a number: {line!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise UsageError(f"{path}:{lineno}: values must be finite")
        first.append(values[0])
        if len(values) > 1:
            second.append(values[1])
    if not first:
        raise UsageError(f"{path}: no values")
    return first, second


# ---------------------------------------------------------------------------
# commands


def cmd_dist(args) -> int:
    try:
        params = StableParams(args.alpha, args.beta, args.tau, args.delta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.what == "quantile":
        if args.p is None or not 0.0 < args.p < 1.0:
            raise UsageError("quantile needs --p in (0, 1)")
        value = quantile(params, args.p)
    else:
        if args.x is None:
            raise UsageError(f"{args.what} needs --x")
        value = (cdf if args.what == "cdf" else pdf)(params, args.x)
    print(f"{float(value):.12g}")
    return EXIT_OK


def _stable_args(args):
    if args.preset is not None:
        return PRESETS[args.preset]
    if args.alpha is None or args.beta is None:
        raise UsageError("give --alpha and --beta, or --preset")
    return args.alpha, args.beta


def cmd_combine(args) -> int:
    alpha, beta = _stable_args(args)
    try:
        config = SctConfig(alpha, beta, args.level)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    p, w = read_pvalues(args.input, args.weights)
    out = sct_test(p, w, config)
    print(f"statistic\t{out.statistic:.12g}")
    print(f"cutoff\t{out.cutoff:.12g}")
    print(f"combined_p\t{out.combined_p:.12g}")
    print(f"decision\t{'reject' if out.reject else 'accept'}")
    return EXIT_OK


def _simulation_from_args(args) -> RunConfig:
    run = load_run_config(args.config) if args.config else RunConfig()
    sim = run.simulation
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.preset is not None:
        a, b = PRESETS[args.preset]
        overrides.update(alphas=(a,), betas=(b,))
    if overrides:
        try:
            sim = SimulationConfig(**{**sim.__dict__, **overrides})
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    return RunConfig(sim, run.output_dir)


def _run_grid(run: RunConfig, args) -> PowerReport:
    metrics = tuple(args.metric) if args.metric else METRICS
    report = grid_run(run.simulation, metrics, threads=args.threads)
    for model, method, msg in report.failures:
        print(f"warning: {model.kind} rho={model.rho:g} {method.name} {method.csv_alpha} {method.csv_beta}: {msg}", file=sys.stderr)
    return report


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def cmd_simulate(args) -> int:
    run = _simulation_from_args(args)
    report = _run_grid(run, args)
    out = Path(args.out) if args.out else run.output_dir / "results.csv"
    _write_text(out, report_csv(report))
    print(f"wrote {len(report.rows)} rows to {out}")
    return EXIT_NUMERIC if report.failures else EXIT_OK


def cmd_figures(args) -> int:
    if args.csv:
        csv_path = Path(args.csv)
        out_dir = Path(args.out_dir) if args.out_dir else csv_path.parent
    else:
        run = _simulation_from_args(args)
        out_dir = Path(args.out_dir) if args.out_dir else run.output_dir
        csv_path = out_dir / "results.csv"
        _write_text(csv_path, report_csv(_run_grid(run, args)))
    written = render_figures(read_results_csv(csv_path), out_dir)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    selection = args.checks or list(CHECKS)
    unknown = [c for c in selection if c not in CHECKS]
    if unknown:
        raise UsageError(f"unknown check(s): {', '.join(unknown)}; choose from {', '.join(CHECKS)}")
    ok = True
    for name, worst, passed in run_checks(selection, quick=args.quick):
        print(f"{name}\t{worst:.6g}\t{'pass' if passed else 'FAIL'}")
        ok &= passed
    return EXIT_OK if ok else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sct", description="Stable combination test toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("dist", help="evaluate a stable law")
    d.add_argument("what", choices=("cdf", "quantile", "pdf"))
    d.add_argument("--alpha", type=float, required=True)
    d.add_argument("--beta", type=float, required=True)
    d.add_argument("--tau", type=float, default=1.0)
    d.add_argument("--delta", type=float, default=0.0)
    d.add_argument("--x", type=float)
    d.add_argument("--p", type=float)
    d.set_defaults(func=cmd_dist)

    c = sub.add_parser("combine", help="run the stable combination test on a p-value file")
    c.add_argument("input", help="one p-value per line, optional weight as a second column")
    c.add_argument("--alpha", type=float)
    c.add_argument("--beta", type=float)
    c.add_argument("--preset", choices=sorted(PRESETS))
    c.add_argument("--weights", help="file with one weight per line")
    c.add_argument("--level", type=float, default=0.05)
    c.set_defaults(func=cmd_combine)

    def sim_options(p):
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--reps", type=int)
        p.add_argument("--threads", type=int, help="worker threads (default: SCT_THREADS or the config)")
        p.add_argument("--metric", action="append", choices=METRICS, help="repeatable; default all")
        p.add_argument("--preset", choices=sorted(PRESETS))

    s = sub.add_parser("simulate", help="Monte Carlo size and power grid to CSV")
    sim_options(s)
    s.add_argument("--out", help="CSV path (default: <output_dir>/results.csv)")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("figures", help="SVG panels of size and power per model")
    sim_options(f)
    f.add_argument("--csv", help="render an existing results CSV instead of simulating")
    f.add_argument("--out-dir", help="directory for CSV and SVG files")
    f.set_defaults(func=cmd_figures)

    v = sub.add_parser("verify", help="numerical checks of the bounds and the null law")
    v.add_argument("checks", nargs="*", help="subset of checks (default: all)")
    v.add_argument("--quick", action="store_true", help="smaller grids and fewer draws")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is not None and args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sct: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StableNumericsError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"sct: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
