"""Command-line interface.

Exit codes: 0 success or test passed, 1 usage/config/I-O error,
2 numerical failure, 3 statistical test failed.

CSV outputs have a header row, a fixed column order and 9 significant
digits in positional notation.  When ``--out`` names a CSV file, a sidecar
``<out>.meta.json`` records every parameter used; without ``--out`` the
data goes to stdout and the metadata to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .association import (
    assoc_prob_table,
    conditional_assoc_probs,
    conditional_assoc_total,
    g_pair_nakagami,
    tier_assoc_prob,
    tier_bias,
)
from .config import ConfigError, config_echo, load_config
from .fading import NakagamiFading, effective_distribution, effective_nakagami_model
from .simulator import DEFAULT_N_MAX, run_campaign
from .specfun import ConvergenceError, DomainError, IntegrationError
from .stats import EmpiricalDistribution, histogram_density, ks_one_sample, ks_two_sample

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_STAT_FAIL = 3

SAMPLE_COLUMNS = ("h_star", "tier", "order", "distance")
COMMANDS = ("analytic", "simulate", "assoc", "compare", "reproduce-fig1")
DEFAULT_FIG1_M = (0.5, 1.0, 3.0)
DEFAULT_ASSOC_N_MAX = 200


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config_path: str | None = None
    output_path: str | None = None
    seed: int = 0
    trials: int = 10000
    n_max: int | None = None
    grid: tuple[float, float, float] = (0.0, 5.0, 0.05)
    h: float | None = None
    format: str = "csv"
    level: float = 0.01
    workers: int = 1
    samples_path: str | None = None
    against_path: str | None = None
    target: str = "effective"
    m_values: tuple[float, ...] = DEFAULT_FIG1_M
    bins: int = 50
    hist_range: tuple[float, float] = (0.0, 5.0)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.trials < 1:
            raise UsageError("--trials must be >= 1")
        if self.n_max is not None and self.n_max < 1:
            raise UsageError("--n-max must be >= 1")
        if self.format not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        if not 0 < self.level < 1:
            raise UsageError("--level must be in (0, 1)")

    def echo(self) -> dict:
        return {
            "command": self.command,
            "config_path": self.config_path,
            "seed": self.seed,
            "trials": self.trials,
            "n_max": self.n_max,
            "format": self.format,
            "level": self.level,
        }


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return np.format_float_positional(x, precision=9, unique=False, fractional=False, trim="-")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _write_text(path: str, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path!r}: {exc.strerror}") from exc


def _emit(manifest: RunManifest, header, rows, meta: dict, stdout, stderr):
    """Write tabular data plus metadata following the output conventions."""
    if manifest.format == "json":
        doc = dict(meta)
        doc["columns"] = list(header)
        doc["rows"] = [[_json_value(v) for v in row] for row in rows]
        text = _json_text(doc)
        if manifest.output_path:
            _write_text(manifest.output_path, text)
        else:
            stdout.write(text)
        return
    text = _csv_text(header, rows)
    if manifest.output_path:
        _write_text(manifest.output_path, text)
        _write_text(manifest.output_path + ".meta.json", _json_text(meta))
    else:
        stdout.write(text)
        stderr.write(_json_text(meta))


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _grid(spec: str) -> tuple[float, float, float]:
    try:
        lo, hi, step = (float(p) for p in spec.split(":"))
    except ValueError as exc:
        raise UsageError(f"--grid expects lo:hi:step, got {spec!r}") from exc
    if not (step > 0 and hi >= lo and lo >= 0):
        raise UsageError("--grid needs 0 <= lo <= hi and step > 0")
    return lo, hi, step


def _grid_points(grid) -> np.ndarray:
    lo, hi, step = grid
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def _load(manifest: RunManifest):
    if not manifest.config_path:
        raise UsageError("--config is required for this command")
    return load_config(manifest.config_path)


def _base_meta(manifest: RunManifest, config, model) -> dict:
    meta = manifest.echo()
    meta["config"] = config_echo(config, model)
    meta["version"] = __version__
    return meta


def cmd_analytic(manifest: RunManifest, stdout=sys.stdout, stderr=sys.stderr) -> int:
    config, model = _load(manifest)
    ys = _grid_points(manifest.grid)
    f_h = model.pdf(ys)
    closed = effective_nakagami_model(model.m, model.omega, config.alpha).pdf(ys)
    skipped = []
    rows = []
    try:
        dist = effective_distribution(model, config.alpha)
        general = dist.pdf(ys)
    except (IntegrationError, ConvergenceError) as exc:
        general = None
        skipped.append({"y": "all", "reason": str(exc)})
    if general is not None:
        for y, a, b, c in zip(ys, f_h, general, closed):
            if math.isnan(b):
                skipped.append({"y": float(y), "reason": "general density undefined"})
                continue
            rows.append((float(y), float(a), float(b), float(c)))
    meta = _base_meta(manifest, config, model)
    meta["grid"] = list(manifest.grid)
    meta["rows"] = len(rows)
    meta["skipped_rows"] = skipped
    if general is not None and rows:
        meta["normalizer"] = dist.normalizer
        diffs = [abs(r[2] - r[3]) for r in rows if math.isfinite(r[2]) and math.isfinite(r[3])]
        meta["max_general_vs_closed"] = max(diffs) if diffs else 0.0
    _emit(manifest, ("y", "f_h", "f_h_star_general", "f_h_star_closed"), rows, meta, stdout, stderr)
    return EXIT_NUMERICAL if skipped else EXIT_OK


def _simulation_summary(result, model, config, level) -> dict:
    target = effective_nakagami_model(model.m, model.omega, config.alpha)
    report = ks_one_sample(EmpiricalDistribution(result.h_star), target.cdf, level)
    fractions = result.tier_fractions()
    return {
        "tier_fractions": fractions.tolist(),
        "tier_probabilities": [tier_assoc_prob(config, k) for k in range(1, config.K + 1)],
        "mean_h_star": float(np.mean(result.h_star)),
        "ks_vs_effective": report.to_dict(),
    }


def cmd_simulate(manifest: RunManifest, stdout=sys.stdout, stderr=sys.stderr) -> int:
    config, model = _load(manifest)
    n_max = manifest.n_max or DEFAULT_N_MAX
    manifest.n_max = n_max
    result = run_campaign(config, model, manifest.trials, n_max, manifest.seed, manifest.workers)
    meta = _base_meta(manifest, config, model)
    meta["summary"] = _simulation_summary(result, model, config, manifest.level)
    rows = zip(result.h_star.tolist(), result.serving_tier.tolist(),
               result.serving_order.tolist(), result.serving_distance.tolist())
    _emit(manifest, SAMPLE_COLUMNS, list(rows), meta, stdout, stderr)
    return EXIT_OK


def cmd_assoc(manifest: RunManifest, stdout=sys.stdout, stderr=sys.stderr) -> int:
    config, model = _load(manifest)
    n_max = manifest.n_max or DEFAULT_ASSOC_N_MAX
    manifest.n_max = n_max
    meta = _base_meta(manifest, config, model)
    rows = []
    if manifest.h is not None:
        if not manifest.h > 0:
            raise UsageError("--h must be > 0")
        meta["h"] = manifest.h
        per_tier = []
        for k in range(1, config.K + 1):
            g = g_pair_nakagami(model.m, model.omega, config.alpha, manifest.h, tier_bias(config, k), tier=k)
            probs = conditional_assoc_probs(g, n_max)
            rows.extend((k, n, float(p)) for n, p in enumerate(probs, start=1))
            per_tier.append({"tier": k, "g1": g.g1, "g2": g.g2, "bias": tier_bias(config, k),
                             "conditional_total": conditional_assoc_total(g)})
        meta["tiers"] = per_tier
    else:
        table = assoc_prob_table(config, model, n_max)
        for k in range(1, config.K + 1):
            rows.extend((k, n, float(table.entries[k - 1, n - 1])) for n in range(1, n_max + 1))
        meta["row_sums"] = table.row_sums.tolist()
        meta["row_tails"] = table.row_tails.tolist()
        meta["tier_probabilities"] = [tier_assoc_prob(config, k) for k in range(1, config.K + 1)]
        meta["total"] = table.total
        meta["truncation_mass"] = table.truncation_mass
        meta["total_plus_truncation"] = table.total + table.truncation_mass
    _emit(manifest, ("tier", "order", "probability"), rows, meta, stdout, stderr)
    return EXIT_OK


def read_sample_file(path: str, column: str = "h_star") -> np.ndarray:
    """Read one column of a simulate CSV (columns ``h_star,tier,order,distance``)."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != SAMPLE_COLUMNS:
                raise UsageError(f"{path}: expected header {','.join(SAMPLE_COLUMNS)}, got {header}")
            idx = SAMPLE_COLUMNS.index(column)
            values = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(SAMPLE_COLUMNS):
                    raise UsageError(f"{path}:{lineno}: expected {len(SAMPLE_COLUMNS)} fields")
                values.append(float(row[idx]))
    except OSError as exc:
        raise UsageError(f"cannot read {path!r}: {exc.strerror}") from exc
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from exc
    if not values:
        raise UsageError(f"{path}: no samples")
    return np.array(values)


def cmd_compare(manifest: RunManifest, stdout=sys.stdout, stderr=sys.stderr) -> int:
    if not manifest.samples_path:
        raise UsageError("compare needs --samples")
    samples = EmpiricalDistribution(read_sample_file(manifest.samples_path))
    meta = manifest.echo()
    meta["samples"] = manifest.samples_path
    if manifest.against_path:
        other = EmpiricalDistribution(read_sample_file(manifest.against_path))
        report = ks_two_sample(samples, other, manifest.level)
        meta["against"] = manifest.against_path
    else:
        config, model = _load(manifest)
        meta["config"] = config_echo(config, model)
        if manifest.target == "effective":
            target = effective_nakagami_model(model.m, model.omega, config.alpha)
        elif manifest.target == "original":
            target = model
        else:
            raise UsageError("--target must be 'effective' or 'original'")
        meta["target"] = manifest.target
        report = ks_one_sample(samples, target.cdf, manifest.level)
    meta["report"] = report.to_dict()
    text = _json_text(meta)
    if manifest.output_path:
        _write_text(manifest.output_path, text)
    else:
        stdout.write(text)
    return EXIT_OK if report.passed else EXIT_STAT_FAIL


def cmd_reproduce_fig1(manifest: RunManifest, stdout=sys.stdout, stderr=sys.stderr) -> int:
    config, base_model = _load(manifest)
    if not manifest.output_path:
        raise UsageError("reproduce-fig1 needs --out DIR")
    out_dir = manifest.output_path
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out_dir!r}: {exc.strerror}") from exc
    n_max = manifest.n_max or DEFAULT_N_MAX
    manifest.n_max = n_max
    lo, hi = manifest.hist_range
    all_passed = True
    runs = []
    for m in manifest.m_values:
        model = NakagamiFading(float(m), base_model.omega)
        effective = effective_nakagami_model(model.m, model.omega, config.alpha)
        result = run_campaign(config, model, manifest.trials, n_max, manifest.seed,
                              manifest.workers, record_gains=True)
        h_star = EmpiricalDistribution(result.h_star)
        gains = EmpiricalDistribution(result.gains)
        hist_star = histogram_density(h_star, manifest.bins, (lo, hi))
        hist_h = histogram_density(gains, manifest.bins, (lo, hi))
        centers = hist_star.centers
        f_h = model.pdf(centers)
        f_star = effective.pdf(centers)
        rows = list(zip(centers.tolist(), f_h.tolist(), f_star.tolist(),
                        hist_star.densities.tolist(), hist_h.densities.tolist()))
        name = f"fig1_m{fmt(m)}.csv"
        _write_text(os.path.join(out_dir, name),
                    _csv_text(("y", "f_h", "f_h_star", "sim_h_star_density", "sim_h_density"), rows))
        ks_star = ks_one_sample(h_star, effective.cdf, manifest.level)
        ks_gains = ks_one_sample(gains, model.cdf, manifest.level)
        ks_star_vs_original = ks_one_sample(h_star, model.cdf, manifest.level)
        all_passed &= ks_star.passed
        runs.append({
            "m": float(m),
            "file": name,
            "ks_h_star_vs_effective": ks_star.to_dict(),
            "ks_gains_vs_original": ks_gains.to_dict(),
            "ks_h_star_vs_original": ks_star_vs_original.to_dict(),
            "sup_pdf_gap": float(np.max(np.abs(f_h - f_star))),
            "h_star_out_of_range": hist_star.out_of_range,
            "tier_fractions": result.tier_fractions().tolist(),
        })
    meta = _base_meta(manifest, config, base_model)
    meta["m_values"] = [float(m) for m in manifest.m_values]
    meta["m_values_note"] = "artifact default set; override with --m-values"
    meta["bins"] = manifest.bins
    meta["range"] = [lo, hi]
    meta["runs"] = runs
    _write_text(os.path.join(out_dir, "manifest.json"), _json_text(meta))
    stdout.write(_json_text({"out": out_dir, "files": [r["file"] for r in runs], "all_passed": all_passed}))
    return EXIT_OK if all_passed else EXIT_STAT_FAIL


_HANDLERS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "assoc": cmd_assoc,
    "compare": cmd_compare,
    "reproduce-fig1": cmd_reproduce_fig1,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values or any(not v > 0 for v in values):
        raise argparse.ArgumentTypeError("m values must be positive")
    return values


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(p) for p in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from exc
    if not hi > lo:
        raise argparse.ArgumentTypeError("range needs hi > lo")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hetfade", description="Effective fading under strongest-BS cell selection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, needs_config=True):
        p.add_argument("--config", required=needs_config, help="JSON network/fading config")
        p.add_argument("--out", help="output path (directory for reproduce-fig1)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--level", type=float, default=0.01, help="KS significance level")

    def sim_opts(p):
        p.add_argument("--trials", type=int, default=10000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--n-max", type=int, default=None, help=f"BSs per tier (default {DEFAULT_N_MAX})")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("analytic", help="original and effective densities on a grid")
    common(p)
    p.add_argument("--grid", default="0:5:0.05", help="lo:hi:step")

    p = sub.add_parser("simulate", help="Monte Carlo samples of the effective gain")
    common(p)
    sim_opts(p)

    p = sub.add_parser("assoc", help="association probabilities per tier and order")
    common(p)
    p.add_argument("--h", type=float, default=None, help="condition on this serving-link gain")
    p.add_argument("--n-max", type=int, default=None, help=f"orders per tier (default {DEFAULT_ASSOC_N_MAX})")

    p = sub.add_parser("compare", help="KS test of a sample file")
    common(p, needs_config=False)
    p.add_argument("--samples", required=True, help="sample CSV written by simulate")
    p.add_argument("--against", help="second sample CSV for a two-sample test")
    p.add_argument("--target", choices=("effective", "original"), default="effective")

    p = sub.add_parser("reproduce-fig1", help="density comparison bundle for several m")
    common(p)
    sim_opts(p)
    p.add_argument("--m-values", type=_float_list, default=DEFAULT_FIG1_M)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--range", dest="hist_range", type=_range, default=(0.0, 5.0))
    return parser


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    grid = _grid(args.grid) if getattr(args, "grid", None) else (0.0, 5.0, 0.05)
    return RunManifest(
        command=args.command,
        config_path=args.config,
        output_path=args.out,
        seed=getattr(args, "seed", 0),
        trials=getattr(args, "trials", 10000),
        n_max=getattr(args, "n_max", None),
        grid=grid,
        h=getattr(args, "h", None),
        format=args.format,
        level=args.level,
        workers=getattr(args, "workers", 1),
        samples_path=getattr(args, "samples", None),
        against_path=getattr(args, "against", None),
        target=getattr(args, "target", "effective"),
        m_values=getattr(args, "m_values", DEFAULT_FIG1_M),
        bins=getattr(args, "bins", 50),
        hist_range=getattr(args, "hist_range", (0.0, 5.0)),
    )


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        manifest = manifest_from_args(args)
        return _HANDLERS[manifest.command](manifest, stdout, stderr)
    except (UsageError, ConfigError, DomainError) as exc:
        stderr.write(f"hetfade: error: {exc}\n")
        return EXIT_USAGE
    except (IntegrationError, ConvergenceError) as exc:
        stderr.write(f"hetfade: numerical failure: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
