"""Command-line interface.

Exit codes: 0 success, 1 evaluation ran but a validation/threshold check
failed, 2 usage or input error.
"""

from __future__ import annotations

import logging
import re
import shlex
import sys
from pathlib import Path

import click

from . import report as rpt
from .classifier import BaselineClassifier, ExternalClassifier
from .dataset import DatasetError, class_stats, generate_synthetic, load_dataset, save_dataset, validate_dataset
from .evaluation import EvaluationError, compare, run_nexcv, validate_metric
from .partition import NexCvConfig

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("nexcv")


class InputFailure(click.ClickException):
    exit_code = EXIT_USAGE


def _load(data: str, fmt: str | None):
    try:
        d = load_dataset(data, fmt)
    except DatasetError as exc:
        raise InputFailure(str(exc)) from None
    for issue in validate_dataset(d):
        log.warning("%s", issue)
    return d


def _config(mode, k, p, t, retries, threshold, seed) -> NexCvConfig:
    if mode == "cutoff" and p is not None:
        raise click.UsageError("--p applies to --mode proportional; cutoff and proportional are mutually exclusive")
    if mode == "proportional" and k is not None:
        raise click.UsageError("--k applies to --mode cutoff; cutoff and proportional are mutually exclusive")
    try:
        if mode == "cutoff":
            return NexCvConfig.cutoff(k or 0, t=t, retries=retries, threshold=threshold, seed=seed)
        return NexCvConfig.proportional(p if p is not None else 0.0, t=t, retries=retries,
                                        threshold=threshold, seed=seed)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None


def _write(path: str | Path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputFailure(f"cannot write {path}: {exc}") from None


def _emit_outputs(report, out, markdown, csv_dir, top=3, csv_kinds=("retries", "confusion", "pairs")):
    doc = rpt.ReportDocument.from_report(report)
    if out:
        _write(out, doc.to_json())
    if markdown:
        _write(markdown, rpt.render_markdown(doc, top=top))
    if csv_dir:
        for kind in csv_kinds:
            _write(Path(csv_dir) / f"{kind}.csv", rpt.emit_csv(doc, kind))
    return doc


def _print_pairs(doc, top: int) -> None:
    pairs = doc["pairs"][:top]
    if not pairs:
        click.echo("no confusions observed")
        return
    for rank, pair in enumerate(pairs, start=1):
        click.echo(f"{rank}. {pair['a']} <-> {pair['b']}: {pair['score']}")
        for ex in doc["examples"]:
            if ex["pair"] == [pair["a"], pair["b"]]:
                click.echo(f"     {ex['text']!r} (gold {ex['gold']}, guessed {ex['guess']}, "
                           f"confidence {ex['confidence']:.3f})")


def _baseline_factory():
    return BaselineClassifier()


common_data = [
    click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False), help="Dataset file (CSV or JSONL)."),
    click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default=None, help="Override format inferred from suffix."),
]
common_run = [
    click.option("--t", "t", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.2, show_default=True, help="Test fraction."),
    click.option("--retries", type=click.IntRange(min=1), default=10, show_default=True),
    click.option("--threshold", type=click.FloatRange(0, 1), default=0.5, show_default=True, help="Confidence needed to answer."),
    click.option("--seed", type=int, default=0, show_default=True),
]


def _apply(options):
    def deco(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return deco


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose: bool) -> None:
    """Cross-validation with plausible negative examples for chatbot classifiers."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@cli.command("evaluate")
@_apply(common_data)
@click.option("--mode", type=click.Choice(["cutoff", "proportional"]), default="cutoff", show_default=True)
@click.option("--k", type=click.IntRange(min=0), default=None, help="Cutoff: classes with fewer examples become negatives.")
@click.option("--p", type=click.FloatRange(0, 1, max_open=True), default=None, help="Proportion of examples to hold as negative classes.")
@_apply(common_run)
@click.option("--out", type=click.Path(dir_okay=False), default="nexcv-report.json", show_default=True)
@click.option("--markdown", type=click.Path(dir_okay=False), default=None)
@click.option("--csv-dir", type=click.Path(file_okay=False), default=None)
@click.option("--top", type=click.IntRange(min=0), default=3, show_default=True)
@click.option("--engine", "engine_cmd", default=None, help="Evaluate an external classifier command instead of the baseline.")
def cmd_evaluate(data, fmt, mode, k, p, t, retries, threshold, seed, out, markdown, csv_dir, top, engine_cmd):
    """Run nex-cv on a dataset and write the report."""
    cfg = _config(mode, k, p, t, retries, threshold, seed)
    d = _load(data, fmt)
    factory = (lambda: ExternalClassifier(shlex.split(engine_cmd))) if engine_cmd else _baseline_factory
    try:
        report = run_nexcv(d, cfg, factory)
    except (EvaluationError, ValueError) as exc:
        raise InputFailure(f"evaluation failed: {exc}") from None
    doc = _emit_outputs(report, out, markdown, csv_dir, top)
    agg = doc["aggregate"]
    click.echo(f"{d.name}: {cfg.setting_name}, {cfg.retries} retries")
    for metric in ("accuracy", "macro_f1", "carefulness"):
        a = agg[metric]
        click.echo(f"  {metric:<12} " + ("n/a" if a["mean"] is None else f"{a['mean']:.4f} +/- {a['std']:.4f}"))
    click.echo("top confused pairs:")
    _print_pairs(doc, top)


@cli.command("pairs")
@_apply(common_data)
@click.option("--p", type=click.FloatRange(0, 1, max_open=True), default=0.15, show_default=True)
@_apply(common_run)
@click.option("--top", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--markdown", type=click.Path(dir_okay=False), default=None)
def cmd_pairs(data, fmt, p, t, retries, threshold, seed, top, out, markdown):
    """Rank the most confused class pairs (triage)."""
    cfg = _config("proportional", None, p, t, retries, threshold, seed)
    d = _load(data, fmt)
    try:
        report = run_nexcv(d, cfg, _baseline_factory)
    except (EvaluationError, ValueError) as exc:
        raise InputFailure(f"evaluation failed: {exc}") from None
    doc = _emit_outputs(report, out, markdown, None, top)
    _print_pairs(doc, top)


_ENGINE = re.compile(r"^(?P<name>[^=]+)=(?P<kind>builtin|cmd:(?P<cmd>.+))$", re.S)


def parse_engine(spec: str):
    m = _ENGINE.match(spec)
    if not m:
        raise click.BadParameter(f"{spec!r}: expected name=builtin or name=cmd:<command>", param_hint="--engine")
    name = m["name"].strip()
    if m["kind"] == "builtin":
        return name, _baseline_factory
    argv = shlex.split(m["cmd"])
    if not argv:
        raise click.BadParameter(f"{spec!r}: empty command", param_hint="--engine")
    return name, lambda: ExternalClassifier(argv)


@cli.command("compare")
@_apply(common_data)
@click.option("--engine", "engines", multiple=True, required=True, help="name=builtin or name=cmd:<command>; repeatable.")
@_apply(common_run)
@click.option("--out", type=click.Path(dir_okay=False), default="nexcv-comparison.json", show_default=True)
@click.option("--markdown", type=click.Path(dir_okay=False), default=None)
@click.option("--csv-dir", type=click.Path(file_okay=False), default=None)
def cmd_compare(data, fmt, engines, t, retries, threshold, seed, out, markdown, csv_dir):
    """Compare engines across the three canonical settings."""
    factories = [parse_engine(s) for s in engines]
    if len({n for n, _ in factories}) != len(factories):
        raise click.BadParameter("engine names must be unique", param_hint="--engine")
    cfg = NexCvConfig(t=t, retries=retries, threshold=threshold, seed=seed)
    d = _load(data, fmt)
    report = compare(d, cfg, factories)
    doc = _emit_outputs(report, out, markdown, csv_dir, csv_kinds=("retries", "ranges"))
    click.echo(rpt.render_markdown(doc).split("## Per-setting breakdown")[0].rstrip())
    if not any(e["status"] == "ok" for e in doc["engines"]):
        raise InputFailure("every engine failed")


@cli.command("validate")
@_apply(common_data)
@click.option("--tolerance", type=click.FloatRange(min=0), default=0.03, show_default=True)
@click.option("--retries", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--threshold", type=click.FloatRange(0, 1), default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_validate(data, fmt, tolerance, retries, threshold, seed):
    """Check that nex-cv without negatives agrees with 5-fold CV."""
    d = _load(data, fmt)
    try:
        res = validate_metric(d, _baseline_factory, tolerance, seed=seed, retries=retries, threshold=threshold)
    except (EvaluationError, ValueError) as exc:
        raise InputFailure(f"evaluation failed: {exc}") from None
    verdict = "PASS" if res.passed else "FAIL"
    click.echo(f"{verdict}: nex-cv(K=0,P=0) {res.nexcv_accuracy:.4f} vs 5-fold {res.kfold_accuracy:.4f}, "
               f"|diff| {res.difference:.4f} (tolerance {tolerance:g})")
    sys.exit(EXIT_OK if res.passed else EXIT_FAILED)


def _parse_large(value: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", value.strip())
    if not m:
        raise click.BadParameter(f"{value!r}: expected COUNTxSIZE, e.g. 5x100")
    return int(m[1]), int(m[2])


def _parse_small(value: str) -> tuple[int, int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)(?:\.\.(\d+))?", value.strip())
    if not m:
        raise click.BadParameter(f"{value!r}: expected COUNTxMIN..MAX, e.g. 20x5..10")
    lo = int(m[2])
    return int(m[1]), lo, int(m[3]) if m[3] else lo


@cli.command("synth")
@click.option("--large", default="5x100", show_default=True, help="COUNTxSIZE of large classes.")
@click.option("--small", default="20x5..10", show_default=True, help="COUNTxMIN..MAX of small classes.")
@click.option("--vocab", type=click.IntRange(min=1), default=20, show_default=True, help="Tokens per class vocabulary.")
@click.option("--overlap", type=click.FloatRange(0, 1), default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default=None)
def cmd_synth(large, small, vocab, overlap, seed, out, fmt):
    """Write a synthetic dataset with a few large and many small classes."""
    n_large, large_size = _parse_large(large)
    n_small, lo, hi = _parse_small(small)
    try:
        d = generate_synthetic(n_large, large_size, n_small, (lo, hi), vocab, overlap, seed)
        save_dataset(d, out, fmt)
    except DatasetError as exc:
        raise InputFailure(str(exc)) from None
    stats = class_stats(d)
    click.echo(f"wrote {stats.total} examples over {len(stats.labels)} labels to {out}")


@cli.command("stats")
@_apply(common_data)
def cmd_stats(data, fmt):
    """Per-class counts, smallest first."""
    d = _load(data, fmt)
    stats = class_stats(d)
    width = max(len(lab) for lab in stats.labels)
    for lab in stats.labels:
        click.echo(f"{lab:<{width}}  {stats[lab]}")
    click.echo(f"total: {stats.total} examples, {len(stats.labels)} labels")
    click.echo(f"smallest: {stats.labels[0]} ({stats[stats.labels[0]]}), "
               f"largest: {stats.labels[-1]} ({stats[stats.labels[-1]]})")
    for issue in validate_dataset(d):
        click.echo(f"issue: {issue}")


def main(argv=None) -> None:
    cli.main(args=argv, prog_name="nexcv")


if __name__ == "__main__":
    main()
