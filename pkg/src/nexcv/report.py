"""JSON, markdown and CSV renderings of evaluation and comparison results.

All three renderings are produced from the same document dictionary, so
they agree on every number they share. Floats are rounded to 6 decimals.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from typing import Any

from .evaluation import (
    Aggregate,
    ComparisonReport,
    EvaluationReport,
    RetryRecord,
    side_cells,
)
from .partition import NexCvConfig

SCHEMA_VERSION = "1.0"
DECIMALS = 6
TIMING_FIELDS = ("fit_ms", "predict_ms")
CSV_KINDS = ("retries", "confusion", "pairs", "ranges")


def _num(x: float | None) -> float | None:
    if x is None:
        return None
    return round(float(x), DECIMALS) + 0.0  # + 0.0 turns -0.0 into 0.0


def _config(cfg: NexCvConfig) -> dict:
    return {
        "mode": cfg.mode_dict(),
        "t": _num(cfg.t),
        "retries": cfg.retries,
        "threshold": _num(cfg.threshold),
        "seed": cfg.seed,
    }


def _agg(a: Aggregate) -> dict:
    return {"mean": _num(a.mean), "std": _num(a.std), "n": a.n}


def _retry(r: RetryRecord) -> dict:
    return {
        "retry": r.retry,
        "seed": r.seed,
        "accuracy": _num(r.accuracy),
        "macro_f1": _num(r.macro_f1),
        "micro_f1": _num(r.micro_f1),
        "carefulness": _num(r.carefulness),
        "train_size": r.train_size,
        "test_size": r.test_size,
        "negatives_in_test": r.negatives_in_test,
        "small_labels": list(r.small_labels),
        "negative_labels": list(r.negative_labels),
        "fit_ms": _num(r.fit_ms),
        "predict_ms": _num(r.predict_ms),
    }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def evaluation_payload(r: EvaluationReport) -> dict:
    sides = side_cells(r.confusion)
    return {
        "dataset_name": r.dataset_name,
        "config": _config(r.config),
        "retries": [_retry(x) for x in r.retries],
        "aggregate": {m: _agg(a) for m, a in r.aggregates.items()},
        "confusion": [{"gold": g, "predicted": p, "count": n} for g, p, n in r.confusion.cells()],
        "pairs": [{"a": a, "b": b, "score": s} for (a, b), s in r.pairs],
        "out_of_scope_answered": [{"predicted": p, "count": n} for p, n in sides["out_of_scope_answered"]],
        "abstained": [{"gold": g, "count": n} for g, n in sides["abstained"]],
        "examples": [
            {"pair": list(e.pair), "text": e.text, "gold": e.gold, "guess": e.guess,
             "confidence": _num(e.confidence)}
            for e in r.examples
        ],
    }


def comparison_payload(r: ComparisonReport) -> dict:
    engines = []
    for e in r.engines:
        rng = e.accuracy_range
        engines.append({
            "name": e.name,
            "status": "ok" if e.ok else "failed",
            "error": e.error,
            "accuracy_range": None if rng is None else
            {"min": _num(rng[0]), "mean": _num(rng[1]), "max": _num(rng[2])},
            "settings": [
                {
                    "setting": s.setting,
                    "mode": s.config.mode_dict(),
                    "accuracy": _agg(s.accuracy),
                    "macro_f1": _agg(s.macro_f1),
                    "carefulness": _agg(s.carefulness),
                    "retries": [_retry(x) for x in (s.report.retries if s.report else [])],
                }
                for s in e.settings
            ],
        })
    return {"dataset_name": r.dataset_name, "config": _config(r.base_config), "engines": engines}


@dataclass
class ReportDocument:
    """A serialized report held in memory; round-trips through JSON unchanged."""

    kind: str
    payload: dict
    schema_version: str = SCHEMA_VERSION
    produced_at: str = ""

    @classmethod
    def from_report(cls, r: EvaluationReport | ComparisonReport, produced_at: str | None = None) -> "ReportDocument":
        if isinstance(r, EvaluationReport):
            return cls("evaluation", evaluation_payload(r), produced_at=produced_at or _now())
        if isinstance(r, ComparisonReport):
            return cls("comparison", comparison_payload(r), produced_at=produced_at or _now())
        if isinstance(r, ReportDocument):
            return r
        raise TypeError(f"cannot render {type(r).__name__}")

    def to_dict(self) -> dict:
        return {"schema_version": self.schema_version, "kind": self.kind,
                "produced_at": self.produced_at, **self.payload}

    @classmethod
    def from_dict(cls, doc: dict) -> "ReportDocument":
        doc = dict(doc)
        version = doc.pop("schema_version")
        kind = doc.pop("kind")
        produced_at = doc.pop("produced_at", "")
        return cls(kind, doc, version, produced_at)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportDocument":
        return cls.from_dict(json.loads(text))

    def __getitem__(self, key: str) -> Any:
        return self.payload[key]


def _doc(r) -> ReportDocument:
    return r if isinstance(r, ReportDocument) else ReportDocument.from_report(r)


def render_json(r, produced_at: str | None = None) -> str:
    if isinstance(r, ReportDocument):
        return r.to_json()
    return ReportDocument.from_report(r, produced_at).to_json()


def strip_volatile(doc: dict) -> dict:
    """Copy of a report dict without the timestamp and timing fields."""
    def walk(x):
        if isinstance(x, dict):
            return {k: walk(v) for k, v in x.items() if k not in TIMING_FIELDS and k != "produced_at"}
        if isinstance(x, list):
            return [walk(v) for v in x]
        return x
    return walk(doc)


def load_schema(kind: str) -> dict:
    name = {"evaluation": "evaluation.schema.json", "comparison": "comparison.schema.json"}[kind]
    return json.loads(resources.files("nexcv").joinpath("schema", name).read_text(encoding="utf-8"))


# --------------------------------------------------------------------------- #
# Markdown


def _fmt(x: float | None) -> str:
    if x is None:
        return "n/a"
    return f"{x:.{DECIMALS}f}".rstrip("0").rstrip(".")


def _mode_text(mode: dict) -> str:
    return f"cutoff K={mode['K']}" if mode["kind"] == "cutoff" else f"proportional P={_fmt(mode['P'])}"


def _md_escape(text: str) -> str:
    return text.replace("|", "\\|").replace("\n", " ").replace("\r", " ")


def _markdown_evaluation(doc: ReportDocument, top: int) -> str:
    p = doc.payload
    cfg = p["config"]
    out = [
        f"# nex-cv report: {p['dataset_name']}",
        "",
        f"Setting: {_mode_text(cfg['mode'])}, t={_fmt(cfg['t'])}, retries={cfg['retries']}, "
        f"threshold={_fmt(cfg['threshold'])}, seed={cfg['seed']}",
        "",
        "## Headline metrics",
        "",
        "| metric | mean | std | retries |",
        "|---|---|---|---|",
    ]
    for name, a in p["aggregate"].items():
        out.append(f"| {name} | {_fmt(a['mean'])} | {_fmt(a['std'])} | {a['n']} |")
    out += ["", f"## Top {top} confused pairs", ""]
    pairs = p["pairs"][:top]
    if not pairs:
        out.append("No confusions observed.")
    for rank, pair in enumerate(pairs, start=1):
        a, b = pair["a"], pair["b"]
        out.append(f"{rank}. `{a}` / `{b}`: {pair['score']} confusions")
        for ex in p["examples"]:
            if ex["pair"] == [a, b]:
                out.append(
                    f"    - \"{_md_escape(ex['text'])}\" (gold `{ex['gold']}`, guessed `{ex['guess']}`, "
                    f"confidence {_fmt(ex['confidence'])})"
                )
    if p["out_of_scope_answered"] or p["abstained"]:
        out += ["", "## Negatives and abstentions", ""]
        if p["out_of_scope_answered"]:
            answered = ", ".join(f"`{c['predicted']}` ({c['count']})" for c in p["out_of_scope_answered"][:top])
            out.append(f"Negative examples answered as: {answered}")
        if p["abstained"]:
            held = ", ".join(f"`{c['gold']}` ({c['count']})" for c in p["abstained"][:top])
            out.append(f"Most abstentions on in-scope items: {held}")
    out += ["", "## Retries", "", "| retry | accuracy | macro_f1 | micro_f1 | carefulness | train | test | negatives |",
            "|---|---|---|---|---|---|---|---|"]
    for r in p["retries"]:
        out.append(
            f"| {r['retry']} | {_fmt(r['accuracy'])} | {_fmt(r['macro_f1'])} | {_fmt(r['micro_f1'])} | "
            f"{_fmt(r['carefulness'])} | {r['train_size']} | {r['test_size']} | {r['negatives_in_test']} |"
        )
    return "\n".join(out) + "\n"


def _markdown_comparison(doc: ReportDocument) -> str:
    p = doc.payload
    cfg = p["config"]
    out = [
        f"# nex-cv engine comparison: {p['dataset_name']}",
        "",
        f"t={_fmt(cfg['t'])}, retries={cfg['retries']}, threshold={_fmt(cfg['threshold'])}, seed={cfg['seed']}",
        "",
        "## Accuracy range across settings",
        "",
        "| engine | status | min | mean | max |",
        "|---|---|---|---|---|",
    ]
    for e in p["engines"]:
        rng = e["accuracy_range"]
        if rng is None:
            out.append(f"| {e['name']} | {e['status']} | n/a | n/a | n/a |")
        else:
            out.append(f"| {e['name']} | {e['status']} | {_fmt(rng['min'])} | {_fmt(rng['mean'])} | {_fmt(rng['max'])} |")
    out += ["", "## Per-setting breakdown", "",
            "| engine | setting | accuracy | std | macro_f1 | carefulness |", "|---|---|---|---|---|---|"]
    for e in p["engines"]:
        for s in e["settings"]:
            out.append(
                f"| {e['name']} | {s['setting']} | {_fmt(s['accuracy']['mean'])} | {_fmt(s['accuracy']['std'])} | "
                f"{_fmt(s['macro_f1']['mean'])} | {_fmt(s['carefulness']['mean'])} |"
            )
    failed = [e for e in p["engines"] if e["status"] != "ok"]
    if failed:
        out += ["", "## Failed engines", ""]
        out += [f"- {e['name']}: {_md_escape(e['error'] or 'unknown error')}" for e in failed]
    return "\n".join(out) + "\n"


def render_markdown(r, top: int = 3) -> str:
    doc = _doc(r)
    if doc.kind == "evaluation":
        return _markdown_evaluation(doc, top)
    return _markdown_comparison(doc)


# --------------------------------------------------------------------------- #
# CSV

_RETRY_COLUMNS = ("retry", "seed", "accuracy", "macro_f1", "micro_f1", "carefulness", "train_size",
                  "test_size", "negatives_in_test", "fit_ms", "predict_ms")


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit_csv(r, which: str) -> str:
    """One of ``retries``, ``confusion``, ``pairs`` (evaluation) or ``retries``, ``ranges`` (comparison)."""
    if which not in CSV_KINDS:
        raise ValueError(f"unknown CSV kind {which!r}; expected one of {', '.join(CSV_KINDS)}")
    doc = _doc(r)
    p = doc.payload
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if doc.kind == "evaluation":
        if which == "retries":
            w.writerow(_RETRY_COLUMNS)
            w.writerows([_cell(rec[c]) for c in _RETRY_COLUMNS] for rec in p["retries"])
        elif which == "confusion":
            w.writerow(("gold", "predicted", "count"))
            w.writerows((c["gold"], c["predicted"], c["count"]) for c in p["confusion"])
        elif which == "pairs":
            w.writerow(("label_a", "label_b", "score"))
            w.writerows((x["a"], x["b"], x["score"]) for x in p["pairs"])
        else:
            raise ValueError("'ranges' is only available for comparison reports")
    else:
        if which == "retries":
            w.writerow(("engine", "setting") + _RETRY_COLUMNS)
            for e in p["engines"]:
                for s in e["settings"]:
                    w.writerows([e["name"], s["setting"]] + [_cell(rec[c]) for c in _RETRY_COLUMNS]
                                for rec in s["retries"])
        elif which == "ranges":
            w.writerow(("engine", "status", "min", "mean", "max"))
            for e in p["engines"]:
                rng = e["accuracy_range"] or {}
                w.writerow((e["name"], e["status"], _cell(rng.get("min")), _cell(rng.get("mean")),
                            _cell(rng.get("max"))))
        else:
            raise ValueError(f"{which!r} is only available for evaluation reports")
    return buf.getvalue()
