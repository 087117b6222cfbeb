"""Conformance checks for classifier wrappers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..dataset import Dataset
from .base import Classifier, Prediction


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ConsistencyReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def conformant(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def __str__(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'} {c.name}" + (f": {c.detail}" if c.detail else "")
                 for c in self.checks]
        return "\n".join(lines)


def _same(a: list[Prediction], b: list[Prediction]) -> int | None:
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i
    return None


def consistency_check(c: Classifier, probe: Dataset) -> ConsistencyReport:
    """Fit ``c`` on the probe, predict it back, and check the wrapper contract.

    Checks run in order; once fitting fails the remaining checks are skipped
    and recorded as failures.
    """
    report = ConsistencyReport()
    add = report.checks.append
    pairs = [(ex.text, ex.label) for ex in probe]
    texts = [ex.text for ex in probe]
    trained = {ex.label for ex in probe}
    if len(trained) < 2:
        add(CheckResult("probe", False, "probe needs at least 2 classes"))
        return report

    try:
        c.fit(pairs)
        first = [c.predict(t) for t in texts]
    except Exception as exc:
        add(CheckResult("fit_predict", False, f"{type(exc).__name__}: {exc}"))
        for name in ("determinism", "confidence_bounds", "label_subset", "refit_reproducible"):
            add(CheckResult(name, False, "skipped: fit/predict failed"))
        return report
    add(CheckResult("fit_predict", True))

    try:
        second = [c.predict(t) for t in texts]
        bad = _same(first, second)
        add(CheckResult("determinism", bad is None,
                        "" if bad is None else f"text {texts[bad]!r}: {first[bad]} then {second[bad]}"))
    except Exception as exc:
        add(CheckResult("determinism", False, f"{type(exc).__name__}: {exc}"))

    out_of_range = [p for p in first
                    if not isinstance(p.confidence, (int, float))
                    or math.isnan(p.confidence) or not 0.0 <= p.confidence <= 1.0]
    add(CheckResult("confidence_bounds", not out_of_range,
                    f"confidence {out_of_range[0].confidence!r} outside [0, 1]" if out_of_range else ""))

    unknown = sorted({p.label for p in first} - trained)
    add(CheckResult("label_subset", not unknown,
                    f"labels never trained: {unknown}" if unknown else ""))

    try:
        c.fit(pairs)
        again = [c.predict(t) for t in texts]
        bad = _same(first, again)
        add(CheckResult("refit_reproducible", bad is None,
                        "" if bad is None else f"text {texts[bad]!r}: {first[bad]} vs {again[bad]}"))
    except Exception as exc:
        add(CheckResult("refit_reproducible", False, f"{type(exc).__name__}: {exc}"))
    return report
