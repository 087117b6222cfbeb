"""Scoring splits, running retries, ranking confused pairs, comparing engines."""

from __future__ import annotations

import dataclasses
import logging
import statistics
import time
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .classifier.base import ClassifierFactory, close_quietly, predict_many
from .dataset import OUT_OF_SCOPE, Dataset, class_stats
from .partition import DataSplit, NexCvConfig, kfold_splits, provision

log = logging.getLogger(__name__)

ABSTAIN = "__ABSTAIN__"
MAX_EXAMPLES_PER_PAIR = 5
METRICS = ("accuracy", "macro_f1", "micro_f1", "carefulness")


class EvaluationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Outcome:
    gold: str
    guess: str
    confidence: float
    answered: bool
    text: str = ""

    @property
    def predicted(self) -> str:
        """The matrix column: the guess if answered, else ABSTAIN."""
        return self.guess if self.answered else ABSTAIN

    @property
    def correct(self) -> bool:
        if self.gold == OUT_OF_SCOPE:
            return not self.answered
        return self.answered and self.guess == self.gold


def make_outcome(gold: str, guess: str, confidence: float, threshold: float, text: str = "") -> Outcome:
    return Outcome(gold, guess, confidence, confidence >= threshold, text)


class ConfusionMatrix:
    """Sparse counts keyed by (gold, effective prediction)."""

    def __init__(self, counts: dict[tuple[str, str], int] | None = None):
        self.counts: Counter[tuple[str, str]] = Counter()
        for key, n in (counts or {}).items():
            if n:
                self.counts[key] += n

    @classmethod
    def from_outcomes(cls, outcomes: Iterable[Outcome]) -> "ConfusionMatrix":
        return cls(Counter((o.gold, o.predicted) for o in outcomes))

    def __getitem__(self, key: tuple[str, str]) -> int:
        return self.counts.get(key, 0)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and self.counts == other.counts

    def row_sums(self) -> dict[str, int]:
        sums: Counter[str] = Counter()
        for (gold, _), n in self.counts.items():
            sums[gold] += n
        return dict(sums)

    def cells(self) -> list[tuple[str, str, int]]:
        return sorted((g, p, n) for (g, p), n in self.counts.items() if n)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


# --------------------------------------------------------------------------- #
# Metrics


def accuracy(outcomes: Sequence[Outcome]) -> float:
    if not outcomes:
        return 0.0
    return sum(o.correct for o in outcomes) / len(outcomes)


def carefulness(outcomes: Iterable[Outcome]) -> float | None:
    """Share of withheld answers whose argmax guess was wrong; None if nothing was withheld."""
    withheld = [o for o in outcomes if not o.answered]
    if not withheld:
        return None
    return sum(o.gold == OUT_OF_SCOPE or o.guess != o.gold for o in withheld) / len(withheld)


def f1_scores(outcomes: Sequence[Outcome]) -> tuple[float, float]:
    """Macro and micro F1 over real labels.

    An abstention counts as a prediction of OUT_OF_SCOPE, so it is a false
    negative for the gold label and never a false positive.
    """
    tp: Counter[str] = Counter()
    fp: Counter[str] = Counter()
    fn: Counter[str] = Counter()
    labels: set[str] = set()
    for o in outcomes:
        pred = o.predicted
        if o.gold != OUT_OF_SCOPE:
            labels.add(o.gold)
        if pred != ABSTAIN:
            labels.add(pred)
        if pred == o.gold:
            tp[pred] += 1
            continue
        if pred != ABSTAIN:
            fp[pred] += 1
        if o.gold != OUT_OF_SCOPE:
            fn[o.gold] += 1
    if not labels:
        return 0.0, 0.0
    per_class = []
    for lab in labels:
        denom = 2 * tp[lab] + fp[lab] + fn[lab]
        per_class.append(2 * tp[lab] / denom if denom else 0.0)
    macro = sum(per_class) / len(per_class)
    t, p, n = sum(tp.values()), sum(fp.values()), sum(fn.values())
    micro = 2 * t / (2 * t + p + n) if (2 * t + p + n) else 0.0
    return macro, micro


@dataclass(frozen=True)
class SplitMetrics:
    accuracy: float
    macro_f1: float
    micro_f1: float
    carefulness: float | None
    n_correct: int
    n_test: int

    @classmethod
    def from_outcomes(cls, outcomes: Sequence[Outcome]) -> "SplitMetrics":
        macro, micro = f1_scores(outcomes)
        return cls(
            accuracy=accuracy(outcomes),
            macro_f1=macro,
            micro_f1=micro,
            carefulness=carefulness(outcomes),
            n_correct=sum(o.correct for o in outcomes),
            n_test=len(outcomes),
        )


@dataclass
class SplitResult:
    outcomes: list[Outcome]
    matrix: ConfusionMatrix
    metrics: SplitMetrics
    fit_ms: float = 0.0
    predict_ms: float = 0.0


def evaluate_split(c, s: DataSplit, threshold: float = 0.5, split_name: str = "split") -> SplitResult:
    """Fit ``c`` on the training side and score every test item."""
    t0 = time.perf_counter()
    try:
        c.fit(s.train_pairs)
    except Exception as exc:
        raise EvaluationError(f"{split_name}: classifier fit failed: {exc}") from exc
    t1 = time.perf_counter()
    texts = [it.text for it in s.test]
    try:
        preds = predict_many(c, texts)
    except Exception as exc:
        raise EvaluationError(f"{split_name}: classifier predict failed: {exc}") from exc
    t2 = time.perf_counter()
    outcomes = [
        make_outcome(it.label, p.label, float(p.confidence), threshold, it.text)
        for it, p in zip(s.test, preds)
    ]
    return SplitResult(
        outcomes=outcomes,
        matrix=ConfusionMatrix.from_outcomes(outcomes),
        metrics=SplitMetrics.from_outcomes(outcomes),
        fit_ms=(t1 - t0) * 1000.0,
        predict_ms=(t2 - t1) * 1000.0,
    )


# --------------------------------------------------------------------------- #
# Pair ranking

_SPECIAL = (OUT_OF_SCOPE, ABSTAIN)


def pair_ranking(m: ConfusionMatrix) -> list[tuple[tuple[str, str], int]]:
    """Unordered real-label pairs by symmetric off-diagonal count, descending.

    Ties are broken by the (sorted) pair; pairs with no confusion are left out.
    """
    scores: Counter[tuple[str, str]] = Counter()
    for (gold, pred), n in m.counts.items():
        if gold == pred or gold in _SPECIAL or pred in _SPECIAL or not n:
            continue
        scores[tuple(sorted((gold, pred)))] += n
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


def side_cells(m: ConfusionMatrix) -> dict[str, list[tuple[str, int]]]:
    """The cells pair ranking leaves out: negatives answered, and abstentions per gold label."""
    absorbed: Counter[str] = Counter()
    abstained: Counter[str] = Counter()
    for (gold, pred), n in m.counts.items():
        if gold == OUT_OF_SCOPE and pred != ABSTAIN:
            absorbed[pred] += n
        elif pred == ABSTAIN and gold != OUT_OF_SCOPE:
            abstained[gold] += n
    order = lambda c: sorted(c.items(), key=lambda kv: (-kv[1], kv[0]))  # noqa: E731
    return {"out_of_scope_answered": order(absorbed), "abstained": order(abstained)}


@dataclass(frozen=True)
class PairExample:
    pair: tuple[str, str]
    text: str
    gold: str
    guess: str
    confidence: float


def representative_examples(
    outcome_lists: Sequence[Sequence[Outcome]],
    pairs: Iterable[tuple[str, str]],
    cap: int = MAX_EXAMPLES_PER_PAIR,
) -> list[PairExample]:
    """Most confidently wrong answered items for each pair, in ranking order.

    An item misclassified in several retries is listed once, at its highest
    confidence.
    """
    wanted = list(pairs)
    pool: dict[tuple[str, str], list] = defaultdict(list)
    for r, outcomes in enumerate(outcome_lists):
        for i, o in enumerate(outcomes):
            if not o.answered or o.guess == o.gold or o.gold in _SPECIAL:
                continue
            key = tuple(sorted((o.gold, o.guess)))
            pool[key].append((-o.confidence, r, i, o))
    out = []
    for pair in wanted:
        seen = set()
        for _, _, _, o in sorted(pool.get(pair, []), key=lambda x: x[:3]):
            if (o.text, o.gold, o.guess) in seen:
                continue
            seen.add((o.text, o.gold, o.guess))
            out.append(PairExample(pair, o.text, o.gold, o.guess, o.confidence))
            if len(seen) == cap:
                break
    return out


# --------------------------------------------------------------------------- #
# Retries


@dataclass(frozen=True)
class RetryRecord:
    retry: int
    seed: int
    accuracy: float
    macro_f1: float
    micro_f1: float
    carefulness: float | None
    train_size: int
    test_size: int
    negatives_in_test: int
    small_labels: tuple[str, ...] = ()
    negative_labels: tuple[str, ...] = ()
    fit_ms: float = 0.0
    predict_ms: float = 0.0


@dataclass(frozen=True)
class Aggregate:
    mean: float | None
    std: float | None
    n: int


def aggregate(values: Sequence[float | None]) -> Aggregate:
    present = [v for v in values if v is not None]
    if not present:
        return Aggregate(None, None, 0)
    return Aggregate(statistics.fmean(present), statistics.pstdev(present), len(present))


@dataclass
class EvaluationReport:
    config: NexCvConfig
    dataset_name: str
    retries: list[RetryRecord]
    confusion: ConfusionMatrix
    pairs: list[tuple[tuple[str, str], int]]
    examples: list[PairExample] = field(default_factory=list)

    def aggregate(self, metric: str) -> Aggregate:
        return aggregate([getattr(r, metric) for r in self.retries])

    @property
    def aggregates(self) -> dict[str, Aggregate]:
        return {m: self.aggregate(m) for m in METRICS}

    @property
    def mean_accuracy(self) -> float:
        return self.aggregate("accuracy").mean

    def top_pairs(self, n: int = 3) -> list[tuple[tuple[str, str], int]]:
        return self.pairs[:n]


def _run_retry(d: Dataset, cfg: NexCvConfig, factory: ClassifierFactory, part, i: int):
    seed = cfg.seed + i
    try:
        split = provision(d, part, cfg.t, seed)
    except ValueError as exc:
        raise EvaluationError(f"retry {i}: provision failed: {exc}") from exc
    clf = factory()
    try:
        res = evaluate_split(clf, split, cfg.threshold, split_name=f"retry {i}")
    finally:
        close_quietly(clf)
    m = res.metrics
    record = RetryRecord(
        retry=i,
        seed=seed,
        accuracy=m.accuracy,
        macro_f1=m.macro_f1,
        micro_f1=m.micro_f1,
        carefulness=m.carefulness,
        train_size=len(split.train),
        test_size=len(split.test),
        negatives_in_test=split.negatives_in_test,
        small_labels=tuple(sorted(part.small_labels)),
        negative_labels=tuple(sorted(split.test_labels)),
        fit_ms=res.fit_ms,
        predict_ms=res.predict_ms,
    )
    return record, res


def run_nexcv(
    d: Dataset,
    cfg: NexCvConfig,
    make_classifier: ClassifierFactory,
    workers: int = 1,
    progress: Callable[[int, RetryRecord], None] | None = None,
) -> EvaluationReport:
    """Repeat partition, provision, train and score ``cfg.retries`` times.

    Retry ``i`` uses seed ``cfg.seed + i`` and a fresh classifier. Retries
    may run on a thread pool; results are folded in retry order so the
    report does not depend on scheduling.
    """
    if len(d.labels) < 2:
        raise EvaluationError("dataset needs at least 2 labels")
    # Selection depends on class counts only, so it is the same for every retry.
    part = cfg.select(class_stats(d))
    run = lambda i: _run_retry(d, cfg, make_classifier, part, i)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(cfg.retries)))
    else:
        results = []
        for i in range(cfg.retries):
            results.append(run(i))
            if progress:
                progress(i, results[-1][0])
    records = [r for r, _ in results]
    total = ConfusionMatrix()
    for _, res in results:
        total = total + res.matrix
    pairs = pair_ranking(total)
    examples = representative_examples([res.outcomes for _, res in results], [p for p, _ in pairs])
    return EvaluationReport(cfg, d.name, records, total, pairs, examples)


# --------------------------------------------------------------------------- #
# Comparison

CANONICAL_SETTINGS: tuple[tuple[str, dict], ...] = (
    ("K=0,P=0", {"mode": "cutoff", "k": 0, "p": 0.0}),
    ("K=0,P=0.15", {"mode": "proportional", "k": 0, "p": 0.15}),
    ("K=5,P=0", {"mode": "cutoff", "k": 5, "p": 0.0}),
)


def setting_config(base: NexCvConfig, name: str) -> NexCvConfig:
    return dataclasses.replace(base, **dict(CANONICAL_SETTINGS)[name])


@dataclass
class SettingSummary:
    setting: str
    config: NexCvConfig
    accuracy: Aggregate
    macro_f1: Aggregate
    carefulness: Aggregate
    report: EvaluationReport | None = None


@dataclass
class EngineResult:
    name: str
    settings: list[SettingSummary] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def accuracy_range(self) -> tuple[float, float, float] | None:
        means = [s.accuracy.mean for s in self.settings if s.accuracy.mean is not None]
        if not self.ok or not means:
            return None
        return min(means), statistics.fmean(means), max(means)


@dataclass
class ComparisonReport:
    dataset_name: str
    base_config: NexCvConfig
    engines: list[EngineResult]

    def engine(self, name: str) -> EngineResult:
        for e in self.engines:
            if e.name == name:
                return e
        raise KeyError(name)


def compare(
    d: Dataset,
    base_cfg: NexCvConfig,
    factories: Sequence[tuple[str, ClassifierFactory]],
    settings: Sequence[str] | None = None,
    workers: int = 1,
) -> ComparisonReport:
    """Run every engine under the canonical settings and summarize its accuracy range.

    An engine that fails in any setting is marked failed; the others still run.
    """
    if not factories:
        raise EvaluationError("need at least one engine to compare")
    names = [n for n, _ in factories]
    if len(set(names)) != len(names):
        raise EvaluationError(f"duplicate engine names: {names}")
    wanted = list(settings or [n for n, _ in CANONICAL_SETTINGS])
    engines = []
    for name, factory in factories:
        result = EngineResult(name)
        for setting in wanted:
            cfg = setting_config(base_cfg, setting)
            try:
                rep = run_nexcv(d, cfg, factory, workers=workers)
            except Exception as exc:
                log.warning("engine %s failed under %s: %s", name, setting, exc)
                result.error = f"{setting}: {exc}"
                result.settings = []
                break
            result.settings.append(
                SettingSummary(setting, cfg, rep.aggregate("accuracy"), rep.aggregate("macro_f1"),
                               rep.aggregate("carefulness"), rep)
            )
        engines.append(result)
    return ComparisonReport(d.name, base_cfg, engines)


# --------------------------------------------------------------------------- #
# Functional validation against k-fold CV


@dataclass(frozen=True)
class KFoldResult:
    accuracies: tuple[float, ...]

    @property
    def mean_accuracy(self) -> float:
        return statistics.fmean(self.accuracies)


def kfold_cv(d: Dataset, make_classifier: ClassifierFactory, k: int = 5, seed: int = 0,
             threshold: float = 0.5) -> KFoldResult:
    accs = []
    for f, split in enumerate(kfold_splits(d, k, seed)):
        clf = make_classifier()
        try:
            accs.append(evaluate_split(clf, split, threshold, split_name=f"fold {f}").metrics.accuracy)
        finally:
            close_quietly(clf)
    return KFoldResult(tuple(accs))


@dataclass(frozen=True)
class MetricValidation:
    nexcv_accuracy: float
    kfold_accuracy: float
    tolerance: float
    report: EvaluationReport | None = None
    kfold: KFoldResult | None = None

    @property
    def difference(self) -> float:
        return abs(self.nexcv_accuracy - self.kfold_accuracy)

    @property
    def passed(self) -> bool:
        # Tiny slack so a tolerance equal to the difference is not lost to rounding.
        return self.difference <= self.tolerance + 1e-12


def validate_metric(
    d: Dataset,
    make_classifier: ClassifierFactory,
    tolerance: float = 0.03,
    seed: int = 0,
    retries: int = 10,
    k: int = 5,
    threshold: float = 0.5,
) -> MetricValidation:
    """nex-cv without negatives should agree with stratified k-fold CV."""
    cfg = NexCvConfig(mode="cutoff", k=0, t=1.0 / k, retries=retries, threshold=threshold, seed=seed)
    rep = run_nexcv(d, cfg, make_classifier)
    kf = kfold_cv(d, make_classifier, k=k, seed=seed, threshold=threshold)
    return MetricValidation(rep.mean_accuracy, kf.mean_accuracy, tolerance, rep, kf)

