"""Plausible-negative class selection and train/test provisioning.

Classes with few examples are candidates for being withheld from training
and presented at test time as out-of-scope inputs. Two selection rules are
available (a count cutoff and a population share), and both feed
:func:`provision`, which builds one seeded train/test realization.
"""

from __future__ import annotations

import json
import math
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Literal

from .dataset import OUT_OF_SCOPE, ClassStats, Dataset, class_stats


class PartitionError(ValueError):
    pass


def round_half_up(x: float) -> int:
    # Python's round() is banker's rounding; counts need the schoolbook rule.
    # The epsilon absorbs float error in products such as t * n.
    return math.floor(x + 0.5 + 1e-9)


@dataclass(frozen=True)
class ClassPartition:
    small_labels: frozenset[str]
    large_labels: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "small_labels", frozenset(self.small_labels))
        object.__setattr__(self, "large_labels", frozenset(self.large_labels))
        if self.small_labels & self.large_labels:
            raise PartitionError("small and large label sets overlap")


@dataclass(frozen=True)
class NexCvConfig:
    """One evaluation setting.

    ``mode`` is ``"cutoff"`` (uses ``k``) or ``"proportional"`` (uses ``p``);
    the two are mutually exclusive.
    """

    mode: Literal["cutoff", "proportional"] = "cutoff"
    k: int = 0
    p: float = 0.0
    t: float = 0.2
    retries: int = 10
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode == "cutoff":
            if int(self.k) != self.k or self.k < 0:
                raise ValueError(f"cutoff K must be an integer >= 0, got {self.k!r}")
            if self.p:
                raise ValueError("cutoff and proportional selection are mutually exclusive")
        elif self.mode == "proportional":
            if not 0.0 <= self.p < 1.0:
                raise ValueError(f"proportion P must lie in [0, 1), got {self.p!r}")
            if self.k:
                raise ValueError("cutoff and proportional selection are mutually exclusive")
        else:
            raise ValueError(f"unknown selection mode {self.mode!r}")
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"test fraction t must lie in (0, 1), got {self.t!r}")
        if self.retries < 1:
            raise ValueError("retries must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"confidence threshold must lie in [0, 1], got {self.threshold!r}")

    @classmethod
    def cutoff(cls, k: int, **kw) -> "NexCvConfig":
        return cls(mode="cutoff", k=k, **kw)

    @classmethod
    def proportional(cls, p: float, **kw) -> "NexCvConfig":
        return cls(mode="proportional", p=p, **kw)

    @property
    def setting_name(self) -> str:
        return f"K={self.k}" if self.mode == "cutoff" else f"P={self.p:g}"

    def select(self, stats: ClassStats) -> ClassPartition:
        if self.mode == "cutoff":
            return select_cutoff(stats, self.k)
        return select_proportional(stats, self.p)

    def mode_dict(self) -> dict:
        if self.mode == "cutoff":
            return {"kind": "cutoff", "K": int(self.k)}
        return {"kind": "proportional", "P": float(self.p)}


def select_cutoff(stats: ClassStats, k: int) -> ClassPartition:
    """Labels occurring strictly fewer than ``k`` times become negative candidates."""
    small = {lab for lab, n in stats.counts.items() if n < k}
    return ClassPartition(frozenset(small), frozenset(stats.counts) - small)


def select_proportional(stats: ClassStats, p: float) -> ClassPartition:
    """Pop least-populated labels until they cover at least ``p`` of all examples."""
    if not 0.0 <= p < 1.0:
        raise PartitionError(f"proportion must lie in [0, 1), got {p!r}")
    small: set[str] = set()
    covered = 0
    queue = list(stats.labels)
    pos = 0
    while stats.total and covered / stats.total < p and pos < len(queue):
        label = queue[pos]
        pos += 1
        small.add(label)
        covered += stats.counts[label]
    return ClassPartition(frozenset(small), frozenset(stats.counts) - small)


@dataclass(frozen=True)
class SplitItem:
    index: int  # position in the source dataset
    text: str
    label: str  # gold label for scoring; OUT_OF_SCOPE for negatives
    origin_label: str


@dataclass(frozen=True)
class DataSplit:
    train: tuple[SplitItem, ...]
    test: tuple[SplitItem, ...]
    train_labels: frozenset[str] = frozenset()  # small labels kept in training
    test_labels: frozenset[str] = frozenset()  # small labels turned into negatives

    @property
    def train_pairs(self) -> list[tuple[str, str]]:
        return [(it.text, it.label) for it in self.train]

    @property
    def negatives_in_test(self) -> int:
        return sum(1 for it in self.test if it.label == OUT_OF_SCOPE)

    def to_jsonl(self) -> str:
        lines = []
        for side, items in (("train", self.train), ("test", self.test)):
            for it in items:
                record = {"split": side, "text": it.text}
                if side == "train":
                    record["label"] = it.label
                else:
                    record["gold"] = it.label
                record["origin_label"] = it.origin_label
                lines.append(json.dumps(record, ensure_ascii=False))
        return "".join(line + "\n" for line in lines)


def _group_indices(d: Dataset) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = defaultdict(list)
    for i, ex in enumerate(d.examples):
        groups[ex.label].append(i)
    return groups


def class_test_count(n: int, t: float) -> int:
    return min(max(round_half_up(t * n), 1), n - 1)


def negative_label_count(n_small: int, t: float) -> int:
    return max(1, round_half_up(t * n_small)) if n_small else 0


def provision(d: Dataset, part: ClassPartition, t: float = 0.2, seed: int = 0) -> DataSplit:
    """Build one train/test realization with out-of-scope negatives.

    Every large class is split once, stratified, so that it appears on both
    sides. Small classes are split at label granularity: each lands whole in
    training (true labels) or whole in test (gold replaced by
    ``OUT_OF_SCOPE``).
    """
    if not 0.0 < t < 1.0:
        raise PartitionError(f"test fraction must lie in (0, 1), got {t!r}")
    groups = _group_indices(d)
    if not part.large_labels:
        raise PartitionError("no retained classes: the large label set is empty")
    unknown = (part.large_labels | part.small_labels) - set(groups)
    if unknown:
        raise PartitionError(f"partition names labels absent from the dataset: {sorted(unknown)}")
    missing = set(groups) - part.large_labels - part.small_labels
    if missing:
        raise PartitionError(f"labels missing from the partition: {sorted(missing)}")

    rng = random.Random(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in sorted(part.large_labels):
        members = list(groups[label])
        if len(members) < 2:
            raise PartitionError(
                f"class {label!r} has {len(members)} example(s); retained classes need >= 2"
            )
        rng.shuffle(members)
        n_test = class_test_count(len(members), t)
        test_idx.extend(members[:n_test])
        train_idx.extend(members[n_test:])

    small = sorted(part.small_labels)
    rng.shuffle(small)
    n_neg = negative_label_count(len(small), t)
    negatives = frozenset(small[:n_neg])
    kept = frozenset(small[n_neg:])
    for label in sorted(kept):
        train_idx.extend(groups[label])
    neg_idx = [i for label in sorted(negatives) for i in groups[label]]

    def item(i: int, gold: str | None = None) -> SplitItem:
        ex = d.examples[i]
        return SplitItem(i, ex.text, gold or ex.label, ex.label)

    train = tuple(item(i) for i in sorted(train_idx))
    test = tuple(item(i) for i in sorted(test_idx)) + tuple(
        item(i, OUT_OF_SCOPE) for i in sorted(neg_idx)
    )
    return DataSplit(train, test, train_labels=kept, test_labels=negatives)


def kfold_splits(d: Dataset, k: int = 5, seed: int = 0) -> list[DataSplit]:
    """Stratified k-fold partition: disjoint test folds that cover the dataset.

    Within each class (in label order) examples are shuffled and dealt to
    folds round-robin; the dealing position carries over between classes so
    fold sizes stay balanced even when class sizes are not multiples of ``k``.
    """
    if k < 2:
        raise PartitionError("k must be >= 2")
    if k > len(d):
        raise PartitionError(f"k={k} exceeds the number of examples ({len(d)})")
    rng = random.Random(seed)
    fold_of = [0] * len(d)
    cursor = 0
    groups = _group_indices(d)
    for label in sorted(groups):
        members = list(groups[label])
        rng.shuffle(members)
        for i in members:
            fold_of[i] = cursor % k
            cursor += 1

    splits = []
    for f in range(k):
        train = tuple(
            SplitItem(i, ex.text, ex.label, ex.label) for i, ex in enumerate(d.examples) if fold_of[i] != f
        )
        test = tuple(
            SplitItem(i, ex.text, ex.label, ex.label) for i, ex in enumerate(d.examples) if fold_of[i] == f
        )
        splits.append(DataSplit(train, test))
    return splits


def check_split(d: Dataset, part: ClassPartition, s: DataSplit) -> list[str]:
    """Return every violated DataSplit invariant (empty when the split is sound)."""
    problems = []
    train_ids = [it.index for it in s.train]
    test_ids = [it.index for it in s.test]
    if len(set(train_ids)) != len(train_ids) or len(set(test_ids)) != len(test_ids):
        problems.append("an example instance appears twice on one side")
    both = set(train_ids) & set(test_ids)
    if both:
        problems.append(f"{len(both)} example(s) appear in both train and test")
    train_labels = {it.label for it in s.train}
    test_real = {it.label for it in s.test if it.label != OUT_OF_SCOPE}
    if test_real - train_labels:
        problems.append(f"test labels unseen in training: {sorted(test_real - train_labels)}")
    neg_origins = {it.origin_label for it in s.test if it.label == OUT_OF_SCOPE}
    if neg_origins - part.small_labels:
        problems.append(f"negatives from retained classes: {sorted(neg_origins - part.small_labels)}")
    if neg_origins & train_labels:
        problems.append(f"negative classes leaked into training: {sorted(neg_origins & train_labels)}")
    if neg_origins - s.test_labels:
        problems.append("negatives outside the chosen test label set")
    for label in part.large_labels:
        if label not in train_labels or label not in test_real:
            problems.append(f"retained class {label!r} missing from one side")
    for it in s.train + s.test:
        if d.examples[it.index].text != it.text or d.examples[it.index].label != it.origin_label:
            problems.append(f"item {it.index} does not match its source example")
            break
    return problems


def partition_for(d: Dataset | Iterable, cfg: NexCvConfig) -> ClassPartition:
    return cfg.select(class_stats(d))
