"""Labeled text corpora: loading, validation, class statistics and synthetic fixtures."""

from __future__ import annotations

import csv
import io
import json
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

OUT_OF_SCOPE = "__OUT_OF_SCOPE__"

_LINE_BREAKS = ("\n", "\r", "\v", "\f", "\x1c", "\x1d", "\x1e", "\x85", "\u2028", "\u2029")


class DatasetError(ValueError):
    """Raised for malformed input files and invalid examples."""


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: str

    def __post_init__(self) -> None:
        if not isinstance(self.text, str) or not self.text.strip():
            raise DatasetError("example text must be a non-empty string")
        if not isinstance(self.label, str) or not self.label:
            raise DatasetError("example label must be a non-empty string")
        if any(ch in self.label for ch in _LINE_BREAKS):
            raise DatasetError(f"label {self.label!r} contains a line break")
        if self.label == OUT_OF_SCOPE:
            raise DatasetError(f"label {OUT_OF_SCOPE!r} is reserved")


@dataclass(frozen=True)
class Dataset:
    examples: tuple[LabeledExample, ...]
    name: str = "dataset"

    def __post_init__(self) -> None:
        object.__setattr__(self, "examples", tuple(self.examples))

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    @property
    def labels(self) -> list[str]:
        return sorted({ex.label for ex in self.examples})

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], name: str = "dataset") -> "Dataset":
        return cls(tuple(LabeledExample(t, l) for t, l in pairs), name=name)


@dataclass(frozen=True)
class ClassStats:
    """Per-label counts; ``labels`` runs from least to most populated, ties by label."""

    counts: dict[str, int] = field(default_factory=dict)
    total: int = 0
    labels: tuple[str, ...] = ()

    @classmethod
    def from_counts(cls, counts: dict[str, int]) -> "ClassStats":
        ordered = tuple(sorted(counts, key=lambda lab: (counts[lab], lab)))
        return cls(counts=dict(counts), total=sum(counts.values()), labels=ordered)

    def __getitem__(self, label: str) -> int:
        return self.counts[label]


def class_stats(d: Dataset | Iterable[LabeledExample]) -> ClassStats:
    counts = Counter(ex.label for ex in d)
    return ClassStats.from_counts(dict(counts))


# --------------------------------------------------------------------------- #
# I/O


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt:
        fmt = fmt.lower()
    else:
        fmt = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
    if fmt not in ("csv", "jsonl"):
        raise DatasetError(f"unknown dataset format {fmt!r} (expected csv or jsonl)")
    return fmt


def _read_text(path: Path) -> str:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DatasetError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DatasetError(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})") from exc


def _load_csv(content: str, path: Path) -> list[LabeledExample]:
    reader = csv.reader(io.StringIO(content, newline=""), strict=True)
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError(f"{path}: empty file") from None
    except csv.Error as exc:
        raise DatasetError(f"{path}: line 1: {exc}") from exc
    if [h.strip().lower() for h in header] != ["text", "label"]:
        raise DatasetError(f"{path}: line 1: header must be 'text,label', got {header!r}")
    examples = []
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            raise DatasetError(f"{path}: line {reader.line_num}: {exc}") from exc
        if not row:
            continue
        if len(row) != 2:
            raise DatasetError(
                f"{path}: line {reader.line_num}: expected 2 fields, got {len(row)}"
            )
        try:
            examples.append(LabeledExample(row[0], row[1]))
        except DatasetError as exc:
            raise DatasetError(f"{path}: line {reader.line_num}: {exc}") from None
    return examples


def _load_jsonl(content: str, path: Path) -> list[LabeledExample]:
    examples = []
    # JSON strings may legally hold U+2028 and friends, so split on newlines only.
    for lineno, line in enumerate(content.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise DatasetError(f"{path}: line {lineno}: expected a JSON object")
        for key in ("text", "label"):
            if key not in record:
                raise DatasetError(f"{path}: line {lineno}: missing key {key!r}")
            if not isinstance(record[key], str):
                raise DatasetError(f"{path}: line {lineno}: {key!r} must be a string")
        try:
            examples.append(LabeledExample(record["text"], record["label"]))
        except DatasetError as exc:
            raise DatasetError(f"{path}: line {lineno}: {exc}") from None
    return examples


def load_dataset(path: str | Path, format: str | None = None, name: str | None = None) -> Dataset:
    """Read a ``text,label`` CSV or a JSONL file into a :class:`Dataset`.

    The format is inferred from the suffix when not given. Errors carry the
    offending line number.
    """
    path = Path(path)
    fmt = _infer_format(path, format)
    content = _read_text(path)
    if content.startswith("\ufeff"):
        content = content[1:]
    if not content.strip():
        raise DatasetError(f"{path}: empty file")
    examples = _load_csv(content, path) if fmt == "csv" else _load_jsonl(content, path)
    if not examples:
        raise DatasetError(f"{path}: no records")
    return Dataset(tuple(examples), name=name or path.stem)


def dump_dataset(d: Dataset, format: str = "csv") -> str:
    fmt = format.lower()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["text", "label"])
        for ex in d:
            writer.writerow([ex.text, ex.label])
        return buf.getvalue()
    if fmt == "jsonl":
        return "".join(
            json.dumps({"text": ex.text, "label": ex.label}, ensure_ascii=False) + "\n"
            for ex in d
        )
    raise DatasetError(f"unknown dataset format {format!r}")


def save_dataset(d: Dataset, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = _infer_format(path, format)
    path.write_bytes(dump_dataset(d, fmt).encode("utf-8"))


# --------------------------------------------------------------------------- #
# Validation


@dataclass(frozen=True)
class Issue:
    kind: str
    message: str
    labels: tuple[str, ...] = ()
    text: str | None = None

    def __str__(self) -> str:
        return self.message


def validate_dataset(d: Dataset) -> list[Issue]:
    """Data-quality problems that affect evaluation. Never raises."""
    issues: list[Issue] = []
    stats = class_stats(d)
    if len(stats.labels) < 2:
        issues.append(
            Issue("too_few_labels", f"fewer than 2 labels ({len(stats.labels)} present)",
                  labels=stats.labels)
        )
    for label in sorted(lab for lab, n in stats.counts.items() if n == 1):
        issues.append(
            Issue("singleton_class", f"label {label!r} has exactly 1 example", labels=(label,))
        )
    by_text: dict[str, set[str]] = defaultdict(set)
    for ex in d:
        by_text[ex.text].add(ex.label)
    for text, labels in by_text.items():
        if len(labels) > 1:
            ordered = tuple(sorted(labels))
            issues.append(
                Issue(
                    "cross_label_duplicate",
                    f"text {text!r} appears under labels {', '.join(ordered)}",
                    labels=ordered,
                    text=text,
                )
            )
    return issues


# --------------------------------------------------------------------------- #
# Synthetic corpora

_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z")
_VOWELS = ("a", "e", "i", "o", "u")


def _token(index: int) -> str:
    # Bijective base-70 syllable encoding; distinct indices give distinct tokens.
    syllables = [o + v for o in _ONSETS for v in _VOWELS]
    parts = []
    n = index + 1
    while n > 0:
        n -= 1
        parts.append(syllables[n % len(syllables)])
        n //= len(syllables)
    # Prefix keeps short tokens from colliding with common words.
    return "q" + "".join(reversed(parts))


def synthetic_vocabularies(
    n_large: int, n_small: int, vocab_per_class: int, overlap_fraction: float
) -> list[list[str]]:
    """Token vocabulary per class, large classes first.

    Adjacent pairs share ``round(overlap_fraction * vocab_per_class)`` tokens:
    consecutive large classes form a chain, and small class ``j`` is attached
    to large class ``j % n_large`` (its topical parent), borrowing a rotating
    slice of the parent's own tokens. The parent link is what makes a
    withheld small class look in-domain at test time.
    """
    n_shared = int(round(overlap_fraction * vocab_per_class))
    own = [
        [_token(c * vocab_per_class + j) for j in range(vocab_per_class)]
        for c in range(n_large + n_small)
    ]
    vocabs = [list(v) for v in own]
    if n_shared:
        for i in range(1, n_large):
            vocabs[i][:n_shared] = own[i - 1][vocab_per_class - n_shared:]
        for j in range(n_small):
            parent = vocabs[j % n_large]
            # Start past the slice the parent itself borrowed from its predecessor.
            offset = n_shared + (j // n_large) * n_shared
            borrowed = [parent[(offset + x) % vocab_per_class] for x in range(n_shared)]
            vocabs[n_large + j][:n_shared] = borrowed
    return vocabs


def generate_synthetic(
    n_large: int = 5,
    large_size: int = 100,
    n_small: int = 20,
    small_size_range: Sequence[int] = (5, 10),
    vocab_per_class: int = 20,
    overlap_fraction: float = 0.0,
    seed: int = 0,
    text_length: Sequence[int] = (3, 12),
    name: str | None = None,
) -> Dataset:
    """A few large classes plus a long tail of small ones.

    Each class draws its texts from its own token vocabulary. With
    ``overlap_fraction > 0`` adjacent classes share that fraction of their
    vocabularies (see :func:`synthetic_vocabularies`), which produces
    controllable confusion between them.
    """
    lo, hi = small_size_range
    tmin, tmax = text_length
    if n_large < 1:
        raise DatasetError("n_large must be >= 1")
    if large_size < 1 or n_small < 0 or (n_small and lo < 1):
        raise DatasetError("class sizes must be >= 1")
    if lo > hi:
        raise DatasetError(f"empty small size range [{lo}, {hi}]")
    if vocab_per_class < 1:
        raise DatasetError("vocab_per_class must be >= 1")
    if not 0.0 <= overlap_fraction <= 1.0:
        raise DatasetError("overlap_fraction must lie in [0, 1]")
    if tmin < 1 or tmin > tmax:
        raise DatasetError(f"bad text length range [{tmin}, {tmax}]")

    rng = random.Random(seed)
    labels = [f"large_{i:02d}" for i in range(n_large)] + [f"small_{i:02d}" for i in range(n_small)]
    sizes = [large_size] * n_large + [rng.randint(lo, hi) for _ in range(n_small)]
    vocabs = synthetic_vocabularies(n_large, n_small, vocab_per_class, overlap_fraction)

    examples = []
    for label, size, vocab in zip(labels, sizes, vocabs):
        for _ in range(size):
            length = rng.randint(tmin, tmax)
            text = " ".join(rng.choice(vocab) for _ in range(length))
            examples.append(LabeledExample(text, label))
    rng.shuffle(examples)
    return Dataset(tuple(examples), name=name or f"synthetic-{seed}")
