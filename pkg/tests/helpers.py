"""Shared test fixtures and stub classifiers."""

import random
import sys
from pathlib import Path

from nexcv.classifier import Prediction
from nexcv.dataset import Dataset, LabeledExample

STUBS = Path(__file__).parent / "stubs"


def stub_command(name: str) -> list[str]:
    return [sys.executable, str(STUBS / name)]


def make_dataset(counts: dict[str, int], name: str = "fixture") -> Dataset:
    """One distinct token per class plus a running index, so classes are separable."""
    examples = []
    for label, n in counts.items():
        for i in range(n):
            examples.append(LabeledExample(f"tok{label.lower()} item{label.lower()}{i}", label))
    return Dataset(tuple(examples), name=name)


def plant_confusion(d: Dataset, a: str, b: str, fraction: float, seed: int) -> Dataset:
    """Relabel ``fraction`` of class a's examples as b and vice versa."""
    rng = random.Random(seed)
    examples = list(d.examples)
    for src, dst in ((a, b), (b, a)):
        idx = [i for i, ex in enumerate(d.examples) if ex.label == src]
        for i in rng.sample(idx, round(fraction * len(idx))):
            examples[i] = LabeledExample(examples[i].text, dst)
    return Dataset(tuple(examples), name=f"{d.name}-noisy")


NO_GUESS = "no-guess"


class AbstainStub:
    """Always abstains; its recorded guess is a label never trained, so always wrong."""

    def fit(self, examples):
        self.first = min(lab for _, lab in examples)

    def predict(self, text):
        return Prediction(NO_GUESS, 0.0)


class OracleStub:
    """Knows the gold label of every text it was trained on; answers with full confidence."""

    def fit(self, examples):
        self.table = dict(examples)
        self.default = min(self.table.values())

    def predict(self, text):
        return Prediction(self.table.get(text, self.default), 1.0)
