"""The black-box classifier contract shared by the baseline and external engines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol, Sequence, runtime_checkable


class ClassifierError(RuntimeError):
    pass


class NotFittedError(ClassifierError):
    pass


@dataclass(frozen=True)
class Prediction:
    label: str
    confidence: float


@runtime_checkable
class Classifier(Protocol):
    """Anything with ``fit(pairs)`` and ``predict(text) -> Prediction``.

    ``pairs`` is a sequence of ``(text, label)`` tuples. ``predict`` before
    ``fit`` must raise, and ``predict`` must be deterministic once fitted.
    """

    def fit(self, examples: Sequence[tuple[str, str]]) -> None: ...

    def predict(self, text: str) -> Prediction: ...


ClassifierFactory = Callable[[], Classifier]


def predict_many(c: Classifier, texts: Sequence[str]) -> list[Prediction]:
    batch = getattr(c, "predict_batch", None)
    if batch is not None:
        return list(batch(texts))
    return [c.predict(t) for t in texts]


def close_quietly(c: object) -> None:
    close = getattr(c, "close", None)
    if close is not None:
        try:
            close()
        except Exception:
            pass
