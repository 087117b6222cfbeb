"""Bundled baseline: TF-IDF token features with L2-regularized multinomial logistic regression."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .base import ClassifierError, NotFittedError, Prediction

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not a letter or digit."""
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class BaselineConfig:
    l2_strength: float = 1e-4
    max_epochs: int = 500
    tolerance: float = 1e-6
    step_size: float = 1.0
    step_growth: float = 1.1
    # Training is fully deterministic (zero init, full batch); the seed is kept
    # for interface symmetry with stochastic classifiers.
    seed: int = 0


@dataclass(frozen=True)
class CsrDocs:
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @property
    def n_docs(self) -> int:
        return len(self.indptr) - 1

    def dense(self, n_features: int) -> np.ndarray:
        out = np.zeros((self.n_docs, n_features))
        for i in range(self.n_docs):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            out[i, self.indices[lo:hi]] += self.data[lo:hi]
        return out


@dataclass(frozen=True)
class Vectorizer:
    """Sublinear TF times smoothed IDF, L2-normalized per document."""

    vocabulary: dict[str, int]
    idf: np.ndarray

    @classmethod
    def fit(cls, token_lists: Sequence[list[str]]) -> "Vectorizer":
        df: Counter[str] = Counter()
        for toks in token_lists:
            df.update(set(toks))
        vocab = {tok: i for i, tok in enumerate(sorted(df))}
        n = len(token_lists)
        idf = np.array([math.log((1 + n) / (1 + df[tok])) + 1.0 for tok in sorted(df)])
        return cls(vocab, idf)

    def transform(self, token_lists: Sequence[list[str]]) -> CsrDocs:
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for toks in token_lists:
            counts = Counter(t for t in toks if t in self.vocabulary)
            cols = sorted(self.vocabulary[t] for t in counts)
            inv = {self.vocabulary[t]: c for t, c in counts.items()}
            vals = [(1.0 + math.log(inv[j])) * self.idf[j] for j in cols]
            norm = math.sqrt(sum(v * v for v in vals))
            if norm > 0:
                vals = [v / norm for v in vals]
            indices.extend(cols)
            data.extend(vals)
            indptr.append(len(indices))
        return CsrDocs(
            np.asarray(indptr, dtype=np.int64),
            np.asarray(indices, dtype=np.int64),
            np.asarray(data, dtype=np.float64),
        )


def objective(W, b, X: CsrDocs, y, l2: float, backend=None):
    """Mean log-loss plus ``l2/2 * ||W||^2`` (bias unpenalized), with gradients."""
    kern = backend or _kernels
    n = X.n_docs
    loss, gW, gb = kern.loss_grad(X.indptr, X.indices, X.data, y, W, b)
    loss = loss / n + 0.5 * l2 * float(np.sum(W * W))
    gW = gW / n + l2 * W
    gb = gb / n
    return loss, gW, gb


@dataclass
class TrainingTrace:
    losses: list[float] = field(default_factory=list)
    epochs: int = 0
    converged: bool = False
    final_step: float = 0.0
    rejected: int = 0


@dataclass(frozen=True)
class BaselineModel:
    vectorizer: Vectorizer
    labels: tuple[str, ...]
    weights: np.ndarray  # (n_classes, n_features)
    bias: np.ndarray

    def proba(self, texts: Sequence[str], backend=None) -> np.ndarray:
        kern = backend or _kernels
        X = self.vectorizer.transform([tokenize(t) for t in texts])
        return kern.predict_proba(X.indptr, X.indices, X.data, self.weights, self.bias)

    def predict(self, texts: Sequence[str]) -> list[Prediction]:
        if not texts:
            return []
        P = self.proba(texts)
        best = P.argmax(axis=1)
        return [Prediction(self.labels[j], float(P[i, j])) for i, j in enumerate(best)]


def baseline_fit(
    train: Sequence[tuple[str, str]],
    config: BaselineConfig | None = None,
    backend=None,
    trace: TrainingTrace | None = None,
) -> BaselineModel:
    """Train by full-batch gradient descent from zero weights.

    A step that would increase the loss is rejected and the step size
    halved, so accepted losses never increase. Stops when the gradient norm
    falls below ``tolerance`` or after ``max_epochs`` iterations.

    The weight step is scaled by ``1 / (1 + l2)``. Rows of X have unit norm,
    so this matches the curvature of the weight block to that of the
    unpenalized bias and keeps strong regularization from stalling the bias.
    """
    cfg = config or BaselineConfig()
    labels = tuple(sorted({lab for _, lab in train}))
    if len(labels) < 2:
        raise ClassifierError(f"need at least 2 distinct labels to train, got {len(labels)}")
    token_lists = [tokenize(text) for text, _ in train]
    if not any(token_lists):
        raise ClassifierError("every training text tokenizes to nothing")
    vec = Vectorizer.fit(token_lists)
    X = vec.transform(token_lists)
    index = {lab: i for i, lab in enumerate(labels)}
    y = np.array([index[lab] for _, lab in train], dtype=np.int64)

    W = np.zeros((len(labels), len(vec.vocabulary)))
    b = np.zeros(len(labels))
    loss, gW, gb = objective(W, b, X, y, cfg.l2_strength, backend)
    trace = trace if trace is not None else TrainingTrace()
    trace.losses.append(loss)
    step = cfg.step_size
    w_scale = 1.0 / (1.0 + cfg.l2_strength)
    for epoch in range(cfg.max_epochs):
        gnorm = math.sqrt(float(np.sum(gW * gW) + np.sum(gb * gb)))
        if gnorm < cfg.tolerance:
            trace.converged = True
            break
        W_new = W - (step * w_scale) * gW
        b_new = b - step * gb
        loss_new, gW_new, gb_new = objective(W_new, b_new, X, y, cfg.l2_strength, backend)
        if loss_new <= loss:
            W, b, loss, gW, gb = W_new, b_new, loss_new, gW_new, gb_new
            trace.losses.append(loss)
            step *= cfg.step_growth
        else:
            step *= 0.5
            trace.rejected += 1
        trace.epochs = epoch + 1
    trace.final_step = step
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
        raise ClassifierError("training diverged: non-finite weights")
    return BaselineModel(vec, labels, W, b)


class BaselineClassifier:
    """:class:`~nexcv.classifier.base.Classifier` wrapper around :func:`baseline_fit`."""

    def __init__(self, config: BaselineConfig | None = None, **hyper):
        self.config = config or BaselineConfig(**hyper)
        self.model: BaselineModel | None = None

    def fit(self, examples: Sequence[tuple[str, str]]) -> None:
        self.model = baseline_fit(list(examples), self.config)

    def _require_model(self) -> BaselineModel:
        if self.model is None:
            raise NotFittedError("predict called before fit")
        return self.model

    def predict(self, text: str) -> Prediction:
        return self._require_model().predict([text])[0]

    def predict_batch(self, texts: Sequence[str]) -> list[Prediction]:
        return self._require_model().predict(list(texts))
