"""NumPy implementation of the model kernels; used when the compiled module is absent."""

from __future__ import annotations

import numpy as np


def _row_ids(indptr: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))


def _scatter(rows: np.ndarray, values: np.ndarray, n_rows: int) -> np.ndarray:
    """Sum ``values`` (nnz, C) into an (n_rows, C) array by row; bincount beats np.add.at."""
    c = values.shape[1]
    flat = (rows[:, None] * c + np.arange(c)).ravel()
    return np.bincount(flat, weights=values.ravel(), minlength=n_rows * c).reshape(n_rows, c)


def _scores(indptr, indices, data, W, b):
    n = len(indptr) - 1
    return _scatter(_row_ids(indptr), data[:, None] * W[:, indices].T, n) + b


def loss_grad(indptr, indices, data, y, W, b):
    """Summed negative log-likelihood and its gradients (unregularized, unaveraged)."""
    z = _scores(indptr, indices, data, W, b)
    n = z.shape[0]
    m = z.max(axis=1, keepdims=True)
    e = np.exp(z - m)
    s = e.sum(axis=1, keepdims=True)
    lse = (m + np.log(s))[:, 0]
    loss = float(np.sum(lse - z[np.arange(n), y]))
    r = e / s
    r[np.arange(n), y] -= 1.0
    gb = r.sum(axis=0)
    gW = _scatter(indices, data[:, None] * r[_row_ids(indptr)], W.shape[1]).T
    return loss, np.ascontiguousarray(gW), gb


def predict_proba(indptr, indices, data, W, b):
    z = _scores(indptr, indices, data, W, b)
    z -= z.max(axis=1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=1, keepdims=True)
    return z
