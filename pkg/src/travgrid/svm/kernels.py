"""Kernel functions shared by training and inference."""

from __future__ import annotations

import numpy as np

KERNELS = ("rbf", "linear", "poly")


def kernel_matrix(a: np.ndarray, b: np.ndarray, kind: str,
                  gamma: float = 0.1, degree: int = 3,
                  coef0: float = 0.0) -> np.ndarray:
    """Gram matrix K[i, j] = k(a[i], b[j]).

    ``rbf``: exp(-gamma * ||a - b||^2), ``linear``: a.b,
    ``poly``: (gamma * a.b + coef0)^degree.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"kernel dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if kind == "linear":
        return a @ b.T
    if kind == "poly":
        return (gamma * (a @ b.T) + coef0) ** degree
    if kind == "rbf":
        sq = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :]
              - 2.0 * (a @ b.T))
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-gamma * sq)
    raise ValueError(f"unknown kernel {kind!r}; expected one of {KERNELS}")


def kernel_diagonal(a: np.ndarray, kind: str, gamma: float = 0.1,
                    degree: int = 3, coef0: float = 0.0) -> np.ndarray:
    """Diagonal k(a[i], a[i]) without forming the full matrix."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    if kind == "rbf":
        return np.ones(len(a))
    sq = np.sum(a * a, axis=1)
    if kind == "linear":
        return sq
    if kind == "poly":
        return (gamma * sq + coef0) ** degree
    raise ValueError(f"unknown kernel {kind!r}; expected one of {KERNELS}")
