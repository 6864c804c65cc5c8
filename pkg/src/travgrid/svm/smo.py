"""Sequential minimal optimization for the soft-margin SVM dual.

Solves

    min_a  0.5 a'Qa - e'a    s.t.  0 <= a_i <= C_i,  y'a = 0

with Q[i, j] = y_i y_j k(x_i, x_j), using second-order working-set
selection: the first index maximizes the KKT violation among the upper
candidate set, the second minimizes the resulting decrease estimate
-b^2/eta among the lower set. Iteration stops when the maximal violating
pair satisfies m(a) - M(a) <= tol, which bounds every KKT residual by tol.

The gradient g = Qa - e is maintained incrementally, so each iteration
touches two kernel columns. Columns are served by a least-recently-used
row cache; small problems effectively keep the whole Gram matrix.
"""

from __future__ import annotations

import warnings
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .kernels import kernel_diagonal, kernel_matrix

# Curvature floor for non-positive-definite pairs (LIBSVM's tau).
_TAU = 1e-12


class KernelColumns:
    """LRU cache of kernel columns k(x_i, X) for a fixed training set."""

    def __init__(self, x: np.ndarray, kind: str, gamma: float, degree: int,
                 coef0: float, capacity: int):
        self.x = x
        self.kind = kind
        self.gamma = gamma
        self.degree = degree
        self.coef0 = coef0
        self.capacity = max(int(capacity), 2)
        self.diag = kernel_diagonal(x, kind, gamma, degree, coef0)
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()

    def column(self, i: int) -> np.ndarray:
        row = self._rows.get(i)
        if row is not None:
            self._rows.move_to_end(i)
            return row
        row = kernel_matrix(self.x[i:i + 1], self.x, self.kind,
                            self.gamma, self.degree, self.coef0)[0]
        self._rows[i] = row
        while len(self._rows) > self.capacity:
            self._rows.popitem(last=False)
        return row


@dataclass
class SmoResult:
    alpha: np.ndarray
    bias: float
    iterations: int
    converged: bool
    objective: float
    objective_history: list[float] = field(default_factory=list)


def dual_objective(alpha: np.ndarray, grad: np.ndarray) -> float:
    """Value of the maximized dual, e'a - 0.5 a'Qa, from the gradient."""
    return 0.5 * float(alpha.sum() - alpha @ grad)


def _select_pair(minus_yg, up, low, diag, col_i, i, tol):
    """Second index of the working set, or -1 when converged."""
    m = minus_yg[i]
    big_m = np.min(np.where(low, minus_yg, np.inf))
    if m - big_m <= tol:
        return -1
    b_val = m - minus_yg
    eta = np.maximum(diag[i] + diag - 2.0 * col_i, _TAU)
    score = np.where(low & (b_val > 0.0), -(b_val * b_val) / eta, np.inf)
    return int(np.argmin(score))


def smo_solve(x: np.ndarray, y: np.ndarray, c: float, *,
              kernel: str = "rbf", gamma: float = 0.1, degree: int = 3,
              coef0: float = 0.0, tol: float = 1e-3,
              max_iter: int = 100_000, pos_weight: float = 1.0,
              cache_columns: int = 4096,
              track_objective: bool = False) -> SmoResult:
    """Train the dual variables for labels y in {-1, +1}."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    if x.shape[0] != n:
        raise ValueError("feature/label count mismatch")
    if not np.isfinite(x).all():
        raise ValueError("training features must be finite")
    if not np.all(np.abs(y) == 1.0):
        raise ValueError("labels must be +1 or -1")
    if np.all(y > 0) or np.all(y < 0):
        raise ValueError("training data contains a single class")

    box = np.where(y > 0, c * pos_weight, c)
    alpha = np.zeros(n)
    grad = np.full(n, -1.0)
    cache = KernelColumns(x, kernel, gamma, degree, coef0, cache_columns)
    diag = cache.diag
    history: list[float] = []

    pos = y > 0
    iterations = 0
    converged = False
    while iterations < max_iter:
        minus_yg = -y * grad
        up = np.where(pos, alpha < box, alpha > 0.0)
        low = np.where(pos, alpha > 0.0, alpha < box)
        if not up.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, minus_yg, -np.inf)))
        col_i = cache.column(i)
        j = _select_pair(minus_yg, up, low, diag, col_i, i, tol)
        if j < 0:
            converged = True
            break
        col_j = cache.column(j)

        # Unconstrained step along the feasible direction, then box clip.
        eta = max(diag[i] + diag[j] - 2.0 * col_i[j], _TAU)
        delta = (minus_yg[i] - minus_yg[j]) / eta
        limit_i = box[i] - alpha[i] if y[i] > 0 else alpha[i]
        limit_j = alpha[j] if y[j] > 0 else box[j] - alpha[j]
        delta = min(delta, limit_i, limit_j)

        new_i = alpha[i] + y[i] * delta
        new_j = alpha[j] - y[j] * delta
        # Snap to the active bound so support-vector sets stay exact.
        if delta == limit_i:
            new_i = box[i] if y[i] > 0 else 0.0
        if delta == limit_j:
            new_j = 0.0 if y[j] > 0 else box[j]
        d_i = new_i - alpha[i]
        d_j = new_j - alpha[j]
        alpha[i] = new_i
        alpha[j] = new_j
        grad += y * (col_i * (y[i] * d_i) + col_j * (y[j] * d_j))
        iterations += 1
        if track_objective:
            history.append(dual_objective(alpha, grad))

    if not converged:
        warnings.warn(
            f"SMO stopped after {max_iter} iterations before reaching "
            f"tolerance {tol}; returning the best iterate", RuntimeWarning)

    bias = _compute_bias(alpha, grad, y, box, tol)
    return SmoResult(alpha=alpha, bias=bias, iterations=iterations,
                     converged=converged,
                     objective=dual_objective(alpha, grad),
                     objective_history=history)


def _compute_bias(alpha, grad, y, box, tol):
    """Average -y g over free vectors; midpoint of the bounds otherwise."""
    minus_yg = -y * grad
    free = (alpha > 0.0) & (alpha < box)
    if free.any():
        return float(minus_yg[free].mean())
    pos = y > 0
    up = np.where(pos, alpha < box, alpha > 0.0)
    low = np.where(pos, alpha > 0.0, alpha < box)
    m = np.max(np.where(up, minus_yg, -np.inf))
    big_m = np.min(np.where(low, minus_yg, np.inf))
    return float((m + big_m) / 2.0)


def kkt_violation(x, y, alpha, bias, c, *, kernel="rbf", gamma=0.1,
                  degree=3, coef0=0.0, pos_weight=1.0) -> float:
    """Largest violation of the optimality conditions, for diagnostics.

    Measures max(0, 1 - y f) where alpha = 0, max(0, y f - 1) where
    alpha = C and |y f - 1| on free vectors.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    k = kernel_matrix(x, x, kernel, gamma, degree, coef0)
    f = k @ (alpha * y) + bias
    margin = y * f
    box = np.where(y > 0, c * pos_weight, c)
    at_zero = alpha <= 0.0
    at_c = alpha >= box
    free = ~at_zero & ~at_c
    worst = 0.0
    if at_zero.any():
        worst = max(worst, float(np.max(1.0 - margin[at_zero])))
    if at_c.any():
        worst = max(worst, float(np.max(margin[at_c] - 1.0)))
    if free.any():
        worst = max(worst, float(np.max(np.abs(margin[free] - 1.0))))
    return max(worst, 0.0)
