"""Linear hinge-loss classifier trained by stochastic subgradient descent.

The training objective is

    0.5 * ||w||^2 + lam * sum_i c_i * max(0, 1 - y_i * (w . x_i + b))

with optional per-class weights c_i that equalize the total positive and
negative mass (one mined positive per video faces hundreds of sampled
negatives; unweighted training collapses to the negative class).

The solver is primal SVM-SGD: one sample per step, learning rate
``eta_t = 1 / (lam_scaled * t)`` with ``lam_scaled = 1 / (lam * n)``, weight
decay ``(1 - 1/t)`` per step, a projection of ``w`` onto the ball of radius
``1 / sqrt(lam_scaled)`` for stability, and a tail average of the second
half of all iterates as the returned model. The bias is updated with the
same step sizes but is neither regularized nor decayed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import derive_seed

__all__ = [
    "LinearModel",
    "score",
    "score_many",
    "hinge_objective",
    "hinge_gradient",
    "train",
]


@dataclass(eq=False)
class LinearModel:
    """Weights, bias, and the regularization trade-off they were trained with."""

    weights: np.ndarray
    bias: float
    lam: float

    def __post_init__(self) -> None:
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
        if w.ndim != 1:
            raise ValueError(f"weights must be a 1-D vector, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or not math.isfinite(self.bias):
            raise ValueError("model parameters must be finite")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        w.setflags(write=False)
        self.weights = w
        self.bias = float(self.bias)
        self.lam = float(self.lam)

    @property
    def dim(self) -> int:
        return len(self.weights)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinearModel):
            return NotImplemented
        return (np.array_equal(self.weights, other.weights)
                and self.bias == other.bias and self.lam == other.lam)


def score(m: LinearModel, z: np.ndarray) -> float:
    """Decision value w . z + b."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (m.dim,):
        raise ValueError(f"feature has shape {z.shape}, model expects ({m.dim},)")
    return float(m.weights @ z + m.bias)


def score_many(m: LinearModel, Z: np.ndarray) -> np.ndarray:
    """Decision values for the rows of an (n, D) matrix."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != m.dim:
        raise ValueError(f"feature matrix has shape {Z.shape}, model expects (*, {m.dim})")
    return Z @ m.weights + m.bias


def _as_matrix(vectors, name: str) -> np.ndarray:
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"degenerate training set: {name} is empty")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def _hinges(m: LinearModel, positives: np.ndarray, negatives: np.ndarray):
    margins_pos = score_many(m, positives)
    margins_neg = -score_many(m, negatives)
    return np.maximum(0.0, 1.0 - margins_pos), np.maximum(0.0, 1.0 - margins_neg)


def hinge_objective(m: LinearModel, positives, negatives) -> float:
    """Unweighted objective value 0.5*||w||^2 + lam * sum of hinge losses."""
    P = _as_matrix(positives, "positives")
    Q = _as_matrix(negatives, "negatives")
    hp, hq = _hinges(m, P, Q)
    return float(0.5 * m.weights @ m.weights + m.lam * (hp.sum() + hq.sum()))


def hinge_gradient(m: LinearModel, positives, negatives) -> tuple[np.ndarray, float]:
    """Subgradient of ``hinge_objective`` at the current parameters.

    A sample contributes iff its margin is strictly below 1, matching the
    convention of the SGD update (the subgradient at a kink is taken as 0).
    """
    P = _as_matrix(positives, "positives")
    Q = _as_matrix(negatives, "negatives")
    viol_p = score_many(m, P) < 1.0
    viol_q = -score_many(m, Q) < 1.0
    grad_w = m.weights - m.lam * (P[viol_p].sum(axis=0) - Q[viol_q].sum(axis=0))
    grad_b = -m.lam * (float(viol_p.sum()) - float(viol_q.sum()))
    return grad_w, grad_b


def _sgd_epoch_py(X, y, cw, order, w, b, t0, lam_scaled, radius, tail_start, w_sum):
    """One shuffled pass of per-sample subgradient steps.

    Mutates ``w`` and ``w_sum`` in place; returns the updated bias and the
    bias mass accumulated for the tail average. Written as scalar loops so
    the jitted and pure-Python versions are arithmetically identical.
    """
    n, d = X.shape
    b_sum = 0.0
    r2 = radius * radius
    for k in range(n):
        i = order[k]
        t = t0 + k + 1
        eta = 1.0 / (lam_scaled * t)
        s = b
        for j in range(d):
            s += w[j] * X[i, j]
        decay = 1.0 - 1.0 / t
        for j in range(d):
            w[j] *= decay
        if y[i] * s < 1.0:
            coef = eta * cw[i] * y[i]
            for j in range(d):
                w[j] += coef * X[i, j]
            b += coef
        nrm2 = 0.0
        for j in range(d):
            nrm2 += w[j] * w[j]
        if nrm2 > r2:
            shrink = radius / math.sqrt(nrm2)
            for j in range(d):
                w[j] *= shrink
        if b > radius:
            b = radius
        elif b < -radius:
            b = -radius
        if t > tail_start:
            for j in range(d):
                w_sum[j] += w[j]
            b_sum += b
    return b, b_sum


try:
    from numba import njit

    _sgd_epoch = njit(cache=True)(_sgd_epoch_py)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _sgd_epoch = _sgd_epoch_py


def train(positives, negatives, *, lam: float = 100.0, seed: int = 0,
          epochs: int = 50, balance_classes: bool = True) -> LinearModel:
    """Fit a linear hinge-loss classifier.

    Args:
        positives: (P, D) array-like of positive feature vectors.
        negatives: (Q, D) array-like of negative feature vectors.
        lam: loss weight of the hinge sum relative to 0.5*||w||^2.
        seed: RNG seed controlling the per-epoch sample order; identical
            inputs and seed give a bitwise-identical model.
        epochs: shuffled passes over the data.
        balance_classes: reweight hinge terms so both classes carry equal
            total weight.

    Raises:
        ValueError: on an empty class or mismatched feature dimensions.
    """
    P = _as_matrix(positives, "positives")
    Q = _as_matrix(negatives, "negatives")
    if P.shape[1] != Q.shape[1]:
        raise ValueError(f"dimension mismatch: positives are {P.shape[1]}-d, "
                         f"negatives are {Q.shape[1]}-d")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if not lam > 0:
        raise ValueError("lam must be positive")

    X = np.ascontiguousarray(np.vstack([P, Q]))
    n, d = X.shape
    y = np.empty(n, dtype=np.float64)
    y[:len(P)] = 1.0
    y[len(P):] = -1.0
    cw = np.ones(n, dtype=np.float64)
    if balance_classes:
        cw[:len(P)] = n / (2.0 * len(P))
        cw[len(P):] = n / (2.0 * len(Q))

    lam_scaled = 1.0 / (lam * n)
    radius = math.sqrt(lam * n)
    total_steps = epochs * n
    tail_start = total_steps // 2

    rng = np.random.Generator(np.random.Philox(derive_seed(seed, "sgd")))
    w = np.zeros(d, dtype=np.float64)
    w_sum = np.zeros(d, dtype=np.float64)
    b = 0.0
    b_sum = 0.0
    for e in range(epochs):
        order = rng.permutation(n)
        b, b_tail = _sgd_epoch(X, y, cw, order, w, b, e * n,
                               lam_scaled, radius, tail_start, w_sum)
        b_sum += b_tail

    n_tail = total_steps - tail_start
    model = LinearModel(weights=w_sum / n_tail, bias=b_sum / n_tail, lam=lam)
    # subgradient-method guard: never return an iterate worse than the
    # trivial start (all margins violated, objective lam * n)
    if hinge_objective(model, P, Q) > lam * n:
        model = LinearModel(weights=np.zeros(d), bias=0.0, lam=lam)
    return model
