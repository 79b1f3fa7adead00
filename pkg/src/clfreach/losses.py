"""Per-cell loss evaluators for external learners.

``seg_loss`` is standard (nonnegative) mean binary cross entropy over all
cells.  ``ctrl_loss`` penalizes only foreground cells: absolute value error
plus the mean absolute error of the six control components.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyGridError

LOGIT_CLAMP = 30.0  # |logit| cap before the logistic; avoids log(0)


def seg_loss(logits, y) -> float:
    """Mean binary cross entropy of foreground scores against binary labels."""
    logits = np.asarray(logits, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if logits.size == 0:
        raise EmptyGridError("seg_loss needs at least one cell")
    if logits.shape != y.shape:
        raise ValueError(f"shape mismatch: {logits.shape} vs {y.shape}")
    c = np.clip(logits, -LOGIT_CLAMP, LOGIT_CLAMP)
    s = 1.0 / (1.0 + np.exp(-c))
    return float(-np.mean(y * np.log(s) + (1.0 - y) * np.log(1.0 - s)))


def ctrl_loss(v_hat, u_hat, v, u, y) -> float:
    """Foreground-masked L1 loss: |v - v_hat| + mean_j |u_j - u_hat_j|.

    Returns 0 when no cell is foreground.
    """
    v_hat = np.asarray(v_hat, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    u_hat = np.asarray(u_hat, dtype=float).reshape(len(v_hat), 6)
    u = np.asarray(u, dtype=float).reshape(len(v), 6)
    if not (len(v_hat) == len(v) == len(y)):
        raise ValueError("cell counts differ")
    n_pos = float(np.sum(y))
    if n_pos == 0:
        return 0.0
    per_cell = np.abs(v - v_hat) + np.mean(np.abs(u - u_hat), axis=1)
    return float(np.sum(y * per_cell) / n_pos)
