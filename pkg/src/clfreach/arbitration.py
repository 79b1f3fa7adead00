"""Non-optimal suppression: argmin-value selection, momentum filter, grasp test.

Among all proposal cells whose foreground score clears the gate, the cell
with the smallest predicted value wins; the associated control is low-pass
filtered with an exponential moving average before execution.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .perception import ProposalGrid


@dataclass(frozen=True)
class ArbitratorState:
    u_bar: np.ndarray | None = None
    eta: float = 0.5
    score_threshold: float = 0.5
    grasp_threshold: float = 0.005

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must be in [0, 1]")
        if not 0.0 < self.score_threshold < 1.0 or self.grasp_threshold <= 0.0:
            raise ValueError("score_threshold in (0,1), grasp_threshold > 0 required")


@dataclass(frozen=True)
class Selection:
    cell: tuple
    v_hat: float
    u_hat: np.ndarray


def select(props: ProposalGrid, score_threshold: float = 0.5) -> Selection | None:
    """Admitted cell with the minimal predicted value; None if none admitted.

    Ties break toward the smallest (row, col) lexicographically.
    """
    best = None
    best_key = None
    for c in props.cells:
        if c.score < score_threshold:
            continue
        key = (c.v_hat, c.row, c.col)
        if best_key is None or key < best_key:
            best, best_key = c, key
    if best is None:
        return None
    return Selection(cell=(best.row, best.col), v_hat=best.v_hat, u_hat=best.u_hat)


def momentum_update(state: ArbitratorState, u_hat) -> tuple[ArbitratorState, np.ndarray]:
    """u_bar <- eta * u_bar + (1 - eta) * u_hat, seeded with the first u_hat."""
    u_hat = np.asarray(u_hat, dtype=float).reshape(6)
    if state.u_bar is None:
        u_bar = u_hat.copy()
    else:
        u_bar = state.eta * state.u_bar + (1.0 - state.eta) * u_hat
    return replace(state, u_bar=u_bar), u_bar


def should_grasp(v_hat_min: float, grasp_threshold: float = 0.005) -> bool:
    """Strictly below the threshold; the boundary itself does not fire."""
    return v_hat_min < grasp_threshold
