"""No-trade characterization of connectivity.

A separable trade is a per-signal payment profile where every type expects
to receive at least what he pays, strictly for someone.  On an irreducible
interaction structure no such trade exists: weighting the inequalities by
the positive stationary distribution forces them all to bind.  The search
is a linear program maximizing the total expected surplus over the unit
box, so a strictly positive optimum is exactly a trade.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .interaction import _as_matrix, joint_connectedness

#: Optimum below this is treated as numerically zero (no trade).
STRICTNESS_TOL = 1e-9


@dataclass(frozen=True)
class TradeResult:
    """Outcome of the trade search.

    ``trade`` is a payment profile with sup-norm one satisfying the gain
    inequalities with margin at least the strictness tolerance, or None
    when the linear program certifies that no strict profile exists.
    """

    trade: np.ndarray | None
    reducible: bool
    objective: float
    labels: tuple | None = None

    @property
    def has_trade(self) -> bool:
        return self.trade is not None


def no_trade_test(B) -> TradeResult:
    """Search for a separable trade with strict expected bilateral gains.

    Maximizes the summed surplus ``sum_s (Bx - x)(s)`` subject to
    ``Bx >= x`` componentwise and ``|x| <= 1``.  A positive optimum
    yields a witness profile (rescaled to sup-norm one); a zero optimum
    certifies that every feasible profile makes all inequalities bind.
    """
    matrix = _as_matrix(B)
    n = matrix.shape[0]
    surplus = matrix - np.eye(n)
    res = linprog(
        c=-surplus.sum(axis=0),
        A_ub=-surplus,
        b_ub=np.zeros(n),
        bounds=[(-1.0, 1.0)] * n,
        method="highs",
    )
    if res.status != 0:
        raise ArithmeticError(f"trade search LP failed: {res.message}")
    irreducible, _ = joint_connectedness(B)
    objective = float(-res.fun)
    labels = getattr(getattr(B, "index", None), "labels", None)
    if objective <= STRICTNESS_TOL:
        return TradeResult(None, not irreducible, objective, labels)
    x = np.asarray(res.x, dtype=float)
    x = x / np.max(np.abs(x))
    gains = surplus @ x
    if gains.min() < -1e-12 or gains.max() < STRICTNESS_TOL:
        raise ArithmeticError("trade witness failed its defining inequalities")
    return TradeResult(x, not irreducible, objective, labels)
