"""The linear best-response coordination game on the interaction structure.

Each signal's action best-responds to a convex mix of the own first-order
expectation (weight ``1 - beta``) and the network-and-belief weighted average
of counterparties' actions (weight ``beta``).  For ``beta < 1`` the best
response is a contraction, so the game has a unique rationalizable profile,
obtained here by one linear solve.  Iterated dominance bounds and the
reduction of heterogeneous coordination weights to a common weight on a
modified network are also provided.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .consensus import ConsensusResult, consensus_expectation, first_order_vector
from .errors import PreconditionError
from .interaction import build_interaction_structure
from .model import ModelSpec, Network

#: Fixed-point residual ceiling for reported solutions.
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class GameSolution:
    """Equilibrium action per signal for one coordination weight."""

    beta: float
    actions: np.ndarray
    residual: float
    labels: tuple[str, ...]

    def __post_init__(self):
        self.actions.setflags(write=False)


def _payoff_bound(spec: ModelSpec, f) -> float:
    if spec.y is not None:
        return spec.y.bound
    if f is not None:
        return float(np.max(np.abs(f)))
    raise PreconditionError("no action bound available: set spec.y or pass f")


def solve_beta_game(spec: ModelSpec, beta: float, y=None, f=None) -> GameSolution:
    """Unique rationalizable action profile of the coordination game.

    Solves ``s = (1 - beta) x1 + beta B s`` directly, where x1 is the
    first-order value vector and B the interaction structure.  Requires
    ``0 <= beta < 1``; at the boundary the convention is the consensus
    expectation (see :func:`convention_limit`).
    """
    if not 0.0 <= beta < 1.0:
        raise PreconditionError(
            f"beta must lie in [0, 1); for the beta -> 1 limit use"
            f" convention_limit (got {beta})"
        )
    fvec = first_order_vector(spec, y, f)
    structure = build_interaction_structure(spec)
    B = structure.matrix
    n = B.shape[0]
    s = np.linalg.solve(np.eye(n) - beta * B, (1.0 - beta) * fvec)
    residual = float(np.max(np.abs(s - (1.0 - beta) * fvec - beta * (B @ s))))
    if residual > RESIDUAL_TOL:
        raise ArithmeticError(f"fixed-point residual {residual:.3e}")
    return GameSolution(beta, s, residual, structure.index.labels)


def best_response_iterates(
    spec: ModelSpec, beta: float, y=None, f=None, rounds: int = 50, start=None
) -> list[np.ndarray]:
    """Successive best responses from a flat start; the contraction oracle.

    Returns ``rounds + 1`` vectors beginning with the start profile.  The
    sup-norm distance to the fixed point shrinks by at least a factor
    ``beta`` each round.
    """
    if not 0.0 <= beta < 1.0:
        raise PreconditionError(f"beta must lie in [0, 1), got {beta}")
    fvec = first_order_vector(spec, y, f)
    B = build_interaction_structure(spec).matrix
    s = np.zeros_like(fvec) if start is None else np.asarray(start, dtype=float)
    out = [s]
    for _ in range(rounds):
        s = (1.0 - beta) * fvec + beta * (B @ s)
        out.append(s)
    return out


def rationalizable_bounds(
    spec: ModelSpec, beta: float, k_max: int, y=None, f=None
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-round interval bounds from iterated deletion of dominated actions.

    Round k keeps exactly the actions between
    ``(1 - beta) sum_{n <= k} beta^(n-1) x(n)`` and that plus
    ``beta^k M``, an interval whose width shrinks by a factor beta per
    round, pinching onto the unique solution.
    """
    if not 0.0 <= beta < 1.0:
        raise PreconditionError(f"beta must lie in [0, 1), got {beta}")
    fvec = first_order_vector(spec, y, f)
    M = _payoff_bound(spec, f)
    B = build_interaction_structure(spec).matrix
    ones = np.ones_like(fvec)
    bounds = []
    xn = fvec
    acc = np.zeros_like(fvec)
    scale = 1.0
    for k in range(1, k_max + 1):
        acc = acc + scale * xn
        lower = (1.0 - beta) * acc
        bounds.append((lower, lower + beta**k * M * ones))
        xn = B @ xn
        scale *= beta
    return bounds


def heterogeneous_transform(network: Network, beta_vec) -> tuple[Network, float]:
    """Fold per-agent coordination weights into self-weights on the network.

    Given weights ``beta_vec`` (all in [0, 1)) and a zero-diagonal
    network, returns the modified network and common weight whose game
    has identical play: the common weight is the largest of the
    ``beta_vec`` and each agent's slack becomes a self-weight.
    """
    beta_vec = np.asarray(beta_vec, dtype=float)
    if np.any(beta_vec >= 1.0) or np.any(beta_vec < 0.0):
        raise PreconditionError(
            "every per-agent weight must lie in [0, 1); the order of limits"
            " matters when some weight reaches 1"
        )
    g = network.weights
    if np.any(np.diag(g) != 0):
        raise PreconditionError(
            "heterogeneous_transform expects a zero-diagonal network"
        )
    beta_hat = float(beta_vec.max())
    n = network.n
    if beta_hat == 0.0:
        return Network(g, network.diagonal_allowed), 0.0
    self_w = (beta_hat - beta_vec) / (beta_hat * (1.0 - beta_vec))
    out = g * (1.0 - self_w)[:, None]
    out[np.arange(n), np.arange(n)] = self_w
    return Network(out, diagonal_allowed=True), beta_hat


def solve_heterogeneous_game(
    spec: ModelSpec, beta_vec, y=None, f=None
) -> GameSolution:
    """Directly solve the game where each agent has his own coordination weight.

    Solves ``s = (I - D) x1 + D B s`` with D the per-signal diagonal of
    the owners' weights.  Serves as the independent cross-check of
    :func:`heterogeneous_transform`.
    """
    beta_vec = np.asarray(beta_vec, dtype=float)
    if beta_vec.shape != (spec.n_agents,):
        raise PreconditionError(
            f"beta_vec: expected one weight per agent ({spec.n_agents})"
        )
    if np.any(beta_vec >= 1.0) or np.any(beta_vec < 0.0):
        raise PreconditionError("every per-agent weight must lie in [0, 1)")
    fvec = first_order_vector(spec, y, f)
    structure = build_interaction_structure(spec)
    B = structure.matrix
    d = beta_vec[structure.index.agent_of]
    n = B.shape[0]
    A = np.eye(n) - d[:, None] * B
    s = np.linalg.solve(A, (1.0 - d) * fvec)
    residual = float(np.max(np.abs(s - (1.0 - d) * fvec - d * (B @ s))))
    return GameSolution(float("nan"), s, residual, structure.index.labels)


@dataclass(frozen=True)
class ConventionReport:
    """Consensus limit plus the measured approach rate of finite-beta play."""

    consensus: ConsensusResult
    betas: tuple[float, ...]
    gaps: tuple[float, ...]
    rate_constant: float | None


def convention_limit(
    spec: ModelSpec, y=None, f=None, betas=(0.9, 0.99, 0.999)
) -> ConventionReport:
    """The common action in the high-coordination limit: the consensus.

    Also reports how fast the finite-beta solution approaches it, as the
    fitted constant C in ``max |s(beta) - c| <= C (1 - beta)``.
    """
    result = consensus_expectation(spec, y, f)
    gaps = []
    rate = None
    if result.value is not None:
        for b in betas:
            s = solve_beta_game(spec, b, y, f)
            gaps.append(float(np.max(np.abs(s.actions - result.value))))
        rate = max(g / (1.0 - b) for g, b in zip(gaps, betas))
    return ConventionReport(result, tuple(betas), tuple(gaps), rate)
