"""Markov numerics for row-stochastic matrices.

Stationary distributions, eigenvector centralities, Abel limits of matrix
power series, raw power trajectories with cycle detection, and mean first
passage times.  Everything works on dense arrays at desk scale; solvers are
direct with one round of iterative refinement rather than anything fancy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, ReducibleError
from .interaction import (
    _as_matrix,
    _labels_of,
    joint_connectedness,
    strongly_connected_components,
)

#: Residual ceiling enforced on every returned stationary distribution.
STATIONARY_TOL = 1e-10

#: Successive-iterate L1 threshold for power iteration.
POWER_TOL = 1e-12

#: Iteration cap before power iteration falls back to the direct solve.
POWER_MAXITER = 1_000_000


@dataclass(frozen=True)
class StationaryDistribution:
    """Left fixed point of a row-stochastic matrix, with its residual."""

    vector: np.ndarray
    residual: float
    method: str

    def __post_init__(self):
        self.vector.setflags(write=False)


@dataclass(frozen=True)
class MFPTMatrix:
    """Mean first passage times; the diagonal holds mean return times."""

    values: np.ndarray
    residual: float

    def __post_init__(self):
        self.values.setflags(write=False)

    def max_off_diagonal(self) -> float:
        n = self.values.shape[0]
        mask = ~np.eye(n, dtype=bool)
        return float(self.values[mask].max())


@dataclass(frozen=True)
class PowerTrajectory:
    """Sequence Q^n z for n = 0..n_max with a detected limit cycle, if any."""

    vectors: np.ndarray
    cycle_length: int | None

    def cycle_vectors(self) -> np.ndarray:
        if self.cycle_length is None:
            raise PreconditionError("no limit cycle was detected")
        return self.vectors[-self.cycle_length:]


def _require_irreducible(obj, matrix, what: str):
    ok, _ = joint_connectedness(matrix)
    if not ok:
        comps = strongly_connected_components(matrix)
        cert = _labels_of(obj, _first_terminal_component(matrix, comps))
        raise ReducibleError(
            f"{what} needs an irreducible matrix; see absorbing_components"
            f" for the closed set {cert}",
            cert,
        )


def _first_terminal_component(matrix, comps):
    for comp in comps:
        rows = matrix[list(comp)]
        targets = set(np.nonzero(rows.any(axis=0))[0])
        if targets <= set(comp):
            return comp
    return comps[0]


def _direct_stationary(Q: np.ndarray) -> np.ndarray:
    # replace the last equation of (Q^T - I) x = 0 with the normalization
    n = Q.shape[0]
    A = Q.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    x = np.linalg.solve(A, b)
    for _ in range(2):
        r = b - A @ x
        if np.max(np.abs(r)) < 1e-14:
            break
        x = x + np.linalg.solve(A, r)
    x = np.where(np.abs(x) < 1e-15, 0.0, x)
    return x / x.sum()


def stationary_distribution(
    Q, method: str = "direct", tol: float = STATIONARY_TOL
) -> StationaryDistribution:
    """Unique stationary distribution of an irreducible row-stochastic matrix.

    Parameters
    ----------
    Q : array or InteractionStructure or Network
        Row-stochastic matrix.  Must be irreducible; a reducible input
        raises :class:`ReducibleError` carrying a closed-set certificate.
    method : {"direct", "power"}
        ``direct`` solves the fixed-point linear system with a
        normalization row.  ``power`` iterates the lazy matrix
        ``(Q + I) / 2``, which has the same left fixed point but is
        aperiodic, so the iteration converges even on periodic chains;
        it falls back to ``direct`` if the iteration stalls.
    """
    matrix = _as_matrix(Q)
    _require_irreducible(Q, matrix, "stationary_distribution")
    method = method.lower()
    if method == "direct":
        p = _direct_stationary(matrix)
    elif method == "power":
        lazy = 0.5 * (matrix + np.eye(matrix.shape[0]))
        p = np.full(matrix.shape[0], 1.0 / matrix.shape[0])
        converged = False
        for _ in range(POWER_MAXITER):
            nxt = p @ lazy
            if np.abs(nxt - p).sum() < POWER_TOL:
                p = nxt
                converged = True
                break
            p = nxt
        p = p / p.sum()
        if not converged:
            p = _direct_stationary(matrix)
            method = "direct"
    else:
        raise PreconditionError(f"unknown method {method!r}")
    residual = float(np.abs(p @ matrix - p).sum())
    if residual > tol:
        raise ArithmeticError(
            f"stationary solve residual {residual:.3e} exceeds {tol:.1e}"
        )
    return StationaryDistribution(p, residual, method)


def eigenvector_centrality(network) -> np.ndarray:
    """Unique positive left fixed-point probability vector of the network."""
    matrix = _as_matrix(network)
    _require_irreducible(network, matrix, "eigenvector_centrality")
    return stationary_distribution(matrix).vector


def abel_limit(Q, z, beta: float | None = None) -> np.ndarray:
    """Abel average of the sequence Q^n z.

    With ``beta`` in [0, 1) returns the discounted average
    ``(1 - beta) * sum_n beta^n Q^n z`` via the Neumann identity
    ``(1 - beta) (I - beta Q)^{-1} z``.  With ``beta=None`` returns the
    exact limit as the discount goes to one, the constant vector whose
    entries are the stationary distribution applied to ``z`` (requires
    irreducibility).
    """
    matrix = _as_matrix(Q)
    z = np.asarray(z, dtype=float)
    if beta is None:
        _require_irreducible(Q, matrix, "abel_limit exact mode")
        p = stationary_distribution(matrix).vector
        return np.full(matrix.shape[0], float(p @ z))
    if not 0.0 <= beta < 1.0:
        raise PreconditionError(f"beta must lie in [0, 1), got {beta}")
    n = matrix.shape[0]
    return (1.0 - beta) * np.linalg.solve(np.eye(n) - beta * matrix, z)


def mfpt(Q) -> MFPTMatrix:
    """Mean first passage times between all ordered pairs of states.

    Entry (z, z') solves ``M(z, z') = 1 + sum_{w != z'} Q(z, w) M(w, z')``;
    the diagonal is the mean return time.  One linear solve per target
    column.
    """
    matrix = _as_matrix(Q)
    _require_irreducible(Q, matrix, "mfpt")
    n = matrix.shape[0]
    M = np.zeros((n, n))
    ones = np.ones(n - 1)
    for t in range(n):
        keep = [k for k in range(n) if k != t]
        A = np.eye(n - 1) - matrix[np.ix_(keep, keep)]
        m = np.linalg.solve(A, ones)
        M[keep, t] = m
        M[t, t] = 1.0 + matrix[t, keep] @ m
    hit = np.array(M)
    np.fill_diagonal(hit, 0.0)
    residual = float(np.max(np.abs(M - (1.0 + matrix @ hit))))
    return MFPTMatrix(M, residual)


def power_trajectory(Q, z, n_max: int, cycle_tol: float = 1e-9) -> PowerTrajectory:
    """Iterate x -> Q x and report a limit cycle when the tail repeats.

    The trajectory holds Q^n z for n = 0..n_max.  The detected cycle
    length is the smallest L whose tail vectors repeat within
    ``cycle_tol``: 1 for an ergodic chain, and on a periodic chain the
    minimal repeat length of the value sequence, a divisor of the
    structural period (equal to it for generic z).  None means no
    repetition was seen within the horizon.
    """
    matrix = _as_matrix(Q)
    z = np.asarray(z, dtype=float)
    traj = np.empty((n_max + 1, len(z)))
    traj[0] = z
    for n in range(1, n_max + 1):
        traj[n] = matrix @ traj[n - 1]
    cycle = None
    for L in range(1, n_max // 3 + 1):
        checks = range(n_max, max(n_max - 2 * L, L) - 1, -1)
        if all(np.max(np.abs(traj[k] - traj[k - L])) < cycle_tol for k in checks):
            cycle = L
            break
    return PowerTrajectory(traj, cycle)
