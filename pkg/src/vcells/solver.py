"""Shared allocation math and the joint continuous solver.

The joint solver maximizes the cell sum rate over per-(user, BS) power
splits by successive approximation: each stage replaces every log2(1+z)
term with its tangent-like lower bound slope*log2(z)+offset (tight at the
current SINR), solves the resulting convex problem through a fixed point
with per-user budget multipliers, and re-tightens the bound at the new
operating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .network import NetworkInstance


@dataclass(frozen=True)
class SolverOptions:
    outer_max_iters: int = 50
    inner_max_iters: int = 500
    outer_tol: float = 1e-6
    inner_tol: float = 1e-6
    sinr_floor: float = 1e-12
    bisection_tol: float = 1e-9

    def __post_init__(self):
        if min(self.outer_tol, self.inner_tol, self.sinr_floor, self.bisection_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.outer_max_iters < 1 or self.inner_max_iters < 1:
            raise ValueError("iteration caps must be at least 1")


@dataclass(frozen=True)
class CellProblem:
    """The allocation problem restricted to one virtual cell."""

    user_ids: np.ndarray     # global user indices, (U,)
    bs_ids: np.ndarray       # global BS indices, (B,)
    gain2: np.ndarray        # (U, B) squared channel magnitudes
    noise_w: np.ndarray      # (B,)
    max_power_w: np.ndarray  # (U,)
    bandwidth_hz: float

    @property
    def n_users(self) -> int:
        return self.gain2.shape[0]

    @property
    def n_bs(self) -> int:
        return self.gain2.shape[1]


def cell_from_instance(instance: NetworkInstance, users, bss) -> CellProblem:
    users = np.asarray(sorted(users), dtype=int)
    bss = np.asarray(sorted(bss), dtype=int)
    if bss.size == 0:
        raise ValueError("a cell must contain at least one BS")
    return CellProblem(
        user_ids=users,
        bs_ids=bss,
        gain2=instance.gain2[np.ix_(users, bss)].copy(),
        noise_w=instance.noise_w[bss].copy(),
        max_power_w=instance.max_power_w[users].copy(),
        bandwidth_hz=instance.bandwidth_hz,
    )


@dataclass
class JointDiagnostics:
    converged: bool
    outer_iters: int
    inner_sweeps: int
    residual: float
    budget_lambda: np.ndarray


def high_sinr_coeffs(z0, sinr_floor: float = 1e-12):
    """Slope and offset of the lower bound slope*log2(z)+offset <= log2(1+z).

    The bound is tight at z = z0. Inputs below sinr_floor are clamped, which
    sends the slope toward zero and effectively disables the pair.
    """
    z = np.maximum(np.asarray(z0, dtype=float), sinr_floor)
    slope = z / (1.0 + z)
    offset = np.log2(1.0 + z) - slope * np.log2(z)
    if np.ndim(z0) == 0:
        return float(slope), float(offset)
    return slope, offset


def sinr_matrix(P: np.ndarray, cell: CellProblem) -> np.ndarray:
    """Per-pair SINR for a power split matrix.

    The interference at receiver b against pair (u, b) counts every other
    transmitted component with the receiver-side gain gain2[., b].
    """
    rowsum = P.sum(axis=1)
    total = cell.gain2.T @ rowsum
    inj = cell.noise_w[None, :] + total[None, :] - cell.gain2 * P
    return cell.gain2 * P / inj


def sinr_pair(P: np.ndarray, u: int, b: int, cell: CellProblem) -> float:
    return float(sinr_matrix(P, cell)[u, b])


def interference_price(P: np.ndarray, slope: np.ndarray, u: int, b: int, cell: CellProblem) -> float:
    """Marginal interference cost (1/W) that pair (u, b) imposes on all others."""
    return float(price_matrix(P, slope, cell)[u, b])


def price_matrix(P: np.ndarray, slope: np.ndarray, cell: CellProblem) -> np.ndarray:
    rowsum = P.sum(axis=1)
    total = cell.gain2.T @ rowsum
    inj = cell.noise_w[None, :] + total[None, :] - cell.gain2 * P
    w = slope / inj
    colw = w.sum(axis=0)
    return (cell.gain2 @ colw)[:, None] - w * cell.gain2


def uniform_split_powers(cell: CellProblem) -> np.ndarray:
    """Feasible starting point: each user's budget spread evenly over its BSs."""
    U, B = cell.n_users, cell.n_bs
    return np.repeat(cell.max_power_w[:, None] / B, B, axis=1)


def joint_allocate(
    cell: CellProblem,
    opts: SolverOptions | None = None,
    init_slope: np.ndarray | None = None,
    init_powers: np.ndarray | None = None,
):
    """Solve the continuous power-split problem for one cell.

    init_slope seeds the first approximation stage (all-ones by default; a
    0/1 decode indicator reproduces the assignment-conditioned problem).
    Returns (powers, JointDiagnostics); powers satisfies every per-user
    budget. Non-convergence within the caps is flagged, never raised.
    """
    opts = opts or SolverOptions()
    U, B = cell.n_users, cell.n_bs
    if U == 0:
        return np.zeros((0, B)), JointDiagnostics(True, 0, 0, 0.0, np.zeros(0))

    g2 = cell.gain2
    noise = cell.noise_w
    pmax = cell.max_power_w
    w_hz = cell.bandwidth_hz
    slope = np.ones((U, B)) if init_slope is None else np.asarray(init_slope, dtype=float).copy()
    P = uniform_split_powers(cell) if init_powers is None else np.asarray(init_powers, dtype=float).copy()

    converged = False
    total_sweeps = 0
    lam = np.zeros(U)
    outer = 0
    for outer in range(1, opts.outer_max_iters + 1):
        prev = P.copy()
        P, sweeps, _, lam, _ = kernels.joint_inner(
            g2, noise, pmax, slope, P, w_hz, opts.inner_tol, opts.inner_max_iters, opts.bisection_tol
        )
        total_sweeps += sweeps
        outer_change = float(np.max(np.abs(P - prev) / np.maximum(prev, kernels.REL_FLOOR_W)))
        if outer_change < opts.outer_tol:
            converged = True
            break
        if outer < opts.outer_max_iters:
            slope, _ = high_sinr_coeffs(sinr_matrix(P, cell), opts.sinr_floor)

    # Residual of the map at the returned point, under the final coefficients.
    _, _, residual, _, _ = kernels.joint_inner(
        g2, noise, pmax, slope, P.copy(), w_hz, 0.0, 1, opts.bisection_tol
    )
    return P, JointDiagnostics(converged, outer, total_sweeps, float(residual), lam)


def cell_rate_continuous(P: np.ndarray, cell: CellProblem) -> float:
    """Cell sum rate (bit/s) over all pairs of the power-split matrix."""
    if cell.n_users == 0:
        return 0.0
    return float(cell.bandwidth_hz * np.sum(np.log2(1.0 + sinr_matrix(P, cell))))


def cell_rate_decoded(P: np.ndarray, decode: np.ndarray, cell: CellProblem) -> float:
    """Cell sum rate (bit/s) counting only the decoded pairs."""
    if cell.n_users == 0:
        return 0.0
    rates = np.log2(1.0 + sinr_matrix(P, cell))
    return float(cell.bandwidth_hz * rates[decode].sum())


def approx_cell_rate(P: np.ndarray, slope: np.ndarray, offset: np.ndarray, cell: CellProblem,
                     sinr_floor: float = 1e-12) -> float:
    """The bound-stage objective value; never exceeds cell_rate_continuous."""
    z = np.maximum(sinr_matrix(P, cell), sinr_floor)
    return float(cell.bandwidth_hz * np.sum(slope * np.log2(z) + offset))


def budget_violation(P: np.ndarray, pmax: np.ndarray) -> float:
    """Largest relative excess of a user's power row sum over its budget."""
    if P.shape[0] == 0:
        return 0.0
    return float(np.max(P.sum(axis=1) / pmax - 1.0))
