"""Alternating channel-access / power-allocation schemes.

Both schemes start from full transmit power, then alternate a greedy decode
assignment step with an approximate power step until the sum rate stops
improving by more than a threshold. The user-centric variant lets each user
pick its best BS and re-optimizes scalar per-user powers; the BS-centric
variant lets each BS pick its best user and re-optimizes the full per-pair
power split with the decode indicator as the initial approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .solver import CellProblem, SolverOptions, high_sinr_coeffs, joint_allocate


@dataclass
class AssignedDiagnostics:
    converged: bool
    outer_iters: int
    inner_sweeps: int
    residual: float


@dataclass
class AlternationResult:
    assignment: np.ndarray      # bool (U, B) decode map of the returned iterate
    powers: np.ndarray          # (U, B) power split of the returned iterate
    rate_trace: list[float]     # sum rate measured at each channel step
    iterations: int
    converged: bool             # stopped by the rate test with converged power steps
    iteration_bound: int        # ceil(interference-free full-power rate / delta)


def _scalar_sinr(p: np.ndarray, cell: CellProblem) -> np.ndarray:
    """SINR of each (user, BS) pair when users transmit single codewords p."""
    received = cell.gain2.T @ p
    inj = cell.noise_w[None, :] + received[None, :] - cell.gain2 * p[:, None]
    return cell.gain2 * p[:, None] / inj


def _rate_upper_bound(cell: CellProblem) -> float:
    """Interference-free full-power rate over all pairs; crude but safe."""
    snr = cell.gain2 * cell.max_power_w[:, None] / cell.noise_w[None, :]
    return float(cell.bandwidth_hz * np.sum(np.log2(1.0 + snr)))


def _empty_result(cell: CellProblem) -> AlternationResult:
    shape = (cell.n_users, cell.n_bs)
    return AlternationResult(np.zeros(shape, bool), np.zeros(shape), [], 0, True, 0)


def kkt_user_power(
    cell: CellProblem,
    assignment: np.ndarray,
    opts: SolverOptions | None = None,
    init_powers: np.ndarray | None = None,
):
    """Scalar per-user powers maximizing the assignment-conditioned sum rate.

    assignment[u] is the BS index (within the cell) decoding user u. The
    inner map min{budget, slope/price} is iterated to a fixed point; the
    approximation coefficients are re-tightened between stages. Returns
    (powers (U,), AssignedDiagnostics). A lone user transmits at full power.
    """
    opts = opts or SolverOptions()
    U = cell.n_users
    if U == 0:
        return np.zeros(0), AssignedDiagnostics(True, 0, 0, 0.0)
    assignment = np.asarray(assignment, dtype=int)
    gathered = np.ascontiguousarray(cell.gain2[:, assignment])  # (U, U)
    gsel = cell.gain2[np.arange(U), assignment]
    nsel = cell.noise_w[assignment]
    pmax = cell.max_power_w
    slope = np.ones(U)
    p = pmax.copy() if init_powers is None else np.asarray(init_powers, dtype=float).copy()

    converged = False
    total_sweeps = 0
    outer = 0
    for outer in range(1, opts.outer_max_iters + 1):
        prev = p.copy()
        p, sweeps, _, _ = kernels.assigned_inner(
            gathered, gsel, nsel, pmax, slope, p, opts.inner_tol, opts.inner_max_iters
        )
        total_sweeps += sweeps
        outer_change = float(np.max(np.abs(p - prev) / np.maximum(prev, kernels.REL_FLOOR_W)))
        if outer_change < opts.outer_tol:
            converged = True
            break
        if outer < opts.outer_max_iters:
            received = gathered.T @ p
            z = gsel * p / (nsel + received - gsel * p)
            slope, _ = high_sinr_coeffs(z, opts.sinr_floor)

    _, _, residual, _ = kernels.assigned_inner(
        gathered, gsel, nsel, pmax, slope, p.copy(), 0.0, 1
    )
    return p, AssignedDiagnostics(converged, outer, total_sweeps, float(residual))


def user_centric_allocate(
    cell: CellProblem, delta_bps: float, opts: SolverOptions | None = None
) -> AlternationResult:
    """Alternate each user's greedy BS choice with the scalar power step.

    Stops once the channel-step sum rate improves by no more than delta_bps
    and returns the better of the last two iterates. Argmax ties go to the
    lowest BS index.
    """
    if delta_bps <= 0:
        raise ValueError("delta must be positive")
    opts = opts or SolverOptions()
    U, B = cell.n_users, cell.n_bs
    if U == 0:
        return _empty_result(cell)

    w_hz = cell.bandwidth_hz
    bound = max(1, math.ceil(_rate_upper_bound(cell) / delta_bps))
    cap = bound + 5
    p = cell.max_power_w.copy()
    trace: list[float] = []
    prev_iter = None
    rate_prev = 0.0
    power_steps_ok = True

    for n in range(1, cap + 1):
        snr = _scalar_sinr(p, cell)
        chosen = np.argmax(snr, axis=1)
        rate = float(w_hz * np.sum(np.log2(1.0 + snr[np.arange(U), chosen])))
        trace.append(rate)
        decode = np.zeros((U, B), dtype=bool)
        decode[np.arange(U), chosen] = True
        powers = np.zeros((U, B))
        powers[np.arange(U), chosen] = p
        cur_iter = (decode, powers, rate)
        if rate - rate_prev <= delta_bps:
            if prev_iter is not None and prev_iter[2] > rate:
                cur_iter = prev_iter
            decode, powers, _ = cur_iter
            return AlternationResult(decode, powers, trace, n, power_steps_ok, bound)
        prev_iter = cur_iter
        rate_prev = rate
        p, diag = kkt_user_power(cell, chosen, opts, init_powers=p)
        power_steps_ok = power_steps_ok and diag.converged

    # Cap exhausted (cannot happen when rates are bounded; kept as a guard).
    decode, powers, _ = prev_iter
    return AlternationResult(decode, powers, trace, cap, False, bound)


def _bs_centric_power_matrix(p: np.ndarray, decode: np.ndarray, snr: np.ndarray) -> np.ndarray:
    """Represent scalar codeword powers as a per-pair split.

    Users decoded by several BSs split their power evenly across those
    streams; undecoded users park their full power at their best-SINR column
    (the placement does not change any decoded pair's interference).
    """
    U, B = decode.shape
    powers = np.zeros((U, B))
    counts = decode.sum(axis=1)
    for u in range(U):
        if counts[u] > 0:
            powers[u, decode[u]] = p[u] / counts[u]
        else:
            powers[u, int(np.argmax(snr[u]))] = p[u]
    return powers


def bs_centric_allocate(
    cell: CellProblem, delta_bps: float, opts: SolverOptions | None = None
) -> AlternationResult:
    """Alternate each BS's greedy user choice with the joint power step.

    Each BS decodes at most one user; a user may be decoded by several BSs.
    The power step runs the joint solver seeded with the decode indicator,
    which drives unselected users toward zero power. Argmax ties go to the
    lowest user index.
    """
    if delta_bps <= 0:
        raise ValueError("delta must be positive")
    opts = opts or SolverOptions()
    U, B = cell.n_users, cell.n_bs
    if U == 0:
        return _empty_result(cell)

    w_hz = cell.bandwidth_hz
    bound = max(1, math.ceil(_rate_upper_bound(cell) / delta_bps))
    cap = bound + 5
    p = cell.max_power_w.copy()          # per-user codeword power (row sums)
    matrix = None                        # per-pair split from the last power step
    trace: list[float] = []
    prev_iter = None
    rate_prev = 0.0
    power_steps_ok = True

    for n in range(1, cap + 1):
        snr = _scalar_sinr(p, cell)
        chosen = np.argmax(snr, axis=0)
        rate = float(w_hz * np.sum(np.log2(1.0 + snr[chosen, np.arange(B)])))
        decode = np.zeros((U, B), dtype=bool)
        decode[chosen, np.arange(B)] = True
        trace.append(rate)
        powers = matrix if matrix is not None else _bs_centric_power_matrix(p, decode, snr)
        cur_iter = (decode, powers, rate)
        if rate - rate_prev <= delta_bps:
            if prev_iter is not None and prev_iter[2] > rate:
                cur_iter = prev_iter
            decode, powers, _ = cur_iter
            return AlternationResult(decode, powers, trace, n, power_steps_ok, bound)
        prev_iter = cur_iter
        rate_prev = rate
        matrix, diag = joint_allocate(cell, opts, init_slope=decode.astype(float))
        power_steps_ok = power_steps_ok and diag.converged
        p = matrix.sum(axis=1)

    decode, powers, _ = prev_iter
    return AlternationResult(decode, powers, trace, cap, False, bound)
