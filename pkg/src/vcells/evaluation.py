"""Network-wide evaluation and the Monte Carlo experiment harness.

Cells are solved in isolation (other cells' interference is ignored at solve
time), then the stitched network solution is scored with every cross-cell
interference term in the denominator.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .alternating import bs_centric_allocate, user_centric_allocate
from .clustering import (
    Clustering,
    affiliate_users,
    cut_dendrogram,
    enumerate_partitions,
    hierarchical_cluster,
)
from .config import ExperimentConfig, resolved_v_list, solver_options, system_params
from .network import NetworkInstance, generate_network
from .solver import CellProblem, SolverOptions, cell_from_instance, cell_rate_decoded, joint_allocate

SCHEMES = ("joint", "user_centric", "bs_centric")
METHODS = ("hierarchical", "exhaustive")


@dataclass
class CellSolution:
    user_ids: np.ndarray
    bs_ids: np.ndarray
    powers: np.ndarray       # (U_cell, B_cell)
    decode: np.ndarray       # bool, same shape
    objective_bps: float     # intra-cell rate of the decoded pairs
    converged: bool
    iterations: int


@dataclass
class NetworkSolution:
    clustering: Clustering
    powers: np.ndarray       # (U, B) global; zero outside each user's cell
    decode: np.ndarray       # bool (U, B)
    cells: list[CellSolution]

    @property
    def converged_cells(self) -> int:
        return sum(1 for c in self.cells if c.converged)


def solve_cell(scheme: str, cell: CellProblem, delta_bps: float, opts: SolverOptions) -> CellSolution:
    """Run one allocation scheme on one cell; never raises on non-convergence."""
    if scheme == "joint":
        powers, diag = joint_allocate(cell, opts)
        decode = powers > 0.0
        converged, iterations = diag.converged, diag.outer_iters
    elif scheme == "user_centric":
        res = user_centric_allocate(cell, delta_bps, opts)
        powers, decode = res.powers, res.assignment
        converged, iterations = res.converged, res.iterations
    elif scheme == "bs_centric":
        res = bs_centric_allocate(cell, delta_bps, opts)
        powers, decode = res.powers, res.assignment
        converged, iterations = res.converged, res.iterations
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return CellSolution(
        user_ids=cell.user_ids,
        bs_ids=cell.bs_ids,
        powers=powers,
        decode=decode,
        objective_bps=cell_rate_decoded(powers, decode, cell),
        converged=converged,
        iterations=iterations,
    )


def solve_partition(
    clustering: Clustering,
    instance: NetworkInstance,
    scheme: str,
    delta_bps: float,
    opts: SolverOptions,
    cache: dict | None = None,
) -> NetworkSolution:
    """Solve every cell of a clustering and stitch the global solution.

    cache maps frozenset(BS block) -> CellSolution; a block determines its
    user set (nearest-BS affiliation), so solutions are reusable across every
    partition containing the block.
    """
    U, B = instance.n_users, instance.n_bs
    powers = np.zeros((U, B))
    decode = np.zeros((U, B), dtype=bool)
    cells = []
    for ci, block in enumerate(clustering.bs_blocks):
        key = frozenset(block)
        sol = cache.get(key) if cache is not None else None
        if sol is None:
            users = np.where(clustering.user_cell == ci)[0]
            cell = cell_from_instance(instance, users, block)
            sol = solve_cell(scheme, cell, delta_bps, opts)
            if cache is not None:
                cache[key] = sol
        cells.append(sol)
        if sol.user_ids.size:
            powers[np.ix_(sol.user_ids, sol.bs_ids)] = sol.powers
            decode[np.ix_(sol.user_ids, sol.bs_ids)] = sol.decode
    return NetworkSolution(clustering=clustering, powers=powers, decode=decode, cells=cells)


def network_sum_rate(sol: NetworkSolution, instance: NetworkInstance) -> float:
    """Sum rate (bit/s) of the decoded pairs with cross-cell interference.

    Every transmitted power component, in any cell, lands in the denominator
    of every other pair with the receiver-side gain.
    """
    P = sol.powers
    rowsum = P.sum(axis=1)
    total = instance.gain2.T @ rowsum
    inj = instance.noise_w[None, :] + total[None, :] - instance.gain2 * P
    snr = instance.gain2 * P / inj
    return float(instance.bandwidth_hz * np.sum(np.log2(1.0 + snr)[sol.decode]))


def iter_partition_scores(
    instance: NetworkInstance,
    k: int,
    scheme: str,
    delta_bps: float,
    opts: SolverOptions,
    cache: dict | None = None,
) -> Iterator[tuple[Clustering, NetworkSolution, float]]:
    """Score every k-block BS partition; yields (clustering, solution, rate)."""
    for blocks in enumerate_partitions(instance.n_bs, k):
        clustering = affiliate_users(blocks, instance)
        sol = solve_partition(clustering, instance, scheme, delta_bps, opts, cache)
        yield clustering, sol, network_sum_rate(sol, instance)


def exhaustive_best_clustering(
    instance: NetworkInstance,
    k: int,
    scheme: str,
    delta_bps: float,
    opts: SolverOptions,
    cache: dict | None = None,
):
    """Best k-block clustering by exhaustive search (first wins on ties)."""
    best = None
    for clustering, sol, rate in iter_partition_scores(instance, k, scheme, delta_bps, opts, cache):
        if best is None or rate > best[2]:
            best = (clustering, sol, rate)
    return best


@dataclass
class ResultRow:
    trial: int
    seed: int
    method: str
    scheme: str
    v: int
    sum_rate_bps: float
    converged_cells: int
    total_cells: int

    @property
    def warnings(self) -> str:
        bad = self.total_cells - self.converged_cells
        return f"nonconverged_cells={bad}" if bad else ""


@dataclass
class SummaryRow:
    method: str
    scheme: str
    v: int
    mean_rate_bps: float
    stderr_bps: float
    n: int


def run_trial(cfg: ExperimentConfig, trial: int) -> list[ResultRow]:
    """One seeded network draw, evaluated for every method/scheme/v."""
    seed = cfg.base_seed + trial
    params = system_params(cfg)
    instance = generate_network(params, cfg.n_bs, cfg.n_users, seed)
    opts = solver_options(cfg)
    v_list = resolved_v_list(cfg)
    dend = hierarchical_cluster(instance.bs_positions) if "hierarchical" in cfg.methods else None

    rows = []
    for scheme in cfg.schemes:
        cache: dict = {}
        for v in v_list:
            if "hierarchical" in cfg.methods:
                clustering = affiliate_users(cut_dendrogram(dend, v), instance)
                sol = solve_partition(clustering, instance, scheme, cfg.delta_bps, opts, cache)
                rows.append(ResultRow(
                    trial, seed, "hierarchical", scheme, v,
                    network_sum_rate(sol, instance), sol.converged_cells, len(sol.cells),
                ))
            if "exhaustive" in cfg.methods:
                _, sol, rate = exhaustive_best_clustering(
                    instance, v, scheme, cfg.delta_bps, opts, cache
                )
                rows.append(ResultRow(
                    trial, seed, "exhaustive", scheme, v,
                    rate, sol.converged_cells, len(sol.cells),
                ))
    rows.sort(key=lambda r: (r.trial, r.method, r.scheme, r.v))
    return rows


def _run_trial_args(args) -> list[ResultRow]:
    return run_trial(*args)


def summarize(rows: list[ResultRow]) -> list[SummaryRow]:
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        groups.setdefault((r.method, r.scheme, r.v), []).append(r.sum_rate_bps)
    out = []
    for (method, scheme, v) in sorted(groups):
        vals = np.asarray(groups[(method, scheme, v)])
        stderr = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
        out.append(SummaryRow(method, scheme, v, float(vals.mean()), stderr, vals.size))
    return out


def run_experiment(cfg: ExperimentConfig, jobs: int = 1):
    """Run all trials; returns (rows, summary), deterministically ordered."""
    trials = list(range(cfg.trials))
    if jobs > 1 and len(trials) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_trial = list(pool.map(_run_trial_args, [(cfg, t) for t in trials]))
    else:
        per_trial = [run_trial(cfg, t) for t in trials]
    rows = [row for chunk in per_trial for row in chunk]
    rows.sort(key=lambda r: (r.trial, r.method, r.scheme, r.v))
    return rows, summarize(rows)


def grid_oracle_rate(instance: NetworkInstance, levels: int = 50) -> float:
    """Brute-force reference for tiny instances, whole network as one cell.

    Enumerates every decode assignment (each user to one BS) crossed with a
    per-user power grid; each decoded user transmits a single codeword.
    Returns the best achievable sum rate found on the grid.
    """
    U, B = instance.n_users, instance.n_bs
    g2 = instance.gain2
    noise = instance.noise_w
    w_hz = instance.bandwidth_hz
    grids = []
    for u in range(U):
        if levels == 1:
            grids.append(np.array([instance.max_power_w[u]]))
        else:
            grids.append(np.linspace(0.0, instance.max_power_w[u], levels))
    mesh = np.meshgrid(*grids, indexing="ij")
    P = np.stack([m.ravel() for m in mesh], axis=1)  # (levels**U, U)

    best = 0.0
    for assign in itertools.product(range(B), repeat=U):
        rate = np.zeros(P.shape[0])
        for u in range(U):
            b = assign[u]
            den = noise[b] + P @ g2[:, b] - P[:, u] * g2[u, b]
            rate += np.log2(1.0 + g2[u, b] * P[:, u] / den)
        best = max(best, float(w_hz * rate.max()))
    return best
