import numpy as np
import pytest

from vcells.clustering import affiliate_users, enumerate_partitions
from vcells.config import ExperimentConfig
from vcells.evaluation import (
    SCHEMES,
    exhaustive_best_clustering,
    grid_oracle_rate,
    iter_partition_scores,
    network_sum_rate,
    run_experiment,
    run_trial,
    solve_partition,
    summarize,
)
from vcells.network import NetworkInstance, SystemParams, generate_network
from vcells.solver import SolverOptions

W = 1e6
NOISE = 3.9810717055349695e-15
PMAX = 0.1995262314968879
DELTA = 1e3
OPTS = SolverOptions()


def _instance_from_positions(bs_pos, user_pos, carrier=1.8e9):
    bs_pos = np.asarray(bs_pos, float)
    user_pos = np.asarray(user_pos, float)
    d = np.linalg.norm(user_pos[:, None, :] - bs_pos[None, :, :], axis=2)
    lam = 2.998e8 / carrier
    g2 = (lam / (4 * np.pi * d)) ** 2
    return NetworkInstance(
        bs_positions=bs_pos,
        user_positions=user_pos,
        max_power_w=np.full(len(user_pos), PMAX),
        gain2=g2,
        noise_w=np.full(len(bs_pos), NOISE),
        bandwidth_hz=W,
    )


def test_single_cell_network_rate_equals_objective():
    inst = generate_network(SystemParams(), 3, 6, seed=5)
    for scheme in SCHEMES:
        clus = affiliate_users((tuple(range(3)),), inst)
        sol = solve_partition(clus, inst, scheme, DELTA, OPTS)
        assert network_sum_rate(sol, inst) == pytest.approx(sol.cells[0].objective_bps, rel=1e-12)


def test_zero_powers_zero_rate():
    inst = generate_network(SystemParams(), 2, 3, seed=6)
    clus = affiliate_users(((0,), (1,)), inst)
    sol = solve_partition(clus, inst, "joint", DELTA, OPTS)
    sol.powers[:] = 0.0
    assert network_sum_rate(sol, inst) == 0.0


def test_far_apart_cells_match_isolated_links():
    # two single-user cells separated so far that cross interference vanishes
    sep = 1e9
    inst = _instance_from_positions(
        bs_pos=[[0.0, 0.0], [sep, 0.0]],
        user_pos=[[1000.0, 0.0], [sep - 800.0, 0.0]],
    )
    clus = affiliate_users(((0,), (1,)), inst)
    sol = solve_partition(clus, inst, "user_centric", DELTA, OPTS)
    got = network_sum_rate(sol, inst)
    want = sum(
        W * np.log2(1 + inst.gain2[u, u] * PMAX / NOISE) for u in range(2)
    )
    assert got == pytest.approx(want, rel=1e-6)


def test_cross_cell_interference_only_reduces_rate():
    inst = generate_network(SystemParams(), 4, 8, seed=7)
    for scheme in SCHEMES:
        for blocks in (((0,), (1,), (2,), (3,)), ((0, 1), (2, 3))):
            clus = affiliate_users(blocks, inst)
            sol = solve_partition(clus, inst, scheme, DELTA, OPTS)
            intra = sum(c.objective_bps for c in sol.cells)
            assert network_sum_rate(sol, inst) <= intra * (1 + 1e-12)


def test_stitched_budget_and_zero_outside_cell():
    inst = generate_network(SystemParams(), 4, 8, seed=8)
    clus = affiliate_users(((0, 1), (2, 3)), inst)
    for scheme in SCHEMES:
        sol = solve_partition(clus, inst, scheme, DELTA, OPTS)
        assert np.all(sol.powers.sum(axis=1) <= inst.max_power_w * (1 + 1e-9))
        for u in range(inst.n_users):
            outside = [b for b in range(inst.n_bs)
                       if b not in clus.bs_blocks[clus.user_cell[u]]]
            assert np.all(sol.powers[u, outside] == 0.0)
            assert not sol.decode[u, outside].any()


def test_exhaustive_k1_and_kn_unique_partition():
    inst = generate_network(SystemParams(), 3, 6, seed=9)
    cache = {}
    clus, sol, rate = exhaustive_best_clustering(inst, 1, "user_centric", DELTA, OPTS, cache)
    assert clus.bs_blocks == ((0, 1, 2),)
    direct = solve_partition(affiliate_users(((0, 1, 2),), inst), inst, "user_centric", DELTA, OPTS)
    assert rate == pytest.approx(network_sum_rate(direct, inst), rel=1e-12)
    clus_n, _, _ = exhaustive_best_clustering(inst, 3, "user_centric", DELTA, OPTS, cache)
    assert clus_n.bs_blocks == ((0,), (1,), (2,))


def test_partition_scores_count_matches_stirling():
    inst = generate_network(SystemParams(), 4, 6, seed=10)
    cache = {}
    n = sum(1 for _ in iter_partition_scores(inst, 2, "user_centric", DELTA, OPTS, cache))
    assert n == 7  # S(4, 2)
    n = sum(1 for _ in iter_partition_scores(inst, 3, "user_centric", DELTA, OPTS, cache))
    assert n == 6  # S(4, 3)


def test_exhaustive_dominates_hierarchical():
    cfg = ExperimentConfig(n_bs=3, n_users=6, trials=3, base_seed=11, delta_bps=DELTA)
    rows, _ = run_experiment(cfg)
    by_key = {(r.trial, r.method, r.scheme, r.v): r.sum_rate_bps for r in rows}
    for (trial, method, scheme, v), rate in by_key.items():
        if method == "hierarchical":
            assert by_key[(trial, "exhaustive", scheme, v)] >= rate


def test_endpoints_agree_between_methods():
    cfg = ExperimentConfig(n_bs=3, n_users=5, trials=2, base_seed=13, delta_bps=DELTA)
    rows, _ = run_experiment(cfg)
    by_key = {(r.trial, r.method, r.scheme, r.v): r.sum_rate_bps for r in rows}
    for trial in range(2):
        for scheme in SCHEMES:
            for v in (1, 3):
                h = by_key[(trial, "hierarchical", scheme, v)]
                e = by_key[(trial, "exhaustive", scheme, v)]
                assert e == pytest.approx(h, rel=1e-9)


def test_run_experiment_deterministic():
    cfg = ExperimentConfig(n_bs=3, n_users=4, trials=2, base_seed=3)
    rows_a, summary_a = run_experiment(cfg)
    rows_b, summary_b = run_experiment(cfg)
    assert rows_a == rows_b
    assert summary_a == summary_b


def test_run_experiment_parallel_matches_serial():
    cfg = ExperimentConfig(n_bs=3, n_users=4, trials=2, base_seed=3,
                           schemes=("user_centric",), methods=("hierarchical",))
    rows_serial, _ = run_experiment(cfg, jobs=1)
    rows_par, _ = run_experiment(cfg, jobs=2)
    assert rows_serial == rows_par


def test_run_experiment_row_count_and_order():
    cfg = ExperimentConfig(n_bs=3, n_users=4, trials=2, base_seed=0)
    rows, summary = run_experiment(cfg)
    assert len(rows) == 2 * 2 * 3 * 3  # trials * methods * schemes * v
    keys = [(r.trial, r.method, r.scheme, r.v) for r in rows]
    assert keys == sorted(keys)
    assert len(summary) == 2 * 3 * 3
    assert all(s.n == 2 for s in summary)


def test_summarize_mean_and_stderr():
    cfg = ExperimentConfig(n_bs=2, n_users=3, trials=3, base_seed=21,
                           schemes=("user_centric",), methods=("hierarchical",), v_list=(1,))
    rows, summary = run_experiment(cfg)
    vals = np.array([r.sum_rate_bps for r in rows])
    s = summary[0]
    assert s.mean_rate_bps == pytest.approx(vals.mean(), rel=1e-12)
    assert s.stderr_bps == pytest.approx(vals.std(ddof=1) / np.sqrt(3), rel=1e-12)


def test_grid_oracle_single_link_closed_form():
    inst = _instance_from_positions([[0.0, 0.0]], [[1000.0, 0.0]])
    want = W * np.log2(1 + inst.gain2[0, 0] * PMAX / NOISE)
    assert grid_oracle_rate(inst, levels=50) == pytest.approx(want, rel=1e-9)


def test_grid_oracle_degenerate_grid_is_full_power():
    inst = generate_network(SystemParams(), 2, 2, seed=30)
    got = grid_oracle_rate(inst, levels=1)
    # only full-power vectors are on the grid; best assignment by enumeration
    best = 0.0
    p = inst.max_power_w
    for a0 in range(2):
        for a1 in range(2):
            assign = (a0, a1)
            rate = 0.0
            for u, b in enumerate(assign):
                other = 1 - u
                den = NOISE + inst.gain2[other, b] * p[other]
                rate += W * np.log2(1 + inst.gain2[u, b] * p[u] / den)
            best = max(best, rate)
    assert got == pytest.approx(best, rel=1e-12)


def test_run_trial_records_convergence_counts():
    cfg = ExperimentConfig(n_bs=2, n_users=3, trials=1, base_seed=40)
    rows = run_trial(cfg, 0)
    for r in rows:
        assert 0 <= r.converged_cells <= r.total_cells
        assert r.total_cells == r.v
        if r.converged_cells < r.total_cells:
            assert "nonconverged" in r.warnings
        else:
            assert r.warnings == ""


def test_hierarchical_only_run_never_enumerates(monkeypatch):
    import vcells.evaluation as ev

    def boom(n, k):
        raise AssertionError("partition enumeration should not run")

    monkeypatch.setattr(ev, "enumerate_partitions", boom)
    cfg = ExperimentConfig(n_bs=3, n_users=4, trials=1, base_seed=2,
                           methods=("hierarchical",))
    rows, _ = run_experiment(cfg)
    assert len(rows) == 3 * 3  # schemes * v


def test_symmetric_two_by_two_structure():
    # two mirrored user-BS pairs: every scheme should decode each user at
    # its own nearby BS, and the oracle should sit at the same operating point
    inst = _instance_from_positions(
        bs_pos=[[0.0, 0.0], [2000.0, 0.0]],
        user_pos=[[400.0, 0.0], [1600.0, 0.0]],
    )
    oracle = grid_oracle_rate(inst, levels=50)
    whole = affiliate_users(((0, 1),), inst)
    for scheme in SCHEMES:
        sol = solve_partition(whole, inst, scheme, DELTA, OPTS)
        strong = sol.decode & (sol.powers > 1e-6)
        assert strong[0, 0] and strong[1, 1]
        assert not strong[0, 1] and not strong[1, 0]
        assert network_sum_rate(sol, inst) >= 0.5 * oracle


def test_empty_user_cell_is_degenerate_but_valid():
    # both users sit next to BS 0, so the (1,) block gets no users
    inst = _instance_from_positions(
        bs_pos=[[0.0, 0.0], [2400.0, 2400.0]],
        user_pos=[[10.0, 0.0], [0.0, 10.0]],
    )
    clus = affiliate_users(((0,), (1,)), inst)
    assert np.all(clus.user_cell == 0)
    for scheme in SCHEMES:
        sol = solve_partition(clus, inst, scheme, DELTA, OPTS)
        empty = sol.cells[1]
        assert empty.user_ids.size == 0
        assert empty.objective_bps == 0.0
        assert empty.converged
        assert network_sum_rate(sol, inst) > 0.0


def test_v_list_subset_only_runs_requested_levels():
    cfg = ExperimentConfig(n_bs=3, n_users=4, trials=1, base_seed=6, v_list=(2,))
    rows, _ = run_experiment(cfg)
    assert {r.v for r in rows} == {2}
    assert len(rows) == 2 * 3  # methods * schemes


def test_full_trial_matches_between_backends(monkeypatch):
    cfg = ExperimentConfig(n_bs=3, n_users=5, trials=1, base_seed=44,
                           methods=("hierarchical",))
    monkeypatch.setenv("VCELLS_NUMBA", "1")
    rows_nb = run_trial(cfg, 0)
    monkeypatch.setenv("VCELLS_NUMBA", "0")
    rows_np = run_trial(cfg, 0)
    assert len(rows_nb) == len(rows_np)
    for a, b in zip(rows_nb, rows_np):
        assert (a.trial, a.method, a.scheme, a.v) == (b.trial, b.method, b.scheme, b.v)
        assert a.sum_rate_bps == pytest.approx(b.sum_rate_bps, rel=1e-5)
