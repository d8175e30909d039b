import numpy as np
import pytest

from vcells.network import NetworkInstance, SystemParams, generate_network
from vcells.solver import (
    CellProblem,
    SolverOptions,
    approx_cell_rate,
    budget_violation,
    cell_from_instance,
    cell_rate_continuous,
    high_sinr_coeffs,
    interference_price,
    joint_allocate,
    sinr_matrix,
    sinr_pair,
    uniform_split_powers,
)

W = 1e6
NOISE = 3.9810717055349695e-15
PMAX = 0.1995262314968879


def _cell(gain2, pmax=None, noise=None, w_hz=W):
    gain2 = np.asarray(gain2, dtype=float)
    U, B = gain2.shape
    return CellProblem(
        user_ids=np.arange(U),
        bs_ids=np.arange(B),
        gain2=gain2,
        noise_w=np.full(B, NOISE) if noise is None else np.asarray(noise, float),
        max_power_w=np.full(U, PMAX) if pmax is None else np.asarray(pmax, float),
        bandwidth_hz=w_hz,
    )


def _random_cell(seed, n_bs, n_users):
    inst = generate_network(SystemParams(), n_bs, n_users, seed)
    return cell_from_instance(inst, range(n_users), range(n_bs))


# --- bound coefficients ------------------------------------------------------

def test_coeffs_at_one():
    slope, offset = high_sinr_coeffs(1.0)
    assert slope == pytest.approx(0.5, abs=1e-15)
    assert offset == pytest.approx(1.0, abs=1e-15)


def test_coeffs_at_three():
    slope, offset = high_sinr_coeffs(3.0)
    assert slope == pytest.approx(0.75, abs=1e-15)
    assert offset == pytest.approx(0.8112781244591329, abs=1e-12)


def test_coeffs_tight_at_anchor():
    rng = np.random.default_rng(2)
    z0 = 10 ** rng.uniform(-6, 6, 1000)
    slope, offset = high_sinr_coeffs(z0)
    np.testing.assert_allclose(slope * np.log2(z0) + offset, np.log2(1 + z0), atol=1e-12)


def test_coeffs_lower_bound_property():
    rng = np.random.default_rng(3)
    z = 10 ** rng.uniform(-6, 6, 20000)
    z0 = 10 ** rng.uniform(-6, 6, 20000)
    slope, offset = high_sinr_coeffs(z0)
    assert np.all(slope * np.log2(z) + offset <= np.log2(1 + z) + 1e-12)


def test_coeffs_clamp_below_floor():
    slope, offset = high_sinr_coeffs(0.0, sinr_floor=1e-12)
    ref_slope, ref_offset = high_sinr_coeffs(1e-12, sinr_floor=1e-12)
    assert slope == ref_slope and offset == ref_offset


# --- SINR and price ----------------------------------------------------------

def test_sinr_single_pair_no_interference():
    g = 1e-10
    cell = _cell([[g]])
    P = np.array([[PMAX]])
    assert sinr_pair(P, 0, 0, cell) == pytest.approx(g * PMAX / NOISE, rel=1e-12)


def test_sinr_zero_power_is_zero():
    cell = _cell([[1e-10, 2e-10]])
    P = np.zeros((1, 2))
    assert sinr_pair(P, 0, 0, cell) == 0.0


def test_sinr_two_users_one_bs_symmetric():
    g, p = 3e-10, 0.05
    cell = _cell([[g], [g]])
    P = np.full((2, 1), p)
    want = g * p / (NOISE + g * p)
    assert sinr_pair(P, 0, 0, cell) == pytest.approx(want, rel=1e-12)
    assert sinr_pair(P, 1, 0, cell) == pytest.approx(want, rel=1e-12)


def test_price_zero_slope_and_lone_pair():
    cell = _cell([[1e-10, 2e-10], [3e-10, 4e-10]])
    P = uniform_split_powers(cell)
    assert interference_price(P, np.zeros((2, 2)), 0, 0, cell) == 0.0
    lone = _cell([[1e-10]])
    P1 = np.array([[PMAX]])
    assert interference_price(P1, np.ones((1, 1)), 0, 0, lone) == 0.0


def test_price_two_users_one_bs_at_zero_power():
    g1, g2 = 2e-10, 5e-10
    cell = _cell([[g1], [g2]])
    P = np.zeros((2, 1))
    slope = np.ones((2, 1))
    # partner pair is (u2, b); this pair's power lands there with gain g1
    assert interference_price(P, slope, 0, 0, cell) == pytest.approx(g1 / NOISE, rel=1e-12)
    assert interference_price(P, slope, 1, 0, cell) == pytest.approx(g2 / NOISE, rel=1e-12)


# --- joint solver ------------------------------------------------------------

def test_joint_single_link_uses_full_budget():
    cell = _cell([[1e-10]])
    P, diag = joint_allocate(cell)
    assert diag.converged
    assert P[0, 0] == pytest.approx(PMAX, rel=1e-8)
    assert diag.budget_lambda[0] > 0.0


def test_joint_indicator_init_concentrates_power():
    cell = _random_cell(10, n_bs=2, n_users=3)
    init = np.zeros((3, 2))
    init[0, 1] = 1.0  # only pair (0, 1) active
    P, _ = joint_allocate(cell, init_slope=init)
    assert P[0, 1] == pytest.approx(cell.max_power_w[0], rel=1e-6)
    mask = np.ones((3, 2), bool)
    mask[0, 1] = False
    assert np.all(P[mask] <= 1e-9 * cell.max_power_w.max())


def test_joint_symmetric_cell_symmetric_solution():
    ga, gb = 4e-10, 1e-10
    gain2 = np.array([[ga, gb], [gb, ga]])
    cell = _cell(gain2)
    P, diag = joint_allocate(cell)
    assert diag.converged
    # swapping both users and BSs maps the problem onto itself
    np.testing.assert_allclose(P, P[::-1, ::-1], rtol=1e-6)


def test_joint_budget_and_residual_on_random_cells():
    for seed in range(5):
        cell = _random_cell(100 + seed, n_bs=3, n_users=6)
        P, diag = joint_allocate(cell)
        assert budget_violation(P, cell.max_power_w) <= 1e-9
        assert np.all(P >= 0.0)
        if diag.converged:
            assert diag.residual <= 10 * SolverOptions().inner_tol


def test_joint_complementary_slackness():
    cell = _random_cell(55, n_bs=3, n_users=5)
    opts = SolverOptions()
    P, diag = joint_allocate(cell, opts)
    rowsum = P.sum(axis=1)
    for u in range(cell.n_users):
        if diag.budget_lambda[u] > 0.0:
            assert abs(rowsum[u] - cell.max_power_w[u]) <= opts.bisection_tol * cell.max_power_w[u]
        else:
            assert rowsum[u] <= cell.max_power_w[u] * (1 + 1e-12)


def test_joint_objective_sandwich():
    cell = _random_cell(77, n_bs=2, n_users=4)
    opts = SolverOptions()
    P, _ = joint_allocate(cell, opts)
    # anchored at P the bound is an equality, so allow only float noise
    slope, offset = high_sinr_coeffs(sinr_matrix(P, cell), opts.sinr_floor)
    exact = cell_rate_continuous(P, cell)
    approx = approx_cell_rate(P, slope, offset, cell, opts.sinr_floor)
    assert approx <= exact * (1 + 1e-9)
    # anchored elsewhere it is strict
    slope2, offset2 = high_sinr_coeffs(sinr_matrix(0.5 * P, cell), opts.sinr_floor)
    assert approx_cell_rate(P, slope2, offset2, cell, opts.sinr_floor) < exact


def test_joint_empty_cell():
    cell = CellProblem(
        user_ids=np.arange(0), bs_ids=np.arange(2),
        gain2=np.zeros((0, 2)), noise_w=np.full(2, NOISE),
        max_power_w=np.zeros(0), bandwidth_hz=W,
    )
    P, diag = joint_allocate(cell)
    assert P.shape == (0, 2)
    assert diag.converged
    assert cell_rate_continuous(P, cell) == 0.0


def test_joint_nonconvergence_is_flagged_not_fatal():
    cell = _random_cell(1, n_bs=3, n_users=6)
    P, diag = joint_allocate(cell, SolverOptions(outer_max_iters=1, inner_max_iters=2))
    assert not diag.converged
    assert np.all(np.isfinite(P))
    assert budget_violation(P, cell.max_power_w) <= 1e-9


# --- rates ---------------------------------------------------------------

def test_cell_rate_continuous_values():
    cell = _cell([[1e-10]])
    assert cell_rate_continuous(np.zeros((1, 1)), cell) == 0.0
    # single pair at SINR exactly 1
    g = 1e-10
    p = NOISE / g
    cell1 = _cell([[g]], pmax=[1.0])
    assert cell_rate_continuous(np.array([[p]]), cell1) == pytest.approx(W, rel=1e-12)
    cell2 = _cell([[g]], pmax=[1.0], w_hz=2 * W)
    assert cell_rate_continuous(np.array([[p]]), cell2) == pytest.approx(2 * W, rel=1e-12)


def test_joint_satisfies_first_order_optimality_of_true_objective():
    # At a converged solution the budget multiplier returned by the solver
    # must match the finite-difference gradient of the *unapproximated* rate
    # on every meaningfully powered pair: grad R = lambda_u (binding budget),
    # grad R ~ 0 when the budget is slack.
    for seed in (300, 301, 302):
        cell = _random_cell(seed, n_bs=2, n_users=4)
        P, diag = joint_allocate(cell)
        if not diag.converged:
            continue
        pmax = cell.max_power_w
        for u in range(cell.n_users):
            for b in range(cell.n_bs):
                if P[u, b] < 1e-6 * pmax[u]:
                    continue
                h = 1e-7 * pmax[u]
                up, down = P.copy(), P.copy()
                up[u, b] += h
                down[u, b] -= h
                grad = (cell_rate_continuous(up, cell) - cell_rate_continuous(down, cell)) / (2 * h)
                lam = diag.budget_lambda[u]
                if lam > 0:
                    assert grad == pytest.approx(lam, rel=2e-3), (seed, u, b)
                else:
                    scale = cell_rate_continuous(P, cell) / pmax[u]
                    assert abs(grad) <= 1e-3 * scale, (seed, u, b)
