import csv
import io
import json

import numpy as np
import pytest

import oracles
from gctypical.classes import AllFunctions, ConvexHull
from gctypical.information import mutual_information
from gctypical.rates import (CoordinationProblem, MultiDistortionProblem, SideInfoProblem,
                             coordination_rate, curve_to_csv, multi_distortion_rate,
                             problem_from_json, rate_curve, table_norm, wz_rate)

UNIFORM = np.array([0.5, 0.5])
BSC = np.array([[0.9, 0.1], [0.1, 0.9]])
HAMMING = np.array([[0.0, 1.0], [1.0, 0.0]])
PAIRS = [(0, 0), (0, 1), (1, 0), (1, 1)]


def coordination(delta, px=UNIFORM, kernel=BSC, cls=None):
    return CoordinationProblem(px, kernel, cls or AllFunctions(), delta)


# ---------------------------------------------------------------------------
# coordination


def test_zero_delta_forces_the_target():
    s = coordination_rate(coordination(0.0))
    assert s.rate == pytest.approx(mutual_information(UNIFORM[:, None] * BSC), abs=1e-6)


@pytest.mark.parametrize("px,kernel", [(UNIFORM, BSC), (np.array([0.3, 0.7]), np.array([[0.8, 0.2], [0.35, 0.65]]))])
@pytest.mark.parametrize("delta", [0.1, 0.3])
def test_matches_kernel_grid(px, kernel, delta):
    s = coordination_rate(coordination(delta, px, kernel))
    assert s.rate == pytest.approx(oracles.coordination_grid_rate(px, kernel, delta), abs=5e-3)
    assert np.abs(s.Q - px[:, None] * kernel).sum() <= delta + 1e-6
    np.testing.assert_allclose(s.Q.sum(axis=1), px, atol=1e-9)


def test_large_delta_gives_product():
    P = UNIFORM[:, None] * BSC
    prod = UNIFORM[:, None] * P.sum(axis=0)[None]
    s = coordination_rate(coordination(np.abs(prod - P).sum()))
    assert s.rate == 0.0 and s.converged


def test_convex_hull_class_matches_grid_with_its_own_norm():
    table = np.array([[1.0, -1.0, 0.0, 0.5], [0.0, 0.5, -1.0, 1.0]])
    F = ConvexHull(tuple(PAIRS), table)
    delta = 0.1
    s = coordination_rate(coordination(delta, cls=F))
    P = (UNIFORM[:, None] * BSC).ravel()
    K = oracles.binary_kernel_grid(2e-3)
    Q = (UNIFORM[None, :, None] * K).reshape(len(K), 4)
    ok = np.abs((Q - P) @ table.T).max(axis=1) <= delta + 1e-12
    grid = oracles.mi_stack(Q[ok].reshape(-1, 2, 2)).min()
    assert s.rate == pytest.approx(grid, abs=5e-3)
    assert s.rate <= coordination_rate(coordination(delta)).rate + 1e-6  # weaker norm, larger feasible set
    assert table_norm(F, (2, 2))(s.Q - P.reshape(2, 2)) <= delta + 1e-6


def test_rate_curve_is_nonincreasing_and_convex():
    deltas = np.linspace(0.0, 0.8, 9)
    rows = rate_curve(coordination(0.0), deltas)
    rates = [r.rate for r in rows]
    assert rates[0] == pytest.approx(1 - oracles.h2(0.1), abs=1e-6) and rates[-1] == 0.0
    assert all(b <= a + 1e-6 for a, b in zip(rates, rates[1:]))
    assert all(rates[i] <= 0.5 * (rates[i - 1] + rates[i + 1]) + 2e-3 for i in range(1, len(rates) - 1))


def test_curve_endpoints_and_csv():
    rows = rate_curve(coordination(0.0), [0.0, 2.0])
    assert rows[-1].rate == 0.0
    parsed = list(csv.reader(io.StringIO(curve_to_csv(rows))))
    assert parsed[0] == ["delta", "rate", "solver_gap", "iterations"]
    assert float(parsed[1][1]) == rows[0].rate
    with pytest.raises(ValueError):
        rate_curve(coordination(0.0), [0.3, 0.1])


def test_problem_validation():
    with pytest.raises(ValueError):
        CoordinationProblem(UNIFORM, [[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(ValueError):
        CoordinationProblem(UNIFORM, BSC, AllFunctions(), -0.1)
    with pytest.raises(ValueError):
        SideInfoProblem(np.eye(2) / 2, AllFunctions(), 0.0, None)
    with pytest.raises(ValueError):
        MultiDistortionProblem(UNIFORM, (HAMMING * 2,), (0.1,))


# ---------------------------------------------------------------------------
# several distortion constraints


def test_hamming_on_uniform_binary_is_classical():
    s = multi_distortion_rate(MultiDistortionProblem(UNIFORM, (HAMMING,), (0.11,)))
    assert s.rate == pytest.approx(1 - oracles.h2(0.11), abs=5e-3)


def test_ternary_matches_blahut_arimoto():
    px = np.array([0.2, 0.3, 0.5])
    rho = 1.0 - np.eye(3)
    s = multi_distortion_rate(MultiDistortionProblem(px, (rho,), (0.2,)))
    assert s.rate == pytest.approx(oracles.blahut_arimoto_rd(px, rho, 0.2), abs=5e-3)


def test_trivial_levels_give_zero_rate():
    assert multi_distortion_rate(MultiDistortionProblem(UNIFORM, (HAMMING,), (0.5,))).rate == 0.0
    assert multi_distortion_rate(MultiDistortionProblem(UNIFORM, (HAMMING,), (1.0,))).rate == 0.0


def test_two_constraints_bind_the_tighter_one():
    one = multi_distortion_rate(MultiDistortionProblem(UNIFORM, (HAMMING,), (0.2,))).rate
    both = multi_distortion_rate(MultiDistortionProblem(UNIFORM, (HAMMING, HAMMING), (0.2, 0.1))).rate
    assert both == pytest.approx(1 - oracles.h2(0.1), abs=5e-3) and both > one


def test_infeasible_levels_are_reported():
    # E rho >= 0.5 for every reproduction when rho(x, y) = 0.5
    s = multi_distortion_rate(MultiDistortionProblem(UNIFORM, (np.full((2, 2), 0.5),), (0.4,)))
    assert not s.feasible and s.rate == np.inf


# ---------------------------------------------------------------------------
# side information

ASYMMETRIC = np.array([[0.15, 0.3], [0.35, 0.2]])


def certificate(pxy, sol):
    """Objective and constraint recomputed from the returned kernel and decoder."""
    K, g = sol.kernel, sol.g
    q = np.einsum("xy,xu->xyu", pxy, K)
    qxu, qyu = q.sum(axis=1), q.sum(axis=0)
    value = oracles.mi_direct(qxu) - oracles.mi_direct(qyu)
    w = np.zeros_like(pxy)
    for x in range(pxy.shape[0]):
        for y in range(pxy.shape[1]):
            for u in range(K.shape[1]):
                w[g[y, u], y] += q[x, y, u]
    return value, np.abs(w - pxy).sum()


@pytest.mark.parametrize("delta", [0.0, 0.05, 0.2])
def test_wz_against_kernel_grid(delta):
    sol = wz_rate(SideInfoProblem(ASYMMETRIC, AllFunctions(), delta, 2))
    grid = oracles.wz_grid_rate(ASYMMETRIC, delta)
    assert sol.feasible and sol.upper_bound
    assert sol.rate <= grid + 1e-2
    value, gap = certificate(ASYMMETRIC, sol)
    assert value == pytest.approx(sol.rate, abs=1e-9)
    assert gap <= delta + 1e-6


def test_wz_agrees_with_grid_where_the_grid_is_fine_enough():
    sol = wz_rate(SideInfoProblem(ASYMMETRIC, AllFunctions(), 0.05, 2))
    assert sol.rate == pytest.approx(oracles.wz_grid_rate(ASYMMETRIC, 0.05), abs=1e-2)


def test_wz_doubly_symmetric_against_grid():
    pxy = np.array([[0.445, 0.055], [0.055, 0.445]])
    for delta in (0.0, 0.05):
        sol = wz_rate(SideInfoProblem(pxy, AllFunctions(), delta, 2))
        assert sol.rate == pytest.approx(oracles.wz_grid_rate(pxy, delta), abs=1e-2)


def test_wz_diagonal_source_needs_no_rate():
    sol = wz_rate(SideInfoProblem(np.eye(2) / 2, AllFunctions(), 0.0, 1))
    assert sol.rate == pytest.approx(0.0, abs=1e-12)
    assert list(sol.g[:, 0]) == [0, 1]


def test_wz_large_delta_and_single_auxiliary_symbol():
    assert wz_rate(SideInfoProblem(ASYMMETRIC, AllFunctions(), 2.0, 1)).rate == 0.0
    sol = wz_rate(SideInfoProblem(ASYMMETRIC, AllFunctions(), 0.0, 1))
    assert not sol.feasible
    assert all(not c.feasible for c in sol.per_g)


# ---------------------------------------------------------------------------
# serialization


@pytest.mark.parametrize("problem", [
    coordination(0.1),
    SideInfoProblem(ASYMMETRIC, AllFunctions(), 0.05, 2),
    MultiDistortionProblem(UNIFORM, (HAMMING,), (0.11,)),
])
def test_problem_json_round_trip(problem):
    back = problem_from_json(json.loads(json.dumps(problem.to_json())))
    assert back.to_json() == problem.to_json()


def test_unknown_problem_kind():
    with pytest.raises(ValueError):
        problem_from_json({"problem": "nope"})
