import csv
import io
import json
import math

import numpy as np
import pytest

import oracles
from gctypical.classes import AllFunctions
from gctypical.coding_sim import (BinningCode, build_piggyback_code, composed_norm, converse_check,
                                  empirical_joint, report_to_json, simulate_coordination, simulate_wz,
                                  time_mixed_joint)
from gctypical.information import mutual_information
from gctypical.rates import CoordinationProblem, SideInfoProblem, WZSolution, wz_rate

UNIFORM = np.array([0.5, 0.5])
BSC = np.array([[0.9, 0.1], [0.1, 0.9]])


def problem(delta=0.1, px=UNIFORM, kernel=BSC):
    return CoordinationProblem(px, kernel, AllFunctions(), delta)


def dsbs(crossover):
    return np.array([[1 - crossover, crossover], [crossover, 1 - crossover]]) / 2


IDENTITY_SCHEME = WZSolution(0.0, np.eye(2), np.array([[0, 1], [0, 1]]), True)  # U = X, g(y, u) = u


# ---------------------------------------------------------------------------
# codebooks and the encoder


def test_block_structure_and_rate_accounting():
    code = build_piggyback_code(UNIFORM[:, None] * BSC, AllFunctions(), 100, 0.5, seed=1)
    lengths = [b.n for b in code.blocks]
    assert sum(lengths) == 100 and lengths[0] == 24  # floor(log2(4096) / 0.5)
    assert all(b.M == math.floor(2 ** (b.n * 0.5) + 1e-9) for b in code.blocks)
    assert code.log2_size == pytest.approx(sum(math.log2(b.M) for b in code.blocks))
    assert code.rate <= 0.5 + 1e-12
    assert all(math.log2(b.M) / b.n <= 0.5 + 1 / b.n for b in code.blocks)


def test_single_codeword_gives_constant_output():
    code = build_piggyback_code(UNIFORM[:, None] * BSC, AllFunctions(), 10, 1e-3, seed=2)
    assert [b.M for b in code.blocks] == [1]
    outs = {tuple(code.encode(np.random.default_rng(s).integers(0, 2, 10))[1]) for s in range(5)}
    assert len(outs) == 1


def test_encoder_is_the_argmin_over_a_single_block():
    Q = UNIFORM[:, None] * BSC
    code = build_piggyback_code(Q, AllFunctions(), 12, 0.5, seed=3)
    assert len(code.blocks) == 1
    x = np.random.default_rng(3).integers(0, 2, 12)
    (m,), w = code.encode(x)
    devs = [np.abs(empirical_joint(x, row, (2, 2)) - Q).sum() for row in code.blocks[0].entries]
    assert m == int(np.argmin(devs))
    np.testing.assert_array_equal(w, code.blocks[0].entries[m])


def test_nested_codebooks_never_hurt():
    Q = UNIFORM[:, None] * BSC
    code = build_piggyback_code(Q, AllFunctions(), 16, 0.6, seed=4)
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = rng.integers(0, 2, 16)
        devs = []
        for M in (1, 4, 16, 64, code.blocks[0].M):
            _, w = code.truncated(M).encode(x)
            devs.append(np.abs(empirical_joint(x, w, (2, 2)) - Q).sum())
        assert all(b <= a + 1e-15 for a, b in zip(devs, devs[1:]))


def test_codebooks_are_regenerable():
    a = build_piggyback_code(UNIFORM[:, None] * BSC, AllFunctions(), 40, 0.5, seed=5)
    b = build_piggyback_code(UNIFORM[:, None] * BSC, AllFunctions(), 40, 0.5, seed=5)
    for ba, bb in zip(a.blocks, b.blocks):
        np.testing.assert_array_equal(ba.entries, bb.entries)


def test_guards():
    Q = UNIFORM[:, None] * BSC
    with pytest.raises(ValueError):
        build_piggyback_code(Q, AllFunctions(), 10, 0.0, seed=0)
    with pytest.raises(ValueError):
        build_piggyback_code(Q, AllFunctions(), 1, 50.0, seed=0)
    code = build_piggyback_code(Q, AllFunctions(), 10, 0.5, seed=0)
    with pytest.raises(ValueError):
        code.encode([0, 1])


# ---------------------------------------------------------------------------
# joint laws


def test_empirical_and_time_mixed_joints():
    np.testing.assert_allclose(empirical_joint([0, 1, 1, 1], [0, 1, 1, 0], (2, 2)), [[0.25, 0], [0.25, 0.5]])
    J = time_mixed_joint([([0, 0], [0, 0]), ([1, 1], [1, 0])])
    np.testing.assert_allclose(J.table, [[0.5, 0.0], [0.25, 0.25]])
    assert time_mixed_joint([([1], [0])], (2, 2)).table[1, 0] == 1.0
    with pytest.raises(ValueError):
        time_mixed_joint([])


# ---------------------------------------------------------------------------
# coordination simulations


def test_deterministic_source_and_action_need_no_rate():
    p = problem(0.0, np.array([1.0, 0.0]), np.array([[0.0, 1.0], [0.0, 1.0]]))
    rep = simulate_coordination(p, 0.05, 50, 5, seed=0)
    assert np.all(rep.deviations == 0.0)


def test_identity_coupling_at_rate_above_one_bit():
    p = problem(0.0, UNIFORM, np.eye(2))
    rep = simulate_coordination(p, 1.2, 400, 50, seed=1)
    assert rep.mean < 0.1
    chk = converse_check(rep, 1.2, p)
    assert chk.I_hat <= 1.2 + chk.I_tol


def test_product_target_with_one_codeword_improves_with_blocklength():
    p = problem(0.0, UNIFORM, np.array([[0.7, 0.3], [0.7, 0.3]]))
    means = []
    for n in (100, 400, 1600):
        rep = simulate_coordination(p, 1e-4, n, 50, seed=2)
        assert rep.meta["code_rate"] == 0.0  # a single codeword
        means.append(rep.mean)
    assert means[0] > means[1] > means[2]


def test_product_gap_needs_almost_no_rate():
    P = UNIFORM[:, None] * BSC
    gap = np.abs(UNIFORM[:, None] * P.sum(axis=0)[None] - P).sum()
    rep = simulate_coordination(problem(gap), 0.05, 400, 20, seed=15)
    assert rep.mean <= gap + 0.1


def test_time_mixing_of_iid_pairs_recovers_the_law():
    Q = np.array([[0.15, 0.3], [0.35, 0.2]])
    rng = np.random.default_rng(16)
    pairs = []
    for _ in range(20):
        cells = rng.choice(4, size=500, p=Q.ravel())
        pairs.append(divmod(cells, 2))
    assert np.abs(time_mixed_joint(pairs, (2, 2)).table - Q).sum() < 0.05


def test_achievability_at_desk_scale():
    p = problem(0.1)
    rate = 1 - oracles.h2(0.1)  # target information; the coordination rate is lower
    rep = simulate_coordination(p, rate + 0.25, 400, 20, seed=3)
    assert rep.mean <= 0.1 + 0.1
    assert rep.meta["code_rate"] <= rate + 0.25


def test_simulation_is_thread_invariant():
    p = problem(0.1)
    a = simulate_coordination(p, 0.6, 120, 8, seed=4, threads=1)
    b = simulate_coordination(p, 0.6, 120, 8, seed=4, threads=3)
    np.testing.assert_array_equal(a.deviations, b.deviations)
    assert report_to_json(a) == report_to_json(b)


def test_single_trial_single_letter_is_a_point_mass():
    rep = simulate_coordination(problem(0.1), 0.5, 1, 1, seed=5)
    assert sorted(rep.q_hat.table.ravel().tolist()) == [0.0, 0.0, 0.0, 1.0]


def test_report_serialization():
    rep = simulate_coordination(problem(0.1), 0.5, 30, 3, seed=6)
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["trial", "deviation", "decode_errors"] and len(rows) == 4
    assert float(rows[2][1]) == rep.deviations[1]
    payload = json.loads(report_to_json(rep))
    assert payload["trials"] == 3 and payload["mean_deviation"] == rep.mean
    assert len(rep.quantiles()) == 3


# ---------------------------------------------------------------------------
# converse


def test_constant_code_passes_the_converse():
    p = problem(0.5)
    point = np.array([[0.5, 0.0], [0.5, 0.0]])  # every action is 0
    rep = simulate_coordination(p, 1e-3, 50, 10, seed=7, Q_code=point)
    chk = converse_check(rep, 0.0, p)
    assert chk.I_hat == pytest.approx(0.0, abs=1e-12) and chk.ok


def test_converse_on_achievability_runs():
    p = problem(0.1)
    for R in (0.62, 0.75):
        rep = simulate_coordination(p, R, 200, 20, seed=8)
        chk = converse_check(rep, R, p)
        assert chk.ok
        assert chk.I_hat == pytest.approx(mutual_information(rep.q_hat), abs=1e-12)
        assert chk.marginal_tv < 0.05


# ---------------------------------------------------------------------------
# side information


def test_binning_partitions_the_index_space():
    b = BinningCode.random(1000, 16, seed=9)
    allm = np.sort(np.concatenate(b.members))
    np.testing.assert_array_equal(allm, np.arange(1000))
    assert all(np.all(b.bins[m] == k) for k, m in enumerate(b.members))


def test_composed_norm_is_the_pushforward():
    g = np.array([[0, 1], [1, 1]])
    nrm = composed_norm(AllFunctions(), g, (2, 2, 2))
    T = np.random.default_rng(10).normal(size=(2, 2, 2))
    push = np.zeros((2, 2))
    for x in range(2):
        for y in range(2):
            for u in range(2):
                push[g[y, u], y] += T[x, y, u]
    assert nrm(T) == pytest.approx(np.abs(push).sum())


def test_binning_phase_transition():
    pxy = dsbs(0.11)
    h = oracles.h2(0.11)
    p = SideInfoProblem(pxy, AllFunctions(), 0.0, 2)
    above = simulate_wz(p, IDENTITY_SCHEME, 1.0, h + 0.3, 20, 30, 10, seed=11)
    below = simulate_wz(p, IDENTITY_SCHEME, 1.0, h - 0.3, 20, 30, 10, seed=11)
    assert above.decode_error_rate < 0.1 < 0.3 < below.decode_error_rate
    assert above.meta["H_U_given_Y"] == pytest.approx(h)
    assert above.meta["blocks_per_trial"] == 30


def test_threshold_decoder_runs():
    p = SideInfoProblem(dsbs(0.11), AllFunctions(), 0.0, 2)
    rep = simulate_wz(p, IDENTITY_SCHEME, 1.0, 0.9, 12, 10, 4, seed=12, decoder="threshold")
    assert rep.meta["decoder"] == "threshold" and 0 <= rep.decode_error_rate <= 1


def test_diagonal_source_reproduces_side_information():
    p = SideInfoProblem(np.eye(2) / 2, AllFunctions(), 0.0, 1)
    sol = wz_rate(p)
    rep = simulate_wz(p, sol, 0.01, 0.01, 8, 25, 5, seed=13)
    # g(y, u) = y, so x-hat = y = x and the joint is diagonal
    np.testing.assert_allclose(rep.q_hat.table.trace(), 1.0)


def test_stochastic_stage_one():
    pxy = np.array([[0.15, 0.3], [0.35, 0.2]])
    p = SideInfoProblem(pxy, AllFunctions(), 0.05, 2)
    sol = wz_rate(p)
    rep = simulate_wz(p, sol, 0.8, 0.8, 10, 10, 4, seed=14)
    assert not rep.meta["deterministic_stage1"]
    again = simulate_wz(p, sol, 0.8, 0.8, 10, 10, 4, seed=14, threads=2)
    np.testing.assert_array_equal(rep.deviations, again.deviations)


def test_side_information_guards():
    p = SideInfoProblem(dsbs(0.11), AllFunctions(), 0.0, 2)
    with pytest.raises(ValueError):
        simulate_wz(p, IDENTITY_SCHEME, 1.0, 0.5, 8, 2, 1, seed=0, decoder="nope")
    with pytest.raises(ValueError):
        simulate_wz(p, IDENTITY_SCHEME, 1.0, 0.5, 23, 2, 1, seed=0)
