import math

import numpy as np
import pytest

from pauckit import oracle
from pauckit.metrics import pairwise_sq_risk_opauc, pairwise_sq_risk_tpauc

POS = [0.9, 0.4]
NEG = [0.8, 0.3, 0.1]


def test_avg_topk():
    assert oracle.avg_topk([3, 1, 2], 2) == 2.5
    assert oracle.avg_topk([3, 1, 2], 3) == 2.0
    assert oracle.avg_topk([3, 1, 2], 1) == 3.0
    with pytest.raises(ValueError):
        oracle.avg_topk([1, 2], 3)


def test_atk_via_min_s():
    val, s = oracle.atk_via_min_s([3, 1, 2], 2, return_argmin=True)
    assert val == 2.5 and s == 2.0
    for k in range(1, 6):
        assert oracle.atk_via_min_s([0.7] * 5, k) == pytest.approx(0.7, abs=1e-15)


def test_atk_identity_random():
    rng = np.random.default_rng(0)
    for i in range(200):
        x = rng.normal(size=int(rng.integers(1, 30)))
        if i % 2:
            x = np.round(x, 1)
        for k in range(1, x.size + 1):
            assert abs(oracle.avg_topk(x, k) - oracle.atk_via_min_s(x, k)) <= 1e-12


def test_closed_form_opauc_example():
    cf = oracle.closed_form_opauc(POS, NEG, 2 / 3)
    assert cf.a_star == pytest.approx(0.65, abs=1e-15)
    assert cf.b_star == pytest.approx(0.55, abs=1e-15)
    assert cf.gamma_star == pytest.approx(-0.1, abs=1e-15)
    assert cf.value == pytest.approx(-0.065, abs=1e-15)
    assert cf.gamma_star == cf.b_star - cf.a_star


def test_closed_form_constant_scores():
    cf = oracle.closed_form_opauc([0.4] * 3, [0.4] * 5, 0.4)
    assert (cf.a_star, cf.b_star, cf.gamma_star, cf.value) == (0.4, 0.4, 0.0, 0.0)


def test_closed_form_tpauc_example():
    cf = oracle.closed_form_tpauc(POS, NEG, 0.5, 2 / 3)
    assert cf.a_star == 0.4 and cf.b_star == pytest.approx(0.55)
    assert cf.gamma_star == pytest.approx(0.15, abs=1e-15)
    assert cf.value + 1 == pytest.approx(1.385, abs=1e-12)


def test_tpauc_full_region_is_auc_closed_form():
    rng = np.random.default_rng(1)
    pos, neg = rng.random(9), rng.random(13)
    assert oracle.closed_form_tpauc(pos, neg, 1.0, 1.0) == oracle.closed_form_opauc(pos, neg, 1.0)


def test_closed_forms_match_pairwise_with_duplicates():
    rng = np.random.default_rng(2)
    for _ in range(100):
        pos = np.round(rng.random(int(rng.integers(2, 40))), 1)
        neg = np.round(rng.random(int(rng.integers(4, 40))), 1)
        op = oracle.closed_form_opauc(pos, neg, 0.5).value + 1
        tp = oracle.closed_form_tpauc(pos, neg, 0.5, 0.5).value + 1
        assert abs(op - pairwise_sq_risk_opauc(pos, neg, 0.5)) <= 1e-10
        assert abs(tp - pairwise_sq_risk_tpauc(pos, neg, 0.5, 0.5)) <= 1e-10


def test_pairwise_bruteforce_oracle_agrees_with_metrics():
    assert oracle.pairwise_sq_bruteforce(POS, [0.8, 0.3]) == pytest.approx(0.935, abs=1e-12)


def test_nested_solver_example():
    assert oracle.nested_minimax_solve(POS, NEG, beta=2 / 3) == pytest.approx(-0.065, abs=1e-6)


def test_nested_solver_constant_scores():
    assert abs(oracle.nested_minimax_solve([0.3] * 4, [0.3] * 6, beta=0.5)) <= 1e-9


def test_nested_solver_permutation_invariant():
    rng = np.random.default_rng(3)
    pos, neg = rng.random(8), rng.random(12)
    a = oracle.nested_minimax_solve(pos, neg, beta=0.25)
    b = oracle.nested_minimax_solve(pos[::-1], rng.permutation(neg), beta=0.25)
    assert a == pytest.approx(b, abs=1e-12)


def test_lagrangian_sweep_example():
    got = oracle.nested_minimax_solve(POS, NEG, beta=2 / 3, gamma_box="lagrangian")
    assert got == pytest.approx(-0.065, abs=1e-5)


def test_nested_solver_tpauc_small():
    rng = np.random.default_rng(4)
    pos, neg = rng.random(4), rng.random(4)
    cf = oracle.closed_form_tpauc(pos, neg, 0.5, 0.5).value
    got = oracle.nested_minimax_solve(pos, neg, task="tpauc", alpha=0.5, beta=0.5)
    assert got == pytest.approx(cf, abs=1e-6)


def test_nested_solver_rejects_bad_args():
    with pytest.raises(ValueError):
        oracle.nested_minimax_solve(POS, NEG, task="auc")
    with pytest.raises(ValueError):
        oracle.nested_minimax_solve(POS, NEG, task="tpauc", alpha=0.5, gamma_box="lagrangian")


def test_golden_section_reports_nonconvergence():
    with pytest.raises(oracle.OracleError):
        oracle.golden_section(lambda x: x * x, -1.0, 1.0, tol=1e-8, max_iter=5)


def test_golden_section_boundary_optimum():
    x, v = oracle.golden_section(lambda x: x, 0.0, 1.0)
    assert x == 0.0 and v == 0.0


def test_softplus_bias_sup():
    assert oracle.softplus_bias_sup(4) == pytest.approx(math.log(2) / 4, abs=1e-12)
    for k in (2, 4, 8, 16):
        assert oracle.softplus_bias_sup(2 * k) / oracle.softplus_bias_sup(k) == pytest.approx(0.5, abs=1e-6)
    assert oracle.softplus_bias_sup(1e6) < 1e-6
    ks = [0.5, 1, 2, 3, 5, 8, 13, 100]
    vals = [oracle.softplus_bias_sup(k) for k in ks]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_negative_inner_range():
    lo, hi = oracle.neg_inner_range()
    assert lo == -5.0 and hi == 5.0
