import logging
from types import SimpleNamespace

import numpy as np
import pytest

from pauckit import optim
from pauckit.dataio import BatchSpec, generate_synthetic
from pauckit.losses import AuxState, HyperParams
from pauckit.model import forward, init_params
from pauckit.optim import (
    ConfigError, LearnParams, LossContext, OptimState, check_step_conditions, gradient_mapping_norm,
    initial_aux, lr_schedule, project_gamma, project_tau, step, train, write_trace_csv,
)


def test_lr_schedule():
    assert lr_schedule(0, 1, 8) == 0.5
    assert lr_schedule(0, 1, 1) == 1.0
    etas = [lr_schedule(t, 2, 100) for t in range(0, 10**6, 997)]
    assert all(x > y for x, y in zip(etas, etas[1:])) and etas[-1] < 0.03
    with pytest.raises(ConfigError):
        lr_schedule(0, 3, 8)


def test_learnparams_validation():
    with pytest.raises(ConfigError):
        LearnParams(k=3, m=8)
    with pytest.raises(ConfigError):
        LearnParams(nu=0)
    with pytest.raises(ConfigError):
        LearnParams(m=0.5, k=0.5)


def _tau(n_model, a=0.5, b=0.5, s=0.0, sp=2.5, ta=0.0, tb=0.0):
    return np.concatenate([np.zeros(n_model), [a, b, s, sp, ta, tb]])


def test_project_tau():
    t = _tau(2, a=1.3)
    assert project_tau(t)[2] == 1.0
    t = _tau(2, a=0.2, b=0.9, s=-1, sp=4, ta=3, tb=1e3)
    np.testing.assert_array_equal(project_tau(t), t)
    t = _tau(3)
    t[:3] = [1e6, -1e6, 5e5]
    np.testing.assert_array_equal(project_tau(t)[:3], t[:3])
    clipped = project_tau(_tau(0, a=-1, b=2, s=-9, sp=7, ta=-3, tb=2e9))
    np.testing.assert_array_equal(clipped, [0, 1, -4, 5, 0, 1e9])


def test_project_gamma():
    assert project_gamma(-1.5) == -1.0
    assert project_gamma(0.2) == 0.2
    assert project_gamma(1.0) == 1.0


def _setup(task="opauc", n_pos=20, n_neg=60, seed=0, **hp_kw):
    data = generate_synthetic(n_pos, n_neg, 3, 1.0, seed=seed)
    model = init_params("linear", 3, seed=seed)
    hp = HyperParams(task=task, beta=0.5, alpha=0.5, prior_p=data.prior_p, **hp_kw)
    ctx = LossContext(model.kind, model.layout, hp)
    state = OptimState.start(model, initial_aux(model, data, hp))
    return data, model, hp, ctx, state


def test_zero_estimates_are_a_fixed_point():
    data, _, _, ctx, state = _setup()
    new, _ = step(state, data.features[:10], data.labels[:10].astype(float), LearnParams(), ctx)
    np.testing.assert_array_equal(new.tau, state.tau)
    assert new.gamma == state.gamma


def test_rho_one_resets_to_fresh_gradient(caplog):
    data, _, _, ctx, state = _setup()
    X, y = data.features[:16], data.labels[:16].astype(float)
    lp = LearnParams(c1=1e6, c2=1e6)
    state.v = np.random.default_rng(0).normal(size=state.v.size)
    state.w = 0.3
    optim._warned_clamp = False
    with caplog.at_level(logging.WARNING, logger="pauckit.optim"):
        new, info = step(state, X, y, lp, ctx)
    assert info.rho == 1.0 and info.xi == 1.0
    assert "clamped to 1" in caplog.text
    _, g_tau, g_gam = ctx.value_and_grad(new.tau, new.gamma, X, y)
    np.testing.assert_array_equal(new.v, g_tau)
    assert new.w == g_gam


def test_gradient_mapping_norm():
    data, _, _, ctx, state = _setup()
    lp = LearnParams(nu=0.01)
    assert gradient_mapping_norm(state, lp) == 0.0
    state.tau[-2:] = 1.0  # move the multipliers off their lower bound
    state.v = np.full(state.v.size, 0.1)
    assert gradient_mapping_norm(state, lp) == pytest.approx(np.linalg.norm(state.v), rel=1e-12)
    # a at its upper bound, descent direction pushes it further up
    state.tau[-6] = 1.0
    state.v[:] = 0.0
    state.v[-6] = -5.0
    assert gradient_mapping_norm(state, lp) == 0.0


def test_initial_aux_is_closed_form_warm_start():
    data, model, hp, _, _ = _setup(task="tpauc")
    aux = initial_aux(model, data, hp)
    s = forward(model, data.features)
    pos, neg = np.sort(s[data.pos_idx]), np.sort(s[data.neg_idx])[::-1]
    assert aux.a == pytest.approx(pos[:10].mean())
    assert aux.b == pytest.approx(neg[:30].mean())
    assert aux.gamma == pytest.approx(np.clip(aux.b - aux.a, -1, 1))
    assert (aux.s, aux.s_prime, aux.theta_a, aux.theta_b) == (0.0, 2.5, 0.0, 0.0)


def test_train_zero_steps_returns_initial_model():
    data, model, hp, _, _ = _setup()
    res = train(data, model, hp, LearnParams(T=0), BatchSpec(8))
    np.testing.assert_array_equal(res.model.weights, model.weights)
    assert res.trace == []


def test_train_feasible_and_schedules_nonincreasing():
    data, model, hp, ctx, state = _setup(task="tpauc")
    lp = LearnParams(T=60)
    rhos, xis, etas = [], [], []
    rng = np.random.default_rng(1)
    for _ in range(lp.T):
        idx = rng.choice(data.n, 16, replace=False)
        state, info = step(state, data.features[idx], data.labels[idx].astype(float), lp, ctx)
        assert state.is_feasible()
        etas.append(info.eta), rhos.append(info.rho), xis.append(info.xi)
    for seq in (etas, rhos, xis):
        assert all(x >= y for x, y in zip(seq, seq[1:]))


def test_train_is_deterministic(tmp_path):
    data, model, hp, _, _ = _setup(task="tpauc")
    lp = LearnParams(T=40)
    runs = []
    for i in range(2):
        res = train(data, model, hp, lp, BatchSpec(16, shuffle_seed=3), test=data)
        write_trace_csv(res.trace, tmp_path / f"t{i}.csv", include_timing=False)
        runs.append((tmp_path / f"t{i}.csv").read_bytes())
    assert runs[0] == runs[1]
    header = runs[0].split(b"\n")[0].decode().split(",")
    assert header[:14] == list(optim.TRACE_COLUMNS[:14]) and "ms_per_step" not in header


def test_trace_row_per_epoch():
    data, model, hp, _, _ = _setup(n_pos=10, n_neg=30)
    res = train(data, model, hp, LearnParams(T=25), BatchSpec(16))
    # 40 rows -> 3 batches per epoch; 25 steps -> 8 full epochs and a partial one
    assert [r.epoch for r in res.trace] == list(range(9))
    assert res.trace[-1].step == 25 and res.step_grad_map.size == 25


def test_toy_saddle_reduction():
    """Full-batch, rho = xi = 1: projected gradient descent ascent on a known saddle."""
    # f(a, gamma) = (a - 0.3)^2 + a*gamma - gamma^2 has its saddle at a = 0.24, gamma = 0.12
    def value_and_grad(tau, gamma, X, y):
        a = tau[0]
        g = np.zeros_like(tau)
        g[0] = 2 * (a - 0.3) + gamma
        return (a - 0.3) ** 2 + a * gamma - gamma**2, g, a - 2 * gamma

    ctx = SimpleNamespace(hp=SimpleNamespace(M=1e9), value_and_grad=value_and_grad)
    state = OptimState(tau=_tau(0, a=0.9), gamma=-0.8, v=np.zeros(6), w=0.0)
    lp = LearnParams(k=1, m=1, c1=1e6, c2=1e6, nu=0.5, lambda_=0.5)
    for _ in range(3000):
        state, _ = step(state, None, None, lp, ctx)
    assert abs(state.tau[0] - 0.24) < 1e-4 and abs(state.gamma - 0.12) < 1e-4


def test_warmup_improves_and_is_seeded():
    data = generate_synthetic(30, 90, 2, 2.0, seed=4)
    m0 = init_params("linear", 2, seed=4)
    m0.weights[:] = [-1.0, -1.0, 0.0]
    a = optim.warmup_cross_entropy(data, m0, 3, 0.5, BatchSpec(16, shuffle_seed=2))
    b = optim.warmup_cross_entropy(data, m0, 3, 0.5, BatchSpec(16, shuffle_seed=2))
    assert a.weights.tobytes() == b.weights.tobytes()
    s = forward(a, data.features)
    assert s[data.pos_idx].mean() > s[data.neg_idx].mean()


def test_check_step_conditions_reports_without_blocking():
    msgs = check_step_conditions(LearnParams())
    assert isinstance(msgs, list) and msgs
    assert all(isinstance(m, str) for m in msgs)
