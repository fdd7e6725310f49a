"""Accelerated stochastic gradient descent ascent (ASGDA) for the PAUC minimax.

The outer (minimization) variables are packed into one flat vector::

    tau = [model weights ..., a, b, s, s_prime, theta_a, theta_b]

so the momentum estimate ``v`` has the same ``n_model + 6`` layout. ``gamma``
is the single ascent variable with its own estimate ``w``.

Each step takes a convex combination of the current point and a projected
gradient point, so iterates stay feasible, then refreshes ``v``/``w`` with
the momentum-corrected (STORM-style) estimator that evaluates the gradient
at the new and the old point on the same mini-batch.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import losses, metrics
from .dataio import iter_batches
from .model import ModelParams, backward, forward

log = logging.getLogger(__name__)

N_AUX = 6
AUX_NAMES = ("a", "b", "s", "s_prime", "theta_a", "theta_b")
WARMUP_EPOCH_OFFSET = 1 << 32


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LearnParams:
    k: float = 2.0
    m: float = 100.0
    c1: float = 0.5
    c2: float = 0.5
    nu: float = 0.05
    lambda_: float = 0.05
    T: int = 0

    def __post_init__(self):
        if not self.k > 0:
            raise ConfigError(f"k must be positive, got {self.k}")
        if not self.m >= 1:
            raise ConfigError(f"m must be at least 1, got {self.m}")
        if not (self.nu > 0 and self.lambda_ > 0):
            raise ConfigError("nu and lambda must be positive")
        if self.c1 < 0 or self.c2 < 0:
            raise ConfigError("c1 and c2 must be non-negative")
        if self.T < 0:
            raise ConfigError("T must be non-negative")
        if lr_schedule(0, self.k, self.m, check=False) > 1.0:
            raise ConfigError(f"eta_0 = k/m^(1/3) > 1 (k={self.k}, m={self.m}); need m >= k^3")


def lr_schedule(t, k, m, check=True):
    """``eta_t = k / (m + t)**(1/3)``."""
    eta = k / (m + t) ** (1.0 / 3.0)
    if check and eta > 1.0 + 1e-15:
        raise ConfigError(f"eta_{t} = {eta} > 1; need m >= k^3")
    return eta


def tau_bounds(n_model, M=losses.DEFAULT_M):
    lo = np.full(n_model + N_AUX, -np.inf)
    hi = np.full(n_model + N_AUX, np.inf)
    boxes = [losses.A_BOX, losses.B_BOX, losses.S_BOX, losses.S_PRIME_BOX, (0.0, M), (0.0, M)]
    lo[n_model:] = [bx[0] for bx in boxes]
    hi[n_model:] = [bx[1] for bx in boxes]
    return lo, hi


def project_tau(tau, M=losses.DEFAULT_M):
    """Clamp the auxiliary tail of ``tau`` into its box; model weights are free."""
    tau = np.asarray(tau, dtype=np.float64)
    lo, hi = tau_bounds(tau.size - N_AUX, M)
    return np.clip(tau, lo, hi)


def project_gamma(gamma):
    return min(max(float(gamma), losses.GAMMA_BOX[0]), losses.GAMMA_BOX[1])


@dataclass
class OptimState:
    tau: np.ndarray
    gamma: float
    v: np.ndarray
    w: float = 0.0
    t: int = 0

    @classmethod
    def start(cls, params, aux):
        tail = [aux.a, aux.b, aux.s, aux.s_prime, aux.theta_a, aux.theta_b]
        tau = np.concatenate([params.weights, tail])
        return cls(tau=tau, gamma=float(aux.gamma), v=np.zeros_like(tau), w=0.0, t=0)

    @property
    def n_model(self):
        return self.tau.size - N_AUX

    def aux(self):
        a, b, s, s_prime, theta_a, theta_b = self.tau[-N_AUX:]
        return losses.AuxState(float(a), float(b), self.gamma, float(s), float(s_prime),
                               float(theta_a), float(theta_b))

    def is_feasible(self, M=losses.DEFAULT_M):
        lo, hi = tau_bounds(self.n_model, M)
        ok = np.all(self.tau[self.n_model:] >= lo[self.n_model:])
        ok &= np.all(self.tau[self.n_model:] <= hi[self.n_model:])
        return bool(ok) and losses.GAMMA_BOX[0] <= self.gamma <= losses.GAMMA_BOX[1]


@dataclass(frozen=True)
class LossContext:
    """What a step needs to turn ``tau`` into a model and evaluate the loss."""

    kind: str
    layout: tuple
    hp: losses.HyperParams
    kernel: str | None = None

    def params(self, tau):
        return ModelParams(self.kind, tau[:-N_AUX], self.layout)

    def value_and_grad(self, tau, gamma, X, y):
        """Batch objective, its gradient in tau, and its partial in gamma."""
        params = self.params(tau)
        scores = forward(params, X)
        a, b, s, s_prime, theta_a, theta_b = tau[-N_AUX:]
        aux = losses.AuxState(a, b, gamma, s, s_prime, theta_a, theta_b)
        obj, g = losses.batch_objective_and_grad(scores, y, aux, self.hp, kernel=self.kernel)
        grad_tau = np.concatenate([backward(params, X, g.d_score), g.aux_vector()])
        return obj, grad_tau, g.d_gamma


@dataclass
class StepInfo:
    eta: float
    rho: float
    xi: float
    objective: float
    grad_map_norm: float
    seconds: float


_warned_clamp = False


def _momentum_weight(c, eta, name):
    global _warned_clamp
    r = c * eta * eta
    if r > 1.0:
        if not _warned_clamp:
            log.warning("%s = %.4g > 1 at eta = %.4g; clamped to 1", name, r, eta)
            _warned_clamp = True
        r = 1.0
    return r


def gradient_mapping_norm(state, lp, M=losses.DEFAULT_M):
    """``|| (tau - P(tau - nu * v)) / nu ||``."""
    moved = project_tau(state.tau - lp.nu * state.v, M)
    return float(np.linalg.norm((state.tau - moved) / lp.nu))


def step(state, X, y, lp, ctx):
    """One ASGDA iteration on the mini-batch ``(X, y)``.

    Returns the new state and a :class:`StepInfo`; ``state`` is not mutated.
    ``objective`` in the info is the batch objective at the new point.
    """
    M = ctx.hp.M
    t0 = time.perf_counter()
    gmap = gradient_mapping_norm(state, lp, M)
    eta = lr_schedule(state.t, lp.k, lp.m)

    tau_next = (1.0 - eta) * state.tau + eta * project_tau(state.tau - lp.nu * state.v, M)
    gamma_next = (1.0 - eta) * state.gamma + eta * project_gamma(state.gamma + lp.lambda_ * state.w)
    # convex combinations of feasible points can drift by one ulp past a bound
    tau_next = project_tau(tau_next, M)
    gamma_next = project_gamma(gamma_next)

    rho = _momentum_weight(lp.c1, eta, "rho")
    xi = _momentum_weight(lp.c2, eta, "xi")

    obj_new, g_tau_new, g_gam_new = ctx.value_and_grad(tau_next, gamma_next, X, y)
    _, g_tau_old, g_gam_old = ctx.value_and_grad(state.tau, state.gamma, X, y)

    v_next = g_tau_new + (1.0 - rho) * (state.v - g_tau_old)
    w_next = g_gam_new + (1.0 - xi) * (state.w - g_gam_old)
    new = OptimState(tau=tau_next, gamma=gamma_next, v=v_next, w=float(w_next), t=state.t + 1)
    info = StepInfo(eta, rho, xi, obj_new, gmap, time.perf_counter() - t0)
    return new, info


def initial_aux(params, data, hp):
    """Warm start at the closed-form optima for the initial scores."""
    scores = forward(params, data.features)
    pos = scores[data.pos_idx]
    neg = scores[data.neg_idx]
    k_neg = metrics.region_count(neg.size, hp.beta, "beta")
    b0 = float(metrics.top_k(neg, k_neg).mean())
    if hp.is_tpauc:
        k_pos = metrics.region_count(pos.size, hp.alpha, "alpha")
        a0 = float(metrics.bottom_k(pos, k_pos).mean())
    else:
        a0 = float(pos.mean())
    return losses.AuxState(a=a0, b=b0, gamma=project_gamma(b0 - a0), s=0.0, s_prime=2.5,
                           theta_a=0.0, theta_b=0.0)


@dataclass
class TraceRecord:
    step: int
    epoch: int
    eta: float
    objective: float
    opauc: float
    tpauc: float
    grad_map_norm: float
    a: float
    b: float
    gamma: float
    s: float
    s_prime: float
    theta_a: float
    theta_b: float
    ms_per_step: float
    test_opauc: float | None = None
    test_tpauc: float | None = None


TRACE_COLUMNS = ("step", "epoch", "eta", "objective", "opauc", "tpauc", "grad_map_norm",
                 "a", "b", "gamma", "s", "s_prime", "theta_a", "theta_b", "ms_per_step")
TIMING_COLUMNS = ("ms_per_step",)


@dataclass
class TrainResult:
    model: ModelParams
    state: OptimState
    trace: list = field(default_factory=list)
    step_grad_map: np.ndarray = field(default_factory=lambda: np.zeros(0))
    step_objective: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _metrics_for(params, data, hp):
    scores = forward(params, data.features)
    pos, neg = scores[data.pos_idx], scores[data.neg_idx]
    return (metrics.empirical_opauc(pos, neg, hp.beta),
            metrics.empirical_tpauc(pos, neg, hp.alpha, hp.beta), scores)


def warmup_cross_entropy(data, model, epochs, lr, batch_spec):
    """Plain mini-batch SGD on binary cross-entropy; returns a new model.

    Its shuffles come from epoch numbers offset by ``2**32`` so they never
    coincide with the ones ``train`` draws afterwards.
    """
    params = model.copy()
    y = data.labels.astype(np.float64)
    for epoch in range(epochs):
        for idx in iter_batches(data, batch_spec, WARMUP_EPOCH_OFFSET + epoch):
            s = forward(params, data.features[idx])
            # d(BCE)/d(score); scores stay inside (0, 1) by the logit cap
            g = (s - y[idx]) / (s * (1.0 - s)) / idx.size
            params.weights -= lr * backward(params, data.features[idx], g)
    return params


def train(data, model, hp, lp, batch_spec, test=None, kernel=None, check_feasible=True):
    """Run ``lp.T`` ASGDA steps and return the final model with a per-epoch trace.

    The class prior in ``hp`` is replaced by the dataset prior. A trace row is
    written at the end of every epoch (and after a final partial epoch);
    ``grad_map_norm`` and ``ms_per_step`` are averages over that epoch's steps.
    """
    if hp.prior_p != data.prior_p:
        hp = losses.HyperParams(task=hp.task, beta=hp.beta, alpha=hp.alpha, kappa=hp.kappa,
                                omega=hp.omega, prior_p=data.prior_p, M=hp.M)
    metrics.region_count(data.n_neg, hp.beta, "beta")
    if hp.is_tpauc:
        metrics.region_count(data.n_pos, hp.alpha, "alpha")
    ctx = LossContext(model.kind, model.layout, hp, kernel)
    state = OptimState.start(model, initial_aux(model, data, hp))
    result = TrainResult(model=model.copy(), state=state)
    if lp.T == 0:
        return result

    gmaps, objs = [], []
    epoch = 0
    X, y = data.features, data.labels.astype(np.float64)
    while state.t < lp.T:
        ep_gmaps, ep_secs = [], []
        for idx in iter_batches(data, batch_spec, epoch):
            if state.t >= lp.T:
                break
            eta = lr_schedule(state.t, lp.k, lp.m)
            state, info = step(state, X[idx], y[idx], lp, ctx)
            if check_feasible and not state.is_feasible(hp.M):
                raise AssertionError(f"infeasible iterate after step {state.t}")
            gmaps.append(info.grad_map_norm)
            objs.append(info.objective)
            ep_gmaps.append(info.grad_map_norm)
            ep_secs.append(info.seconds)
        params = ctx.params(state.tau)
        opauc, tpauc, scores = _metrics_for(params, data, hp)
        aux = state.aux()
        rec = TraceRecord(
            step=state.t, epoch=epoch, eta=eta,
            objective=losses.batch_objective(scores, y, aux, hp),
            opauc=opauc, tpauc=tpauc, grad_map_norm=float(np.mean(ep_gmaps)),
            a=aux.a, b=aux.b, gamma=aux.gamma, s=aux.s, s_prime=aux.s_prime,
            theta_a=aux.theta_a, theta_b=aux.theta_b,
            ms_per_step=1e3 * float(np.mean(ep_secs)),
        )
        if test is not None:
            rec.test_opauc, rec.test_tpauc, _ = _metrics_for(params, test, hp)
        result.trace.append(rec)
        log.debug("epoch %d step %d objective %.6g opauc %.4f", epoch, state.t, rec.objective, opauc)
        epoch += 1

    result.model = ctx.params(state.tau).copy()
    result.state = state
    result.step_grad_map = np.asarray(gmaps)
    result.step_objective = np.asarray(objs)
    return result


def write_trace_csv(trace, path, include_timing=True):
    cols = list(TRACE_COLUMNS)
    if trace and trace[0].test_opauc is not None:
        cols += ["test_opauc", "test_tpauc"]
    if not include_timing:
        cols = [c for c in cols if c not in TIMING_COLUMNS]
    lines = [",".join(cols)]
    for rec in trace:
        lines.append(",".join(repr(getattr(rec, c)) for c in cols))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def check_step_conditions(lp, lipschitz=1.0, mu=1.0, tau_const=1.0, batch=1.0):
    """List the step-size conditions of the ASGDA convergence theorem that ``lp`` violates.

    ``lipschitz`` is the gradient Lipschitz constant of the objective, ``mu``
    its strong-concavity modulus in gamma, ``tau_const`` and ``batch`` the
    remaining analysis constants. Violations are reported, never enforced.
    """
    L, k = lipschitz, lp.k
    out = []
    c1_min = 2.0 / (3.0 * k**3) + 9.0 * tau_const**2 / 4.0
    c2_min = 2.0 / (3.0 * k**3) + 75.0 * L**2 / 2.0
    m_min = max(2.0, k**3, (lp.c1 * k) ** 3, (lp.c2 * k) ** 3)
    lam_max = min(1.0 / (6.0 * L), 27.0 * batch * mu / 16.0)
    nu_max = min(
        lp.lambda_ * tau_const / (2.0 * L)
        * math.sqrt(2.0 * batch / (8.0 * lp.lambda_**2 + 75.0 * (L / mu) ** 2 * batch)),
        lp.m ** (1.0 / 3.0) / (2.0 * (L + L**2 / mu) * k),
    )
    if lp.c1 < c1_min:
        out.append(f"c1 = {lp.c1} < {c1_min:.6g}")
    if lp.c2 < c2_min:
        out.append(f"c2 = {lp.c2} < {c2_min:.6g}")
    if lp.m < m_min:
        out.append(f"m = {lp.m} < {m_min:.6g}")
    if lp.lambda_ > lam_max:
        out.append(f"lambda = {lp.lambda_} > {lam_max:.6g}")
    if lp.nu > nu_max:
        out.append(f"nu = {lp.nu} > {nu_max:.6g}")
    return out
