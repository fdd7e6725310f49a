"""Instance-wise minimax objectives for one-way and two-way partial AUC.

With squared surrogate ``(1 - t)**2`` the pairwise partial-AUC risk can be
written as an average of per-instance terms in auxiliary variables:

* ``a``, ``b``  -- running estimates of the mean positive / top negative score,
* ``gamma``     -- the dual variable that couples the two classes,
* ``s_prime``   -- the top-beta shift selecting hard negatives (average top-k),
* ``s``         -- the bottom-alpha shift selecting hard positives (TPAUC only),
* ``theta_a``, ``theta_b`` -- multipliers replacing the coupled constraint
  ``gamma >= max(-a, b - 1)`` by the fixed box ``gamma in [-1, 1]``.

The hinge ``[.]_+`` in the top-k selection is smoothed by
``r_kappa(x) = log(1 + exp(kappa x)) / kappa`` and ``-omega * gamma**2`` is
added so the objective is strongly concave in gamma.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import _backend

TASKS = ("opauc", "tpauc")

# feasible boxes of the auxiliary variables
A_BOX = (0.0, 1.0)
B_BOX = (0.0, 1.0)
GAMMA_BOX = (-1.0, 1.0)
S_BOX = (-4.0, 1.0)
S_PRIME_BOX = (0.0, 5.0)
DEFAULT_M = 1e9


@dataclass
class AuxState:
    a: float = 0.5
    b: float = 0.5
    gamma: float = 0.0
    s: float = 0.0
    s_prime: float = 2.5
    theta_a: float = 0.0
    theta_b: float = 0.0

    def boxes(self, M=DEFAULT_M):
        return {
            "a": A_BOX, "b": B_BOX, "gamma": GAMMA_BOX, "s": S_BOX,
            "s_prime": S_PRIME_BOX, "theta_a": (0.0, M), "theta_b": (0.0, M),
        }

    def is_feasible(self, M=DEFAULT_M):
        return all(lo <= getattr(self, k) <= hi for k, (lo, hi) in self.boxes(M).items())

    def as_dict(self):
        return asdict(self)


def default_omega(kappa, beta, alpha=1.0, task="opauc"):
    """Smallest omega keeping the batch objective strongly concave in gamma.

    Each softplus term adds at most ``kappa * weight`` curvature in gamma,
    and with batch class proportions equal to the prior the weights average
    to ``1/beta`` (negatives) and ``1/alpha`` (positives, TPAUC only). The
    bare ``kappa <= 2 + 2*omega`` condition ignores those weights.
    """
    load = 1.0 / beta + (1.0 / alpha if task == "tpauc" else 0.0)
    return max(0.0, 0.5 * kappa * load - 1.0)


@dataclass(frozen=True)
class HyperParams:
    """Task, ROC region and smoothing constants.

    ``omega`` defaults to :func:`default_omega`. An explicit ``omega`` must
    still satisfy ``kappa <= 2 + 2*omega``.
    """

    task: str = "opauc"
    beta: float = 0.3
    alpha: float = 1.0
    kappa: float = 5.0
    omega: float | None = None
    prior_p: float = 0.5
    M: float = DEFAULT_M

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.omega is None:
            object.__setattr__(self, "omega", default_omega(self.kappa, self.beta, self.alpha, self.task))
        if self.omega < 0:
            raise ValueError(f"omega must be non-negative, got {self.omega}")
        if self.kappa > 2.0 + 2.0 * self.omega + 1e-12:
            raise ValueError("strong concavity violated: kappa > 2+2*omega")
        if not 0.0 < self.prior_p < 1.0:
            raise ValueError(f"prior_p must be in (0, 1), got {self.prior_p}")
        if not self.M > 0:
            raise ValueError("M must be positive")

    @property
    def is_tpauc(self):
        return self.task == "tpauc"


@dataclass
class GradBundle:
    """Partials of the batch-mean objective.

    ``d_score[i]`` is the derivative with respect to the i-th score of the
    batch *mean*, so it already carries the ``1/B`` factor.
    """

    d_score: np.ndarray
    d_a: float
    d_b: float
    d_gamma: float
    d_s: float
    d_s_prime: float
    d_theta_a: float
    d_theta_b: float

    def aux_vector(self):
        """``[d_a, d_b, d_s, d_s_prime, d_theta_a, d_theta_b]`` (tau ordering)."""
        return np.array([self.d_a, self.d_b, self.d_s, self.d_s_prime, self.d_theta_a, self.d_theta_b])

    def scaled(self, c):
        kw = {f.name: getattr(self, f.name) * c for f in fields(self)}
        return GradBundle(**kw)


def softplus_r(x, kappa):
    """``log(1 + exp(kappa*x)) / kappa`` without overflow."""
    x = np.asarray(x, dtype=np.float64)
    out = np.maximum(x, 0.0) + np.log1p(np.exp(-kappa * np.abs(x))) / kappa
    return out if out.ndim else float(out)


def softplus_r_prime(x, kappa):
    """Derivative of :func:`softplus_r`, i.e. ``logistic(kappa*x)``."""
    z = kappa * np.asarray(x, dtype=np.float64)
    out = 0.5 * (1.0 + np.tanh(0.5 * z))
    return out if out.ndim else float(out)


def pos_branch_loss(score, a, gamma):
    """``(f - a)**2 - 2(1 + gamma) f``; decreasing in ``f`` once ``gamma >= -a``."""
    return (score - a) ** 2 - 2.0 * (1.0 + gamma) * score


def neg_branch_loss(score, b, gamma):
    """``(f - b)**2 + 2(1 + gamma) f``; increasing in ``f`` once ``gamma >= b - 1``."""
    return (score - b) ** 2 + 2.0 * (1.0 + gamma) * score


def pos_branch_dscore(score, a, gamma):
    return 2.0 * (score - a) - 2.0 * (1.0 + gamma)


def neg_branch_dscore(score, b, gamma):
    return 2.0 * (score - b) + 2.0 * (1.0 + gamma)


def _out(x):
    return x if np.ndim(x) else float(x)


def f_op_instance(score, y, aux, t, hp):
    """Hard-threshold instance loss: negatives count only when ``score >= t``.

    With ``t`` the empirical top-beta threshold and ``beta = k/n_neg`` this
    averages to the OPAUC pairwise risk minus one at the optimal aux values
    (scores tied at ``t`` would enlarge the selected set).
    """
    score = np.asarray(score, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p = hp.prior_p
    pos = pos_branch_loss(score, aux.a, aux.gamma) * y / p
    neg = neg_branch_loss(score, aux.b, aux.gamma) * (1.0 - y) * (score >= t) / ((1.0 - p) * hp.beta)
    return _out(pos - aux.gamma**2 + neg)


def g_op_instance(score, y, aux, hp):
    """Hinge form: the top-beta indicator replaced by an average-top-k shift."""
    score = np.asarray(score, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p, beta = hp.prior_p, hp.beta
    pos = pos_branch_loss(score, aux.a, aux.gamma) * y / p
    hinge = np.maximum(neg_branch_loss(score, aux.b, aux.gamma) - aux.s_prime, 0.0)
    neg = (beta * aux.s_prime + hinge) * (1.0 - y) / (beta * (1.0 - p))
    return _out(pos - aux.gamma**2 + neg)


def g_op_kappa_omega_instance(score, y, aux, hp):
    score = np.asarray(score, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p, beta = hp.prior_p, hp.beta
    pos = pos_branch_loss(score, aux.a, aux.gamma) * y / p
    smooth = softplus_r(neg_branch_loss(score, aux.b, aux.gamma) - aux.s_prime, hp.kappa)
    neg = (beta * aux.s_prime + smooth) * (1.0 - y) / (beta * (1.0 - p))
    return _out(pos - (1.0 + hp.omega) * aux.gamma**2 + neg)


def g_tp_kappa_omega_instance(score, y, aux, hp):
    score = np.asarray(score, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p, alpha, beta, kappa = hp.prior_p, hp.alpha, hp.beta, hp.kappa
    pos_smooth = softplus_r(pos_branch_loss(score, aux.a, aux.gamma) - aux.s, kappa)
    pos = (alpha * aux.s + pos_smooth) * y / (alpha * p)
    neg_smooth = softplus_r(neg_branch_loss(score, aux.b, aux.gamma) - aux.s_prime, kappa)
    neg = (beta * aux.s_prime + neg_smooth) * (1.0 - y) / (beta * (1.0 - p))
    return _out(pos - (1.0 + hp.omega) * aux.gamma**2 + neg)


def lagrangian_terms(aux, task):
    """Multiplier penalty for the decoupled gamma box."""
    out = -aux.theta_b * (aux.b - 1.0 - aux.gamma)
    if task == "tpauc":
        out -= aux.theta_a * (-aux.a - aux.gamma)
    return out


def batch_objective_and_grad(scores, labels, aux, hp, kernel=None):
    """Batch-mean smoothed objective plus Lagrangian terms, and every partial.

    ``kernel`` overrides the import-time backend (``"python"`` or
    ``"compiled"``).
    """
    f = np.ascontiguousarray(scores, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.float64)
    if f.ndim != 1 or f.size == 0:
        raise ValueError("empty batch")
    if y.shape != f.shape:
        raise ValueError(f"labels shape {y.shape} does not match scores shape {f.shape}")
    fn = _backend.objective_and_grad if kernel is None else _backend.KERNELS[kernel].objective_and_grad
    obj, d_score, *rest = fn(
        f, y, float(aux.a), float(aux.b), float(aux.gamma), float(aux.s), float(aux.s_prime),
        float(aux.theta_a), float(aux.theta_b), hp.is_tpauc,
        float(hp.alpha), float(hp.beta), float(hp.kappa), float(hp.omega), float(hp.prior_p),
    )
    return obj, GradBundle(d_score, *rest)


def batch_objective(scores, labels, aux, hp):
    """Objective only, assembled from the per-instance functions (no kernel)."""
    inst = g_tp_kappa_omega_instance if hp.is_tpauc else g_op_kappa_omega_instance
    vals = np.atleast_1d(inst(scores, labels, aux, hp))
    return float(vals.mean()) + lagrangian_terms(aux, hp.task)


def softplus_gap_bound(kappa):
    """``ln 2 / kappa``: the largest gap between ``r_kappa`` and the hinge."""
    return math.log(2.0) / kappa
