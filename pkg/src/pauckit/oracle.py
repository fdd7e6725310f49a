"""Brute-force oracles for the instance-wise reformulation.

Nothing here imports :mod:`pauckit.losses` or :mod:`pauckit.metrics`; every
quantity is recomputed from sorted score lists so that agreement with those
modules is evidence rather than tautology.

The region sizes follow the rank-based estimator: ``k = floor(n * frac)``
items are selected, and the closed forms use the effective fraction
``k / n`` in place of the nominal one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
S_BOX = (-4.0, 1.0)
S_PRIME_BOX = (0.0, 5.0)


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class ClosedFormOptima:
    a_star: float
    b_star: float
    gamma_star: float
    value: float


def _count(n, frac):
    k = math.floor(n * frac + 1e-9)
    if k < 1:
        raise ValueError(f"floor({n} * {frac}) = 0 selects nothing")
    return min(k, n)


def _desc(values):
    return sorted((float(v) for v in values), reverse=True)


def avg_topk(values, k):
    """Mean of the ``k`` largest entries."""
    top = _desc(values)[:k]
    if not 1 <= k <= len(top) == k:
        raise ValueError(f"k={k} out of range for {len(values)} values")
    return math.fsum(top) / k


def atk_via_min_s(values, k, box=None, return_argmin=False):
    """Minimize ``s + (1/k) * sum([x_i - s]_+)`` over ``s`` by enumeration.

    The objective is convex and piecewise linear with kinks at the data, so
    its minimum over an interval is attained at a data point or an interval
    end. Candidates are the k-th largest value, all values and, when ``box``
    is given, the box ends; candidates outside ``box`` are clipped into it.
    On a flat stretch the k-th largest value wins, being listed first.
    """
    x = np.asarray(values, dtype=np.float64)
    if not 1 <= k <= x.size:
        raise ValueError(f"k={k} out of range for {x.size} values")
    cands = np.append(np.sort(x)[::-1][k - 1], x)
    if box is not None:
        cands = np.clip(np.append(cands, box), box[0], box[1])
    obj = cands + np.maximum(x[None, :] - cands[:, None], 0.0).sum(axis=1) / k
    i = int(np.argmin(obj))
    return (float(obj[i]), float(cands[i])) if return_argmin else float(obj[i])


def _atk_rows(X, k, box):
    # atk_via_min_s applied to every row of X
    cands = np.concatenate([X, np.broadcast_to(np.asarray(box, float), (X.shape[0], 2))], axis=1)
    cands = np.clip(cands, box[0], box[1])
    hinge = np.maximum(X[:, None, :] - cands[:, :, None], 0.0).sum(axis=2) / k
    return (cands + hinge).min(axis=1)


def _moments(scores):
    s = np.asarray(scores, dtype=np.float64)
    # shifting by the first element keeps constant inputs exact
    c = s[0]
    mean = c + math.fsum(s - c) / s.size
    spread = math.fsum((s - mean) ** 2) / s.size
    return mean, spread


def closed_form_opauc(pos_scores, neg_scores, beta):
    """Optimal ``a, b, gamma`` and the optimal minimax value for fixed scores.

    ``a* = mean(pos)``, ``b* = mean(top-k neg)``, ``gamma* = b* - a*`` and
    ``value = var(pos) + var(top-k neg) + dE**2 + 2*dE`` with ``dE = b* - a*``.
    """
    k = _count(len(neg_scores), beta)
    top = _desc(neg_scores)[:k]
    a, var_a = _moments(list(pos_scores))
    b, var_b = _moments(top)
    d = b - a
    return ClosedFormOptima(a, b, d, var_a + var_b + d * d + 2.0 * d)


def closed_form_tpauc(pos_scores, neg_scores, alpha, beta):
    kp = _count(len(pos_scores), alpha)
    kn = _count(len(neg_scores), beta)
    bottom = sorted(float(v) for v in pos_scores)[:kp]
    top = _desc(neg_scores)[:kn]
    a, var_a = _moments(bottom)
    b, var_b = _moments(top)
    d = b - a
    return ClosedFormOptima(a, b, d, var_a + var_b + d * d + 2.0 * d)


def pairwise_sq_bruteforce(pos_scores, neg_scores):
    """Mean squared surrogate over every pair of the given (already selected) lists."""
    pos, neg = list(map(float, pos_scores)), list(map(float, neg_scores))
    return math.fsum((1.0 - (p - q)) ** 2 for p in pos for q in neg) / (len(pos) * len(neg))


def golden_section(fun, lo, hi, tol=1e-8, maximize=False, max_iter=200):
    """Golden-section search for a unimodal ``fun`` on ``[lo, hi]``.

    Returns ``(x, fun(x))`` for the best point seen, endpoints included, so
    optima on the boundary are returned exactly.
    """
    sign = -1.0 if maximize else 1.0

    def g(x):
        return sign * fun(x)

    best_x, best_v = lo, g(lo)
    v_hi = g(hi)
    if v_hi < best_v:
        best_x, best_v = hi, v_hi
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = g(c), g(d)
    it = 0
    while b - a > tol:
        it += 1
        if it > max_iter:
            raise OracleError(f"golden section did not reach width {tol} in {max_iter} steps")
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = g(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = g(d)
    for x, v in ((c, fc), (d, fd)):
        if v < best_v:
            best_x, best_v = x, v
    return best_x, sign * best_v


def _grid_then_golden(fun_vec, fun, lo, hi, n_grid, tol, maximize):
    # coarse vectorized grid locates the basin, golden section polishes it
    grid = np.linspace(lo, hi, n_grid)
    vals = fun_vec(grid)
    j = int(np.argmax(vals) if maximize else np.argmin(vals))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, n_grid - 1)]
    x, v = golden_section(fun, a, b, tol=tol, maximize=maximize)
    if (maximize and vals[j] > v) or (not maximize and vals[j] < v):
        return grid[j], vals[j]
    return x, v


class _Problem:
    """Per-instance pieces of the empirical objective for fixed scores."""

    def __init__(self, pos, neg, alpha, beta):
        self.pos = np.asarray(pos, dtype=np.float64)
        self.neg = np.asarray(neg, dtype=np.float64)
        self.kp = _count(self.pos.size, alpha)
        self.kn = _count(self.neg.size, beta)
        self.mean_pos = math.fsum(self.pos) / self.pos.size

    def neg_part(self, b, gamma):
        # min over s' of s' + (1/k) sum [(f-b)^2 + 2(1+gamma) f - s']_+
        losses = (self.neg - b) ** 2 + 2.0 * (1.0 + gamma) * self.neg
        return atk_via_min_s(losses, self.kn, S_PRIME_BOX)

    def neg_part_vec(self, b, gammas):
        losses = (self.neg[None, :] - b) ** 2 + 2.0 * (1.0 + gammas[:, None]) * self.neg[None, :]
        return _atk_rows(losses, self.kn, S_PRIME_BOX)

    def pos_part_tp(self, a, gamma):
        losses = (self.pos - a) ** 2 - 2.0 * (1.0 + gamma) * self.pos
        return atk_via_min_s(losses, self.kp, S_BOX)


def _opauc_inner(prob, b, tol):
    # max over gamma in [b-1, 1]; concave there because the top-k set is fixed
    def phi(g):
        return -2.0 * (1.0 + g) * prob.mean_pos - g * g + prob.neg_part(b, g)

    return golden_section(phi, b - 1.0, 1.0, tol=tol, maximize=True)[1]


def _opauc_lagrangian_inner(prob, b, tol, n_grid, theta_max):
    c = b - 1.0

    def phi_vec(gs):
        return -2.0 * (1.0 + gs) * prob.mean_pos - gs * gs + prob.neg_part_vec(b, gs)

    def phi(g):
        return -2.0 * (1.0 + g) * prob.mean_pos - g * g + prob.neg_part(b, g)

    def dual(theta):
        return _grid_then_golden(
            lambda gs: phi_vec(gs) + theta * (gs - c),
            lambda g: phi(g) + theta * (g - c),
            -1.0, 1.0, n_grid, tol, maximize=True,
        )

    g0, d0 = dual(0.0)
    if g0 >= c:
        # dual is convex in theta with right-derivative g*(0) - c >= 0 at zero
        return d0
    thetas = np.linspace(0.0, theta_max, 9)
    vals = np.array([dual(t)[1] for t in thetas])
    j = int(np.argmin(vals))
    lo, hi = thetas[max(j - 1, 0)], thetas[min(j + 1, thetas.size - 1)]
    _, v = golden_section(lambda t: dual(t)[1], lo, hi, tol=tol)
    return min(v, vals[j])


def nested_minimax_solve(pos_scores, neg_scores, task="opauc", alpha=1.0, beta=1.0,
                         gamma_box="constrained", tol=1e-8, n_grid=101, theta_max=8.0):
    """Numerically solve the min-max-min problem over the aux variables for fixed scores.

    ``gamma_box="constrained"`` maximizes gamma over ``[max(-a, b-1), 1]``
    (``[b-1, 1]`` for OPAUC). ``gamma_box="lagrangian"`` (OPAUC only) widens
    it to ``[-1, 1]`` and minimizes over a multiplier ``theta_b >= 0`` on the
    violated constraint instead. Every scalar is refined to width ``tol``.

    For OPAUC ``a`` enters only through ``mean((pos - a)**2)`` and is solved
    separately; TPAUC couples ``a`` to the gamma box and nests it outermost.
    ``theta_max`` bounds the multiplier search: the objective's slope in
    gamma is below 6, so larger multipliers cannot lower the dual.
    """
    if task not in ("opauc", "tpauc"):
        raise ValueError(f"unknown task {task!r}")
    prob = _Problem(pos_scores, neg_scores, alpha if task == "tpauc" else 1.0, beta)

    if task == "opauc":
        _, a_part = golden_section(lambda a: math.fsum((prob.pos - a) ** 2) / prob.pos.size,
                                   0.0, 1.0, tol=tol)
        if gamma_box == "constrained":
            inner = lambda b: _opauc_inner(prob, b, tol)
        elif gamma_box == "lagrangian":
            inner = lambda b: _opauc_lagrangian_inner(prob, b, tol, n_grid, theta_max)
        else:
            raise ValueError(f"unknown gamma_box {gamma_box!r}")
        _, b_part = golden_section(inner, 0.0, 1.0, tol=tol)
        return a_part + b_part

    if gamma_box != "constrained":
        raise ValueError("the Lagrangian sweep is implemented for OPAUC only")

    def over_b(a):
        def over_gamma(b):
            def psi(g):
                return prob.pos_part_tp(a, g) - g * g + prob.neg_part(b, g)
            lo = max(-a, b - 1.0)
            return golden_section(psi, lo, 1.0, tol=tol, maximize=True)[1]
        return golden_section(over_gamma, 0.0, 1.0, tol=tol)[1]

    return golden_section(over_b, 0.0, 1.0, tol=tol)[1]


def _softplus_gap(x, kappa):
    return np.logaddexp(0.0, kappa * x) / kappa - np.maximum(x, 0.0)


def softplus_bias_sup(kappa, n_grid=200001):
    """``sup_{x in [-5, 5]} |r_kappa(x) - [x]_+|`` on a dense grid plus ``x = 0``."""
    grid = np.linspace(-5.0, 5.0, n_grid)
    gaps = np.abs(_softplus_gap(grid, kappa))
    return float(max(gaps.max(), abs(_softplus_gap(np.array([0.0]), kappa)[0])))


def neg_inner_range(n=41):
    """Min and max of ``(f-b)**2 + 2(1+gamma) f - s'`` over a grid of the feasible box."""
    f = np.linspace(0.0, 1.0, n)[:, None, None, None]
    b = np.linspace(0.0, 1.0, n)[None, :, None, None]
    g = np.linspace(-1.0, 1.0, n)[None, None, :, None]
    sp = np.linspace(0.0, 5.0, n)[None, None, None, :]
    vals = (f - b) ** 2 + 2.0 * (1.0 + g) * f - sp
    return float(vals.min()), float(vals.max())
