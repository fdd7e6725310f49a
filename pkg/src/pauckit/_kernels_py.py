"""Pure-numpy batch objective and gradients (fallback for the compiled kernel)."""

import numpy as np


def _softplus(x, kappa):
    return np.maximum(x, 0.0) + np.log1p(np.exp(-kappa * np.abs(x))) / kappa


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def objective_and_grad(f, y, a, b, gamma, s, s_prime, theta_a, theta_b,
                       tp, alpha, beta, kappa, omega, p):
    n = f.shape[0]
    pos = y == 1.0
    one_g = 1.0 + gamma

    wn = 1.0 / (beta * (1.0 - p))
    u = (f - b) ** 2 + 2.0 * one_g * f - s_prime
    sig_n = _sigmoid(kappa * u)
    neg_val = (beta * s_prime + _softplus(u, kappa)) * wn
    neg_df = sig_n * (2.0 * (f - b) + 2.0 * one_g) * wn

    if tp:
        wp = 1.0 / (alpha * p)
        v = (f - a) ** 2 - 2.0 * one_g * f - s
        sig_p = _sigmoid(kappa * v)
        pos_val = (alpha * s + _softplus(v, kappa)) * wp
    else:
        wp = 1.0 / p
        sig_p = np.ones_like(f)
        pos_val = ((f - a) ** 2 - 2.0 * one_g * f) * wp
    pos_df = sig_p * (2.0 * (f - a) - 2.0 * one_g) * wp

    obj = np.where(pos, pos_val, neg_val).sum() / n - (1.0 + omega) * gamma**2
    obj -= theta_b * (b - 1.0 - gamma)
    d_score = np.where(pos, pos_df, neg_df) / n

    sp, fp = sig_p[pos], f[pos]
    sn, fn = sig_n[~pos], f[~pos]
    d_a = (sp * -2.0 * (fp - a)).sum() * wp / n
    d_b = (sn * -2.0 * (fn - b)).sum() * wn / n - theta_b
    d_gamma = ((sp * -2.0 * fp).sum() * wp + (sn * 2.0 * fn).sum() * wn) / n
    d_gamma += -2.0 * (1.0 + omega) * gamma + theta_b
    d_s_prime = (beta - sn).sum() * wn / n
    d_theta_b = -(b - 1.0 - gamma)
    if tp:
        obj += theta_a * (a + gamma)
        d_a += theta_a
        d_gamma += theta_a
        d_s = (alpha - sp).sum() * wp / n
        d_theta_a = a + gamma
    else:
        d_s = 0.0
        d_theta_a = 0.0
    return (float(obj), d_score, float(d_a), float(d_b), float(d_gamma),
            float(d_s), float(d_s_prime), float(d_theta_a), float(d_theta_b))
