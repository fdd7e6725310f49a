# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch objective and gradients; one fused pass over the batch."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, log1p, tanh

cnp.import_array()


cdef inline double _softplus(double x, double kappa) nogil:
    cdef double m = x if x > 0.0 else 0.0
    return m + log1p(exp(-kappa * fabs(x))) / kappa


cdef inline double _sigmoid(double x) nogil:
    return 0.5 * (1.0 + tanh(0.5 * x))


def objective_and_grad(const double[::1] f, const double[::1] y,
                       double a, double b, double gamma, double s, double s_prime,
                       double theta_a, double theta_b, bint tp,
                       double alpha, double beta, double kappa, double omega, double p):
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t i
    cdef double one_g = 1.0 + gamma
    cdef double wn = 1.0 / (beta * (1.0 - p))
    cdef double wp = 1.0 / (alpha * p) if tp else 1.0 / p
    cdef double fi, u, v, sig
    cdef double total = 0.0, sa = 0.0, sb = 0.0, sgp = 0.0, sgn = 0.0, ss = 0.0, ssp = 0.0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d_score_arr = np.empty(n)
    cdef double[::1] d_score = d_score_arr

    with nogil:
        for i in range(n):
            fi = f[i]
            if y[i] == 1.0:
                if tp:
                    v = (fi - a) * (fi - a) - 2.0 * one_g * fi - s
                    sig = _sigmoid(kappa * v)
                    total += (alpha * s + _softplus(v, kappa)) * wp
                    ss += alpha - sig
                else:
                    sig = 1.0
                    total += ((fi - a) * (fi - a) - 2.0 * one_g * fi) * wp
                d_score[i] = sig * (2.0 * (fi - a) - 2.0 * one_g) * wp / n
                sa += sig * -2.0 * (fi - a)
                sgp += sig * -2.0 * fi
            else:
                u = (fi - b) * (fi - b) + 2.0 * one_g * fi - s_prime
                sig = _sigmoid(kappa * u)
                total += (beta * s_prime + _softplus(u, kappa)) * wn
                d_score[i] = sig * (2.0 * (fi - b) + 2.0 * one_g) * wn / n
                sb += sig * -2.0 * (fi - b)
                sgn += sig * 2.0 * fi
                ssp += beta - sig

    cdef double obj = total / n - (1.0 + omega) * gamma * gamma - theta_b * (b - 1.0 - gamma)
    cdef double d_a = sa * wp / n
    cdef double d_b = sb * wn / n - theta_b
    cdef double d_gamma = (sgp * wp + sgn * wn) / n - 2.0 * (1.0 + omega) * gamma + theta_b
    cdef double d_s = 0.0
    cdef double d_s_prime = ssp * wn / n
    cdef double d_theta_a = 0.0
    cdef double d_theta_b = -(b - 1.0 - gamma)
    if tp:
        obj += theta_a * (a + gamma)
        d_a += theta_a
        d_gamma += theta_a
        d_s = ss * wp / n
        d_theta_a = a + gamma
    return (obj, d_score_arr, d_a, d_b, d_gamma, d_s, d_s_prime, d_theta_a, d_theta_b)
