"""Exact empirical AUC / OPAUC / TPAUC and the pairwise squared-surrogate risks.

Conventions shared by every function here:

* ties are not violations: a positive scored equal to a negative counts as
  correctly ranked (the 0-1 loss fires only on a strictly negative margin);
* the top-beta negatives and bottom-alpha positives are chosen by sorted rank
  with original index breaking ties, so exactly ``floor(n * frac)`` items are
  selected no matter how many scores coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class RegionError(ValueError):
    """The requested ROC region selects no instances."""


@dataclass(frozen=True)
class RocRegion:
    beta: float
    alpha: float | None = None

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise RegionError(f"beta must be in (0, 1], got {self.beta}")
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise RegionError(f"alpha must be in (0, 1], got {self.alpha}")

    def counts(self, n_pos, n_neg):
        """``(n_pos^alpha, n_neg^beta)``; the first is ``n_pos`` when alpha is absent."""
        k_neg = region_count(n_neg, self.beta, "beta")
        k_pos = n_pos if self.alpha is None else region_count(n_pos, self.alpha, "alpha")
        return k_pos, k_neg


def region_count(n, frac, name="beta"):
    """``floor(n * frac)``, rejecting an empty selection."""
    # absorb products like 100 * 0.57 == 56.999999999999993
    k = math.floor(n * frac + 1e-9)
    if k < 1:
        side = "bottom" if name == "alpha" else "top"
        raise RegionError(f"empty {side}-{name} set: floor({n} * {frac}) = 0")
    return min(k, n)


def effective_fraction(n, frac):
    """The fraction actually used by the rank-based estimator, ``k / n``."""
    return region_count(n, frac) / n


def zero_one_loss(t):
    return 1 if t < 0 else 0


def top_k(values, k):
    """The ``k`` largest values, selected by stable descending rank."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(-v, kind="stable")
    return v[order[:k]]


def bottom_k(values, k):
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    return v[order[:k]]


def eta_beta(neg_scores, beta):
    """Score of the ``floor(n_neg * beta)``-th largest negative."""
    k = region_count(len(neg_scores), beta, "beta")
    return float(top_k(neg_scores, k)[-1])


def eta_alpha(pos_scores, alpha):
    """Score of the ``floor(n_pos * alpha)``-th smallest positive."""
    k = region_count(len(pos_scores), alpha, "alpha")
    return float(bottom_k(pos_scores, k)[-1])


def _check_nonempty(pos, neg):
    if pos.size == 0 or neg.size == 0:
        raise RegionError("need at least one positive and one negative score")


def empirical_auc(pos_scores, neg_scores):
    """Fraction of (positive, negative) pairs with ``f(x) >= f(x')``; O(n log n)."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.sort(np.asarray(neg_scores, dtype=np.float64))
    _check_nonempty(pos, neg)
    correct = np.searchsorted(neg, pos, side="right").sum()
    return float(correct) / (pos.size * neg.size)


def empirical_auc_bruteforce(pos_scores, neg_scores):
    pos = list(map(float, pos_scores))
    neg = list(map(float, neg_scores))
    if not pos or not neg:
        raise RegionError("need at least one positive and one negative score")
    violations = sum(zero_one_loss(p - q) for p in pos for q in neg)
    return 1.0 - violations / (len(pos) * len(neg))


def empirical_opauc(pos_scores, neg_scores, beta):
    neg = np.asarray(neg_scores, dtype=np.float64)
    k = region_count(neg.size, beta, "beta")
    return empirical_auc(pos_scores, top_k(neg, k))


def empirical_tpauc(pos_scores, neg_scores, alpha, beta):
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    kp = region_count(pos.size, alpha, "alpha")
    kn = region_count(neg.size, beta, "beta")
    return empirical_auc(bottom_k(pos, kp), top_k(neg, kn))


def _pairwise_sq(pos, neg):
    # plain double loop on purpose: this is the O(n_pos * n_neg) reference
    total = math.fsum((1.0 - (p - q)) ** 2 for p in pos for q in neg)
    return total / (len(pos) * len(neg))


def pairwise_sq_risk_opauc(pos_scores, neg_scores, beta):
    """Mean of ``(1 - (f(x_i) - f(x'_[j])))**2`` over all positives and top-beta negatives."""
    neg = np.asarray(neg_scores, dtype=np.float64)
    k = region_count(neg.size, beta, "beta")
    pos = [float(v) for v in pos_scores]
    if not pos:
        raise RegionError("need at least one positive score")
    return _pairwise_sq(pos, top_k(neg, k).tolist())


def pairwise_sq_risk_tpauc(pos_scores, neg_scores, alpha, beta):
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    kp = region_count(pos.size, alpha, "alpha")
    kn = region_count(neg.size, beta, "beta")
    return _pairwise_sq(bottom_k(pos, kp).tolist(), top_k(neg, kn).tolist())


def evaluate(scores, labels, alpha=None, beta=1.0):
    """All three metrics plus the region actually used, as a plain dict."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos, neg = scores[labels == 1], scores[labels == 0]
    out = {"auc": empirical_auc(pos, neg), "opauc": empirical_opauc(pos, neg, beta)}
    region = {"beta": beta, "n_neg_beta": region_count(neg.size, beta, "beta")}
    region["beta_effective"] = region["n_neg_beta"] / neg.size
    if alpha is not None:
        out["tpauc"] = empirical_tpauc(pos, neg, alpha, beta)
        region["alpha"] = alpha
        region["n_pos_alpha"] = region_count(pos.size, alpha, "alpha")
        region["alpha_effective"] = region["n_pos_alpha"] / pos.size
    else:
        out["tpauc"] = None
    out["region"] = region
    return out
