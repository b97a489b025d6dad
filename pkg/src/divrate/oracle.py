"""Exact sampling laws of the estimators on small finite alphabets.

Every count vector (y_1, ..., y_k) with sum n is enumerated and weighted by its
multinomial probability, computed in log space. The estimator formulas here
are written out directly on the count matrix and do not call into
:mod:`divrate.estimators`, so they serve as an independent reference.
"""

from dataclasses import dataclass
from itertools import combinations
import math
from typing import NamedTuple

import numpy as np
from scipy import special

from .estimators import normalize_method
from .indices import SHANNON, parse_index
from .validation import check_probability_vector

MAX_LETTERS = 6
MAX_N = 30
MERGE_TOL = 1e-12


class OracleGuardError(ValueError):
    """The requested enumeration exceeds the size guard."""


@dataclass(frozen=True)
class AtomicLaw:
    """A finitely supported law: strictly increasing ``values`` with ``probs``."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.probs.shape or self.values.ndim != 1:
            raise ValueError("values and probs must be 1-D arrays of equal length")
        if np.any(np.diff(self.values) <= 0):
            raise ValueError("atom values must be strictly increasing")

    @property
    def total(self):
        return math.fsum(self.probs)

    def mean(self):
        return math.fsum(self.values * self.probs)

    def var(self):
        m = self.mean()
        return math.fsum((self.values - m) ** 2 * self.probs)

    def cdf(self, x):
        return math.fsum(self.probs[self.values <= x])

    def to_rows(self):
        return list(zip(self.values.tolist(), self.probs.tolist()))


def compositions(n, k):
    """All vectors of k nonnegative integers summing to n, as an (M, k) array."""
    if k == 1:
        return np.array([[n]], dtype=np.int64)
    bars = np.array(list(combinations(range(n + k - 1), k - 1)), dtype=np.int64)
    if bars.size == 0:
        return np.zeros((1, k), dtype=np.int64)
    edges = np.hstack([np.full((len(bars), 1), -1), bars,
                       np.full((len(bars), 1), n + k - 1)])
    return np.diff(edges, axis=1) - 1


def _entropy_rows(Y, m):
    p = Y / m
    return -special.xlogy(p, p).sum(axis=1)


def _estimator_values(Y, n, method, spec):
    Yf = Y.astype(float)
    if method == "plugin" and not spec.is_shannon:
        return spec.g(Yf / n).sum(axis=1)
    H = _entropy_rows(Yf, n)
    if method == "plugin":
        return H
    if method == "miller-madow":
        return H + (np.count_nonzero(Y, axis=1) - 1) / (2 * n)
    # jackknife: delete one observation of each letter in turn
    loo_sum = np.zeros(len(Y))
    for i in range(Y.shape[1]):
        has = Y[:, i] > 0
        reduced = Yf[has].copy()
        reduced[:, i] -= 1
        loo_sum[has] += Yf[has, i] * _entropy_rows(reduced, n - 1)
    jk = n * H - (n - 1) * loo_sum / n
    if method == "jackknife-bias":
        return jk - H
    return jk


def merge_atoms(values, weights, tol=MERGE_TOL):
    """Sort values, merge runs closer than ``tol`` and sum their weights."""
    keep = weights > 0
    values, weights = values[keep], weights[keep]
    order = np.argsort(values, kind="stable")
    values, weights = values[order], weights[order]
    gaps = np.diff(values) > tol * np.maximum(1.0, np.abs(values[1:]))
    starts = np.concatenate([[0], np.flatnonzero(gaps) + 1])
    # + 0.0 turns -0.0 (from -sum 0 ln 0) into 0.0
    return AtomicLaw(values[starts] + 0.0, np.add.reduceat(weights, starts))


def exact_estimator_law(probs, n, estimator="plugin", index=SHANNON):
    """Exact law of an estimator for an i.i.d. sample of size ``n`` from ``probs``.

    ``estimator`` is "plugin", "miller-madow", "jackknife" or "jackknife-bias"
    (the jackknife's bias estimate B_JK); the last three require Shannon.
    """
    p = check_probability_vector(probs)
    k, n = p.size, int(n)
    if k > MAX_LETTERS or n > MAX_N:
        raise OracleGuardError(
            f"enumeration limited to k <= {MAX_LETTERS}, n <= {MAX_N}; got k={k}, n={n}")
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = parse_index(index)
    method = estimator if estimator == "jackknife-bias" else normalize_method(estimator)
    if method != "plugin" and not spec.is_shannon:
        raise ValueError(f"{method} is only defined for Shannon entropy")
    if method in ("jackknife", "jackknife-bias") and n < 2:
        raise ValueError("the jackknife needs n >= 2")

    Y = compositions(n, k)
    log_w = (special.gammaln(n + 1) - special.gammaln(Y + 1).sum(axis=1)
             + special.xlogy(Y, p).sum(axis=1))
    weights = np.exp(log_w)
    return merge_atoms(_estimator_values(Y, n, method, spec), weights)


def exact_kolmogorov(law, center, scale):
    """sup_x |P((T - center)/scale <= x) - Phi(x)| for T distributed as ``law``.

    The supremum of a step CDF against a continuous one is attained at a jump,
    on one side or the other.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    t = (law.values - center) / scale
    F = np.cumsum(law.probs)
    F_before = F - law.probs
    phi = special.ndtr(t)
    return float(max(np.max(np.abs(F - phi)), np.max(np.abs(F_before - phi))))


class MomentBoundCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def verify_moment_bound(p, n, beta):
    """Check E|p_hat - p|^(beta+1) <= 4 p n^-beta for p_hat ~ Binomial(n, p)/n.

    The left side is the exact binomial sum with weights from log-gamma.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    j = np.arange(n + 1)
    log_w = (special.gammaln(n + 1) - special.gammaln(j + 1) - special.gammaln(n - j + 1)
             + j * math.log(p) + (n - j) * math.log1p(-p))
    lhs = math.fsum(np.exp(log_w) * np.abs(j / n - p) ** (beta + 1))
    rhs = 4.0 * p * n ** -beta
    return MomentBoundCheck(lhs, rhs, lhs <= rhs)


def _truth(p, spec):
    if spec.is_shannon:
        return math.fsum(-special.xlogy(p, p))
    return math.fsum(spec.g(p))


def exact_bias(probs, n, estimator="plugin", index=SHANNON):
    """E[estimator] - true index value, by exact enumeration."""
    spec = parse_index(index)
    p = check_probability_vector(probs)
    return exact_estimator_law(p, n, estimator, spec).mean() - _truth(p, spec)


def jackknife_bias_identity(probs, n):
    """Both sides of E[B_JK] = (n - 1)(B_n - B_{n-1}), B_m the plug-in entropy bias."""
    if n < 2:
        raise ValueError("the identity needs n >= 2")
    lhs = exact_estimator_law(probs, n, "jackknife-bias").mean()
    rhs = (n - 1) * (exact_bias(probs, n) - exact_bias(probs, n - 1))
    return lhs, rhs


__all__ = [
    "AtomicLaw", "OracleGuardError", "MAX_LETTERS", "MAX_N", "compositions",
    "merge_atoms", "exact_estimator_law", "exact_kolmogorov", "MomentBoundCheck",
    "verify_moment_bound", "exact_bias", "jackknife_bias_identity",
]
