"""Plug-in and bias-corrected estimators of diversity indices from letter counts.

Functions take a :class:`SampleCounts`; the underscore-prefixed kernels work on
bare count vectors and are what the Monte Carlo loop calls.
"""

from dataclasses import asdict, dataclass, replace
import math

import numpy as np
from scipy import special
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .indices import SHANNON, DEGENERACY_RTOL, parse_index
from .validation import SampleCounts, check_counts, check_level

DEFAULT_LEVEL = 0.95

METHODS = ("plugin", "miller-madow", "jackknife")
_METHOD_ALIASES = {"plugin": "plugin", "plug-in": "plugin", "mm": "miller-madow",
                   "miller-madow": "miller-madow", "jk": "jackknife",
                   "jackknife": "jackknife"}


def normalize_method(method):
    try:
        return _METHOD_ALIASES[str(method).lower()]
    except KeyError:
        raise ValueError(f"unknown estimator {method!r}; expected one of {METHODS}") from None


@dataclass(frozen=True)
class Estimate:
    """Point estimate with a normal-approximation confidence interval.

    ``bias_correction`` is the amount added to the plug-in value: 0 for the
    plug-in itself, (m - 1)/(2n) for Miller-Madow, and the jackknife bias
    estimate B_JK for the jackknife.
    """

    value: float
    sigma_hat: float
    std_error: float
    ci_low: float
    ci_high: float
    level: float
    method: str
    n: int
    degenerate: bool
    bias_correction: float = 0.0

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, record):
        return cls(**record)


def _normal_quantile(prob):
    return float(special.ndtri(prob))


def confidence_interval(est, level=DEFAULT_LEVEL):
    """Return ``est`` with a two-sided interval value +- z sigma_hat / sqrt(n).

    Degenerate estimates (sigma_hat = 0) get the point interval [value, value].
    """
    level = check_level(level)
    if est.degenerate:
        return replace(est, ci_low=est.value, ci_high=est.value, level=level)
    half = _normal_quantile(0.5 + level / 2) * est.std_error
    return replace(est, ci_low=est.value - half, ci_high=est.value + half, level=level)


def _spread(p, h, value=None):
    # sqrt Var h(p(X)) under the empirical law; exactly 0 when h is constant
    mean = math.fsum(p * h) if value is None else value
    var = math.fsum(p * (h - mean) ** 2)
    second = math.fsum(p * h * h)
    if var <= DEGENERACY_RTOL * max(second, 1e-300):
        return 0.0
    return math.sqrt(var)


def _finish(value, sigma_hat, n, method, level, bias_correction=0.0):
    degenerate = sigma_hat == 0.0
    est = Estimate(value=float(value), sigma_hat=float(sigma_hat),
                   std_error=float(sigma_hat) / math.sqrt(n), ci_low=math.nan,
                   ci_high=math.nan, level=level, method=method, n=int(n),
                   degenerate=degenerate, bias_correction=float(bias_correction))
    return confidence_interval(est, level)


# -- kernels on positive count vectors ----------------------------------------

def _plugin_power_value(counts, n, spec):
    return math.fsum(spec.g(counts / n))


def _shannon_value(counts, n):
    p = counts / n
    return math.fsum(-special.xlogy(p, p))


def _miller_madow_value(counts, n):
    return _shannon_value(counts, n) + (np.count_nonzero(counts) - 1) / (2 * n)


def _jackknife_terms(counts, n):
    """Plug-in value H, jackknife value and B_JK for a positive count vector.

    Deleting any one observation of letter i gives the same subsample, so the
    n leave-one-out entropies take only ``len(counts)`` distinct values:

        H^(i) = ln(n-1) - (S - y_i ln y_i + (y_i-1) ln(y_i-1)) / (n-1),
        S = sum_j y_j ln y_j.
    """
    counts = counts[counts > 0].astype(float)
    H = _shannon_value(counts, n)
    if counts.size == 1:
        return H, H, 0.0
    S = math.fsum(special.xlogy(counts, counts))
    S_del = S - special.xlogy(counts, counts) + special.xlogy(counts - 1, counts - 1)
    H_del = math.log(n - 1) - S_del / (n - 1)
    bias = (n - 1) / n * math.fsum(counts * (H - H_del))
    return H, H + bias, bias


def _jackknife_value(counts, n):
    return _jackknife_terms(counts, n)[1]


def estimator_kernel(method, spec=SHANNON):
    """Return ``f(counts, n) -> float`` for a method / index pair."""
    method = normalize_method(method)
    spec = parse_index(spec)
    if method == "plugin":
        if spec.is_shannon:
            return _shannon_value
        return lambda counts, n: _plugin_power_value(counts, n, spec)
    if not spec.is_shannon:
        raise ValueError(f"{method} is only defined for Shannon entropy")
    return _miller_madow_value if method == "miller-madow" else _jackknife_value


def sigma_hat_kernel(spec=SHANNON):
    """Return ``f(counts, n) -> sigma_hat`` (plug-in of the asymptotic sigma)."""
    spec = parse_index(spec)
    if spec.is_shannon:
        def shannon_sigma(counts, n):
            p = counts[counts > 0] / n
            return _spread(p, np.log(p))
        return shannon_sigma

    def power_sigma(counts, n):
        p = counts[counts > 0] / n
        with np.errstate(divide="ignore", invalid="ignore"):
            return _spread(p, spec.g_prime(p))
    return power_sigma


# -- public estimators ----------------------------------------------------------

def _counts_of(counts):
    if not isinstance(counts, SampleCounts):
        counts = SampleCounts.from_mapping(counts) if isinstance(counts, dict) \
            else SampleCounts(np.arange(1, len(counts) + 1), counts)
    return counts


def plugin_index(counts, spec, level=DEFAULT_LEVEL):
    """Plug-in estimate sum_i g(y_i / n) of a power index.

    Examples
    --------
    >>> plugin_index({"a": 5, "b": 5}, "simpson").value
    0.5
    """
    counts, spec = _counts_of(counts), parse_index(spec)
    if spec.is_shannon:
        return shannon_plugin(counts, level)
    c, n = counts.counts.astype(float), counts.n
    return _finish(_plugin_power_value(c, n, spec), sigma_hat_kernel(spec)(c, n), n,
                   "plugin-power", level)


def shannon_plugin(counts, level=DEFAULT_LEVEL):
    """Plug-in entropy -sum (y_i/n) ln (y_i/n)."""
    counts = _counts_of(counts)
    c, n = counts.counts.astype(float), counts.n
    return _finish(_shannon_value(c, n), sigma_hat_kernel(SHANNON)(c, n), n,
                   "plugin-shannon", level)


def miller_madow(counts, level=DEFAULT_LEVEL):
    """Plug-in entropy plus (m - 1)/(2n), m the number of distinct letters seen."""
    counts = _counts_of(counts)
    c, n = counts.counts.astype(float), counts.n
    correction = (counts.n_distinct - 1) / (2 * n)
    return _finish(_shannon_value(c, n) + correction, sigma_hat_kernel(SHANNON)(c, n), n,
                   "miller-madow", level, correction)


def jackknife(counts, level=DEFAULT_LEVEL):
    """Jackknife entropy n H_n - (n-1)/n sum_j H^(j).

    Computed in O(number of distinct letters). The returned estimate carries
    the jackknife bias estimate B_JK = H_JK - H_n (always >= 0) in
    ``bias_correction``.
    """
    counts = _counts_of(counts)
    n = counts.n
    if n < 2:
        raise ValueError("the jackknife needs at least two observations")
    c = counts.counts.astype(float)
    _, value, bias = _jackknife_terms(c, n)
    return _finish(value, sigma_hat_kernel(SHANNON)(c, n), n, "jackknife", level, bias)


def estimate(counts, spec=SHANNON, method="plugin", level=DEFAULT_LEVEL):
    """Dispatch on ``method`` ("plugin", "miller-madow"/"mm", "jackknife"/"jk")."""
    method, spec = normalize_method(method), parse_index(spec)
    if method == "plugin":
        return plugin_index(counts, spec, level)
    if not spec.is_shannon:
        raise ValueError(f"{method} is only defined for Shannon entropy")
    return miller_madow(counts, level) if method == "miller-madow" else jackknife(counts, level)


class DiversityEstimator(BaseEstimator):
    """Estimate a diversity index from observed symbols.

    Parameters
    ----------
    index : str or IndexSpec, default="shannon"
        "shannon", "simpson", "power:mu,nu" or an :class:`IndexSpec`.
    method : {"plugin", "miller-madow", "jackknife"}, default="plugin"
        Bias corrections apply to Shannon entropy only.
    level : float, default=0.95
        Confidence level of the normal interval.

    Attributes
    ----------
    estimate_ : Estimate
    value_ : float
    std_error_ : float
    ci_ : tuple of float
    n_samples_ : int
    n_symbols_ : int
        Number of distinct symbols observed.

    Examples
    --------
    >>> est = DiversityEstimator(index="shannon", method="mm").fit(list("aabb"))
    >>> round(est.value_, 6)
    0.818147
    """

    def __init__(self, index="shannon", method="plugin", level=DEFAULT_LEVEL):
        self.index = index
        self.method = method
        self.level = level

    def _validate(self):
        spec = parse_index(self.index)
        method = normalize_method(self.method)
        if method != "plugin" and not spec.is_shannon:
            raise ValueError(f"{method} is only defined for Shannon entropy")
        check_level(self.level)
        return spec, method

    def fit(self, X, y=None, sample_weight=None):
        """Fit on a 1-D sequence of observed symbols.

        ``sample_weight`` holds integer multiplicities, so a table of
        (symbol, count) pairs fits as ``fit(symbols, sample_weight=counts)``.
        """
        spec, method = self._validate()
        counts = X if isinstance(X, SampleCounts) else \
            SampleCounts.from_observations(np.asarray(X).ravel(), sample_weight)
        self.estimate_ = estimate(counts, spec, method, self.level)
        self.value_ = self.estimate_.value
        self.std_error_ = self.estimate_.std_error
        self.ci_ = (self.estimate_.ci_low, self.estimate_.ci_high)
        self.n_samples_ = counts.n
        self.n_symbols_ = counts.n_distinct
        return self

    def confidence_interval(self, level):
        check_is_fitted(self, "estimate_")
        est = confidence_interval(self.estimate_, level)
        return est.ci_low, est.ci_high



class DiversityTransformer(TransformerMixin, BaseEstimator):
    """Map each row of a (samples x letters) count matrix to its index estimate.

    Stateless: ``fit`` only validates parameters. ``transform`` returns an
    array of shape (n_rows, 1); rows with no observations (or fewer than two
    for the jackknife) give NaN.
    """

    def __init__(self, index="shannon", method="plugin"):
        self.index = index
        self.method = method

    def fit(self, X, y=None):
        check_array(X, dtype=None)
        self.spec_ = parse_index(self.index)
        self.method_ = normalize_method(self.method)
        self.kernel_ = estimator_kernel(self.method_, self.spec_)
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "kernel_")
        X = check_array(X, dtype=None)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        out = np.full((X.shape[0], 1), np.nan)
        for r, row in enumerate(X):
            c = check_counts(row)
            c = c[c > 0].astype(float)
            n = int(c.sum())
            if n == 0 or (self.method_ == "jackknife" and n < 2):
                continue
            out[r, 0] = self.kernel_(c, n)
        return out


__all__ = [
    "Estimate", "METHODS", "DEFAULT_LEVEL", "normalize_method", "confidence_interval",
    "plugin_index", "shannon_plugin", "miller_madow", "jackknife", "estimate",
    "estimator_kernel", "sigma_hat_kernel", "DiversityEstimator", "DiversityTransformer",
]
