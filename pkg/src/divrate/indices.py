"""Diversity indices sum_i g(p_i): the power family and Shannon entropy.

The power family h_{mu,nu} = sum_i p_i^mu (1 - p_i)^nu covers Simpson's index
(mu=2, nu=0), generalized Simpson indices (integer mu, nu) and Renyi-equivalent
entropies (nu=0).
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

# sigma^2 below this fraction of the second moment counts as exactly zero
DEGENERACY_RTOL = 1e-13


def holder_beta(mu, nu):
    """Hoelder exponent of g' for g(x) = x^mu (1-x)^nu.

    Defined for mu >= 1 and nu in {0} U [1, inf); returns ``None`` outside
    that domain and whenever the exponent would be 0.
    """
    if mu < 1 or nu < 0 or 0 < nu < 1:
        return None
    if mu > 1 and nu > 1:
        beta = min(mu - 1, nu - 1, 1.0)
    elif mu > 1:
        beta = min(mu - 1, 1.0)
    elif nu > 1:
        beta = min(nu - 1, 1.0)
    else:
        beta = 1.0
    return float(beta) if beta > 0 else None


def gamma_of(beta):
    """Rate exponent: beta/2 on (0, 1/2], beta - 1/2 on (1/2, 1]."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    return beta / 2 if beta <= 0.5 else beta - 0.5


@dataclass(frozen=True)
class IndexSpec:
    """A diversity index: ``kind`` is "power" (with ``mu``, ``nu``) or "shannon"."""

    kind: str = "power"
    mu: float = 2.0
    nu: float = 0.0

    def __post_init__(self):
        if self.kind not in ("power", "shannon"):
            raise ValueError(f"unknown index kind {self.kind!r}")
        if self.kind == "power":
            if not self.mu > 0 or not self.nu >= 0:
                raise ValueError("power index needs mu > 0 and nu >= 0")
            object.__setattr__(self, "mu", float(self.mu))
            object.__setattr__(self, "nu", float(self.nu))

    @classmethod
    def power(cls, mu, nu=0.0):
        return cls("power", mu, nu)

    @classmethod
    def shannon(cls):
        return cls("shannon", 0.0, 0.0)

    @property
    def is_shannon(self):
        return self.kind == "shannon"

    @property
    def beta(self):
        # Shannon's g' = -ln x - 1 is unbounded at 0: no Hoelder exponent
        return None if self.is_shannon else holder_beta(self.mu, self.nu)

    @property
    def gamma(self):
        b = self.beta
        return None if b is None else gamma_of(b)

    @property
    def name(self):
        if self.is_shannon:
            return "shannon"
        if (self.mu, self.nu) == (2.0, 0.0):
            return "simpson"
        return f"power:{self.mu:g},{self.nu:g}"

    def g(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_shannon:
            return -special.xlogy(x, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.power(x, self.mu) * np.power(1.0 - x, self.nu)
        return np.where(x > 0, out, 0.0)

    def g_prime(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_shannon:
            with np.errstate(divide="ignore"):
                return -np.log(x) - 1.0
        mu, nu = self.mu, self.nu
        with np.errstate(divide="ignore", invalid="ignore"):
            left = mu * np.power(x, mu - 1) * np.power(1.0 - x, nu)
            right = nu * np.power(x, mu) * np.power(1.0 - x, nu - 1) if nu else 0.0
        return left - right

    def to_config(self):
        if self.is_shannon:
            return {"kind": "shannon"}
        return {"kind": "power", "mu": self.mu, "nu": self.nu}


SIMPSON = IndexSpec.power(2.0, 0.0)
SHANNON = IndexSpec.shannon()


def parse_index(value):
    """Accept an IndexSpec, a config dict, or strings like "simpson", "shannon", "power:2,1"."""
    if isinstance(value, IndexSpec):
        return value
    if isinstance(value, dict):
        kind = value.get("kind", "power")
        if kind == "shannon":
            return SHANNON
        if kind == "simpson":
            return SIMPSON
        return IndexSpec.power(value.get("mu", 2.0), value.get("nu", 0.0))
    text = str(value).strip().lower()
    if text == "shannon":
        return SHANNON
    if text == "simpson":
        return SIMPSON
    if text.startswith("power:"):
        parts = text[len("power:"):].split(",")
        if len(parts) not in (1, 2):
            raise ValueError(f"expected power:mu,nu, got {value!r}")
        try:
            mu = float(parts[0])
            nu = float(parts[1]) if len(parts) == 2 else 0.0
        except ValueError:
            raise ValueError(f"expected power:mu,nu, got {value!r}") from None
        return IndexSpec.power(mu, nu)
    raise ValueError(f"unknown index {value!r}; use shannon, simpson or power:mu,nu")


def _require_power(spec):
    if spec.is_shannon:
        raise ValueError("use shannon_entropy / shannon_sigma_sq for Shannon's index")


def theta(dist, spec):
    """Population value sum_i g(p_i) of a power index."""
    _require_power(spec)
    return dist.series(spec.g)


@np.errstate(divide="ignore", invalid="ignore")
def _variance_of(dist, h):
    # Var h(p(X)) by two passes: mean, then centered second moment
    mean = dist.series(lambda p: np.where(p > 0, p * h(p), 0.0))
    var = dist.series(lambda p: np.where(p > 0, p * (h(p) - mean) ** 2, 0.0))
    second = dist.series(lambda p: np.where(p > 0, p * h(p) ** 2, 0.0))
    if var <= DEGENERACY_RTOL * max(second, 1e-300):
        var = 0.0
    return var


def sigma_sq(dist, spec):
    """Asymptotic variance sum p g'(p)^2 - (sum p g'(p))^2 of the plug-in estimator.

    Only defined inside the Hoelder table's domain, where g' is bounded.
    """
    _require_power(spec)
    if spec.beta is None:
        raise ValueError(
            f"{spec.name}: g' is not Hoelder continuous on [0, 1]; sigma^2 is not defined")
    return _variance_of(dist, spec.g_prime)


def shannon_entropy(dist):
    """H = -sum_i p_i ln p_i."""
    return dist.series(SHANNON.g)


def shannon_sigma_sq(dist):
    """Var(ln p(X)); exactly 0.0 for uniform finite laws."""
    return _variance_of(dist, lambda p: np.log(p))


@dataclass
class PopulationSummary:
    index: str
    value: float
    sigma_sq: float
    beta: float = None
    gamma: float = None
    degenerate: bool = False

    @property
    def sigma(self):
        return math.sqrt(self.sigma_sq)

    def to_dict(self):
        return {"index": self.index, "value": self.value, "sigma_sq": self.sigma_sq,
                "beta": self.beta, "gamma": self.gamma, "degenerate": self.degenerate}


def population_summary(dist, spec):
    """Index value, asymptotic variance and rate exponents for one law."""
    spec = parse_index(spec)
    if spec.is_shannon:
        value, var = shannon_entropy(dist), shannon_sigma_sq(dist)
    else:
        value = theta(dist, spec)
        var = sigma_sq(dist, spec) if spec.beta is not None else math.nan
    return PopulationSummary(spec.name, value, var, spec.beta, spec.gamma,
                             degenerate=var == 0.0)


__all__ = [
    "IndexSpec", "SIMPSON", "SHANNON", "parse_index", "holder_beta", "gamma_of",
    "theta", "sigma_sq", "shannon_entropy", "shannon_sigma_sq",
    "PopulationSummary", "population_summary",
]
