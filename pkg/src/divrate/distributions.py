"""Probability laws on the countable alphabet {1, 2, 3, ...}.

Letters are identified with positive integers. Every family exposes its pmf,
certified tail functionals, power sums and exact inverse-CDF sampling; the
condition checker for the entropy theorems lives at the bottom of the module.
"""

from dataclasses import dataclass, field
import math
import threading

import numpy as np
from scipy import special

from ._series import DivergentSeriesError, certified_sum
from .validation import SampleCounts, check_probability_vector

DEFAULT_TAIL_TOLERANCE = 1e-12
_INITIAL_CACHE = 1024
_MAX_CACHE = 2**20


def _neg_xlogx(p):
    p = np.asarray(p, dtype=float)
    return -special.xlogy(p, p)


class Distribution:
    """Base class for countable-alphabet laws.

    Subclasses implement ``pmf`` (vectorized), and either a finite
    ``probabilities`` vector or the continuous extension ``_density`` plus
    ``_tail_mass``. Instances are immutable apart from the sampling cache,
    which only ever grows.
    """

    family = "abstract"
    support_start = 1
    tail_tolerance = DEFAULT_TAIL_TOLERANCE

    # finite laws override with the probability vector (index 0 <-> letter 1)
    probabilities = None

    @property
    def is_finite(self):
        return self.probabilities is not None

    # -- pmf ------------------------------------------------------------
    def pmf(self, i):
        """Probability of letter ``i`` (scalar or array); 0 outside the support."""
        idx = np.asarray(i)
        if np.any(idx < 1):
            raise ValueError("letters are indexed from 1")
        out = self._pmf(idx.astype(np.int64))
        return float(out) if np.ndim(out) == 0 else out

    def _pmf(self, idx):
        p = self.probabilities
        out = np.zeros(idx.shape, dtype=float)
        inside = idx <= p.size
        out[inside] = p[idx[inside] - 1]
        return out

    def _density(self, x):
        raise NotImplementedError

    # -- sums -------------------------------------------------------------
    def series(self, phi, start=None):
        """Return sum_{i >= start} phi(p_i) for a vectorized ``phi`` with phi(0) = 0.

        Finite laws sum exactly; infinite laws use certified truncation with
        relative error ``tail_tolerance``, which requires phi(p(x)) to be
        eventually decreasing and convex in x.
        """
        start = max(int(self.support_start if start is None else start), self.support_start)
        if self.is_finite:
            p = self.probabilities[start - 1:]
            return math.fsum(np.asarray(phi(p), dtype=float)) if p.size else 0.0
        return certified_sum(
            lambda idx: phi(self._pmf(idx)),
            lambda x: float(phi(np.array([self._density(x)]))[0]),
            start, rtol=self.tail_tolerance)

    def prefix_sum(self, K):
        """sum_{i <= K} p_i."""
        if K < 1:
            return 0.0
        return math.fsum(self._pmf(np.arange(1, int(K) + 1, dtype=np.int64)))

    def tail_mass(self, K):
        """sum_{i >= K} p_i."""
        if K < 1:
            raise ValueError("K must be a positive integer")
        return self._tail_mass(int(K))

    def _tail_mass(self, K):
        return self.series(lambda p: p, start=K)

    def tail_entropy(self, K):
        """-sum_{i >= K} p_i ln p_i."""
        if K < 1:
            raise ValueError("K must be a positive integer")
        return self.series(_neg_xlogx, start=int(K))

    def moment_sum(self, a):
        """sum_i p_i^a for 0 < a < 1, or ``math.inf`` when the series diverges."""
        if not 0.0 < a < 1.0:
            raise ValueError("exponent must lie in (0, 1)")
        if not self._moment_converges(a):
            return math.inf
        return self.series(lambda p: np.where(p > 0, np.power(p, a), 0.0))

    def _moment_converges(self, a):
        return True

    # -- sampling -------------------------------------------------------
    def _survival_cache(self, need=None):
        """(start, S) with S[j] = P(X >= start + j); extended on demand."""
        cache = getattr(self, "_cache", None)
        if cache is not None and (need is None or cache[1].size >= need):
            return cache
        with self._lock:
            cache = getattr(self, "_cache", None)
            if cache is not None and (need is None or cache[1].size >= need):
                return cache
            start = self.support_start
            if self.is_finite:
                p = self.probabilities
                S = np.append(np.cumsum(p[::-1])[::-1], 0.0)
                S[0] = 1.0
                start = 1
            else:
                size = _INITIAL_CACHE if cache is None else 2 * cache[1].size
                size = max(size, need or 0)
                stop = start + size - 1
                p = self._pmf(np.arange(start, stop, dtype=np.int64))
                tail_end = self._tail_mass(stop)
                S = np.append(tail_end + np.cumsum(p[::-1])[::-1], tail_end)
                S[0] = 1.0
            S = np.minimum(S, 1.0)
            cache = (start, S)
            self._cache = cache
            return cache

    def sample(self, n, rng):
        """Draw ``n`` letters by exact inverse-CDF inversion."""
        u = 1.0 - rng.random(n)  # in (0, 1]
        start, S = self._survival_cache()
        if not self.is_finite:
            beyond = u <= S[-1]
            while np.count_nonzero(beyond) > max(1, n // 1000) and S.size < _MAX_CACHE:
                start, S = self._survival_cache(need=2 * S.size)
                beyond = u <= S[-1]
        # X = max{i : S(i) >= u}; ascending view of S for searchsorted
        ascending = S[::-1]
        count_ge = S.size - np.searchsorted(ascending, u, side="left")
        out = start + count_ge - 1
        out = out.astype(np.int64)
        if not self.is_finite:
            far = np.flatnonzero(u <= S[-1])
            letters = [self._invert_far(u[j], start + S.size - 1) for j in far]
            if letters and max(letters) > np.iinfo(np.int64).max:
                # very heavy tails can reach letters beyond int64
                out = out.astype(object)
            out[far] = letters
        return out

    def _invert_far(self, u, lo):
        # S(lo) >= u is known; find the largest i with S(i) >= u.
        hi = 2 * lo
        while self._tail_mass(hi) >= u:
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._tail_mass(mid) >= u:
                lo = mid
            else:
                hi = mid
        return lo

    def sample_counts(self, n, seed=None):
        """Tally an i.i.d. sample of size ``n``; deterministic given ``seed``."""
        if n < 1:
            raise ValueError("sample size must be >= 1")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        symbols, counts = np.unique(self.sample(int(n), rng), return_counts=True)
        return SampleCounts(symbols, counts)

    # -- plumbing -------------------------------------------------------
    def __getstate__(self):
        state = self.__dict__.copy()
        state.pop("_lock", None)
        state.pop("_cache", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def _init_common(self, tail_tolerance):
        if not 0 < tail_tolerance < 1e-3:
            raise ValueError("tail_tolerance must lie in (0, 1e-3)")
        self.tail_tolerance = float(tail_tolerance)
        self._lock = threading.Lock()

    def to_config(self):
        raise NotImplementedError

    def __repr__(self):
        params = ", ".join(f"{k}={v!r}" for k, v in self.to_config().items() if k != "family")
        return f"{type(self).__name__}({params})"


class Finite(Distribution):
    family = "finite"

    def __init__(self, probs, tail_tolerance=DEFAULT_TAIL_TOLERANCE):
        self._init_common(tail_tolerance)
        p = check_probability_vector(probs)
        p.flags.writeable = False
        self.probabilities = p

    def _tail_mass(self, K):
        return math.fsum(self.probabilities[K - 1:])

    def to_config(self):
        return {"family": self.family, "probs": self.probabilities.tolist()}


class PerturbedUniform(Finite):
    """Two-letter law 1/2 +- 1/(2 n^lam) that flattens as ``n`` grows."""

    family = "perturbed-uniform"

    def __init__(self, lam, n, tail_tolerance=DEFAULT_TAIL_TOLERANCE):
        if not 0.0 < lam < 0.5:
            raise ValueError("lam must lie in (0, 1/2)")
        if n < 1:
            raise ValueError("n must be >= 1")
        self.lam, self.n = float(lam), int(n)
        p1 = 0.5 + 0.5 * self.n ** -self.lam
        # 1 - p1 is exact for p1 in [1/2, 1], so the masses sum to exactly 1
        super().__init__([p1, 1.0 - p1], tail_tolerance)

    def to_config(self):
        return {"family": self.family, "lam": self.lam, "n": self.n}


class Zipf(Distribution):
    """p_i = i^-lam / zeta(lam)."""

    family = "zipf"

    def __init__(self, lam, tail_tolerance=DEFAULT_TAIL_TOLERANCE):
        if not lam > 1.0:
            raise ValueError("Zipf exponent must exceed 1")
        self._init_common(tail_tolerance)
        self.lam = float(lam)
        self.norm_constant = 1.0 / float(special.zeta(self.lam, 1))

    def _pmf(self, idx):
        return self.norm_constant * np.power(idx.astype(float), -self.lam)

    def _density(self, x):
        return self.norm_constant * x ** -self.lam

    def _tail_mass(self, K):
        return self.norm_constant * float(special.zeta(self.lam, K))

    def _moment_converges(self, a):
        return self.lam * a > 1.0

    def moment_sum(self, a):
        if not 0.0 < a < 1.0:
            raise ValueError("exponent must lie in (0, 1)")
        if not self._moment_converges(a):
            return math.inf
        return self.norm_constant ** a * float(special.zeta(self.lam * a, 1))

    def to_config(self):
        return {"family": self.family, "lam": self.lam}


class Geometric(Distribution):
    """p_i = (e^lam - 1) e^(-lam i)."""

    family = "geometric"

    def __init__(self, lam, tail_tolerance=DEFAULT_TAIL_TOLERANCE):
        if not lam > 0.0:
            raise ValueError("geometric rate must be positive")
        self._init_common(tail_tolerance)
        self.lam = float(lam)
        self.norm_constant = math.expm1(self.lam)

    def _pmf(self, idx):
        return self.norm_constant * np.exp(-self.lam * idx.astype(float))

    def _density(self, x):
        return self.norm_constant * math.exp(-self.lam * x)

    def _tail_mass(self, K):
        return math.exp(-self.lam * (K - 1))

    def tail_entropy(self, K):
        if K < 1:
            raise ValueError("K must be a positive integer")
        # ln p_i = ln C - lam i, and sum_{i>=K} i p_i = T_K (K + q/(1-q))
        q = math.exp(-self.lam)
        mean_shift = q / -math.expm1(-self.lam)
        return self._tail_mass(K) * (self.lam * (K + mean_shift) - math.log(self.norm_constant))

    def moment_sum(self, a):
        if not 0.0 < a < 1.0:
            raise ValueError("exponent must lie in (0, 1)")
        qa = math.exp(-self.lam * a)
        return self.norm_constant ** a * qa / -math.expm1(-self.lam * a)

    def to_config(self):
        return {"family": self.family, "lam": self.lam}


class LogQuartic(Distribution):
    """p_i = C / (i^4 (ln i)^2) on i >= 2; letter 1 has probability zero."""

    family = "log-quartic"
    support_start = 2

    def __init__(self, tail_tolerance=DEFAULT_TAIL_TOLERANCE):
        self._init_common(tail_tolerance)
        self.norm_constant = 1.0
        total = self.series(lambda p: p)
        self.norm_constant = 1.0 / total

    def _pmf(self, idx):
        x = idx.astype(float)
        with np.errstate(divide="ignore"):
            out = self.norm_constant / (x ** 4 * np.log(x) ** 2)
        return np.where(idx >= 2, out, 0.0)

    def _density(self, x):
        return self.norm_constant / (x ** 4 * math.log(x) ** 2)

    def _moment_converges(self, a):
        # sum 1/(i^{4a} (ln i)^{2a}): converges iff 4a > 1, or 4a = 1 and 2a > 1
        return 4 * a > 1 or (4 * a == 1 and 2 * a > 1)

    def to_config(self):
        return {"family": self.family}


FAMILIES = {
    "finite": Finite,
    "perturbed-uniform": PerturbedUniform,
    "zipf": Zipf,
    "geometric": Geometric,
    "log-quartic": LogQuartic,
}


def is_triangular(config):
    """True for a family whose law depends on the sample size but no n is given."""
    config = _normalize_config(config)
    return config["family"] == "perturbed-uniform" and "n" not in config


def _normalize_config(config):
    config = dict(config)
    if "family" not in config:
        # shorthand form: {"finite": [..]} or {"zipf": {"lam": 2}}
        if len(config) != 1:
            raise ValueError(f"cannot determine distribution family from {config!r}")
        (family, params), = config.items()
        if isinstance(params, dict):
            config = {"family": family, **params}
        elif family == "finite":
            config = {"family": family, "probs": params}
        elif params is None:
            config = {"family": family}
        else:
            config = {"family": family, "lam": params}
    family = str(config["family"]).lower().replace("_", "-")
    aliases = {"perturbeduniform": "perturbed-uniform", "logquartic": "log-quartic"}
    config["family"] = aliases.get(family, family)
    if "lambda" in config:
        config["lam"] = config.pop("lambda")
    return config


def from_config(config, n=None):
    """Build a distribution from a JSON-style record.

    ``n`` fills in the sample size for triangular-array families when the
    record itself does not pin one.
    """
    config = _normalize_config(config)
    family = config.pop("family")
    if family not in FAMILIES:
        raise ValueError(f"unknown distribution family {family!r}; "
                         f"expected one of {sorted(FAMILIES)}")
    if family == "perturbed-uniform" and "n" not in config:
        if n is None:
            raise ValueError("perturbed-uniform needs a sample size n")
        config["n"] = n
    try:
        return FAMILIES[family](**config)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {family}: {exc}") from None


# -- hypothesis checks -------------------------------------------------------

THEOREMS = ("2.2-case2", "3.1", "3.2", "3.3")


@dataclass
class QuantityVerdict:
    grid_max: float
    argmax_n: int
    max_at_largest_n: bool
    tail_nonincreasing: bool
    bounded: bool


@dataclass
class ConditionReport:
    theorem_id: str
    n_grid: list
    K: list
    quantities: dict
    verdicts: dict = field(default_factory=dict)

    @property
    def bounded(self):
        return all(v.bounded for v in self.verdicts.values())

    def to_dict(self):
        return {
            "theorem_id": self.theorem_id,
            "n_grid": list(self.n_grid),
            "K": list(self.K),
            "quantities": {k: list(v) for k, v in self.quantities.items()},
            "verdicts": {k: vars(v) for k, v in self.verdicts.items()},
            "bounded": self.bounded,
        }


def _verdict(n_grid, values):
    # bounded: finite and the grid max is not at the largest n. Monotonicity
    # of the last half is reported alongside but rounding in K(n) can make
    # the tail jitter, so it does not enter the verdict.
    values = np.asarray(values, dtype=float)
    j = int(np.argmax(values))
    half = values[len(values) // 2:]
    with np.errstate(invalid="ignore"):
        nonincreasing = bool(np.all(np.diff(half) <= 0))
        constant = bool(np.all(values == values[0]))
    at_last = j == len(values) - 1 and len(values) > 1
    if constant:
        # constant in n (e.g. a fixed power sum): bounded iff finite
        at_last, nonincreasing = False, True
    return QuantityVerdict(
        grid_max=float(values[j]), argmax_n=int(n_grid[j]),
        max_at_largest_n=bool(at_last), tail_nonincreasing=nonincreasing,
        bounded=bool(np.all(np.isfinite(values)) and not at_last))


def check_conditions(dist, theorem_id, delta=None, eps=None, K_fn=None, n_grid=(),
                     beta=None):
    """Evaluate the hypotheses of a rate theorem on a grid of sample sizes.

    ``dist`` is a Distribution or a callable ``n -> Distribution`` for
    triangular arrays. For the entropy theorems ("3.1", "3.2", "3.3") the
    tail quantities

        n^(1/2+delta) ln n * sum_{i>=K(n)} p_i
        -n^(1/2+delta) * sum_{i>=K(n)} p_i ln p_i

    are reported, plus sum_i p_i^(1-eps) for "3.3". For "2.2-case2" the
    quantity is sum_i p_{n,i}^((beta+1)/2) and ``beta`` in (0, 1/2] is required.

    Raises ``ValueError`` if K(n) > n^(1/2-delta) anywhere on the grid.
    """
    theorem_id = str(theorem_id)
    if theorem_id not in THEOREMS:
        raise ValueError(f"theorem_id must be one of {THEOREMS}")
    n_grid = [int(n) for n in n_grid]
    if not n_grid or any(n < 2 for n in n_grid):
        raise ValueError("n_grid must be non-empty with every n >= 2")
    law_at = dist if callable(dist) and not isinstance(dist, Distribution) else (lambda n: dist)

    quantities, Ks = {}, []
    if theorem_id == "2.2-case2":
        if beta is None or not 0.0 < beta <= 0.5:
            raise ValueError("case 2 of the smooth-index theorem needs beta in (0, 1/2]")
        a = (beta + 1) / 2
        quantities["power_sum"] = [law_at(n).moment_sum(a) for n in n_grid]
    else:
        if delta is None or not 0.0 < delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        if K_fn is None:
            raise ValueError("K_fn is required for the entropy theorems")
        mass, ent = [], []
        for n in n_grid:
            K = int(K_fn(n))
            if K < 1:
                raise ValueError(f"K({n}) = {K} is not a positive integer")
            if K > n ** (0.5 - delta) * (1 + 1e-12):
                raise ValueError(
                    f"K({n}) = {K} exceeds n^(1/2-delta) = {n ** (0.5 - delta):.6g}")
            Ks.append(K)
            law = law_at(n)
            scale = n ** (0.5 + delta)
            mass.append(scale * math.log(n) * law.tail_mass(K))
            ent.append(scale * law.tail_entropy(K))
        quantities["scaled_tail_mass"] = mass
        quantities["scaled_tail_entropy"] = ent
        if theorem_id == "3.3":
            if eps is None or not 0.5 < eps < 1.0:
                raise ValueError("eps must lie in (1/2, 1) for the jackknife theorem")
            quantities["power_sum"] = [law_at(n).moment_sum(1.0 - eps) for n in n_grid]

    report = ConditionReport(theorem_id, n_grid, Ks, quantities)
    for name, values in quantities.items():
        if any(v < 0 or math.isnan(v) for v in values):
            raise ArithmeticError(f"{name} produced a negative or NaN value")
        report.verdicts[name] = _verdict(n_grid, values)
    return report


__all__ = [
    "DEFAULT_TAIL_TOLERANCE", "Distribution", "Finite", "PerturbedUniform", "Zipf",
    "Geometric", "LogQuartic", "FAMILIES", "from_config", "is_triangular",
    "ConditionReport", "QuantityVerdict", "check_conditions", "THEOREMS",
    "DivergentSeriesError",
]
