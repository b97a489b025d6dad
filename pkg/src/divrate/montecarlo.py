"""Replicated estimation experiments and empirical Berry-Esseen rates.

Replicate r at sample size n draws from its own generator seeded by
SeedSequence([master_seed, n, r]), so results do not depend on how
replicates are split across worker processes.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import csv
import io
import math

import numpy as np
from scipy import special

from .distributions import from_config
from .estimators import estimator_kernel, normalize_method, sigma_hat_kernel
from .indices import parse_index, population_summary

DKW_95 = 1.36
STANDARDIZATIONS = ("true-sigma", "estimated-sigma")


class DegenerateConfigError(ValueError):
    """The asymptotic standard deviation vanishes, so no normal limit exists."""


@dataclass
class ExperimentConfig:
    """One rate experiment.

    ``dist`` is a distribution record as accepted by
    :func:`divrate.distributions.from_config`; triangular families receive
    each grid size as their ``n``. ``delta`` and ``eps`` only label the
    theoretical exponents reported for Shannon-type estimators.
    """

    dist: dict
    index: object = "simpson"
    estimator: str = "plugin"
    n_grid: list = field(default_factory=lambda: [100, 400, 1600, 6400])
    replicates: int = 20000
    master_seed: int = 0
    standardization: str = "true-sigma"
    delta: float = None
    eps: float = None

    def __post_init__(self):
        self.index = parse_index(self.index)
        self.estimator = normalize_method(self.estimator)
        self.n_grid = [int(n) for n in self.n_grid]
        if self.estimator != "plugin" and not self.index.is_shannon:
            raise ValueError(f"{self.estimator} is only defined for Shannon entropy")
        if self.replicates < 100:
            raise ValueError("at least 100 replicates per sample size are required")
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be non-empty and strictly increasing")
        if self.n_grid[0] < (2 if self.estimator == "jackknife" else 1):
            raise ValueError("sample sizes in n_grid are too small")
        if self.standardization not in STANDARDIZATIONS:
            raise ValueError(f"standardization must be one of {STANDARDIZATIONS}")
        self.master_seed = int(self.master_seed)

    def to_dict(self):
        out = asdict(self)
        out["index"] = self.index.to_config()
        return out

    @classmethod
    def from_dict(cls, record):
        return cls(**record)


@dataclass
class RatePoint:
    n: int
    D: float
    dkw_radius: float
    mean: float
    var: float
    truth: float
    sigma: float


@dataclass
class RateFit:
    slope: float
    intercept: float
    residual_max: float


@dataclass
class RateReport:
    config: dict
    points: list
    fit: RateFit = None
    noise_dominated: bool = False
    theoretical_exponents: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "config": self.config,
            "points": [asdict(p) for p in self.points],
            "fit": None if self.fit is None else asdict(self.fit),
            "noise_dominated": self.noise_dominated,
            "theoretical_exponents": self.theoretical_exponents,
        }

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "D_n", "band", "mean", "var"])
        for p in self.points:
            writer.writerow([p.n, repr(p.D), repr(p.dkw_radius), repr(p.mean), repr(p.var)])
        return buf.getvalue()


def kolmogorov_distance(samples):
    """sup_x |F_m(x) - Phi(x)| for the empirical CDF F_m of ``samples``."""
    t = np.sort(np.asarray(samples, dtype=float))
    m = t.size
    if m == 0:
        raise ValueError("need at least one sample")
    phi = special.ndtr(t)
    i = np.arange(1, m + 1)
    return float(max(np.max(np.abs(i / m - phi)), np.max(np.abs((i - 1) / m - phi))))


def rate_fit(points):
    """Least-squares line through (ln n, ln D_n) for points [(n, D_n), ...]."""
    pts = [(float(n), float(d)) for n, d in points]
    if len(pts) < 3:
        raise ValueError("a rate fit needs at least three points")
    if any(d <= 0 or n <= 0 for n, d in pts):
        raise ValueError("sample sizes and distances must be positive")
    x = np.log([n for n, _ in pts])
    y = np.log([d for _, d in pts])
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    return RateFit(float(slope), float(intercept), float(np.max(np.abs(residual))))


def replicate_rng(master_seed, n, replicate):
    return np.random.default_rng(np.random.SeedSequence([master_seed, n, replicate]))


def _tally(letters, n):
    top = int(letters.max())
    if letters.dtype != object and top <= 8 * n + 1024:
        c = np.bincount(letters)
        return c[c > 0].astype(float)
    return np.unique(letters, return_counts=True)[1].astype(float)


def _run_block(law, n, methods, spec, master_seed, start, stop, want_sigma):
    kernels = [estimator_kernel(m, spec) for m in methods]
    sig = sigma_hat_kernel(spec) if want_sigma else None
    values = np.empty((len(methods), stop - start))
    sigmas = np.empty(stop - start) if want_sigma else None
    for j, r in enumerate(range(start, stop)):
        counts = _tally(law.sample(n, replicate_rng(master_seed, n, r)), n)
        for k, kernel in enumerate(kernels):
            values[k, j] = kernel(counts, n)
        if want_sigma:
            sigmas[j] = sig(counts, n)
    return values, sigmas


def _blocks(replicates, n_jobs):
    n_jobs = max(1, int(n_jobs))
    edges = np.linspace(0, replicates, n_jobs + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def simulate_estimates(law, n, methods=("plugin",), index="shannon", replicates=1000,
                       master_seed=0, n_jobs=1, with_sigma_hat=False):
    """Estimator values over ``replicates`` independent samples of size ``n``.

    All methods in ``methods`` are evaluated on the same samples. Returns an
    array of shape (len(methods), replicates), plus the per-replicate
    sigma_hat when ``with_sigma_hat`` is set.
    """
    methods = [normalize_method(m) for m in methods]
    spec = parse_index(index)
    blocks = _blocks(replicates, n_jobs)
    args = [(law, int(n), methods, spec, int(master_seed), a, b, with_sigma_hat)
            for a, b in blocks]
    if len(blocks) == 1:
        parts = [_run_block(*args[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(blocks)) as pool:
            parts = list(pool.map(_run_block, *zip(*args)))
    values = np.concatenate([p[0] for p in parts], axis=1)
    if not with_sigma_hat:
        return values
    return values, np.concatenate([p[1] for p in parts])


def _standardize(values, truth, n, scale):
    diff = values - truth
    with np.errstate(divide="ignore", invalid="ignore"):
        t = math.sqrt(n) * diff / scale
    # sigma_hat = 0: the statistic is +-inf, or 0 when the estimate is exact
    return np.where(np.isnan(t), 0.0, t)


def _theoretical_exponents(config, truths):
    spec = config.index
    if not spec.is_shannon:
        if spec.gamma is None:
            return {}
        ns = np.array(config.n_grid, dtype=float)
        sig = np.array([s for _, s in truths])
        bound = ns ** (-spec.gamma / 2) / np.sqrt(sig)
        out = {"gamma": spec.gamma, "fixed_law_exponent": -spec.gamma / 2}
        if len(ns) >= 2:
            out["bound_slope"] = float(np.polyfit(np.log(ns), np.log(bound), 1)[0])
        return out
    out = {}
    if config.delta is not None:
        out["delta_exponent"] = -config.delta / 2
    if config.estimator == "jackknife" and config.eps is not None:
        out["eps_exponent"] = 0.25 - config.eps / 2
    return out


def run_experiment(config, n_jobs=1):
    """Empirical Kolmogorov distances of the standardized estimator over ``n_grid``.

    For each n the statistic sqrt(n)(estimate - truth)/sigma is formed with the
    population sigma (or per-sample sigma_hat under "estimated-sigma"), and its
    empirical CDF is compared with Phi. The returned report is bit-identical
    for a given config whatever ``n_jobs`` is.
    """
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    m = config.replicates
    dkw = DKW_95 / math.sqrt(m)
    truths, points = [], []
    for n in config.n_grid:
        law = from_config(config.dist, n)
        summary = population_summary(law, config.index)
        if not summary.sigma_sq > 0:
            raise DegenerateConfigError(
                f"sigma^2 = {summary.sigma_sq!r} for {law!r} at n={n}; "
                "the standardized statistic has no normal limit")
        sigma = math.sqrt(summary.sigma_sq)
        truths.append((summary.value, sigma))
        estimated = config.standardization == "estimated-sigma"
        sim = simulate_estimates(law, n, [config.estimator], config.index, m,
                                 config.master_seed, n_jobs, with_sigma_hat=estimated)
        if estimated:
            values, sig_hat = sim
            t = _standardize(values[0], summary.value, n, sig_hat)
        else:
            t = _standardize(sim[0], summary.value, n, sigma)
        finite = t[np.isfinite(t)]
        points.append(RatePoint(
            n=n, D=kolmogorov_distance(t), dkw_radius=dkw,
            mean=float(np.mean(finite)) if finite.size else math.nan,
            var=float(np.var(finite, ddof=1)) if finite.size > 1 else math.nan,
            truth=summary.value, sigma=sigma))

    report = RateReport(config=config.to_dict(), points=points,
                        theoretical_exponents=_theoretical_exponents(config, truths))
    report.noise_dominated = any(p.D <= 3 * p.dkw_radius for p in points)
    if len(points) >= 3 and all(p.D > 0 for p in points):
        report.fit = rate_fit([(p.n, p.D) for p in points])
    return report


__all__ = [
    "ExperimentConfig", "RatePoint", "RateFit", "RateReport", "DegenerateConfigError",
    "kolmogorov_distance", "rate_fit", "replicate_rng", "simulate_estimates",
    "run_experiment", "DKW_95", "STANDARDIZATIONS",
]
