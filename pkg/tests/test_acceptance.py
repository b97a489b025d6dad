"""Acceptance criteria, one test per criterion.

Each test appends a PASS/FAIL line with the measured numbers to the summary
printed at the end of the pytest run, then asserts. Monte Carlo results are
cached so the determinism criterion can re-run them with a different worker
count and compare bit for bit.
"""

from itertools import combinations_with_replacement
import math
import time

import numpy as np
import pytest
from scipy import special

from conftest import ACCEPTANCE_LINES
from divrate.distributions import Finite, Geometric, LogQuartic, PerturbedUniform, Zipf
from divrate.distributions import check_conditions
from divrate.estimators import jackknife
from divrate.indices import SHANNON, SIMPSON, gamma_of, holder_beta, population_summary
from divrate.indices import sigma_sq
from divrate.montecarlo import (
    ExperimentConfig, kolmogorov_distance, run_experiment, simulate_estimates,
)
from divrate.oracle import exact_estimator_law, exact_kolmogorov, jackknife_bias_identity
from divrate.oracle import verify_moment_bound
from divrate.validation import SampleCounts

RATE_GRID = [100, 400, 1600, 6400]
RATE_REPLICATES = 20000
RATE_SEED = 1
ORACLE_N, ORACLE_M, ORACLE_SEED = 8, 10**5, 7
BIAS_N, BIAS_M, BIAS_SEED = 1000, 10**4, 11

_serial = {}


def record(number, ok, detail, elapsed):
    ACCEPTANCE_LINES.append(
        f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  ({elapsed:.2f} s)  {detail}")
    assert ok, detail


# -- Monte Carlo runs shared with the determinism criterion ----------------------

def oracle_runs(n_jobs=1):
    law = Finite([0.2, 0.3, 0.5])
    simpson = simulate_estimates(law, ORACLE_N, ["plugin"], SIMPSON, ORACLE_M,
                                 ORACLE_SEED, n_jobs)
    shannon = simulate_estimates(law, ORACLE_N, ["plugin", "mm", "jk"], SHANNON, ORACLE_M,
                                 ORACLE_SEED, n_jobs)
    return {"simpson": simpson, "shannon": shannon}


def smooth_config():
    return ExperimentConfig(dist={"family": "zipf", "lam": 2.0}, index="simpson",
                            estimator="plugin", n_grid=RATE_GRID,
                            replicates=RATE_REPLICATES, master_seed=RATE_SEED)


def shannon_config():
    return ExperimentConfig(dist={"family": "geometric", "lam": 1.0}, index="shannon",
                            estimator="plugin", n_grid=RATE_GRID,
                            replicates=RATE_REPLICATES, master_seed=RATE_SEED, delta=0.2)


def bias_runs(n_jobs=1):
    return simulate_estimates(Geometric(1.0), BIAS_N, ["plugin", "mm", "jk"], SHANNON,
                              BIAS_M, BIAS_SEED, n_jobs)


MC_RUNS = {
    "3": oracle_runs,
    "6": lambda n_jobs=1: run_experiment(smooth_config(), n_jobs=n_jobs),
    "7": lambda n_jobs=1: run_experiment(shannon_config(), n_jobs=n_jobs),
    "9": bias_runs,
}


def serial(key):
    if key not in _serial:
        _serial[key] = MC_RUNS[key]()
    return _serial[key]


# -- criteria -------------------------------------------------------------------------

def test_criterion_01_closed_form_variance():
    t0 = time.perf_counter()
    worst = 0.0
    for lam in [0.1, 0.25, 0.4]:
        for n in [2**4, 2**10, 2**20]:
            got = sigma_sq(PerturbedUniform(lam, n), SIMPSON)
            worst = max(worst, abs(got - (n ** (-2 * lam) - n ** (-4 * lam))))
    elapsed = time.perf_counter() - t0
    record(1, worst <= 1e-12 and elapsed < 1,
           f"max |sigma^2 - closed form| = {worst:.2e} (tol 1e-12) over 9 cells", elapsed)


HOLDER_GRID = [
    # mu, nu > 1
    (1.3, 2.5, 0.3), (2.0, 2.0, 1.0), (1.5, 1.8, 0.5),
    # mu > 1, nu in {0, 1}
    (2.0, 0.0, 1.0), (1.5, 0.0, 0.5), (3.0, 1.0, 1.0), (1.3, 1.0, 0.3),
    # mu = 1, nu > 1
    (1.0, 1.5, 0.5), (1.0, 3.0, 1.0), (1.0, 1.2, 0.2),
    # mu = 1, nu in {0, 1}
    (1.0, 0.0, 1.0), (1.0, 1.0, 1.0),
]


def test_criterion_02_holder_table():
    t0 = time.perf_counter()
    bad = []
    for mu, nu, beta in HOLDER_GRID:
        gamma = beta / 2 if beta <= 0.5 else beta - 0.5
        b = holder_beta(mu, nu)
        if b is None or abs(b - beta) > 1e-12 or abs(gamma_of(b) - gamma) > 1e-12:
            bad.append((mu, nu))
    simpson = holder_beta(2, 0) == 1.0 and gamma_of(holder_beta(2, 0)) == 0.5
    elapsed = time.perf_counter() - t0
    record(2, not bad and simpson and elapsed < 1,
           f"{len(HOLDER_GRID) - len(bad)}/{len(HOLDER_GRID)} grid points match, "
           f"Simpson (2,0) -> beta=1, gamma=0.5: {simpson}", elapsed)


def test_criterion_03_oracle_equivalence():
    t0 = time.perf_counter()
    runs = serial("3")
    probs = [0.2, 0.3, 0.5]
    n, m = ORACLE_N, ORACLE_M
    law = Finite(probs)
    band = 1.36 / math.sqrt(m) + 0.005
    cases = [("simpson plug-in", SIMPSON, "plugin", runs["simpson"][0]),
             ("shannon plug-in", SHANNON, "plugin", runs["shannon"][0]),
             ("miller-madow", SHANNON, "mm", runs["shannon"][1]),
             ("jackknife", SHANNON, "jk", runs["shannon"][2])]
    parts, ok = [], True
    for name, spec, method, values in cases:
        summary = population_summary(law, spec)
        sigma = math.sqrt(summary.sigma_sq)
        exact = exact_estimator_law(probs, n, method, spec)
        exact_D = exact_kolmogorov(exact, summary.value, sigma / math.sqrt(n))
        mc_D = kolmogorov_distance(math.sqrt(n) * (values - summary.value) / sigma)
        mean_gap = abs(values.mean() - exact.mean())
        mean_tol = 3 * math.sqrt(exact.var()) / math.sqrt(m)
        good = abs(mc_D - exact_D) <= band and mean_gap <= mean_tol
        ok &= good
        parts.append(f"{name}: |dD|={abs(mc_D - exact_D):.4f}/{band:.4f} "
                     f"|dmean|={mean_gap:.2e}/{mean_tol:.2e}")
    elapsed = time.perf_counter() - t0
    record(3, ok and elapsed < 120, "; ".join(parts), elapsed)


def test_criterion_04_moment_bound():
    t0 = time.perf_counter()
    cells = [verify_moment_bound(p, n, beta)
             for p in [0.01, 0.05, 0.1, 0.25, 0.5]
             for n in [10, 100, 1000]
             for beta in [0.25, 0.5, 0.75, 1.0]]
    worst = max(c.lhs / c.rhs for c in cells)
    elapsed = time.perf_counter() - t0
    record(4, all(c.holds for c in cells) and elapsed < 10,
           f"{sum(c.holds for c in cells)}/{len(cells)} cells hold, max lhs/rhs = {worst:.3f}",
           elapsed)


def _naive_jackknife(counts):
    obs = np.repeat(np.arange(len(counts)), counts)
    n = obs.size

    def H(sample):
        p = np.bincount(sample) / sample.size
        return -math.fsum(special.xlogy(p, p))

    return n * H(obs) - (n - 1) * math.fsum(H(np.delete(obs, j)) for j in range(n)) / n


def test_criterion_05_jackknife_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    min_bias = math.inf
    for _ in range(10**4):
        k = int(rng.integers(1, 21))
        n = int(rng.integers(2, 201))
        law = Finite(rng.dirichlet(np.ones(k)))
        min_bias = min(min_bias, jackknife(law.sample_counts(n, rng)).bias_correction)
    identity_gap = max(abs(lhs - rhs) for lhs, rhs in
                       (jackknife_bias_identity([0.3, 0.7], n) for n in range(2, 11)))
    loo_gap, checked = 0.0, 0
    for k in range(1, 5):
        for n in range(2, 13):
            for letters in combinations_with_replacement(range(k), n):
                c = np.bincount(letters, minlength=k)
                c = c[c > 0]
                fast = jackknife(SampleCounts(np.arange(c.size), c)).value
                slow = _naive_jackknife(c)
                loo_gap = max(loo_gap, abs(fast - slow) / max(1.0, abs(slow)))
                checked += 1
    elapsed = time.perf_counter() - t0
    ok = min_bias >= 0 and identity_gap <= 1e-10 and loo_gap <= 1e-12 and elapsed < 60
    record(5, ok, f"min B_JK over 10^4 samples = {min_bias:.3e}; identity gap = "
                  f"{identity_gap:.1e} (tol 1e-10); closed form vs leave-one-out on "
                  f"{checked} multisets, max rel gap = {loo_gap:.1e}", elapsed)


def _rate_detail(report):
    D = [p.D for p in report.points]
    dkw = [p.dkw_radius for p in report.points]
    drop = D[0] - D[-1]
    ok = drop > dkw[0] + dkw[-1] and report.fit.slope < 0 and D[-1] <= 0.05
    detail = (f"D_n = {', '.join(f'{d:.4f}' for d in D)}; drop {drop:.4f} > "
              f"{dkw[0] + dkw[-1]:.4f}; slope {report.fit.slope:.3f}; "
              f"D_6400 = {D[-1]:.4f} <= 0.05")
    return ok, detail


def test_criterion_06_rate_smooth_index():
    t0 = time.perf_counter()
    report = serial("6")
    ok, detail = _rate_detail(report)
    elapsed = time.perf_counter() - t0
    detail += f"; theory exponent {report.theoretical_exponents['fixed_law_exponent']}"
    record(6, ok and elapsed < 300, detail, elapsed)


def test_criterion_07_rate_shannon():
    t0 = time.perf_counter()
    report = serial("7")
    ok, detail = _rate_detail(report)
    exponent = report.theoretical_exponents.get("delta_exponent")
    ok &= exponent is not None and abs(exponent + 0.1) < 1e-15
    elapsed = time.perf_counter() - t0
    record(7, ok and elapsed < 300, f"{detail}; reported -delta/2 = {exponent}", elapsed)


def test_criterion_08_condition_checkers():
    t0 = time.perf_counter()
    grid = [10**k for k in range(2, 7)]
    zipf = check_conditions(Zipf(5.0), "3.1", delta=0.1,
                            K_fn=lambda n: math.ceil(round(n**0.2, 9)), n_grid=grid)
    geo = check_conditions(Geometric(1.0), "3.1", delta=0.1,
                           K_fn=lambda n: math.ceil(math.log(n)), n_grid=grid)
    # with delta = 0.2 the constraint K(n) <= n^0.3 only holds from n = 1000 on
    geo2 = check_conditions(Geometric(1.0), "3.1", delta=0.2,
                            K_fn=lambda n: math.ceil(math.log(n)), n_grid=grid[1:])
    lq = check_conditions(LogQuartic(), "3.3", delta=0.1, eps=0.7,
                          K_fn=lambda n: math.ceil(n**0.3), n_grid=grid)
    power = lq.quantities["power_sum"][0]
    elapsed = time.perf_counter() - t0

    def grid_max(r):
        return ", ".join(f"{k} max {v.grid_max:.3g} at n={v.argmax_n}"
                         for k, v in r.verdicts.items())

    ok = zipf.bounded and geo.bounded and geo2.bounded and lq.bounded \
        and math.isfinite(power) and elapsed < 30
    record(8, ok, f"(a) zipf: {grid_max(zipf)}; (b) geometric: {grid_max(geo)}, delta=0.2 "
                  f"from 10^3: bounded={geo2.bounded}; (c) log-quartic: {grid_max(lq)}, "
                  f"sum p^(1-eps) = {power:.4f} at eps=0.7", elapsed)


def test_criterion_09_bias_correction():
    t0 = time.perf_counter()
    plugin, mm, jk = serial("9")
    H = population_summary(Geometric(1.0), SHANNON).value
    bias_plugin = plugin.mean() - H
    bias_mm = mm.mean() - H
    ok = abs(bias_mm) < abs(bias_plugin) and jk.mean() >= plugin.mean()
    elapsed = time.perf_counter() - t0
    record(9, ok and elapsed < 120,
           f"bias plug-in {bias_plugin:.2e}, Miller-Madow {bias_mm:.2e}, jackknife "
           f"{jk.mean() - H:.2e}; mean JK - mean plug-in = {jk.mean() - plugin.mean():.2e}",
           elapsed)


def _identical(a, b):
    if isinstance(a, dict):
        return a.keys() == b.keys() and all(_identical(a[k], b[k]) for k in a)
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(_identical(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.shape == b.shape and a.tobytes() == b.tobytes()
    if hasattr(a, "to_dict"):
        return _identical(a.to_dict(), b.to_dict())
    return a == b or (isinstance(a, float) and math.isnan(a) and math.isnan(b))


def test_criterion_10_determinism_across_workers():
    t0 = time.perf_counter()
    same = {}
    for key, run in MC_RUNS.items():
        same[key] = _identical(serial(key), run(n_jobs=2))
    elapsed = time.perf_counter() - t0
    record(10, all(same.values()),
           "bit-identical with 1 vs 2 workers: "
           + ", ".join(f"criterion {k}: {v}" for k, v in same.items()), elapsed)


# -- invariants of the acceptance configurations ------------------------------------------

def _moment_check(report):
    last = report.points[-1]
    m = report.config["replicates"]
    return abs(last.mean) <= 4 / math.sqrt(m) and abs(last.var - 1) <= 0.1, last


def test_standardized_moments_smooth_config():
    ok, last = _moment_check(serial("6"))
    assert ok, (last.mean, last.var)


@pytest.mark.xfail(strict=True, reason=(
    "the plug-in entropy bias is of order (m-1)/(2n) and shifts the standardized mean by "
    "about -0.065 at n=6400, beyond the 4/sqrt(m) = 0.028 allowance"))
def test_standardized_moments_shannon_config():
    ok, last = _moment_check(serial("7"))
    assert ok, (last.mean, last.var)


def test_rate_reports_in_unit_interval():
    for key in ["6", "7"]:
        assert all(0 <= p.D <= 1 for p in serial(key).points)
