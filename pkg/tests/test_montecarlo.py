import math

import numpy as np
import pytest
from scipy import special

from divrate.distributions import Finite, Zipf
from divrate.indices import SIMPSON, population_summary
from divrate.montecarlo import (
    DegenerateConfigError, ExperimentConfig, RateReport, kolmogorov_distance, rate_fit,
    replicate_rng, run_experiment, simulate_estimates,
)
from divrate.oracle import exact_estimator_law, exact_kolmogorov


class TestKolmogorovDistance:
    def test_single_zero(self):
        assert kolmogorov_distance([0.0]) == 0.5

    def test_stratified_quantiles(self):
        m = 100
        t = special.ndtri((np.arange(1, m + 1) - 0.5) / m)
        assert kolmogorov_distance(t) <= 1 / (2 * m) + 1e-12

    def test_dkw_self_test(self):
        m = 10**5
        hits = sum(kolmogorov_distance(np.random.default_rng(s).standard_normal(m))
                   <= 1.36 / math.sqrt(m) for s in range(20))
        assert hits >= 18

    def test_order_independent(self):
        x = np.random.default_rng(1).standard_normal(500)
        assert kolmogorov_distance(x) == kolmogorov_distance(x[::-1])

    def test_range(self):
        assert kolmogorov_distance([50.0, 60.0]) <= 1.0

    def test_empty(self):
        with pytest.raises(ValueError):
            kolmogorov_distance([])


class TestRateFit:
    def test_exact_power_law(self):
        ns = [10, 100, 1000, 10**4]
        fit = rate_fit([(n, n**-0.25) for n in ns])
        assert fit.slope == pytest.approx(-0.25, abs=1e-12)
        assert fit.residual_max < 1e-12

    def test_intercept(self):
        fit = rate_fit([(n, 3 * n**-0.1) for n in [5, 50, 500]])
        assert fit.slope == pytest.approx(-0.1, abs=1e-12)
        assert fit.intercept == pytest.approx(math.log(3), abs=1e-12)

    def test_needs_three_positive_points(self):
        with pytest.raises(ValueError):
            rate_fit([(1, 0.1), (2, 0.05)])
        with pytest.raises(ValueError):
            rate_fit([(1, 0.1), (2, 0.0), (3, 0.02)])


class TestConfig:
    def test_validation(self):
        base = dict(dist={"zipf": 2})
        for bad in [dict(replicates=99), dict(n_grid=[100, 100]), dict(n_grid=[]),
                    dict(estimator="mm", index="simpson"), dict(standardization="x"),
                    dict(estimator="jk", index="shannon", n_grid=[1, 5])]:
            with pytest.raises(ValueError):
                ExperimentConfig(**base, **bad)

    def test_dict_roundtrip(self):
        cfg = ExperimentConfig(dist={"zipf": 2}, index="power:2,1", n_grid=[10, 20, 40])
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


class TestSimulation:
    def test_stream_keyed_by_replicate(self):
        a = replicate_rng(3, 100, 7).random(4)
        b = replicate_rng(3, 100, 7).random(4)
        c = replicate_rng(3, 100, 8).random(4)
        assert np.array_equal(a, b) and not np.array_equal(a, c)

    def test_methods_share_samples(self):
        law = Finite([0.2, 0.3, 0.5])
        both = simulate_estimates(law, 20, ["plugin", "mm"], "shannon", 300, master_seed=4)
        alone = simulate_estimates(law, 20, ["plugin"], "shannon", 300, master_seed=4)
        assert np.array_equal(both[0], alone[0])
        assert np.all(both[1] >= both[0])

    def test_worker_split_invariance(self):
        law = Zipf(2.0)
        a = simulate_estimates(law, 50, ["plugin"], "simpson", 400, master_seed=9, n_jobs=1)
        b = simulate_estimates(law, 50, ["plugin"], "simpson", 400, master_seed=9, n_jobs=3)
        assert np.array_equal(a, b)

    def test_oracle_agreement_small(self):
        law = Finite([0.2, 0.3, 0.5])
        n, m = 8, 4000
        summary = population_summary(law, SIMPSON)
        vals = simulate_estimates(law, n, ["plugin"], SIMPSON, m, master_seed=3)[0]
        sigma = math.sqrt(summary.sigma_sq)
        mc = kolmogorov_distance(math.sqrt(n) * (vals - summary.value) / sigma)
        exact = exact_kolmogorov(exact_estimator_law(law.probabilities, n, "plugin", SIMPSON),
                                 summary.value, sigma / math.sqrt(n))
        assert abs(mc - exact) <= 1.36 / math.sqrt(m) + 0.005


class TestRunExperiment:
    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateConfigError):
            run_experiment(ExperimentConfig(dist={"finite": [1.0]}, index="shannon"))
        with pytest.raises(DegenerateConfigError):
            run_experiment(ExperimentConfig(dist={"finite": [0.5, 0.5]}, index="shannon"))

    def small(self, **kw):
        base = dict(dist={"zipf": 2}, index="simpson", n_grid=[20, 40, 80],
                    replicates=500, master_seed=5)
        base.update(kw)
        return ExperimentConfig(**base)

    def test_deterministic(self):
        a = run_experiment(self.small()).to_dict()
        b = run_experiment(self.small()).to_dict()
        assert a == b

    def test_parallel_invariant(self):
        assert run_experiment(self.small(), n_jobs=1).to_dict() == \
            run_experiment(self.small(), n_jobs=2).to_dict()

    def test_report_shape(self):
        r = run_experiment(self.small())
        assert [p.n for p in r.points] == [20, 40, 80]
        assert all(0 <= p.D <= 1 for p in r.points)
        assert all(p.dkw_radius == pytest.approx(1.36 / math.sqrt(500)) for p in r.points)
        assert r.fit is not None
        assert r.theoretical_exponents["fixed_law_exponent"] == -0.25
        lines = r.to_csv().splitlines()
        assert lines[0] == "n,D_n,band,mean,var" and len(lines) == 4

    def test_noise_flag(self):
        # a near-normal statistic at modest m sits inside the DKW band
        r = run_experiment(self.small(dist={"geometric": 0.3}, n_grid=[400, 800, 1600]))
        assert r.noise_dominated == any(p.D <= 3 * p.dkw_radius for p in r.points)

    def test_estimated_sigma(self):
        r = run_experiment(self.small(standardization="estimated-sigma"))
        assert all(0 <= p.D <= 1 for p in r.points)

    def test_triangular_truth_per_n(self):
        r = run_experiment(self.small(dist={"perturbed-uniform": {"lam": 0.25}},
                                      n_grid=[16, 64, 256]))
        for p in r.points:
            assert p.truth == pytest.approx(0.5 + 0.5 / math.sqrt(p.n))
            assert p.sigma**2 == pytest.approx(p.n**-0.5 - p.n**-1.0)

    def test_shannon_exponents(self):
        r = run_experiment(self.small(dist={"geometric": 1}, index="shannon",
                                      estimator="jk", delta=0.2, eps=0.7))
        assert r.theoretical_exponents == {"delta_exponent": -0.1,
                                           "eps_exponent": pytest.approx(-0.1)}

    def test_dict_form_accepted(self):
        cfg = self.small()
        assert run_experiment(cfg.to_dict()).to_dict() == run_experiment(cfg).to_dict()


@pytest.mark.slow
def test_perturbed_uniform_rate_shape():
    cfg = ExperimentConfig(dist={"perturbed-uniform": {"lam": 0.25}}, index="simpson",
                           n_grid=[2**k for k in range(6, 15, 2)], replicates=5000,
                           master_seed=2)
    r = run_experiment(cfg)
    D = [p.D for p in r.points]
    assert all(b < a for a, b in zip(D, D[1:]))
    assert r.fit.slope <= 0
    assert isinstance(r, RateReport)
