#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bud/montecarlo.hpp"

using namespace bud;

namespace {

DesignConfig binary_cfg(double th0, double th1, std::int64_t n, std::uint64_t seed = 71) {
    DesignConfig d;
    d.K = 2;
    d.h = 5.0;
    d.n = n;
    d.truth = {NefModel::bernoulli(th0), NefModel::bernoulli(th1)};
    d.priors = {beta_prior(2, 2), beta_prior(2, 2)};
    d.seed = seed;
    return d;
}

DesignConfig normal_null_cfg(std::int64_t n, std::uint64_t seed = 72) {
    DesignConfig d;
    d.K = 2;
    d.h = 5.0;
    d.n = n;
    d.truth = {NefModel::normal_known_var(0.0, 1.0), NefModel::normal_known_var(0.0, 3.0)};
    d.priors = {normal_prior(0.0, 1.0, 1.0), normal_prior(0.0, 3.0, 3.0)};
    d.seed = seed;
    return d;
}

}  // namespace

TEST_CASE("R=1 degenerate aggregation equals the single trajectory") {
    const auto cfg = binary_cfg(0.2, 0.4, 200);
    const auto rs = run_replications(cfg, 1, {100, 200}, 1);
    CHECK(rs.R == 1);
    CHECK(rs.effective_R == 1);
    REQUIRE(rs.checkpoints.size() == 2);
    // Re-run the same replicate directly.
    const Scenario sc(cfg);
    RngStream rng(cfg.seed, 0);
    TrialState st = initial_state(sc);
    for (int t = 0; t < 100; ++t) step(sc, st, rng);
    refresh(sc, st);
    CHECK(rs.checkpoints[0].p1[0] == st.p[1]);
    CHECK(rs.checkpoints[0].phat1[0] == st.phat(1));
    CHECK(std::isnan(rs.checkpoints[0].p_mv.var));  // variance absent at R=1
}

TEST_CASE("results are bit-identical across 1, 4, and 8 worker threads") {
    const auto cfg = binary_cfg(0.2, 0.4, 500);
    const auto a = run_replications(cfg, 64, {250, 500}, 1);
    const auto b = run_replications(cfg, 64, {250, 500}, 4);
    const auto c = run_replications(cfg, 64, {250, 500}, 8);
    for (std::size_t k = 0; k < a.checkpoints.size(); ++k) {
        CHECK(a.checkpoints[k].p1 == b.checkpoints[k].p1);
        CHECK(a.checkpoints[k].p1 == c.checkpoints[k].p1);
        CHECK(a.checkpoints[k].phat1 == b.checkpoints[k].phat1);
        CHECK(a.checkpoints[k].p_mv.mean == b.checkpoints[k].p_mv.mean);
        CHECK(a.checkpoints[k].p_mv.var == c.checkpoints[k].p_mv.var);
        CHECK(a.checkpoints[k].ks_phat == c.checkpoints[k].ks_phat);
    }
    CHECK(a.final_z == b.final_z);
    CHECK(a.final_z == c.final_z);
}

TEST_CASE("quantile bands nest and bracket the limit from t >= 2000") {
    const auto cfg = binary_cfg(0.2, 0.4, 4000);
    const auto rs = run_replications(cfg, 300, {100, 2000, 4000}, 0);
    const double rho1 = rs.asym.rho[1];
    for (const auto& cs : rs.checkpoints) {
        CHECK(cs.phat_quantiles[0] <= cs.phat_quantiles[1]);
        CHECK(cs.phat_quantiles[1] <= cs.phat_quantiles[2]);
        if (cs.t >= 2000) {
            CHECK(cs.phat_quantiles[0] < rho1);
            CHECK(rho1 < cs.phat_quantiles[2]);
        }
    }
}

TEST_CASE("mean allocation and mean randomization probability agree within 2 MC SEs") {
    const auto cfg = binary_cfg(0.2, 0.4, 4000);
    const auto rs = run_replications(cfg, 300, {4000}, 0);
    const auto& cs = rs.checkpoints.back();
    const double se = std::sqrt(cs.p_mv.var / cs.p1.size() + cs.phat_mv.var / cs.phat1.size());
    CHECK(std::abs(cs.p_mv.mean - cs.phat_mv.mean) < 2.0 * se);
}

TEST_CASE("standardized samples land near the asymptotic variances (loose band)") {
    const auto cfg = binary_cfg(0.2, 0.4, 4000);
    const auto rs = run_replications(cfg, 400, {4000}, 0);
    const auto& cs = rs.checkpoints.back();
    REQUIRE(rs.asym.var_allocation.has_value());
    REQUIRE(rs.asym.var_randprob.has_value());
    CHECK(cs.std_phat_mv.var / *rs.asym.var_allocation > 0.7);
    CHECK(cs.std_phat_mv.var / *rs.asym.var_allocation < 1.4);
    CHECK(cs.std_p_mv.var / *rs.asym.var_randprob > 0.7);
    CHECK(cs.std_p_mv.var / *rs.asym.var_randprob < 1.4);
    CHECK(cs.ks_phat < 0.12);
}

TEST_CASE("ks statistic against exact normal samples beats the 95% critical value") {
    // D_crit = 1.63/sqrt(n) at n = 1000; allow one failure in twenty seeds.
    int pass = 0;
    for (int seed = 0; seed < 20; ++seed) {
        RngStream rng(4000 + seed, 0);
        std::vector<double> xs(1000);
        for (auto& x : xs) x = 1.7 + std::sqrt(0.6) * norm_ppf(rng.uniform());
        if (ks_statistic(xs, 1.7, 0.6) < 1.63 / std::sqrt(1000.0)) ++pass;
    }
    CHECK(pass >= 19);
}

TEST_CASE("degenerate alpha = 1 rejects everything") {
    const auto cfg = normal_null_cfg(50);
    const auto report = error_rates(cfg, 40, {10, 50}, 1.0, 0);
    for (const auto& pt : report.points) {
        CHECK(pt.rate == doctest::Approx(1.0));
        CHECK(pt.effective_R == 40);
    }
}

TEST_CASE("boundary MLEs count as non-rejections, never dropped") {
    // Tiny t with rare events: all-zero arms are certain to appear.
    const auto cfg = binary_cfg(0.05, 0.05, 5, 73);
    const auto report = error_rates(cfg, 200, {5}, 0.05, 0);
    const auto& pt = report.points[0];
    CHECK(pt.effective_R == 200);
    CHECK(pt.boundary > 0);
    CHECK(report.failures.empty());
}

TEST_CASE("error rates are thread-schedule invariant") {
    const auto cfg = binary_cfg(0.3, 0.3, 400);
    const auto a = error_rates(cfg, 100, {200, 400}, 0.05, 1);
    const auto b = error_rates(cfg, 100, {200, 400}, 0.05, 8);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].rejected == b.points[i].rejected);
        CHECK(a.points[i].rate == b.points[i].rate);
    }
}

TEST_CASE("failed replicates are reported with reasons, never silently dropped") {
    // A deliberately under-resolved grid (G=8) concentrates onto fewer than 4
    // nodes and aborts the replicate; the harness must surface it.
    DesignConfig d;
    d.K = 2;
    d.h = 5.0;
    d.n = 3000;
    d.truth = {TruncatedWeibullModel::make(1.0, 1.0, 3.0),
               TruncatedWeibullModel::make(1.0, 1.5, 3.0)};
    d.priors = {GridPriorSpec{8, 32}, GridPriorSpec{8, 32}};
    d.seed = 74;
    const auto rs = run_replications(d, 3, {3000}, 0);
    CHECK(rs.effective_R < rs.R);
    REQUIRE(!rs.failures.empty());
    CHECK(rs.failures[0].reason.find("under-resolved") != std::string::npos);
}

TEST_CASE("checkpoints outside [1, n] are rejected") {
    const auto cfg = binary_cfg(0.2, 0.4, 100);
    CHECK_THROWS_AS(run_replications(cfg, 2, {0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_replications(cfg, 2, {101}, 1), std::invalid_argument);
}
