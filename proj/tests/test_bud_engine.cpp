#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bud/bud_engine.hpp"

using namespace bud;

namespace {

DesignConfig binary_design(double th0 = 0.2, double th1 = 0.4, double h = 5.0,
                           std::int64_t n = 1000) {
    DesignConfig d;
    d.K = 2;
    d.h = h;
    d.n = n;
    d.truth = {NefModel::bernoulli(th0), NefModel::bernoulli(th1)};
    d.priors = {beta_prior(2, 2), beta_prior(2, 2)};
    d.seed = 101;
    return d;
}

DesignConfig normal_design(std::int64_t n = 1000) {
    DesignConfig d;
    d.K = 2;
    d.h = 5.0;
    d.n = n;
    d.truth = {NefModel::normal_known_var(0.0, 1.0), NefModel::normal_known_var(1.0, 3.0)};
    d.priors = {normal_prior(0.0, 1.0, 1.0), normal_prior(0.0, 3.0, 3.0)};
    d.seed = 102;
    return d;
}

// Uniform source that mirrors arm-assignment draws (u -> 1-u) and passes
// outcome draws through, for the two-arm relabeling check; the engine consumes
// exactly two uniforms per step, assignment first.
struct MirrorRng {
    RngStream inner;
    int parity = 0;
    double uniform() {
        const double u = inner.uniform();
        return (parity++ % 2 == 0) ? 1.0 - u : u;
    }
};

}  // namespace

TEST_CASE("design validation catches bad configurations") {
    DesignConfig d = binary_design();
    d.K = 1;
    d.truth.resize(1);
    d.priors.resize(1);
    CHECK_THROWS_AS(Scenario{d}, std::invalid_argument);

    d = binary_design();
    d.h = -1.0;
    CHECK_THROWS_AS(Scenario{d}, std::invalid_argument);

    d = binary_design();
    d.priors[1] = gamma_rate_prior(3, 3);  // family mismatch
    CHECK_THROWS_AS(Scenario{d}, std::invalid_argument);
}

TEST_CASE("prior-only increment: Beta(2,2) Bernoulli equals 0.01 exactly") {
    // Brute-force oracle: Var(Beta(2,2)) = 0.05; the posterior variance after
    // one outcome is Var(Beta(3,2)) = Var(Beta(2,3)) = 0.04 whatever y is, so
    // Delta = 0.05 - 0.04 = 0.01.
    const Scenario sc(binary_design());
    const TrialState st = initial_state(sc);
    const double v32 = 3.0 * 2.0 / (25.0 * 6.0);
    REQUIRE(v32 == doctest::Approx(0.04).epsilon(1e-15));
    CHECK(std::abs(info_increment(sc, st, 0) - 0.01) < 1e-12);
    CHECK(std::abs(info_increment(sc, st, 1) - 0.01) < 1e-12);
}

TEST_CASE("prior-only increment: normal sigma2=1, n0=1 equals 0.5 exactly") {
    // Deterministic variance recursion: v1^2 = (1/v0^2 + 1/sigma^2)^-1 = 0.5,
    // so Delta = 1 - 0.5 = 0.5; the closed form gives 2/(1+0+1)^2.
    const Scenario sc(normal_design());
    const TrialState st = initial_state(sc);
    CHECK(std::abs(info_increment(sc, st, 0) - 0.5) < 1e-12);
}

TEST_CASE("increments stay nonnegative along a simulated path") {
    const Scenario sc(binary_design(0.2, 0.4, 5.0, 500));
    TrialState st = initial_state(sc);
    RngStream rng(7, 0);
    bool ok = true;
    for (int t = 0; t < 500; ++t) {
        step(sc, st, rng);
        refresh(sc, st);
        ok = ok && st.delta[0] >= 0.0 && st.delta[1] >= 0.0;
    }
    CHECK(ok);
}

TEST_CASE("randomization probabilities: h=0 gives the uniform design") {
    const std::vector<double> deltas{0.5, 0.01, 3.0};
    const auto p = randomization_probs(deltas, 0.0);
    for (double x : p) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("randomization probabilities: hand-normalized h=1 case") {
    const std::vector<double> deltas{0.01, 0.04};
    const auto p = randomization_probs(deltas, 1.0);
    CHECK(p[0] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("randomization probabilities: equal increments are uniform at any h") {
    for (double h : {0.5, 1.0, 5.0, 25.0}) {
        const std::vector<double> deltas{0.37, 0.37, 0.37, 0.37};
        const auto p = randomization_probs(deltas, h);
        for (double x : p) CHECK(x == doctest::Approx(0.25).epsilon(1e-14));
    }
}

TEST_CASE("randomization probabilities survive severe underflow scales") {
    // Delta ~ t^-2 with h = 5: Delta^h would underflow in linear space.
    const std::vector<double> deltas{2.4e-17, 1.1e-17};
    const auto p = randomization_probs(deltas, 5.0);
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-14));
    const double ratio = std::pow(2.4 / 1.1, 5.0);
    CHECK(p[0] / p[1] == doctest::Approx(ratio).epsilon(1e-10));
}

TEST_CASE("all-zero increments fall back to uniform") {
    const std::vector<double> deltas{0.0, 0.0};
    const auto p = randomization_probs(deltas, 5.0);
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
}

TEST_CASE("state bookkeeping: counts sum to t, probabilities sum to one") {
    const Scenario sc(binary_design(0.2, 0.4, 5.0, 300));
    TrialState st = initial_state(sc);
    RngStream rng(8, 0);
    bool ok = true;
    for (int t = 0; t < 300; ++t) {
        const auto prev = st.counts;
        const auto sr = step(sc, st, rng);
        ok = ok && st.counts[sr.arm] == prev[sr.arm] + 1;
        ok = ok && std::accumulate(st.counts.begin(), st.counts.end(), std::int64_t{0}) == st.t;
        ok = ok && std::abs(st.p[0] + st.p[1] - 1.0) < 1e-12 && st.p[0] > 0.0 && st.p[1] > 0.0;
    }
    CHECK(ok);
}

TEST_CASE("martingale sanity: exact Bernoulli enumeration of the expected utility gain") {
    // Average of u(S_{t+1}) - u(S_t) over assignment and predictive outcome
    // equals sum_a p_a Delta_a, and is nonnegative.
    const Scenario sc(binary_design(0.2, 0.4, 5.0, 50));
    TrialState st = initial_state(sc);
    RngStream rng(9, 0);
    for (int t = 0; t < 37; ++t) step(sc, st, rng);
    refresh(sc, st);
    const double u_now = utility(sc, st);

    double expected_gain = 0.0;
    for (int a = 0; a < 2; ++a) {
        const auto& cs = std::get<ConjugateState>(st.posteriors[a]);
        const double p_one = cs.ytilde;  // predictive P(Y=1 | arm a)
        for (double y : {1.0, 0.0}) {
            TrialState branch = st;
            auto& bcs = std::get<ConjugateState>(branch.posteriors[a]);
            bcs = conjugate_update(bcs, y);
            const double w = (y == 1.0) ? p_one : 1.0 - p_one;
            expected_gain += st.p[a] * w * (utility(sc, branch) - u_now);
        }
    }
    double direct = 0.0;
    for (int a = 0; a < 2; ++a) direct += st.p[a] * st.delta[a];
    CHECK(expected_gain == doctest::Approx(direct).epsilon(1e-12));
    CHECK(direct >= 0.0);
}

TEST_CASE("u(S_t) equals minus the summed posterior variances") {
    DesignConfig d = binary_design(0.2, 0.4, 5.0, 200);
    d.record_every = 10;
    const Scenario sc(d);
    RngStream rng(10, 0);
    auto [st, rec] = run_trial(sc, rng);
    REQUIRE(rec.rows() > 5);
    double vsum = 0.0;
    for (int a = 0; a < 2; ++a) {
        vsum += posterior_mean_variance(std::get<ConjugateState>(st.posteriors[a])).second;
    }
    CHECK(utility(sc, st) == doctest::Approx(-vsum).epsilon(1e-14));
    for (std::size_t r = 0; r < rec.rows(); ++r) CHECK(rec.u[r] <= 0.0);
}

TEST_CASE("identical configuration and seed give a bit-identical trajectory") {
    const Scenario sc(binary_design(0.2, 0.4, 5.0, 400));
    RngStream r1(sc.config.seed, 0), r2(sc.config.seed, 0);
    auto [s1, rec1] = run_trial(sc, r1);
    auto [s2, rec2] = run_trial(sc, r2);
    REQUIRE(rec1.rows() == rec2.rows());
    bool same = true;
    for (std::size_t r = 1; r < rec1.rows(); ++r) {  // row 0 carries the NaN placeholder
        same = same && rec1.y[r] == rec2.y[r] && rec1.arm[r] == rec2.arm[r];
    }
    CHECK(same);
    CHECK(rec1.p == rec2.p);
    CHECK(s1.counts == s2.counts);
}

TEST_CASE("two-arm relabeling equivariance with mirrored assignment draws") {
    // Swap the arms and mirror the assignment uniform: the result must be the
    // same trial with indices relabeled, outcome for outcome.
    DesignConfig d = binary_design(0.2, 0.4, 5.0, 300);
    DesignConfig swapped = d;
    std::swap(swapped.truth[0], swapped.truth[1]);
    std::swap(swapped.priors[0], swapped.priors[1]);

    const Scenario sc(d), sc_swapped(swapped);
    RngStream plain(77, 3);
    MirrorRng mirror{RngStream(77, 3)};

    TrialState a = initial_state(sc);
    TrialState b = initial_state(sc_swapped);
    bool arms_mirror = true, outcomes_match = true;
    for (int t = 0; t < 300; ++t) {
        const auto ra = step(sc, a, plain);
        const auto rb = step(sc_swapped, b, mirror);
        arms_mirror = arms_mirror && (ra.arm == 1 - rb.arm);
        outcomes_match = outcomes_match && (ra.y == rb.y);
    }
    CHECK(arms_mirror);
    CHECK(outcomes_match);
    CHECK(a.counts[0] == b.counts[1]);
    CHECK(a.counts[1] == b.counts[0]);
    refresh(sc, a);
    refresh(sc_swapped, b);
    CHECK(a.p[0] == doctest::Approx(b.p[1]).epsilon(1e-15));
    CHECK(a.delta[0] == doctest::Approx(b.delta[1]).epsilon(1e-15));
    CHECK(a.delta[1] == doctest::Approx(b.delta[0]).epsilon(1e-15));
}

TEST_CASE("symmetric arms balance: mean allocation near one half") {
    DesignConfig d = binary_design(0.3, 0.3, 5.0, 2000);
    const Scenario sc(d);
    KahanSum acc;
    const int R = 500;
    for (int r = 0; r < R; ++r) {
        RngStream rng(606, static_cast<std::uint64_t>(r));
        TrialState st = initial_state(sc);
        for (int t = 0; t < d.n; ++t) step(sc, st, rng);
        acc.add(st.phat(1));
    }
    CHECK(std::abs(acc.value() / R - 0.5) < 0.02);
}

TEST_CASE("trajectory CSV carries the spec header and thinned rows") {
    DesignConfig d = binary_design(0.2, 0.4, 5.0, 100);
    d.record_every = 20;
    const Scenario sc(d);
    RngStream rng(11, 0);
    auto [st, rec] = run_trial(sc, rng);
    std::ostringstream os;
    write_trajectory_csv(rec, os);
    const std::string csv = os.str();
    CHECK(csv.rfind("t,arm,y,u,p_1,p_2,phat_1,phat_2,delta_1,delta_2,ytilde_1,ytilde_2\n", 0) == 0);
    const auto lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == 1 + 100 / 20);
}

TEST_CASE("grid arms run through the engine with nonnegative increments") {
    DesignConfig d;
    d.K = 2;
    d.h = 5.0;
    d.n = 60;
    d.truth = {TruncatedWeibullModel::make(1.0, 1.0, 3.0),
               TruncatedWeibullModel::make(1.0, 1.5, 3.0)};
    d.priors = {GridPriorSpec{256, 96}, GridPriorSpec{256, 96}};
    d.seed = 42;
    const Scenario sc(d);
    TrialState st = initial_state(sc);
    RngStream rng(42, 0);
    bool ok = true;
    for (int t = 0; t < d.n; ++t) {
        step(sc, st, rng);
        refresh(sc, st);
        ok = ok && st.delta[0] >= 0.0 && st.delta[1] >= 0.0 &&
             std::abs(st.p[0] + st.p[1] - 1.0) < 1e-12;
    }
    CHECK(ok);
}

TEST_CASE("grid increment equals the literal variance-decrement route") {
    const auto model = TruncatedWeibullModel::make(1.0, 1.5, 3.0);
    const GridKernel kernel(model, 512, 128);
    GridPosterior gp = kernel.make_prior();
    RngStream rng(43, 0);
    for (int i = 0; i < 40; ++i) {
        gp.update(model.sample(rng),
                  [&](double th, double y) { return kernel.log_likelihood(th, y); });
    }
    const double direct = kernel.info_increment(gp);
    const auto [var_now, expected_var] = kernel.variance_decomposition(gp);
    CHECK(direct == doctest::Approx(var_now - expected_var).epsilon(1e-9));
    CHECK(kernel.predictive_mass(gp) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("K=3 designs run and keep probability mass balanced") {
    DesignConfig d;
    d.K = 3;
    d.h = 2.0;
    d.n = 200;
    d.truth = {NefModel::bernoulli(0.2), NefModel::bernoulli(0.3), NefModel::bernoulli(0.4)};
    d.priors = {beta_prior(2, 2), beta_prior(2, 2), beta_prior(2, 2)};
    d.seed = 5;
    const Scenario sc(d);
    TrialState st = initial_state(sc);
    RngStream rng(5, 0);
    for (int t = 0; t < d.n; ++t) step(sc, st, rng);
    refresh(sc, st);
    CHECK(std::abs(st.p[0] + st.p[1] + st.p[2] - 1.0) < 1e-12);
    CHECK(std::accumulate(st.counts.begin(), st.counts.end(), std::int64_t{0}) == d.n);
}
