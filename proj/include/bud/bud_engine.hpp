#pragma once

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "bud/posterior.hpp"

namespace bud {

// Uniform-prior grid posterior request for a beyond-NEF arm.
struct GridPriorSpec {
    int G = 512;
    int quad_nodes = 128;
};

using PriorSpec = std::variant<ConjugateState, GridPriorSpec>;

struct DesignConfig {
    int K = 2;
    double h = 5.0;
    std::int64_t n = 1000;
    std::vector<OutcomeModel> truth;  // K entries
    std::vector<PriorSpec> priors;    // K entries
    std::uint64_t seed = 0;
    std::int64_t record_every = 1;
    bool keep_history = false;

    void validate() const;
};

// Precomputed per-arm machinery for grid (truncated Weibull) arms: the fixed
// density matrix F[q, i] = f_{theta_i}(y_q) over the shape grid and a mapped
// Gauss-Legendre rule in y. Shared read-only across replicates.
class GridKernel {
   public:
    GridKernel(const TruncatedWeibullModel& model, int G, int quad_nodes);

    const TruncatedWeibullModel& model() const { return model_; }
    int grid_size() const { return G_; }

    GridPosterior make_prior() const { return GridPosterior(model_.theta_lo, model_.theta_hi, G_); }

    // Expected information increment for the current grid posterior, computed
    // as the predictive variance of the posterior mean (law of total variance
    // form of Var(theta|S_t) - E[Var(theta|S_{t+1})]); nonnegative by
    // construction.
    double info_increment(const GridPosterior& gp) const;

    // Literal-definition route for cross-checks: (Var(theta|S_t),
    // E_pred[Var(theta|S_{t+1})]) under the discrete node measure.
    std::pair<double, double> variance_decomposition(const GridPosterior& gp) const;

    // Quadrature mass of the posterior predictive density (should be ~1).
    double predictive_mass(const GridPosterior& gp) const;

    double log_likelihood(double theta, double y) const { return model_.log_density(y, theta); }

   private:
    TruncatedWeibullModel model_;
    int G_;
    std::vector<double> theta_;
    std::vector<double> yq_, wq_;  // mapped nodes, weights (jacobian folded in)
    std::vector<double> F_;       // Q x G row-major
};

// Immutable runtime shared by every replicate of one design.
struct Scenario {
    DesignConfig config;
    std::vector<std::shared_ptr<const GridKernel>> kernels;  // per arm; null for NEF

    explicit Scenario(DesignConfig cfg);
    int K() const { return config.K; }
    double h() const { return config.h; }
};

using ArmPosterior = std::variant<ConjugateState, GridPosterior>;

struct TrialState {
    std::int64_t t = 0;
    std::vector<std::int64_t> counts;
    std::vector<double> sum_y;
    std::vector<ArmPosterior> posteriors;
    std::vector<double> p;      // randomization probabilities at the current t
    std::vector<double> delta;  // expected information increments at the current t
    std::vector<char> delta_dirty;
    std::vector<std::vector<double>> arm_outcomes;  // raw outcomes when history kept
    std::vector<int> assign_history;                // A_1..A_t when history kept
    std::vector<double> outcome_history;            // Y_1..Y_t when history kept

    double phat(int a) const {
        return t == 0 ? 0.0 : static_cast<double>(counts[a]) / static_cast<double>(t);
    }
    double ytilde(int a) const;
};

struct TrajectoryRecord {
    int K = 0;
    std::vector<std::int64_t> ts;
    std::vector<int> arm;      // assignment that produced the row's state; -1 at t=0
    std::vector<double> y;     // outcome of that assignment; NaN at t=0
    std::vector<double> u;
    std::vector<double> p;       // row-major K columns
    std::vector<double> phat;    // row-major K columns
    std::vector<double> delta;   // row-major K columns
    std::vector<double> ytilde;  // row-major K columns
    std::size_t rows() const { return ts.size(); }
};

// p_{t,a} proportional to Delta_a^h, normalized in the log domain; h = 0 is
// exactly uniform. All-zero increments with h > 0 fall back to uniform with a
// warning (unreachable with proper priors).
std::vector<double> randomization_probs(std::span<const double> deltas, double h);

TrialState initial_state(const Scenario& sc);

// Expected information increment for arm a at the current state.
double info_increment(const Scenario& sc, const TrialState& st, int a);

// Recompute stale increments and the randomization vector.
void refresh(const Scenario& sc, TrialState& st);

double utility(const Scenario& sc, const TrialState& st);

struct StepResult {
    int arm = -1;
    double y = kNaN;
};

// One enrollment: refresh, draw the arm, sample the outcome, absorb it.
// Consumes exactly two uniforms from rng per call for every family.
template <class Rng>
StepResult step(const Scenario& sc, TrialState& st, Rng& rng) {
    refresh(sc, st);
    const double u_arm = rng.uniform();
    int a = sc.K() - 1;
    double cum = 0.0;
    for (int k = 0; k < sc.K(); ++k) {
        cum += st.p[k];
        if (u_arm < cum) {
            a = k;
            break;
        }
    }
    const double y = sample_outcome(sc.config.truth[a], rng);

    if (auto* cs = std::get_if<ConjugateState>(&st.posteriors[a])) {
        *cs = conjugate_update(*cs, y);
    } else {
        auto& gp = std::get<GridPosterior>(st.posteriors[a]);
        const auto& kernel = *sc.kernels[a];
        gp.update(y, [&](double th, double yy) { return kernel.log_likelihood(th, yy); });
    }
    st.counts[a] += 1;
    st.sum_y[a] += y;
    st.t += 1;
    st.delta_dirty[a] = 1;
    if (sc.config.keep_history) {
        st.arm_outcomes[a].push_back(y);
        st.assign_history.push_back(a);
        st.outcome_history.push_back(y);
    }
    return {a, y};
}

void record_row(const Scenario& sc, TrialState& st, TrajectoryRecord& rec, int arm, double y);

template <class Rng>
std::pair<TrialState, TrajectoryRecord> run_trial(const Scenario& sc, Rng& rng) {
    TrialState st = initial_state(sc);
    TrajectoryRecord rec;
    rec.K = sc.K();
    refresh(sc, st);
    record_row(sc, st, rec, -1, kNaN);
    for (std::int64_t t = 0; t < sc.config.n; ++t) {
        const StepResult sr = step(sc, st, rng);
        if (st.t % sc.config.record_every == 0 || st.t == sc.config.n) {
            refresh(sc, st);
            record_row(sc, st, rec, sr.arm, sr.y);
        }
    }
    refresh(sc, st);
    return {std::move(st), std::move(rec)};
}

std::pair<TrialState, TrajectoryRecord> run_trial(const Scenario& sc);  // stream (seed, 0)

void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& os);

}  // namespace bud
