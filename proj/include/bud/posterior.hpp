#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "bud/outcome_models.hpp"

namespace bud {

// Conjugate NEF posterior in the (n, ytilde) parameterization of Eq.-style
// priors: n is the effective sample size, ytilde the predictive mean. One
// update law covers every family: n += 1, ytilde -> (n*ytilde + y)/(n + 1).
struct ConjugateState {
    Family family = Family::Bernoulli;
    double n = 1.0;
    double ytilde = 0.5;
    double sigma2 = 1.0;  // normal only

    Qvf qvf() const;
};

// Native prior constructor; validates (n0, y0) against the family.
ConjugateState conjugate_prior(Family family, double n0, double y0, double sigma2 = 1.0);

// Family sugar: Beta(a,b) -> (a+b, a/(a+b)); Gamma(a,b) on the rate ->
// (a-1, b/(a-1)), requiring a > 2 so the predictive variance exists;
// Normal(mu0, v0^2) with known sigma2 -> (sigma2/v0^2, mu0).
ConjugateState beta_prior(double a, double b);
ConjugateState gamma_rate_prior(double a, double b);
ConjugateState normal_prior(double mu0, double v0sq, double sigma2);

// Pure: returns the updated state, rejects y outside the family support.
ConjugateState conjugate_update(const ConjugateState& state, double y);

// (E[theta | data], Var[theta | data]); the variance is Morris's closed form
// (v0 + v1*ytilde + v2*ytilde^2) / (n - v2).
std::pair<double, double> posterior_mean_variance(const ConjugateState& state);

// Var(Y_next | data) = qvf(ytilde) + (1 + v2) * Var(theta | data).
double predictive_variance(const ConjugateState& state);

// Dense posterior over a bounded shape interval, log-domain weights with a
// running max shift. Grid nodes span [lo, hi] inclusive; the prior is uniform.
class GridPosterior {
   public:
    GridPosterior(double lo, double hi, int G = 512);

    using LogLik = std::function<double(double theta, double y)>;

    // log_weights[i] += loglik(grid[i], y), then re-shift. Throws if every
    // weight underflows or the mass concentrates on fewer than 4 nodes.
    void update(double y, const LogLik& loglik);

    // Posterior mean and variance. Normalization uses the trapezoid sum (exact
    // for the piecewise-linear density); moments integrate that piecewise-
    // linear density exactly per segment.
    std::pair<double, double> moments() const;

    // Normalized node masses (trapezoid weights folded in, sum = 1).
    std::vector<double> node_masses() const;
    double normalization_check() const;  // |sum(node_masses) - 1|
    int size() const { return static_cast<int>(grid_.size()); }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& log_weights() const { return log_w_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    int updates() const { return updates_; }

   private:
    double lo_, hi_;
    std::vector<double> grid_;
    std::vector<double> log_w_;  // max-shifted
    int updates_ = 0;
};

GridPosterior grid_update(GridPosterior gp, double y, const GridPosterior::LogLik& loglik);
std::pair<double, double> grid_moments(const GridPosterior& gp);

}  // namespace bud
