#pragma once

#include <string>
#include <variant>

#include "bud/math.hpp"
#include "bud/rng.hpp"

namespace bud {

enum class Family { Bernoulli, ExponentialMean, NormalKnownVar, TruncatedWeibull };

std::string family_name(Family f);

// Quadratic variance function coefficients: Var(Y) = v0 + v1*mean + v2*mean^2.
struct Qvf {
    double v0 = 0.0;
    double v1 = 0.0;
    double v2 = 0.0;
    double at(double mean) const { return v0 + v1 * mean + v2 * mean * mean; }
};

// Mean-parameterized NEF member. theta is the outcome mean b'(psi); sigma2 is
// the known variance (normal only).
struct NefModel {
    Family kind = Family::Bernoulli;
    double theta = 0.5;
    double sigma2 = 1.0;

    static NefModel bernoulli(double theta);
    static NefModel exponential_mean(double theta);
    static NefModel normal_known_var(double theta, double sigma2);

    double mean() const { return theta; }
    Qvf qvf() const;
    double true_variance() const { return qvf().at(theta); }
    double true_sd() const { return std::sqrt(true_variance()); }
    double fisher_information_at(double th) const;
    double fisher_information() const { return fisher_information_at(theta); }
    bool in_support(double y) const;
    // Interior of the mean-parameter space, used for support checks on ytilde.
    bool mean_interior(double m) const;

    // One uniform per outcome, inverse-CDF throughout, so draws are
    // reproducible for any uniform source.
    template <class Rng>
    double sample(Rng& rng) const {
        const double u = rng.uniform();
        switch (kind) {
            case Family::Bernoulli: return u < theta ? 1.0 : 0.0;
            case Family::ExponentialMean: return -theta * std::log(u);
            case Family::NormalKnownVar: return theta + std::sqrt(sigma2) * norm_ppf(u);
            default: throw std::logic_error("sample: not an NEF model");
        }
    }
};

// Beyond-NEF example: Weibull with known rate, truncated to (0, t0), unknown
// shape on a bounded open interval (theta_lo, theta_hi).
struct TruncatedWeibullModel {
    double rate = 1.0;
    double t0 = 3.0;
    double shape = 1.0;
    double theta_lo = 0.2;
    double theta_hi = 5.0;

    static TruncatedWeibullModel make(double rate, double shape, double t0 = 3.0,
                                      double theta_lo = 0.2, double theta_hi = 5.0);

    double log_density(double y, double th) const;
    double density(double y, double th) const { return std::exp(log_density(y, th)); }
    double log_density(double y) const { return log_density(y, shape); }
    double density(double y) const { return density(y, shape); }
    // F(y) = (1 - exp(-(ry)^th)) / (1 - exp(-(r t0)^th)) on (0, t0).
    double cdf(double y, double th) const;
    double cdf(double y) const { return cdf(y, shape); }

    double mean_at(double th) const;
    double true_variance_at(double th) const;
    double true_variance() const { return true_variance_at(shape); }
    double fisher_information_at(double th) const;
    double fisher_information() const { return fisher_information_at(shape); }
    double dlog_density_dtheta(double y, double th) const;
    bool in_support(double y) const { return y > 0.0 && y < t0; }

    // Inverse CDF by bisection to 1e-12; one uniform per outcome.
    template <class Rng>
    double sample(Rng& rng) const {
        const double u = rng.uniform();
        return bisect_root([&](double y) { return cdf(y, shape) - u; }, 0.0, t0, 1e-12);
    }

    // Power for the y = t0 * s^p map that removes the y^(theta-1) endpoint
    // singularity from shape mixtures over (theta_lo, theta_hi).
    double singularity_map_power() const { return 1.0 / std::min(1.0, theta_lo); }
};

using OutcomeModel = std::variant<NefModel, TruncatedWeibullModel>;

template <class Rng>
double sample_outcome(const OutcomeModel& model, Rng& rng) {
    return std::visit([&](const auto& m) { return m.sample(rng); }, model);
}

double true_variance(const OutcomeModel& model);
double true_sd(const OutcomeModel& model);
double true_mean(const OutcomeModel& model);
double fisher_information(const OutcomeModel& model);
double fisher_information(const OutcomeModel& model, double theta);
bool in_support(const OutcomeModel& model, double y);
bool is_nef(const OutcomeModel& model);
Family family_of(const OutcomeModel& model);

}  // namespace bud
