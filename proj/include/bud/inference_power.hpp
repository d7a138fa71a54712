#pragma once

#include <optional>

#include "bud/asymptotics.hpp"

namespace bud {

struct TestSpec {
    double alpha = 0.05;
    double beta = 0.2;  // type-II rate; one-sided H1: theta1 > theta0

    void validate() const;
};

// MLE of the mean parameter (shape for truncated Weibull) on arm a: sample
// mean for mean-parameterized NEF families, golden-section maximizer of the
// log-likelihood over (theta_lo, theta_hi) otherwise.
double mle(const Scenario& sc, const TrialState& st, int a);

// Thrown when an MLE sits on the parameter-space boundary (e.g. an all-zero
// Bernoulli arm); simulation harnesses count it as a non-rejection.
struct BoundaryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Z = sqrt(t) (theta1^ - theta0^) / sqrt(eta0^ + eta1^), with plug-in
// eta_a^ = 1/(rho_a^ I_{theta_a^}) and rho^ from the estimated SDs (Fisher
// informations beyond the NEF).
double wald_statistic(const Scenario& sc, const TrialState& st);

struct WaldBreakdown {
    std::array<double, 2> theta_hat{};
    std::array<double, 2> rho_hat{};
    std::array<double, 2> eta_hat{};
    double z = kNaN;
};

WaldBreakdown wald_breakdown(const Scenario& sc, const TrialState& st);

// Phi( sqrt(t) (theta1-theta0)/sqrt(eta0+eta1) - z_{1-alpha} ).
double power_approx(double theta0, double theta1, double eta0, double eta1, double t, double alpha);

// Smallest integer t with power_approx(t) >= 1 - beta:
// ceil( (z_{1-alpha} + z_{1-beta})^2 (eta0+eta1) / (theta1-theta0)^2 ).
std::int64_t sample_size(double theta0, double theta1, double eta0, double eta1, double alpha,
                         double beta);

}  // namespace bud
