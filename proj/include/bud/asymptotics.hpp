#pragma once

#include <array>
#include <optional>
#include <vector>

#include "bud/bud_engine.hpp"

namespace bud {

using Mat3 = std::array<std::array<double, 3>, 3>;

struct AsymptoticSummary {
    std::vector<double> rho;           // K limiting allocations
    std::optional<double> gamma;       // K=2 QVF only
    std::optional<double> var_randprob;    // Gamma / (1 + 4h)
    std::optional<double> var_allocation;  // Cor. 2 expression
    std::optional<Mat3> sigma_tilde;       // diag(Gamma/(1+4h), s1^2/rho1, s0^2/(1-rho1))
    std::vector<double> eta;               // 1 / (rho_a * I_a)
};

// Limiting allocation for NEF outcomes: rho_a proportional to
// sd_a^{2h/(2h+1)}. `sds` are outcome standard deviations.
std::vector<double> nef_limit_allocation(std::span<const double> sds, double h);

// Beyond-NEF two-arm limit: rho_a proportional to I_a^{-h/(2h+1)}.
std::array<double, 2> general_limit_allocation(double info0, double info1, double h);

// Theorem-1 constant for two-arm QVF designs. bprime0/1 are the true means
// b'(psi_a); sigma0sq/sigma1sq the true outcome variances.
double gamma_constant(double v1, double v2, double bprime0, double bprime1, double sigma0sq,
                      double sigma1sq, double rho1, double h);

double asym_var_randprob(double gamma, double h);

// Cor. 2: Gamma/(4h^2(1+4h)) + delta-method terms.
double asym_var_allocation(double gamma, double h, double rho1, double v1, double v2,
                           double bprime0, double bprime1, double sigma0sq, double sigma1sq);

// The equivalent single-expression form printed for the binary example,
// rho^2(1-rho)^2/4 [ (c1^2/(rho s1^2) + c0^2/((1-rho) s0^2))(1 + 1/(1+4h))
//   + 4/(rho(1+4h)) + 4/((1-rho)(1+4h)) ]; used as the second algebraic route.
double asym_var_allocation_direct(double h, double rho1, double v1, double v2, double bprime0,
                                  double bprime1, double sigma0sq, double sigma1sq);

Mat3 sigma_tilde(double gamma, double h, double sigma0sq, double sigma1sq, double rho1);

// eta_a = 1 / (rho_a * I_a).
std::vector<double> eta_constants(std::span<const double> rho, std::span<const double> infos);

// Limit covariance of the noise vector G~ at the stationary point,
// entries per the supplement (with the (1,3) sign from the derivation).
Mat3 gamma_tilde(const NefModel& arm0, const NefModel& arm1, double h);

// Full summary for a configured design (truth models + h). K=2 QVF designs get
// Gamma and friends; others get rho (and eta where Fisher information exists).
AsymptoticSummary summarize(const DesignConfig& config);

}  // namespace bud
