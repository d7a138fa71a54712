#include "bud/outcome_models.hpp"

#include <cmath>
#include <stdexcept>

namespace bud {

std::string family_name(Family f) {
    switch (f) {
        case Family::Bernoulli: return "bernoulli";
        case Family::ExponentialMean: return "exp_mean";
        case Family::NormalKnownVar: return "normal";
        case Family::TruncatedWeibull: return "trunc_weibull";
    }
    return "unknown";
}

NefModel NefModel::bernoulli(double theta) {
    if (!(theta > 0.0 && theta < 1.0)) {
        throw std::invalid_argument("bernoulli: theta must lie in (0, 1)");
    }
    return {Family::Bernoulli, theta, 0.0};
}

NefModel NefModel::exponential_mean(double theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("exp_mean: theta must be > 0");
    return {Family::ExponentialMean, theta, 0.0};
}

NefModel NefModel::normal_known_var(double theta, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("normal: sigma2 must be > 0");
    if (!std::isfinite(theta)) throw std::invalid_argument("normal: theta must be finite");
    return {Family::NormalKnownVar, theta, sigma2};
}

Qvf NefModel::qvf() const {
    switch (kind) {
        case Family::Bernoulli: return {0.0, 1.0, -1.0};
        case Family::ExponentialMean: return {0.0, 0.0, 1.0};
        case Family::NormalKnownVar: return {sigma2, 0.0, 0.0};
        default: throw std::logic_error("qvf: not an NEF model");
    }
}

double NefModel::fisher_information_at(double th) const {
    switch (kind) {
        case Family::Bernoulli:
            if (!(th > 0.0 && th < 1.0)) throw std::domain_error("fisher: theta outside (0, 1)");
            return 1.0 / (th * (1.0 - th));
        case Family::ExponentialMean:
            if (!(th > 0.0)) throw std::domain_error("fisher: theta must be > 0");
            return 1.0 / (th * th);
        case Family::NormalKnownVar:
            return 1.0 / sigma2;
        default: throw std::logic_error("fisher: not an NEF model");
    }
}

bool NefModel::in_support(double y) const {
    switch (kind) {
        case Family::Bernoulli: return y == 0.0 || y == 1.0;
        case Family::ExponentialMean: return y > 0.0;
        case Family::NormalKnownVar: return std::isfinite(y);
        default: return false;
    }
}

bool NefModel::mean_interior(double m) const {
    switch (kind) {
        case Family::Bernoulli: return m > 0.0 && m < 1.0;
        case Family::ExponentialMean: return m > 0.0;
        case Family::NormalKnownVar: return std::isfinite(m);
        default: return false;
    }
}

TruncatedWeibullModel TruncatedWeibullModel::make(double rate, double shape, double t0,
                                                  double theta_lo, double theta_hi) {
    if (!(rate > 0.0)) throw std::invalid_argument("trunc_weibull: rate must be > 0");
    if (!(t0 > 0.0)) throw std::invalid_argument("trunc_weibull: t0 must be > 0");
    if (!(theta_lo > 0.0 && theta_lo < theta_hi)) {
        throw std::invalid_argument("trunc_weibull: need 0 < theta_lo < theta_hi");
    }
    if (!(shape > theta_lo && shape < theta_hi)) {
        throw std::invalid_argument("trunc_weibull: shape must lie inside (theta_lo, theta_hi)");
    }
    return {rate, t0, shape, theta_lo, theta_hi};
}

double TruncatedWeibullModel::log_density(double y, double th) const {
    const double u = std::pow(rate * y, th);
    const double u0 = std::pow(rate * t0, th);
    return -u + (th - 1.0) * std::log(rate * y) + std::log(rate) + std::log(th) -
           std::log1p(-std::exp(-u0));
}

double TruncatedWeibullModel::cdf(double y, double th) const {
    if (y <= 0.0) return 0.0;
    if (y >= t0) return 1.0;
    const double u = std::pow(rate * y, th);
    const double u0 = std::pow(rate * t0, th);
    return -std::expm1(-u) / -std::expm1(-u0);
}

double TruncatedWeibullModel::mean_at(double th) const {
    const double p = singularity_map_power();
    return gl_integrate_adaptive(
               [&](double s) {
                   const double y = t0 * std::pow(s, p);
                   const double jac = t0 * p * std::pow(s, p - 1.0);
                   return y * density(y, th) * jac;
               },
               0.0, 1.0, 1e-11, 1e-12, 128, 8192)
        .value;
}

double TruncatedWeibullModel::true_variance_at(double th) const {
    const double m = mean_at(th);
    const double p = singularity_map_power();
    auto res = gl_integrate_adaptive(
        [&](double s) {
            const double y = t0 * std::pow(s, p);
            const double jac = t0 * p * std::pow(s, p - 1.0);
            const double d = y - m;
            return d * d * density(y, th) * jac;
        },
        0.0, 1.0, 1e-10, 1e-11, 128, 8192);
    if (!res.converged) {
        throw std::runtime_error("trunc_weibull variance quadrature did not converge; error " +
                                 std::to_string(res.error_estimate));
    }
    return res.value;
}

double TruncatedWeibullModel::dlog_density_dtheta(double y, double th) const {
    const double lry = std::log(rate * y);
    const double u = std::pow(rate * y, th);
    const double u0 = std::pow(rate * t0, th);
    const double lrt0 = std::log(rate * t0);
    // d/dth of -log(1 - e^-u0) = -u0 * log(r t0) * e^-u0 / (1 - e^-u0)
    const double trunc_term = -u0 * lrt0 * std::exp(-u0) / (-std::expm1(-u0));
    return lry * (1.0 - u) + 1.0 / th + trunc_term;
}

double TruncatedWeibullModel::fisher_information_at(double th) const {
    if (!(th > theta_lo && th < theta_hi)) {
        throw std::domain_error("fisher: theta outside the parameter interval");
    }
    const double p = singularity_map_power();
    auto res = gl_integrate_adaptive(
        [&](double s) {
            const double y = t0 * std::pow(s, p);
            const double jac = t0 * p * std::pow(s, p - 1.0);
            const double dl = dlog_density_dtheta(y, th);
            return dl * dl * density(y, th) * jac;
        },
        0.0, 1.0, 0.0, 1e-7, 128, 8192);
    if (!res.converged) {
        throw std::runtime_error("trunc_weibull Fisher quadrature did not converge; error " +
                                 std::to_string(res.error_estimate));
    }
    return res.value;
}

double true_variance(const OutcomeModel& model) {
    return std::visit([](const auto& m) { return m.true_variance(); }, model);
}

double true_sd(const OutcomeModel& model) { return std::sqrt(true_variance(model)); }

double true_mean(const OutcomeModel& model) {
    if (const auto* nef = std::get_if<NefModel>(&model)) return nef->mean();
    const auto& w = std::get<TruncatedWeibullModel>(model);
    return w.mean_at(w.shape);
}

double fisher_information(const OutcomeModel& model) {
    return std::visit([](const auto& m) { return m.fisher_information(); }, model);
}

double fisher_information(const OutcomeModel& model, double theta) {
    return std::visit([&](const auto& m) { return m.fisher_information_at(theta); }, model);
}

bool in_support(const OutcomeModel& model, double y) {
    return std::visit([&](const auto& m) { return m.in_support(y); }, model);
}

bool is_nef(const OutcomeModel& model) { return std::holds_alternative<NefModel>(model); }

Family family_of(const OutcomeModel& model) {
    if (const auto* nef = std::get_if<NefModel>(&model)) return nef->kind;
    return Family::TruncatedWeibull;
}

}  // namespace bud
