#include "bud/inference_power.hpp"

#include <cmath>

namespace bud {

void TestSpec::validate() const {
    if (!(alpha > 0.0 && alpha <= 0.5)) throw std::invalid_argument("test.alpha: must lie in (0, 0.5]");
    if (!(beta > 0.0 && beta <= 0.5)) throw std::invalid_argument("test.beta: must lie in (0, 0.5]");
}

double mle(const Scenario& sc, const TrialState& st, int a) {
    if (a < 0 || a >= sc.K()) throw std::invalid_argument("mle: arm index out of range");
    if (st.counts[a] < 1) {
        throw InsufficientDataError("mle: arm " + std::to_string(a) + " has no outcomes");
    }
    const auto& model = sc.config.truth[a];
    if (is_nef(model)) {
        return st.sum_y[a] / static_cast<double>(st.counts[a]);
    }
    const auto& w = std::get<TruncatedWeibullModel>(model);
    if (st.arm_outcomes.empty() || st.arm_outcomes[a].empty()) {
        throw InsufficientDataError("mle: trunc_weibull arm needs recorded outcomes (keep_history)");
    }
    const auto& ys = st.arm_outcomes[a];
    auto loglik = [&](double th) {
        KahanSum s;
        for (double y : ys) s.add(w.log_density(y, th));
        return s.value();
    };
    return golden_section_max(loglik, w.theta_lo, w.theta_hi, 1e-8);
}

namespace {

// Plug-in (sd, Fisher information) at the estimated mean parameter.
struct PlugIn {
    double sd = 0.0;
    double info = 0.0;
};

PlugIn plug_in(const OutcomeModel& model, double theta_hat) {
    PlugIn out;
    if (const auto* nef = std::get_if<NefModel>(&model)) {
        switch (nef->kind) {
            case Family::Bernoulli:
                if (theta_hat <= 0.0 || theta_hat >= 1.0) {
                    throw BoundaryError("wald: bernoulli MLE on the boundary");
                }
                break;
            case Family::ExponentialMean:
                if (theta_hat <= 0.0) throw BoundaryError("wald: exp_mean MLE on the boundary");
                break;
            default: break;
        }
        NefModel at = *nef;
        at.theta = theta_hat;
        out.sd = at.true_sd();
        out.info = at.fisher_information_at(theta_hat);
        return out;
    }
    const auto& w = std::get<TruncatedWeibullModel>(model);
    const double margin = 1e-6 * (w.theta_hi - w.theta_lo);
    if (theta_hat <= w.theta_lo + margin || theta_hat >= w.theta_hi - margin) {
        throw BoundaryError("wald: trunc_weibull MLE on the parameter boundary");
    }
    out.info = w.fisher_information_at(theta_hat);
    out.sd = std::sqrt(1.0 / out.info);  // only the information route is used beyond the NEF
    return out;
}

}  // namespace

WaldBreakdown wald_breakdown(const Scenario& sc, const TrialState& st) {
    if (sc.K() != 2) throw std::invalid_argument("wald_statistic: two-arm designs only");
    if (st.counts[0] < 1 || st.counts[1] < 1) {
        throw InsufficientDataError("wald_statistic: both arms need outcomes");
    }
    WaldBreakdown out;
    out.theta_hat = {mle(sc, st, 0), mle(sc, st, 1)};
    const PlugIn p0 = plug_in(sc.config.truth[0], out.theta_hat[0]);
    const PlugIn p1 = plug_in(sc.config.truth[1], out.theta_hat[1]);

    if (is_nef(sc.config.truth[0]) && is_nef(sc.config.truth[1])) {
        const auto rho = nef_limit_allocation(std::array{p0.sd, p1.sd}, sc.h());
        out.rho_hat = {rho[0], rho[1]};
    } else {
        out.rho_hat = general_limit_allocation(p0.info, p1.info, sc.h());
    }
    out.eta_hat = {1.0 / (out.rho_hat[0] * p0.info), 1.0 / (out.rho_hat[1] * p1.info)};
    const double t = static_cast<double>(st.t);
    out.z = std::sqrt(t) * (out.theta_hat[1] - out.theta_hat[0]) /
            std::sqrt(out.eta_hat[0] + out.eta_hat[1]);
    if (!std::isfinite(out.z)) throw std::runtime_error("wald_statistic: non-finite statistic");
    return out;
}

double wald_statistic(const Scenario& sc, const TrialState& st) {
    return wald_breakdown(sc, st).z;
}

double power_approx(double theta0, double theta1, double eta0, double eta1, double t, double alpha) {
    if (!(theta1 > theta0)) throw std::invalid_argument("power_approx: need theta1 > theta0");
    if (!(t >= 1.0)) throw std::invalid_argument("power_approx: need t >= 1");
    if (!(eta0 > 0.0 && eta1 > 0.0)) throw std::invalid_argument("power_approx: need eta > 0");
    const double shift = std::sqrt(t) * (theta1 - theta0) / std::sqrt(eta0 + eta1);
    return norm_cdf(shift - z_upper(alpha));
}

std::int64_t sample_size(double theta0, double theta1, double eta0, double eta1, double alpha,
                         double beta) {
    if (!(theta1 > theta0)) throw std::invalid_argument("sample_size: need theta1 > theta0");
    const double z_a = z_upper(alpha);
    const double z_b = z_upper(beta);
    const double d = theta1 - theta0;
    const double t_star = (z_a + z_b) * (z_a + z_b) * (eta0 + eta1) / (d * d);
    auto t_hat = static_cast<std::int64_t>(std::ceil(t_star));
    return std::max<std::int64_t>(t_hat, 1);
}

}  // namespace bud
