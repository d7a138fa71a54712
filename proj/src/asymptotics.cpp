#include "bud/asymptotics.hpp"

#include <cmath>
#include <stdexcept>

namespace bud {

std::vector<double> nef_limit_allocation(std::span<const double> sds, double h) {
    if (sds.size() < 2) throw std::invalid_argument("nef_limit_allocation: need K >= 2");
    if (!(h >= 0.0)) throw std::invalid_argument("nef_limit_allocation: h must be >= 0");
    const double expo = 2.0 * h / (2.0 * h + 1.0);
    std::vector<double> rho(sds.size());
    KahanSum z;
    for (std::size_t a = 0; a < sds.size(); ++a) {
        if (!(sds[a] > 0.0)) throw std::invalid_argument("nef_limit_allocation: sd must be > 0");
        rho[a] = std::pow(sds[a], expo);
        z.add(rho[a]);
    }
    const double Z = z.value();
    for (double& r : rho) r /= Z;
    return rho;
}

std::array<double, 2> general_limit_allocation(double info0, double info1, double h) {
    if (!(info0 > 0.0 && info1 > 0.0)) {
        throw std::invalid_argument("general_limit_allocation: Fisher information must be > 0");
    }
    const double expo = -h / (2.0 * h + 1.0);
    const double w0 = std::pow(info0, expo);
    const double w1 = std::pow(info1, expo);
    return {w0 / (w0 + w1), w1 / (w0 + w1)};
}

double gamma_constant(double v1, double v2, double bprime0, double bprime1, double sigma0sq,
                      double sigma1sq, double rho1, double h) {
    if (!(rho1 > 0.0 && rho1 < 1.0)) throw std::invalid_argument("gamma_constant: rho1 in (0,1)");
    if (!(sigma0sq > 0.0 && sigma1sq > 0.0)) {
        throw std::invalid_argument("gamma_constant: variances must be > 0");
    }
    const long double c1 = v1 + 2.0L * v2 * bprime1;
    const long double c0 = v1 + 2.0L * v2 * bprime0;
    const long double r = rho1;
    long double bracket = c1 * c1 / (r * sigma1sq);
    bracket += c0 * c0 / ((1.0L - r) * sigma0sq);
    bracket += 4.0L / r;
    bracket += 4.0L / (1.0L - r);
    const long double g = static_cast<long double>(h) * h * r * r * (1.0L - r) * (1.0L - r) * bracket;
    return static_cast<double>(g);
}

double asym_var_randprob(double gamma, double h) { return gamma / (1.0 + 4.0 * h); }

double asym_var_allocation(double gamma, double h, double rho1, double v1, double v2,
                           double bprime0, double bprime1, double sigma0sq, double sigma1sq) {
    const long double c1 = v1 + 2.0L * v2 * bprime1;
    const long double c0 = v1 + 2.0L * v2 * bprime0;
    const long double r = rho1;
    long double v = static_cast<long double>(gamma) / (4.0L * h * h * (1.0L + 4.0L * h));
    v += r * (1.0L - r) * (1.0L - r) * c1 * c1 / (4.0L * sigma1sq);
    v += r * r * (1.0L - r) * c0 * c0 / (4.0L * sigma0sq);
    return static_cast<double>(v);
}

double asym_var_allocation_direct(double h, double rho1, double v1, double v2, double bprime0,
                                  double bprime1, double sigma0sq, double sigma1sq) {
    const long double c1 = v1 + 2.0L * v2 * bprime1;
    const long double c0 = v1 + 2.0L * v2 * bprime0;
    const long double r = rho1;
    const long double k = 1.0L + 4.0L * h;
    long double bracket =
        (c1 * c1 / (r * sigma1sq) + c0 * c0 / ((1.0L - r) * sigma0sq)) * (1.0L + 1.0L / k);
    bracket += 4.0L / (r * k) + 4.0L / ((1.0L - r) * k);
    return static_cast<double>(r * r * (1.0L - r) * (1.0L - r) / 4.0L * bracket);
}

Mat3 sigma_tilde(double gamma, double h, double sigma0sq, double sigma1sq, double rho1) {
    Mat3 m{};
    m[0][0] = gamma / (1.0 + 4.0 * h);
    m[1][1] = sigma1sq / rho1;
    m[2][2] = sigma0sq / (1.0 - rho1);
    return m;
}

std::vector<double> eta_constants(std::span<const double> rho, std::span<const double> infos) {
    if (rho.size() != infos.size()) {
        throw std::invalid_argument("eta_constants: rho and info sizes differ");
    }
    std::vector<double> eta(rho.size());
    for (std::size_t a = 0; a < rho.size(); ++a) {
        if (!(rho[a] > 0.0 && infos[a] > 0.0)) {
            throw std::invalid_argument("eta_constants: need rho_a > 0 and I_a > 0");
        }
        eta[a] = 1.0 / (rho[a] * infos[a]);
    }
    return eta;
}

Mat3 gamma_tilde(const NefModel& arm0, const NefModel& arm1, double h) {
    if (arm0.kind != arm1.kind) throw std::invalid_argument("gamma_tilde: arms share one family");
    const double s0 = arm0.true_sd();
    const double s1 = arm1.true_sd();
    const auto rho = nef_limit_allocation(std::array{s0, s1}, h);
    const double r = rho[1];
    const Qvf v = arm1.qvf();
    const double c1 = v.v1 + 2.0 * v.v2 * arm1.mean();
    const double c0 = arm0.qvf().v1 + 2.0 * arm0.qvf().v2 * arm0.mean();
    Mat3 g{};
    g[0][0] = gamma_constant(v.v1, v.v2, arm0.mean(), arm1.mean(), s0 * s0, s1 * s1, r, h);
    g[1][1] = s1 * s1 / r;
    g[2][2] = s0 * s0 / (1.0 - r);
    g[0][1] = g[1][0] = h * (1.0 - r) * c1;
    // Derivation sign: an upward arm-0 surprise raises Delta_0 and lowers p1.
    g[0][2] = g[2][0] = -h * r * c0;
    g[1][2] = g[2][1] = 0.0;
    return g;
}

AsymptoticSummary summarize(const DesignConfig& config) {
    config.validate();
    AsymptoticSummary out;
    const int K = config.K;

    bool all_nef = true;
    for (const auto& m : config.truth) all_nef = all_nef && is_nef(m);

    if (all_nef) {
        std::vector<double> sds(K);
        for (int a = 0; a < K; ++a) sds[a] = true_sd(config.truth[a]);
        out.rho = nef_limit_allocation(sds, config.h);
    } else {
        if (K != 2) throw std::invalid_argument("summarize: beyond-NEF limit needs K = 2");
        const auto rho = general_limit_allocation(fisher_information(config.truth[0]),
                                                  fisher_information(config.truth[1]), config.h);
        out.rho = {rho[0], rho[1]};
    }

    std::vector<double> infos(K);
    for (int a = 0; a < K; ++a) infos[a] = fisher_information(config.truth[a]);
    out.eta = eta_constants(out.rho, infos);

    const bool same_qvf_family =
        all_nef && K == 2 && family_of(config.truth[0]) == family_of(config.truth[1]);
    if (same_qvf_family && config.h > 0.0) {
        const auto& m0 = std::get<NefModel>(config.truth[0]);
        const auto& m1 = std::get<NefModel>(config.truth[1]);
        const Qvf v = m1.qvf();
        const double s0sq = m0.true_variance();
        const double s1sq = m1.true_variance();
        const double r = out.rho[1];
        const double g =
            gamma_constant(v.v1, v.v2, m0.mean(), m1.mean(), s0sq, s1sq, r, config.h);
        out.gamma = g;
        out.var_randprob = asym_var_randprob(g, config.h);
        out.var_allocation =
            asym_var_allocation(g, config.h, r, v.v1, v.v2, m0.mean(), m1.mean(), s0sq, s1sq);
        out.sigma_tilde = sigma_tilde(g, config.h, s0sq, s1sq, r);
    }
    return out;
}

}  // namespace bud
