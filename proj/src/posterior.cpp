#include "bud/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bud {

Qvf ConjugateState::qvf() const {
    switch (family) {
        case Family::Bernoulli: return {0.0, 1.0, -1.0};
        case Family::ExponentialMean: return {0.0, 0.0, 1.0};
        case Family::NormalKnownVar: return {sigma2, 0.0, 0.0};
        default: throw std::logic_error("ConjugateState: non-conjugate family");
    }
}

namespace {

void validate_mean(Family family, double y0) {
    switch (family) {
        case Family::Bernoulli:
            if (!(y0 > 0.0 && y0 < 1.0)) {
                throw std::invalid_argument("prior: bernoulli ytilde must lie in (0, 1)");
            }
            break;
        case Family::ExponentialMean:
            if (!(y0 > 0.0)) throw std::invalid_argument("prior: exp_mean ytilde must be > 0");
            break;
        case Family::NormalKnownVar:
            if (!std::isfinite(y0)) throw std::invalid_argument("prior: ytilde must be finite");
            break;
        default: throw std::invalid_argument("prior: non-conjugate family");
    }
}

}  // namespace

ConjugateState conjugate_prior(Family family, double n0, double y0, double sigma2) {
    if (!(n0 > 0.0)) throw std::invalid_argument("prior: n0 must be > 0");
    validate_mean(family, y0);
    if (family == Family::ExponentialMean && !(n0 > 1.0)) {
        // v2 = 1: the predictive variance has an (n - 1) denominator, so the
        // prior must start past it (gamma shape > 2).
        throw std::invalid_argument("prior: exp_mean requires n0 > 1 (gamma shape alpha > 2)");
    }
    if (family == Family::NormalKnownVar && !(sigma2 > 0.0)) {
        throw std::invalid_argument("prior: normal sigma2 must be > 0");
    }
    return {family, n0, y0, sigma2};
}

ConjugateState beta_prior(double a, double b) {
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("beta prior: need a, b > 0");
    return conjugate_prior(Family::Bernoulli, a + b, a / (a + b));
}

ConjugateState gamma_rate_prior(double a, double b) {
    if (!(a > 2.0)) throw std::invalid_argument("gamma prior: need shape a > 2");
    if (!(b > 0.0)) throw std::invalid_argument("gamma prior: need rate b > 0");
    return conjugate_prior(Family::ExponentialMean, a - 1.0, b / (a - 1.0));
}

ConjugateState normal_prior(double mu0, double v0sq, double sigma2) {
    if (!(v0sq > 0.0)) throw std::invalid_argument("normal prior: need v0sq > 0");
    return conjugate_prior(Family::NormalKnownVar, sigma2 / v0sq, mu0, sigma2);
}

ConjugateState conjugate_update(const ConjugateState& state, double y) {
    bool ok = false;
    switch (state.family) {
        case Family::Bernoulli: ok = (y == 0.0 || y == 1.0); break;
        case Family::ExponentialMean: ok = (y > 0.0); break;
        case Family::NormalKnownVar: ok = std::isfinite(y); break;
        default: break;
    }
    if (!ok) {
        throw std::invalid_argument("conjugate_update: outcome " + std::to_string(y) +
                                    " outside the " + family_name(state.family) + " support");
    }
    ConjugateState out = state;
    out.n = state.n + 1.0;
    out.ytilde = (state.n * state.ytilde + y) / out.n;
    return out;
}

std::pair<double, double> posterior_mean_variance(const ConjugateState& state) {
    const Qvf v = state.qvf();
    if (!(state.n > v.v2)) {
        throw std::domain_error("posterior variance undefined: n <= v2 (improper prior state)");
    }
    const double var = v.at(state.ytilde) / (state.n - v.v2);
    return {state.ytilde, var};
}

double predictive_variance(const ConjugateState& state) {
    const Qvf v = state.qvf();
    const double post_var = posterior_mean_variance(state).second;
    return v.at(state.ytilde) + (1.0 + v.v2) * post_var;
}

GridPosterior::GridPosterior(double lo, double hi, int G) : lo_(lo), hi_(hi) {
    if (!(lo < hi)) throw std::invalid_argument("grid: need lo < hi");
    if (G < 8) throw std::invalid_argument("grid: need at least 8 nodes");
    grid_.resize(G);
    log_w_.assign(G, 0.0);  // uniform prior
    const double step = (hi - lo) / static_cast<double>(G - 1);
    for (int i = 0; i < G; ++i) grid_[i] = lo + step * static_cast<double>(i);
    grid_.back() = hi;
}

void GridPosterior::update(double y, const LogLik& loglik) {
    double mx = -kInf;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        log_w_[i] += loglik(grid_[i], y);
        mx = std::max(mx, log_w_[i]);
    }
    if (!std::isfinite(mx)) {
        throw std::runtime_error("grid update: all posterior weights underflowed");
    }
    for (double& lw : log_w_) lw -= mx;
    int effective = 0;
    for (double lw : log_w_) {
        if (lw > -27.0) ++effective;  // mass above ~2e-12 of the mode
    }
    if (effective < 4) {
        throw std::runtime_error(
            "grid posterior under-resolved: mass concentrated on fewer than 4 of " +
            std::to_string(grid_.size()) + " nodes; increase G");
    }
    ++updates_;
}

std::vector<double> GridPosterior::node_masses() const {
    const std::size_t G = grid_.size();
    const double step = (hi_ - lo_) / static_cast<double>(G - 1);
    std::vector<double> w(G);
    KahanSum z;
    for (std::size_t i = 0; i < G; ++i) {
        const double c = (i == 0 || i + 1 == G) ? 0.5 : 1.0;
        w[i] = c * step * std::exp(log_w_[i]);
        z.add(w[i]);
    }
    const double Z = z.value();
    if (!(Z > 0.0)) throw std::runtime_error("grid posterior: zero normalization");
    for (double& x : w) x /= Z;
    return w;
}

double GridPosterior::normalization_check() const {
    const auto w = node_masses();
    KahanSum s;
    for (double x : w) s.add(x);
    return std::abs(s.value() - 1.0);
}

std::pair<double, double> GridPosterior::moments() const {
    // Composite Simpson over the node densities (3/8 rule on the trailing
    // triple when the interval count is odd): fourth-order in the spacing, and
    // exact for the uniform prior. A centered second pass keeps the variance
    // free of cancellation.
    const std::size_t G = grid_.size();
    const double step = (hi_ - lo_) / static_cast<double>(G - 1);
    std::vector<double> w(G, 0.0);
    std::size_t n_int = G - 1;
    std::size_t simpson_end = (n_int % 2 == 0) ? n_int : n_int - 3;
    for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
        w[i] += step / 3.0;
        w[i + 1] += 4.0 * step / 3.0;
        w[i + 2] += step / 3.0;
    }
    if (n_int % 2 == 1) {
        const std::size_t s = simpson_end;
        w[s] += 3.0 * step / 8.0;
        w[s + 1] += 9.0 * step / 8.0;
        w[s + 2] += 9.0 * step / 8.0;
        w[s + 3] += 3.0 * step / 8.0;
    }

    std::vector<double> mass(G);
    for (std::size_t i = 0; i < G; ++i) mass[i] = w[i] * std::exp(log_w_[i]);

    KahanSum m0s, m1s;
    for (std::size_t i = 0; i < G; ++i) {
        m0s.add(mass[i]);
        m1s.add(mass[i] * grid_[i]);
    }
    const double m0 = m0s.value();
    if (!(m0 > 0.0)) throw std::runtime_error("grid posterior: zero normalization");
    const double mean = m1s.value() / m0;
    KahanSum m2s;
    for (std::size_t i = 0; i < G; ++i) {
        const double d = grid_[i] - mean;
        m2s.add(mass[i] * d * d);
    }
    return {mean, std::max(m2s.value() / m0, 0.0)};
}

GridPosterior grid_update(GridPosterior gp, double y, const GridPosterior::LogLik& loglik) {
    gp.update(y, loglik);
    return gp;
}

std::pair<double, double> grid_moments(const GridPosterior& gp) { return gp.moments(); }

}  // namespace bud
