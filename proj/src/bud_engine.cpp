#include "bud/bud_engine.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bud {

void DesignConfig::validate() const {
    if (K < 2) throw std::invalid_argument("design.K: need at least 2 arms, got " + std::to_string(K));
    if (!(h >= 0.0) || !std::isfinite(h)) {
        throw std::invalid_argument("design.h: must be a finite nonnegative real");
    }
    if (n < 1) throw std::invalid_argument("design.n: need at least 1 enrollment");
    if (record_every < 1) throw std::invalid_argument("design.record_every: must be >= 1");
    if (static_cast<int>(truth.size()) != K) {
        throw std::invalid_argument("design.models: expected " + std::to_string(K) + " entries, got " +
                                    std::to_string(truth.size()));
    }
    if (static_cast<int>(priors.size()) != K) {
        throw std::invalid_argument("design.priors: expected " + std::to_string(K) + " entries, got " +
                                    std::to_string(priors.size()));
    }
    for (int a = 0; a < K; ++a) {
        const bool nef = is_nef(truth[a]);
        if (const auto* cs = std::get_if<ConjugateState>(&priors[a])) {
            if (!nef) {
                throw std::invalid_argument("design.priors[" + std::to_string(a) +
                                            "]: conjugate prior on a non-NEF arm");
            }
            if (cs->family != family_of(truth[a])) {
                throw std::invalid_argument("design.priors[" + std::to_string(a) +
                                            "]: prior family does not match the outcome family");
            }
        } else if (nef) {
            throw std::invalid_argument("design.priors[" + std::to_string(a) +
                                        "]: grid prior requires a trunc_weibull arm");
        }
    }
}

GridKernel::GridKernel(const TruncatedWeibullModel& model, int G, int quad_nodes)
    : model_(model), G_(G) {
    GridPosterior proto(model.theta_lo, model.theta_hi, G);
    theta_ = proto.grid();
    const auto& rule = gauss_legendre(quad_nodes);
    const double pw = model.singularity_map_power();
    yq_.resize(rule.nodes.size());
    wq_.resize(rule.nodes.size());
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double s = 0.5 + 0.5 * rule.nodes[q];  // map (-1,1) -> (0,1)
        const double y = model.t0 * std::pow(s, pw);
        yq_[q] = y;
        wq_[q] = 0.5 * rule.weights[q] * model.t0 * pw * std::pow(s, pw - 1.0);
    }
    F_.resize(yq_.size() * theta_.size());
    for (std::size_t q = 0; q < yq_.size(); ++q) {
        for (std::size_t i = 0; i < theta_.size(); ++i) {
            F_[q * theta_.size() + i] = model.density(yq_[q], theta_[i]);
        }
    }
}

namespace {

struct GridScratch {
    std::vector<double> W;   // node masses
    std::vector<double> C1;  // W * (theta - mu)
};

thread_local GridScratch g_scratch;

}  // namespace

double GridKernel::info_increment(const GridPosterior& gp) const {
    auto& ws = g_scratch;
    ws.W = gp.node_masses();
    ws.C1.resize(ws.W.size());
    double mu = 0.0;
    for (std::size_t i = 0; i < ws.W.size(); ++i) mu += ws.W[i] * theta_[i];
    for (std::size_t i = 0; i < ws.W.size(); ++i) ws.C1[i] = ws.W[i] * (theta_[i] - mu);

    const std::size_t G = theta_.size();
    KahanSum acc;
    for (std::size_t q = 0; q < yq_.size(); ++q) {
        const double* Fq = &F_[q * G];
        double m = 0.0, s = 0.0;
        for (std::size_t i = 0; i < G; ++i) {
            m += ws.W[i] * Fq[i];
            s += ws.C1[i] * Fq[i];
        }
        acc.add(wq_[q] * s * s / m);
    }
    return acc.value();
}

std::pair<double, double> GridKernel::variance_decomposition(const GridPosterior& gp) const {
    const auto W = gp.node_masses();
    double mu = 0.0;
    for (std::size_t i = 0; i < W.size(); ++i) mu += W[i] * theta_[i];
    double var = 0.0;
    for (std::size_t i = 0; i < W.size(); ++i) {
        var += W[i] * (theta_[i] - mu) * (theta_[i] - mu);
    }
    const std::size_t G = theta_.size();
    KahanSum epost;
    for (std::size_t q = 0; q < yq_.size(); ++q) {
        const double* Fq = &F_[q * G];
        double m = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < G; ++i) {
            const double wf = W[i] * Fq[i];
            m += wf;
            s1 += wf * (theta_[i] - mu);
            s2 += wf * (theta_[i] - mu) * (theta_[i] - mu);
        }
        epost.add(wq_[q] * (s2 - s1 * s1 / m));
    }
    return {var, epost.value()};
}

double GridKernel::predictive_mass(const GridPosterior& gp) const {
    const auto W = gp.node_masses();
    const std::size_t G = theta_.size();
    KahanSum acc;
    for (std::size_t q = 0; q < yq_.size(); ++q) {
        const double* Fq = &F_[q * G];
        double m = 0.0;
        for (std::size_t i = 0; i < G; ++i) m += W[i] * Fq[i];
        acc.add(wq_[q] * m);
    }
    return acc.value();
}

Scenario::Scenario(DesignConfig cfg) : config(std::move(cfg)) {
    config.validate();
    kernels.resize(config.K);
    for (int a = 0; a < config.K; ++a) {
        if (const auto* spec = std::get_if<GridPriorSpec>(&config.priors[a])) {
            const auto& model = std::get<TruncatedWeibullModel>(config.truth[a]);
            kernels[a] = std::make_shared<GridKernel>(model, spec->G, spec->quad_nodes);
        }
    }
}

double TrialState::ytilde(int a) const {
    if (const auto* cs = std::get_if<ConjugateState>(&posteriors[a])) return cs->ytilde;
    return std::get<GridPosterior>(posteriors[a]).moments().first;
}

std::vector<double> randomization_probs(std::span<const double> deltas, double h) {
    const std::size_t K = deltas.size();
    if (K < 1) throw std::invalid_argument("randomization_probs: empty increment vector");
    std::vector<double> p(K);
    if (h == 0.0) {
        for (double& x : p) x = 1.0 / static_cast<double>(K);
        return p;
    }
    double mx = -kInf;
    for (std::size_t a = 0; a < K; ++a) {
        if (deltas[a] < 0.0) throw std::invalid_argument("randomization_probs: negative increment");
        p[a] = h * std::log(deltas[a]);
        mx = std::max(mx, p[a]);
    }
    if (mx == -kInf) {
        static std::atomic<int> warned{0};
        if (warned.fetch_add(1) == 0) {
            std::cerr << "warning: all information increments are zero; falling back to uniform "
                         "randomization\n";
        }
        for (double& x : p) x = 1.0 / static_cast<double>(K);
        return p;
    }
    KahanSum z;
    for (std::size_t a = 0; a < K; ++a) {
        p[a] = std::exp(p[a] - mx);
        z.add(p[a]);
    }
    const double Z = z.value();
    for (double& x : p) x /= Z;
    return p;
}

TrialState initial_state(const Scenario& sc) {
    TrialState st;
    const int K = sc.K();
    st.counts.assign(K, 0);
    st.sum_y.assign(K, 0.0);
    st.p.assign(K, 0.0);
    st.delta.assign(K, 0.0);
    st.delta_dirty.assign(K, 1);
    st.posteriors.reserve(K);
    for (int a = 0; a < K; ++a) {
        if (const auto* cs = std::get_if<ConjugateState>(&sc.config.priors[a])) {
            st.posteriors.emplace_back(*cs);
        } else {
            st.posteriors.emplace_back(sc.kernels[a]->make_prior());
        }
    }
    if (sc.config.keep_history) st.arm_outcomes.assign(K, {});
    return st;
}

double info_increment(const Scenario& sc, const TrialState& st, int a) {
    double d;
    if (const auto* cs = std::get_if<ConjugateState>(&st.posteriors[a])) {
        // Closed form: sigma2_{t,a} / (n_{t,a} + 1)^2 with n_{t,a} = n0 + t*phat.
        const double denom = cs->n + 1.0;
        d = predictive_variance(*cs) / (denom * denom);
    } else {
        d = sc.kernels[a]->info_increment(std::get<GridPosterior>(st.posteriors[a]));
    }
    if (d < 0.0) {
        if (d < -1e-12) {
            throw std::runtime_error("info_increment: negative increment " + std::to_string(d) +
                                     " on arm " + std::to_string(a));
        }
        d = 0.0;
    }
    return d;
}

void refresh(const Scenario& sc, TrialState& st) {
    for (int a = 0; a < sc.K(); ++a) {
        if (st.delta_dirty[a]) {
            st.delta[a] = info_increment(sc, st, a);
            st.delta_dirty[a] = 0;
        }
    }
    st.p = randomization_probs(st.delta, sc.h());
}

double utility(const Scenario& sc, const TrialState& st) {
    KahanSum s;
    for (int a = 0; a < sc.K(); ++a) {
        if (const auto* cs = std::get_if<ConjugateState>(&st.posteriors[a])) {
            s.add(posterior_mean_variance(*cs).second);
        } else {
            s.add(std::get<GridPosterior>(st.posteriors[a]).moments().second);
        }
    }
    return -s.value();
}

void record_row(const Scenario& sc, TrialState& st, TrajectoryRecord& rec, int arm, double y) {
    rec.ts.push_back(st.t);
    rec.arm.push_back(arm);
    rec.y.push_back(y);
    rec.u.push_back(utility(sc, st));
    for (int a = 0; a < sc.K(); ++a) {
        rec.p.push_back(st.p[a]);
        rec.phat.push_back(st.phat(a));
        rec.delta.push_back(st.delta[a]);
        rec.ytilde.push_back(st.ytilde(a));
    }
}

std::pair<TrialState, TrajectoryRecord> run_trial(const Scenario& sc) {
    RngStream rng(sc.config.seed, 0);
    return run_trial(sc, rng);
}

void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& os) {
    os << "t,arm,y,u";
    for (int a = 1; a <= rec.K; ++a) os << ",p_" << a;
    for (int a = 1; a <= rec.K; ++a) os << ",phat_" << a;
    for (int a = 1; a <= rec.K; ++a) os << ",delta_" << a;
    for (int a = 1; a <= rec.K; ++a) os << ",ytilde_" << a;
    os << "\n";
    os.precision(17);
    for (std::size_t r = 0; r < rec.rows(); ++r) {
        if (rec.ts[r] == 0) continue;  // spec header starts at the first assignment
        os << rec.ts[r] << "," << rec.arm[r] << "," << rec.y[r] << "," << rec.u[r];
        const std::size_t base = r * rec.K;
        for (int a = 0; a < rec.K; ++a) os << "," << rec.p[base + a];
        for (int a = 0; a < rec.K; ++a) os << "," << rec.phat[base + a];
        for (int a = 0; a < rec.K; ++a) os << "," << rec.delta[base + a];
        for (int a = 0; a < rec.K; ++a) os << "," << rec.ytilde[base + a];
        os << "\n";
    }
}

}  // namespace bud
