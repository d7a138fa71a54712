#include "bud/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace bud {

namespace {

void sort_unique(std::vector<std::int64_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

template <class PerReplicate>
void parallel_replicates(int R, int threads, PerReplicate&& body) {
    int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    nthreads = std::max(1, std::min(nthreads, R));
    if (nthreads == 1) {
        for (int r = 0; r < R; ++r) body(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) {
        pool.emplace_back([&] {
            for (;;) {
                const int r = next.fetch_add(1);
                if (r >= R) return;
                body(r);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

ReplicationSummary run_replications(const DesignConfig& config, int R,
                                    std::vector<std::int64_t> checkpoints, int threads) {
    if (R < 1) throw std::invalid_argument("run_replications: need R >= 1");
    sort_unique(checkpoints);
    for (std::int64_t t : checkpoints) {
        if (t < 1 || t > config.n) {
            throw std::invalid_argument("checkpoints must lie in [1, n]; got " + std::to_string(t));
        }
    }
    const Scenario sc(config);

    ReplicationSummary out;
    out.R = R;
    out.asym = summarize(config);

    const std::size_t C = checkpoints.size();
    std::vector<std::vector<double>> p1(C, std::vector<double>(R, kNaN));
    std::vector<std::vector<double>> phat1(C, std::vector<double>(R, kNaN));
    std::vector<double> zfinal(R, kNaN);
    std::vector<std::string> errors(R);

    parallel_replicates(R, threads, [&](int r) {
        try {
            RngStream rng(config.seed, static_cast<std::uint64_t>(r));
            TrialState st = initial_state(sc);
            std::size_t next_cp = 0;
            for (std::int64_t t = 0; t < config.n; ++t) {
                step(sc, st, rng);
                if (next_cp < C && st.t == checkpoints[next_cp]) {
                    refresh(sc, st);
                    p1[next_cp][r] = st.p[1];
                    phat1[next_cp][r] = st.phat(1);
                    ++next_cp;
                }
            }
            refresh(sc, st);
            if (config.K == 2) {
                try {
                    zfinal[r] = wald_statistic(sc, st);
                } catch (const BoundaryError&) {
                    zfinal[r] = kNaN;  // boundary: caller treats as non-rejection
                } catch (const InsufficientDataError&) {
                    zfinal[r] = kNaN;
                }
            }
        } catch (const std::exception& e) {
            errors[r] = e.what();
        }
    });

    for (int r = 0; r < R; ++r) {
        if (!errors[r].empty()) out.failures.push_back({r, errors[r]});
    }
    out.effective_R = R - static_cast<int>(out.failures.size());
    out.final_z = std::move(zfinal);

    const bool have_rho = out.asym.rho.size() >= 2;
    const double rho1 = have_rho ? out.asym.rho[1] : kNaN;

    for (std::size_t c = 0; c < C; ++c) {
        CheckpointStats cs;
        cs.t = checkpoints[c];
        for (int r = 0; r < R; ++r) {
            if (!errors[r].empty()) continue;
            cs.p1.push_back(p1[c][r]);
            cs.phat1.push_back(phat1[c][r]);
        }
        cs.p_mv = mean_variance(cs.p1);
        cs.phat_mv = mean_variance(cs.phat1);
        if (!cs.p1.empty()) {
            for (int qi = 0; qi < 3; ++qi) {
                const double q = qi == 0 ? 0.025 : (qi == 1 ? 0.5 : 0.975);
                cs.p_quantiles[qi] = sample_quantile(cs.p1, q);
                cs.phat_quantiles[qi] = sample_quantile(cs.phat1, q);
            }
        }
        if (have_rho) {
            const double rt = std::sqrt(static_cast<double>(cs.t));
            for (double x : cs.p1) cs.std_p.push_back(rt * (x - rho1));
            for (double x : cs.phat1) cs.std_phat.push_back(rt * (x - rho1));
            cs.std_p_mv = mean_variance(cs.std_p);
            cs.std_phat_mv = mean_variance(cs.std_phat);
            if (cs.std_p.size() >= 50 && out.asym.var_randprob && *out.asym.var_randprob > 0.0) {
                cs.ks_p = ks_statistic(cs.std_p, 0.0, *out.asym.var_randprob);
            }
            if (cs.std_phat.size() >= 50 && out.asym.var_allocation &&
                *out.asym.var_allocation > 0.0) {
                cs.ks_phat = ks_statistic(cs.std_phat, 0.0, *out.asym.var_allocation);
            }
        }
        out.checkpoints.push_back(std::move(cs));
    }
    return out;
}

ErrorRateReport error_rates(const DesignConfig& config, int R, std::vector<std::int64_t> t_grid,
                            double alpha, int threads) {
    if (config.K != 2) throw std::invalid_argument("error_rates: two-arm designs only");
    if (R < 1) throw std::invalid_argument("error_rates: need R >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("error_rates: alpha in (0, 1]");
    sort_unique(t_grid);
    if (t_grid.empty()) throw std::invalid_argument("error_rates: empty t grid");
    for (std::int64_t t : t_grid) {
        if (t < 1 || t > config.n) {
            throw std::invalid_argument("error_rates: t values must lie in [1, n]");
        }
    }
    const Scenario sc(config);
    const double z_crit = z_upper(alpha);
    const std::size_t C = t_grid.size();

    // 0 = reject, 1 = accept, 2 = boundary (non-rejection), 3 = unusable
    std::vector<std::vector<char>> verdict(C, std::vector<char>(R, 3));
    std::vector<std::string> errors(R);

    parallel_replicates(R, threads, [&](int r) {
        try {
            RngStream rng(config.seed, static_cast<std::uint64_t>(r));
            TrialState st = initial_state(sc);
            std::size_t next_cp = 0;
            for (std::int64_t t = 0; t < t_grid.back(); ++t) {
                step(sc, st, rng);
                if (next_cp < C && st.t == t_grid[next_cp]) {
                    try {
                        const double z = wald_statistic(sc, st);
                        verdict[next_cp][r] = (z > z_crit) ? 0 : 1;
                    } catch (const BoundaryError&) {
                        verdict[next_cp][r] = 2;
                    } catch (const InsufficientDataError&) {
                        verdict[next_cp][r] = 2;
                    }
                    ++next_cp;
                }
            }
        } catch (const std::exception& e) {
            errors[r] = e.what();
        }
    });

    ErrorRateReport out;
    for (int r = 0; r < R; ++r) {
        if (!errors[r].empty()) out.failures.push_back({r, errors[r]});
    }
    for (std::size_t c = 0; c < C; ++c) {
        ErrorRatePoint pt;
        pt.t = t_grid[c];
        for (int r = 0; r < R; ++r) {
            switch (verdict[c][r]) {
                case 0: ++pt.rejected; ++pt.effective_R; break;
                case 1: ++pt.effective_R; break;
                case 2: ++pt.boundary; ++pt.effective_R; break;
                default: break;
            }
        }
        if (pt.effective_R > 0) {
            pt.rate = static_cast<double>(pt.rejected) / static_cast<double>(pt.effective_R);
            pt.se = std::sqrt(std::max(pt.rate * (1.0 - pt.rate), 1e-12) /
                              static_cast<double>(pt.effective_R));
        }
        out.points.push_back(pt);
    }
    return out;
}

}  // namespace bud
