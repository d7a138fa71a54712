#pragma once

#include <map>
#include <string>

#include "bud/inference_power.hpp"

namespace bud {

struct CheckpointStats {
    std::int64_t t = 0;
    // Raw per-replicate values, replicate order.
    std::vector<double> p1, phat1;
    // Aggregates of p_{t,1} and phat_{t,1}.
    MeanVar p_mv, phat_mv;
    std::array<double, 3> p_quantiles{};     // 2.5%, 50%, 97.5%
    std::array<double, 3> phat_quantiles{};  // 2.5%, 50%, 97.5%
    // sqrt(t)(x - rho1), present when a limit allocation exists.
    std::vector<double> std_p, std_phat;
    MeanVar std_p_mv, std_phat_mv;
    double ks_p = kNaN;     // vs N(0, Gamma/(1+4h)) when available
    double ks_phat = kNaN;  // vs N(0, var_allocation) when available
};

struct FailedReplicate {
    std::int64_t replicate = -1;
    std::string reason;
};

struct ReplicationSummary {
    int R = 0;
    int effective_R = 0;
    AsymptoticSummary asym;
    std::vector<CheckpointStats> checkpoints;
    std::vector<double> final_z;  // per-replicate Wald statistic at t = n (NaN if unavailable)
    std::vector<FailedReplicate> failures;
};

// R independent trials from streams (seed, r); aggregation runs in replicate
// order regardless of the worker count, so summaries are schedule-invariant.
ReplicationSummary run_replications(const DesignConfig& config, int R,
                                    std::vector<std::int64_t> checkpoints, int threads = 0);

struct ErrorRatePoint {
    std::int64_t t = 0;
    double rate = kNaN;
    double se = kNaN;  // binomial
    int rejected = 0;
    int effective_R = 0;  // replicates with a usable statistic at this t
    int boundary = 0;     // boundary MLEs, counted as non-rejections
};

struct ErrorRateReport {
    std::vector<ErrorRatePoint> points;
    std::vector<FailedReplicate> failures;
};

// For each t in t_grid, the fraction of replicates with Z > z_{1-alpha}.
// alpha is taken raw so degenerate sanity values (alpha = 1) stay expressible;
// config-driven paths validate through TestSpec first.
ErrorRateReport error_rates(const DesignConfig& config, int R, std::vector<std::int64_t> t_grid,
                            double alpha, int threads = 0);

}  // namespace bud
