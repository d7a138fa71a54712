#pragma once

#include <array>

#include "bud/asymptotics.hpp"

namespace bud {

using Vec3 = std::array<double, 3>;

// W_t = [p_{t,1}, ytilde_{t,1}, ytilde_{t,0}].
struct SAState {
    double p1 = 0.5;
    double y1 = 0.0;
    double y0 = 0.0;
};

// One realized component of the noise vector G~_{t+1}; exactly one of the
// arm entries (G1, G0) is nonzero per draw.
struct SANoiseSample {
    double G = 0.0;
    double G1 = 0.0;
    double G0 = 0.0;
};

// Two-arm QVF truth frame: b'(psi_a) and sigma_a come from the truth models.
struct QvfPair {
    NefModel arm0;
    NefModel arm1;
    double h = 5.0;
};

// k_a(W) = 1 + (p_a/p_{1-a})^{1/(2h)} v(y_{1-a})/v(y_a).
double k_factor(const QvfPair& sc, const SAState& w, int a);

// Drift g~(w) = -E[G~_{t+1} | W_t = w], components (g, g1, g0).
Vec3 drift(const QvfPair& sc, const SAState& w);

SANoiseSample noise_sample(const QvfPair& sc, const SAState& w, int a_draw, double y_draw);

// dM~ = G~ + g~(w); zero conditional mean by construction.
Vec3 martingale_increment(const QvfPair& sc, const SANoiseSample& g, const SAState& w);

// Stationary point [rho1, b'(psi1), b'(psi0)] of the associated ODE.
SAState stationary_point(const QvfPair& sc);

// Central finite-difference Jacobian of the drift. Steps that exit the domain
// shrink and retry, erroring after five shrinks.
Mat3 jacobian_at(const QvfPair& sc, const SAState& w, double fd_step = 1e-5);

struct NoiseMoments {
    Vec3 mean{};
    Vec3 mean_se{};
    Mat3 cov{};
    Mat3 cov_se{};
    std::size_t draws = 0;
};

// Monte Carlo moments of G~ at fixed w: A ~ Bernoulli(p1), Y ~ truth[A].
// Chunked deterministically; results independent of thread count.
NoiseMoments noise_mc_moments(const QvfPair& sc, const SAState& w, std::size_t draws,
                              std::uint64_t seed, int threads = 0);

// Windowed one-step residuals along a realized engine path: the exact
// t*(W_{t+1}-W_t) minus the corresponding G~ component, scaled by t, with
// medians over dyadic windows [2^k, 2^{k+1}).
struct ResidualWindows {
    std::vector<int> k;               // window exponents
    std::vector<std::array<double, 3>> median_abs_t;  // median of |r|*t per component
    std::vector<std::int64_t> count;
    bool no_upward_trend(int k_min = 7, double factor = 2.0) const;
};

ResidualWindows residual_decay(const QvfPair& sc, const TrajectoryRecord& traj);

}  // namespace bud
