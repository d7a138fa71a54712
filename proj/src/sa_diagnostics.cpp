#include "bud/sa_diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace bud {

namespace {

double qvf_sd(const NefModel& m, double ymean) {
    const double v2 = m.qvf().at(ymean);
    if (!(v2 > 0.0)) throw std::domain_error("v(ytilde): nonpositive variance at ytilde");
    return std::sqrt(v2);
}

void check_state(const QvfPair& sc, const SAState& w) {
    if (!(w.p1 > 0.0 && w.p1 < 1.0)) {
        throw std::domain_error("SA state: p1 must lie strictly inside (0, 1)");
    }
    if (!sc.arm1.mean_interior(w.y1) || !sc.arm0.mean_interior(w.y0)) {
        throw std::domain_error("SA state: ytilde outside the family mean space");
    }
    if (!(sc.h > 0.0)) throw std::domain_error("SA diagnostics need h > 0");
}

}  // namespace

double k_factor(const QvfPair& sc, const SAState& w, int a) {
    check_state(sc, w);
    const double pa = (a == 1) ? w.p1 : 1.0 - w.p1;
    const double pb = 1.0 - pa;
    const double va = (a == 1) ? qvf_sd(sc.arm1, w.y1) : qvf_sd(sc.arm0, w.y0);
    const double vb = (a == 1) ? qvf_sd(sc.arm0, w.y0) : qvf_sd(sc.arm1, w.y1);
    return 1.0 + std::pow(pa / pb, 1.0 / (2.0 * sc.h)) * vb / va;
}

Vec3 drift(const QvfPair& sc, const SAState& w) {
    check_state(sc, w);
    const double h = sc.h;
    const double p = w.p1;
    const double k1 = k_factor(sc, w, 1);
    const double k0 = k_factor(sc, w, 0);
    const Qvf q1 = sc.arm1.qvf();
    const Qvf q0 = sc.arm0.qvf();
    const double v1sq = q1.at(w.y1);
    const double v0sq = q0.at(w.y0);
    // m_a = (v1 + 2 v2 ytilde_a)(b'(psi_a) - ytilde_a) / v(ytilde_a)^2
    const double m1 = (q1.v1 + 2.0 * q1.v2 * w.y1) * (sc.arm1.mean() - w.y1) / v1sq;
    const double m0 = (q0.v1 + 2.0 * q0.v2 * w.y0) * (sc.arm0.mean() - w.y0) / v0sq;

    Vec3 g{};
    g[0] = -h * p * (1.0 - p) * (p * k1 * (m1 - 2.0) + (1.0 - p) * k0 * (2.0 - m0));
    g[1] = -p * (sc.arm1.mean() - w.y1) * k1;
    g[2] = -(1.0 - p) * (sc.arm0.mean() - w.y0) * k0;
    return g;
}

SANoiseSample noise_sample(const QvfPair& sc, const SAState& w, int a_draw, double y_draw) {
    check_state(sc, w);
    if (a_draw != 0 && a_draw != 1) throw std::invalid_argument("noise_sample: arm must be 0 or 1");
    const auto& arm = (a_draw == 1) ? sc.arm1 : sc.arm0;
    if (!arm.in_support(y_draw)) throw std::invalid_argument("noise_sample: outcome outside support");

    const double h = sc.h;
    const double p = w.p1;
    const double k1 = k_factor(sc, w, 1);
    const double k0 = k_factor(sc, w, 0);
    const Qvf q1 = sc.arm1.qvf();
    const Qvf q0 = sc.arm0.qvf();

    SANoiseSample out;
    if (a_draw == 1) {
        const double m1y = (q1.v1 + 2.0 * q1.v2 * w.y1) * (y_draw - w.y1) / q1.at(w.y1);
        out.G = h * p * (1.0 - p) * (m1y - 2.0) * k1;
        out.G1 = (y_draw - w.y1) * k1;
    } else {
        const double m0y = (q0.v1 + 2.0 * q0.v2 * w.y0) * (y_draw - w.y0) / q0.at(w.y0);
        out.G = h * p * (1.0 - p) * (2.0 - m0y) * k0;
        out.G0 = (y_draw - w.y0) * k0;
    }
    return out;
}

Vec3 martingale_increment(const QvfPair& sc, const SANoiseSample& g, const SAState& w) {
    const Vec3 d = drift(sc, w);
    return {g.G + d[0], g.G1 + d[1], g.G0 + d[2]};
}

SAState stationary_point(const QvfPair& sc) {
    const auto rho = nef_limit_allocation(std::array{sc.arm0.true_sd(), sc.arm1.true_sd()}, sc.h);
    return {rho[1], sc.arm1.mean(), sc.arm0.mean()};
}

namespace {

bool state_valid(const QvfPair& sc, const SAState& w) {
    if (!(w.p1 > 0.0 && w.p1 < 1.0)) return false;
    if (!sc.arm1.mean_interior(w.y1) || !sc.arm0.mean_interior(w.y0)) return false;
    return true;
}

}  // namespace

Mat3 jacobian_at(const QvfPair& sc, const SAState& w, double fd_step) {
    if (!(fd_step >= 1e-7 && fd_step <= 1e-3)) {
        throw std::invalid_argument("jacobian_at: fd_step must lie in [1e-7, 1e-3]");
    }
    check_state(sc, w);
    Mat3 J{};
    for (int j = 0; j < 3; ++j) {
        double step = fd_step;
        int attempt = 0;
        for (;; ++attempt) {
            if (attempt >= 5) {
                throw std::runtime_error("jacobian_at: could not find an in-domain step");
            }
            SAState wp = w, wm = w;
            double* fields[3] = {&wp.p1, &wp.y1, &wp.y0};
            double* fieldsm[3] = {&wm.p1, &wm.y1, &wm.y0};
            *fields[j] += step;
            *fieldsm[j] -= step;
            if (!state_valid(sc, wp) || !state_valid(sc, wm)) {
                step *= 0.5;
                continue;
            }
            const Vec3 fp = drift(sc, wp);
            const Vec3 fm = drift(sc, wm);
            for (int i = 0; i < 3; ++i) J[i][j] = (fp[i] - fm[i]) / (2.0 * step);
            break;
        }
    }
    return J;
}

NoiseMoments noise_mc_moments(const QvfPair& sc, const SAState& w, std::size_t draws,
                              std::uint64_t seed, int threads) {
    check_state(sc, w);
    if (draws < 2) throw std::invalid_argument("noise_mc_moments: need at least 2 draws");

    constexpr std::size_t kChunk = 1 << 16;
    const std::size_t n_chunks = (draws + kChunk - 1) / kChunk;

    // Per-chunk raw moment accumulators, reduced in fixed chunk order so the
    // result is independent of the thread schedule.
    struct ChunkMoments {
        std::array<double, 3> s1{};
        std::array<std::array<double, 3>, 3> s2{};
        std::array<std::array<double, 3>, 3> s22{};  // sum of (x_i x_j)^2
        std::array<std::array<double, 3>, 3> s21{};  // sum of x_i^2 x_j
        std::array<double, 3> sq{};                  // sum of x_i^2 (for mean SEs)
        std::size_t n = 0;
    };
    std::vector<ChunkMoments> chunks(n_chunks);

    auto run_chunk = [&](std::size_t c) {
        RngStream rng(seed, c);
        ChunkMoments& cm = chunks[c];
        const std::size_t lo = c * kChunk;
        const std::size_t hi = std::min(draws, lo + kChunk);
        for (std::size_t i = lo; i < hi; ++i) {
            const double u = rng.uniform();
            const int a = (u < w.p1) ? 1 : 0;
            const double y = (a == 1) ? sc.arm1.sample(rng) : sc.arm0.sample(rng);
            const SANoiseSample s = noise_sample(sc, w, a, y);
            const std::array<double, 3> x{s.G, s.G1, s.G0};
            for (int j = 0; j < 3; ++j) {
                cm.s1[j] += x[j];
                cm.sq[j] += x[j] * x[j];
                for (int k = 0; k < 3; ++k) {
                    const double prod = x[j] * x[k];
                    cm.s2[j][k] += prod;
                    cm.s22[j][k] += prod * prod;
                    cm.s21[j][k] += x[j] * x[j] * x[k];
                }
            }
            ++cm.n;
        }
    };

    int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    nthreads = std::max(1, std::min<int>(nthreads, static_cast<int>(n_chunks)));
    if (nthreads == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (int tix = 0; tix < nthreads; ++tix) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t c = next.fetch_add(1);
                    if (c >= n_chunks) return;
                    run_chunk(c);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    ChunkMoments total;
    for (const auto& cm : chunks) {
        total.n += cm.n;
        for (int j = 0; j < 3; ++j) {
            total.s1[j] += cm.s1[j];
            total.sq[j] += cm.sq[j];
            for (int k = 0; k < 3; ++k) {
                total.s2[j][k] += cm.s2[j][k];
                total.s22[j][k] += cm.s22[j][k];
                total.s21[j][k] += cm.s21[j][k];
            }
        }
    }

    NoiseMoments out;
    out.draws = total.n;
    const double N = static_cast<double>(total.n);
    for (int j = 0; j < 3; ++j) {
        out.mean[j] = total.s1[j] / N;
        const double var_j = std::max(0.0, total.sq[j] / N - out.mean[j] * out.mean[j]);
        out.mean_se[j] = std::sqrt(var_j / N);
    }
    for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
            const double a = out.mean[j], b = out.mean[k];
            const double m11 = total.s2[j][k] / N;
            const double cov = m11 - a * b;
            out.cov[j][k] = cov;
            // Var of the sample covariance: E[(x-a)^2 (y-b)^2] - cov^2,
            // expanded in raw moments so one accumulation pass suffices.
            const double m22 = total.s22[j][k] / N;
            const double m21 = total.s21[j][k] / N;  // E[x^2 y]
            const double m12 = total.s21[k][j] / N;  // E[x y^2]
            const double m20 = total.sq[j] / N;
            const double m02 = total.sq[k] / N;
            const double mu22 = m22 - 2.0 * b * m21 - 2.0 * a * m12 + b * b * m20 + a * a * m02 +
                                4.0 * a * b * m11 - 3.0 * a * a * b * b;
            out.cov_se[j][k] = std::sqrt(std::max(mu22 - cov * cov, 0.0) / N);
        }
    }
    return out;
}

bool ResidualWindows::no_upward_trend(int k_min, double factor) const {
    for (std::size_t i = 0; i + 1 < k.size(); ++i) {
        if (k[i] < k_min) continue;
        for (int c = 0; c < 3; ++c) {
            const double cur = median_abs_t[i][c];
            const double nxt = median_abs_t[i + 1][c];
            if (nxt > factor * cur + 1e-12) return false;
        }
    }
    return true;
}

ResidualWindows residual_decay(const QvfPair& sc, const TrajectoryRecord& traj) {
    if (traj.K != 2) throw std::invalid_argument("residual_decay: need a two-arm trajectory");
    if (traj.rows() < 4) throw std::invalid_argument("residual_decay: trajectory too short");
    for (std::size_t r = 1; r < traj.rows(); ++r) {
        if (traj.ts[r] != traj.ts[r - 1] + 1) {
            throw std::invalid_argument("residual_decay: trajectory must be recorded at every t");
        }
    }

    // Residual at step t (t >= 1): r_{t+1} = t (W_{t+1} - W_t) - G~_{t+1}.
    std::vector<std::array<double, 3>> scaled;  // |r| * t
    std::vector<std::int64_t> tvals;
    for (std::size_t r = 0; r + 1 < traj.rows(); ++r) {
        const std::int64_t t = traj.ts[r];
        if (t < 1) continue;
        const std::size_t b0 = r * traj.K;
        const std::size_t b1 = (r + 1) * traj.K;
        const SAState w{traj.p[b0 + 1], traj.ytilde[b0 + 1], traj.ytilde[b0 + 0]};
        const int a_next = traj.arm[r + 1];
        const double y_next = traj.y[r + 1];
        const SANoiseSample g = noise_sample(sc, w, a_next, y_next);
        const double td = static_cast<double>(t);
        const std::array<double, 3> resid{
            td * (traj.p[b1 + 1] - traj.p[b0 + 1]) - g.G,
            td * (traj.ytilde[b1 + 1] - traj.ytilde[b0 + 1]) - g.G1,
            td * (traj.ytilde[b1 + 0] - traj.ytilde[b0 + 0]) - g.G0,
        };
        for (double x : resid) {
            if (!std::isfinite(x)) throw std::runtime_error("residual_decay: non-finite residual");
        }
        scaled.push_back({std::abs(resid[0]) * td, std::abs(resid[1]) * td, std::abs(resid[2]) * td});
        tvals.push_back(t);
    }

    ResidualWindows out;
    if (scaled.empty()) return out;
    const std::int64_t t_max = tvals.back();
    for (int k = 0; (std::int64_t(1) << k) <= t_max; ++k) {
        const std::int64_t lo = std::int64_t(1) << k;
        const std::int64_t hi = std::int64_t(1) << (k + 1);
        std::array<std::vector<double>, 3> window;
        for (std::size_t i = 0; i < tvals.size(); ++i) {
            if (tvals[i] >= lo && tvals[i] < hi) {
                for (int c = 0; c < 3; ++c) window[c].push_back(scaled[i][c]);
            }
        }
        if (window[0].empty()) continue;
        std::array<double, 3> med{};
        for (int c = 0; c < 3; ++c) med[c] = sample_quantile(window[c], 0.5);
        out.k.push_back(k);
        out.median_abs_t.push_back(med);
        out.count.push_back(static_cast<std::int64_t>(window[0].size()));
    }
    return out;
}

}  // namespace bud
