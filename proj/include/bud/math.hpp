#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace bud {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Neumaier-compensated accumulator. Sum order must stay fixed for
// bit-reproducible aggregation, so callers iterate in index order.
class KahanSum {
   public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

   private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double kahan_total(std::span<const double> xs) {
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

// Standard normal CDF.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2_v<double>); }

inline double norm_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779399461;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// Inverse standard normal CDF: Acklam's rational approximation followed by one
// Halley step against erfc, giving ~1e-15 absolute error on (0,1).
double norm_ppf(double p);

// Upper quantile z_{1-alpha}; alpha = 0 maps to +inf, alpha = 1 to -inf.
inline double z_upper(double alpha) { return norm_ppf(1.0 - alpha); }

struct QuadratureRule {
    std::vector<double> nodes;    // on (-1, 1)
    std::vector<double> weights;  // sum to 2
};

// Gauss-Legendre nodes/weights by Newton iteration on P_n.
const QuadratureRule& gauss_legendre(int n);

// Integrate f over (a, b) with an n-point Gauss-Legendre rule.
double gl_integrate(const std::function<double(double)>& f, double a, double b, int n);

struct AdaptiveResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int nodes_used = 0;
    bool converged = false;
};

// Doubles the node count (starting at n0) until successive estimates agree to
// abs_tol or rel_tol; throws with the achieved estimate if max_nodes is hit.
AdaptiveResult gl_integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                     double abs_tol, double rel_tol, int n0 = 128,
                                     int max_nodes = 8192);

// Golden-section maximizer on [a, b] to the given x-tolerance.
double golden_section_max(const std::function<double(double)>& f, double a, double b, double tol);

// Bisection root of f on [a, b], assuming a sign change. Tolerance on x.
double bisect_root(const std::function<double(double)>& f, double a, double b, double tol);

// Linear-interpolation sample quantile (R type 7). q in [0, 1].
double sample_quantile(std::vector<double> xs, double q);

struct MeanVar {
    double mean = kNaN;
    double var = kNaN;  // unbiased; NaN when n < 2
    std::size_t n = 0;
};

MeanVar mean_variance(std::span<const double> xs);

// Kolmogorov-Smirnov sup-distance between the empirical CDF of `samples` and
// N(mean, var).
double ks_statistic(std::vector<double> samples, double target_mean, double target_var);

}  // namespace bud
