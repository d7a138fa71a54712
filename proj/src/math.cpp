#include "bud/math.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numbers>

namespace bud {

double norm_ppf(double p) {
    if (std::isnan(p) || p < 0.0 || p > 1.0) {
        throw std::domain_error("norm_ppf: p must lie in [0, 1]");
    }
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;

    // Acklam (2003) coefficients.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley refinement drives the error to ~1e-15.
    double e = norm_cdf(x) - p;
    double u = e / norm_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

namespace {

QuadratureRule compute_gauss_legendre(int n) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-like initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

double gl_integrate(const std::function<double(double)>& f, double a, double b, int n) {
    const QuadratureRule& rule = gauss_legendre(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    KahanSum s;
    for (int i = 0; i < n; ++i) {
        s.add(rule.weights[i] * f(mid + half * rule.nodes[i]));
    }
    return half * s.value();
}

AdaptiveResult gl_integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                     double abs_tol, double rel_tol, int n0, int max_nodes) {
    AdaptiveResult res;
    double prev = gl_integrate(f, a, b, n0);
    for (int n = 2 * n0; n <= max_nodes; n *= 2) {
        double cur = gl_integrate(f, a, b, n);
        res.value = cur;
        res.error_estimate = std::abs(cur - prev);
        res.nodes_used = n;
        if (res.error_estimate <= abs_tol + rel_tol * std::abs(cur)) {
            res.converged = true;
            return res;
        }
        prev = cur;
    }
    return res;
}

double golden_section_max(const std::function<double(double)>& f, double a, double b, double tol) {
    const double invphi = 0.6180339887498948482;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

double bisect_root(const std::function<double(double)>& f, double a, double b, double tol) {
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) {
        throw std::invalid_argument("bisect_root: no sign change on [a, b]");
    }
    while (b - a > tol) {
        double m = 0.5 * (a + b);
        double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm > 0.0) == (fa > 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

double sample_quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw std::invalid_argument("sample_quantile: empty sample");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("sample_quantile: q outside [0, 1]");
    std::sort(xs.begin(), xs.end());
    double pos = q * (static_cast<double>(xs.size()) - 1.0);
    auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= xs.size()) return xs.back();
    double frac = pos - static_cast<double>(lo);
    return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

MeanVar mean_variance(std::span<const double> xs) {
    MeanVar mv;
    mv.n = xs.size();
    if (mv.n == 0) return mv;
    KahanSum s;
    for (double x : xs) s.add(x);
    mv.mean = s.value() / static_cast<double>(mv.n);
    if (mv.n < 2) return mv;
    KahanSum ss;
    for (double x : xs) {
        double d = x - mv.mean;
        ss.add(d * d);
    }
    mv.var = ss.value() / static_cast<double>(mv.n - 1);
    return mv;
}

double ks_statistic(std::vector<double> samples, double target_mean, double target_var) {
    if (samples.size() < 1) throw std::invalid_argument("ks_statistic: empty sample");
    if (!(target_var > 0.0)) throw std::invalid_argument("ks_statistic: target variance must be > 0");
    std::sort(samples.begin(), samples.end());
    const double sd = std::sqrt(target_var);
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double F = norm_cdf((samples[i] - target_mean) / sd);
        d = std::max(d, std::abs(F - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - F));
    }
    return d;
}

}  // namespace bud
