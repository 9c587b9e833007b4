#pragma once

// Test-side oracles: independent reference computations kept away from the
// implementation paths they check.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

// adaptive Simpson quadrature
inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double tol,
                          int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// golden-section minimizer on [a, b]
inline double golden_min(const std::function<double(double)>& f, double a, double b,
                         double tol = 1e-10) {
    const double gr = 0.6180339887498949;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// one-sample chi-square statistic against expected probabilities
inline double chi2_vs_expected(const std::vector<uint64_t>& counts,
                               const std::vector<double>& probs) {
    if (counts.size() != probs.size()) throw std::invalid_argument("chi2 size mismatch");
    double n = 0.0;
    for (auto c : counts) n += double(c);
    double stat = 0.0;
    for (size_t k = 0; k < counts.size(); ++k) {
        double e = n * probs[k];
        if (e < 1e-12) continue;
        double d = double(counts[k]) - e;
        stat += d * d / e;
    }
    return stat;
}

// Kolmogorov-Smirnov critical value at alpha=0.01
inline double ks_critical_1pct(size_t n) { return 1.62762 / std::sqrt(double(n)); }

} // namespace oracle
