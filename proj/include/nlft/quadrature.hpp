#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace nlft {

/// Integral value with an a-posteriori error estimate.
struct IntegralValue {
    double value = 0.0;
    double error_estimate = 0.0;
};

/// Sums in pairs so the result does not depend on chunking or thread count.
inline double pairwise_sum(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    std::vector<double> cur = v;
    while (cur.size() > 1) {
        std::vector<double> next((cur.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < cur.size(); i += 2) next[i / 2] = cur[i] + cur[i + 1];
        if (cur.size() % 2 == 1) next.back() = cur.back();
        cur.swap(next);
    }
    return cur[0];
}

// Composite Simpson built from trapezoid halving: T_{2n} reuses all previous
// evaluations, S = (4 T_{2n} - T_n)/3, and |S_{2n} - S_n|/15 is the usual
// Richardson error estimate.
template <class F>
IntegralValue simpson_adaptive(F&& f, double a, double b, double rel_tol, double abs_tol,
                               int n0 = 16, int max_doublings = 24) {
    if (!(b > a)) return {0.0, 0.0};
    if (n0 < 1) n0 = 1;

    auto trapezoid = [&](int n) {
        const double h = (b - a) / n;
        std::vector<double> terms(static_cast<std::size_t>(n) + 1);
        terms[0] = 0.5 * f(a);
        for (int k = 1; k < n; ++k) terms[static_cast<std::size_t>(k)] = f(a + k * h);
        terms[static_cast<std::size_t>(n)] = 0.5 * f(b);
        return h * pairwise_sum(terms);
    };

    int n = n0;
    double T = trapezoid(n);
    double S_prev = T;
    bool have_prev = false;
    double err = std::abs(T);
    for (int it = 0; it < max_doublings; ++it) {
        const double h = (b - a) / n;
        std::vector<double> mids(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) mids[static_cast<std::size_t>(k)] = f(a + (k + 0.5) * h);
        const double T2 = 0.5 * T + 0.5 * h * pairwise_sum(mids);
        const double S = (4.0 * T2 - T) / 3.0;
        if (have_prev) {
            err = std::abs(S - S_prev) / 15.0;
            if (err < std::max(abs_tol, rel_tol * std::abs(S))) return {S, err};
        }
        S_prev = S;
        have_prev = true;
        T = T2;
        n *= 2;
    }
    return {S_prev, err};
}

/// Complex-valued variant; the error estimate bounds both parts together.
template <class F>
std::pair<std::complex<double>, double> simpson_adaptive_complex(F&& f, double a, double b,
                                                                 double rel_tol, double abs_tol,
                                                                 int n0 = 16,
                                                                 int max_doublings = 24) {
    IntegralValue re = simpson_adaptive([&](double u) { return f(u).real(); }, a, b, rel_tol,
                                        abs_tol, n0, max_doublings);
    IntegralValue im = simpson_adaptive([&](double u) { return f(u).imag(); }, a, b, rel_tol,
                                        abs_tol, n0, max_doublings);
    return {{re.value, im.value}, std::hypot(re.error_estimate, im.error_estimate)};
}

}  // namespace nlft
