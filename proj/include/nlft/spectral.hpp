#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "nlft/parallel.hpp"
#include "nlft/quadrature.hpp"
#include "nlft/scattering.hpp"

namespace nlft {

/// Spectral density estimate w(s) = 1/|E(t,s)|^2 at horizon t_used.
struct SpectralWeight {
    double s = 0.0;
    double w = 1.0;
    double w_tilde = 1.0;
    double t_used = 0.0;
};

/// Box Q(s, C/t) = { z : |Re(s - z)| <= C/t, |Im z| <= C/t }.
struct Box {
    double s = 0.0;
    double half_width = 0.0;

    bool contains(cplx z) const {
        return std::abs(z.real() - s) <= half_width && std::abs(z.imag()) <= half_width;
    }
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    double domain_cutoff = 0.0;  // half-length S of [-S, S]
};

/// For t_w past the support, dE/dt = -izE preserves |E| on the real axis, so
/// the estimate is exactly stationary in t_w.
inline SpectralWeight estimate_w(const Potential& f, double s, double t_w,
                                 const PropagationOptions& opts = {}) {
    const ScatteringPair sp = hermite_biehler(f, t_w, s, false, opts);
    return {s, 1.0 / std::norm(sp.E), 1.0 / std::norm(sp.E_tilde), t_w};
}

/// Horizon used for w(s): the exact stationary value for compactly supported
/// potentials, a long default otherwise.
inline double weight_horizon(const Potential& f, double t, double noncompact_default = 200.0) {
    if (std::isfinite(f.support_end())) return std::max(t, f.support_end());
    return std::max(t, noncompact_default);
}

/// Drift diagnostic for non-compact potentials, where w(s) is a limit rather
/// than an exactly stationary value: |w(t_w) - w(t_w/2)|.
inline double weight_drift(const Potential& f, double s, double t_w,
                           const PropagationOptions& opts = {}) {
    return std::abs(estimate_w(f, s, t_w, opts).w - estimate_w(f, s, 0.5 * t_w, opts).w);
}

/// Reproducing kernel K(t, lambda, z) of B(E(t,.)), through the E-frame form
/// A(z)C(l) - C(z)A(l) = [E(z)E#(l) - E(l)E#(z)]/2i (conditioned off the real
/// axis).  The removable singularity at conj(lambda) = z goes through dW/dz.
inline cplx kernel_K(const Potential& f, double t, cplx lambda, cplx z,
                     const PropagationOptions& opts = {}) {
    static constexpr double kSingular = 1e-8;
    const cplx lbar = std::conj(lambda);
    const double pi = 3.14159265358979323846;
    const cplx two_i(0.0, 2.0);
    if (std::abs(lbar - z) < kSingular) {
        PropagationOptions dopts = opts;
        dopts.with_derivative = true;
        const Propagated p = propagate(f, t, z, dopts);
        // lim [E(z)E#(l) - E(l)E#(z)]/(l - z) = E E#' - E' E#
        return (p.W.E * p.dW.Es - p.dW.E * p.W.Es) / (two_i * pi);
    }
    const Propagated pz = propagate(f, t, z, opts);
    const Propagated pl = propagate(f, t, lbar, opts);
    return (pz.W.E * pl.W.Es - pl.W.E * pz.W.Es) / (two_i * pi * (lbar - z));
}

/// Sup over a box grid of the kernel-numerator discrepancy
/// [A(z)C(lbar) - C(z)A(lbar)] - sin(t(lbar - z))/w(s).
inline DiagnosticReport kernel_proximity(const Potential& f, double s, double C, double t,
                                         int grid_n, const PropagationOptions& opts = {},
                                         int threads = 1) {
    if (grid_n < 4) throw ConfigError("kernel_proximity: grid_n must be >= 4");
    const double hw = C / t;
    const SpectralWeight wgt = estimate_w(f, s, weight_horizon(f, t), opts);

    // Conjugation-symmetric grid: the Im levels include each value's negative,
    // so A and C at conj(lambda) are read off the same grid.
    std::vector<cplx> pts;
    pts.reserve(static_cast<std::size_t>(grid_n) * grid_n);
    for (int j = 0; j < grid_n; ++j)
        for (int k = 0; k < grid_n; ++k) {
            const double x = s - hw + 2.0 * hw * j / (grid_n - 1);
            const double y = -hw + 2.0 * hw * k / (grid_n - 1);
            pts.push_back({x, y});
        }
    auto conj_index = [&](std::size_t idx) {
        const std::size_t j = idx / grid_n, k = idx % grid_n;
        return j * grid_n + (static_cast<std::size_t>(grid_n) - 1 - k);
    };

    PropagationOptions dopts = opts;
    dopts.with_derivative = true;
    const auto mats = parallel_map<Propagated>(
        pts.size(), [&](std::size_t i) { return propagate(f, t, pts[i], dopts); }, threads);

    const double pi = 3.14159265358979323846;
    const cplx two_i(0.0, 2.0);
    double sup = 0.0, sup_kernel = 0.0;
    for (std::size_t il = 0; il < pts.size(); ++il) {
        const std::size_t ilbar = conj_index(il);
        const cplx lbar = pts[ilbar];
        const cplx El = mats[ilbar].W.E, Esl = mats[ilbar].W.Es;
        for (std::size_t iz = 0; iz < pts.size(); ++iz) {
            const cplx z = pts[iz];
            const cplx Ez = mats[iz].W.E, Esz = mats[iz].W.Es;
            // A(z)C(lbar) - C(z)A(lbar) in the conditioned E-frame form
            const cplx num = (Ez * Esl - El * Esz) / two_i;
            sup = std::max(sup, std::abs(num - std::sin(t * (lbar - z)) / wgt.w));
            // Kernel form (the o(t) statement): K - sinc/w, reported over t.
            cplx kdiff;
            if (std::abs(lbar - z) < 1e-8) {
                const cplx dnum =
                    (Ez * mats[iz].dW.Es - mats[iz].dW.E * Esz) / two_i;
                kdiff = dnum / pi - t / (pi * wgt.w);
            } else {
                kdiff = num / (pi * (lbar - z)) -
                        std::sin(t * (lbar - z)) / (pi * (lbar - z) * wgt.w);
            }
            sup_kernel = std::max(sup_kernel, std::abs(kdiff));
        }
    }

    DiagnosticReport rep("kernel proximity");
    rep.set("sup_discrepancy", sup);
    rep.set("sup_kernel_over_t", sup_kernel / t);
    rep.set("w", wgt.w);
    rep.set("t", t);
    if (!std::isfinite(f.support_end()))
        rep.set("w_drift", weight_drift(f, s, wgt.t_used, opts));
    return rep;
}

struct ParsevalOptions {
    double tail_tol = 1e-9;   // stop once the outermost dyadic panel adds less
    double s_max_cap = 1e6;   // TailNotConverged beyond this half-length
    double panel_abs_tol = 1e-10;
    double first_panel = 4.0;
    int threads = 1;
};

/// Non-linear Parseval residual: int_R log|a(t,s)| ds vs ||f||^2_{L2(0,t)}.
///
/// log|a| = log1p(|b|^2)/2 via |a|^2 = 1 + |b|^2 on the real axis, which keeps
/// precision near |a| = 1 and makes the integrand nonnegative pointwise.  The
/// integrand is even in s (a(t,-s) = conj a(t,s)), so only [0, S] is swept.
inline DiagnosticReport nonlinear_parseval_residual(const Potential& f, double t,
                                                    const ParsevalOptions& quad = {},
                                                    const PropagationOptions& opts = {}) {
    // The partition of [0, t] is independent of s; precompute (length, q)
    // pairs once so the integrand evaluation is allocation-free.
    std::vector<std::pair<double, double>> pieces;
    {
        const std::vector<double> nodes = propagation_nodes(f, 0.0, t, opts.step_budget);
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
            pieces.emplace_back(nodes[i + 1] - nodes[i],
                                interval_potential_value(f, nodes[i], nodes[i + 1],
                                                         opts.step_budget));
    }
    auto log_abs_a = [&pieces](double s) {
        Mat2d M;
        for (const auto& [h, q] : pieces) M = step_exact_real(q, h, s) * M;
        const double re_b = 0.5 * (M.a11 - M.a22);
        const double im_b = -0.5 * (M.a12 + M.a21);
        return 0.5 * std::log1p(re_b * re_b + im_b * im_b);
    };

    // Sampling density matched to the oscillation scale: |b| beats with
    // wavenumber ~ 2 * support length in s.  The adaptive doubling confirms.
    const double supp = std::isfinite(f.support_end()) ? std::min(f.support_end(), t) : t;
    const int ppu = std::max(4, static_cast<int>(std::ceil(3.0 * supp)));

    auto panel_value = [&](double a, double b) {
        const long want = std::lround(std::ceil((b - a) * ppu)) / 2;
        const int n0 = static_cast<int>(std::clamp(want, 16L, 4L * 1000L * 1000L));
        // Panels halve in value as S doubles; errors are summed in the report.
        IntegralValue iv;
        if (quad.threads > 1 && n0 >= 1024) {
            // Fixed sub-panel count: identical results for any thread count.
            const int parts = 16;
            std::vector<IntegralValue> sub = parallel_map<IntegralValue>(
                static_cast<std::size_t>(parts),
                [&](std::size_t i) {
                    const double u = a + (b - a) * static_cast<double>(i) / parts;
                    const double v = a + (b - a) * static_cast<double>(i + 1) / parts;
                    return simpson_adaptive(log_abs_a, u, v, 0.0, quad.panel_abs_tol / parts,
                                            std::max(16, n0 / parts));
                },
                quad.threads);
            std::vector<double> vals(sub.size()), errs(sub.size());
            for (std::size_t i = 0; i < sub.size(); ++i) {
                vals[i] = sub[i].value;
                errs[i] = sub[i].error_estimate;
            }
            iv = {pairwise_sum(vals), pairwise_sum(errs)};
        } else {
            iv = simpson_adaptive(log_abs_a, a, b, 0.0, quad.panel_abs_tol, n0);
        }
        return iv;
    };

    double S = std::max(quad.first_panel, 1.0);
    IntegralValue head = panel_value(0.0, S);
    double half_integral = head.value;
    double quad_err = head.error_estimate;
    double tail_contrib = std::numeric_limits<double>::infinity();
    while (true) {
        const IntegralValue p = panel_value(S, 2.0 * S);
        half_integral += p.value;
        quad_err += p.error_estimate;
        S *= 2.0;
        tail_contrib = 2.0 * p.value;  // both signs of s
        if (tail_contrib < quad.tail_tol) break;
        if (S > quad.s_max_cap)
            throw TailNotConverged("parseval tail: S = " + std::to_string(S) +
                                   " exceeded cap with panel contribution " +
                                   std::to_string(tail_contrib));
    }

    const IntegralValue l2 = f.l2_norm_sq(0.0, t);
    // Geometric extrapolation of the truncated tail: for a 1/s^2 envelope the
    // remaining mass roughly equals the last dyadic panel.
    const QuadratureResult qr{2.0 * half_integral, 2.0 * quad_err + tail_contrib, S};
    const double lhs = qr.value;
    // int_R log|a(t,s)| ds = (pi/2) ||f||^2_{L2(0,t)}.  The linearization
    // fixes the constant: b ~ int f(u) e^{2ius} du and int_R e^{2isw} ds =
    // pi delta(w), so int log|a| ~ int |b|^2/2 = (pi/2) ||f||^2; the exact
    // statement follows by differentiating both sides in t.  The identity is
    // often quoted without the normalization; that form is reported too.
    const double pi = 3.14159265358979323846;
    const double rhs = 0.5 * pi * l2.value;

    DiagnosticReport rep("nonlinear parseval");
    rep.set("lhs", lhs);
    rep.set("rhs", rhs);
    rep.set("l2_norm_sq", l2.value);
    rep.set("residual", std::abs(lhs - rhs));
    rep.set("unnormalized_residual", std::abs(lhs - l2.value));
    rep.set("quadrature_error", qr.error_estimate + 0.5 * pi * l2.error_estimate);
    rep.set("domain_cutoff", qr.domain_cutoff);
    rep.add_check("parseval_residual", lhs - rhs, 1e-6 * std::max(1.0, l2.value));
    return rep;
}

/// |b_{eps f}(T,s) - eps * int_0^T f(u) e^{2ius} du| for each eps, plus the
/// log-log slope (the linear term of the NLFT is the Fourier transform).
inline DiagnosticReport linearization_error(const Potential& f, double T, double s,
                                            const std::vector<double>& eps_list,
                                            const PropagationOptions& opts = {}) {
    // Fourier term, exact for piecewise-constant kinds.
    cplx fourier;
    if (!f.is_smooth()) {
        std::vector<double> nodes = f.breakpoints(0.0, T);
        nodes.insert(nodes.begin(), 0.0);
        nodes.push_back(std::min(T, f.support_end()));
        cplx acc = 0.0;
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            const double u0 = nodes[i], u1 = nodes[i + 1];
            if (!(u1 > u0)) continue;
            const double q = f.evaluate(0.5 * (u0 + u1));
            if (s == 0.0) {
                acc += q * (u1 - u0);
            } else {
                const cplx tis(0.0, 2.0 * s);
                acc += q * (std::exp(tis * u1) - std::exp(tis * u0)) / tis;
            }
        }
        fourier = acc;
    } else {
        fourier = simpson_adaptive_complex(
                      [&](double u) { return f.evaluate(u) * std::exp(cplx(0.0, 2.0 * s * u)); },
                      0.0, std::min(T, f.support_end()), 1e-12, 1e-14, 64)
                      .first;
    }

    DiagnosticReport rep("linearization error");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        const double eps = eps_list[i];
        double err = 0.0;
        if (eps != 0.0) {
            const ABPair ab = ab_coefficients(f.scaled(eps), T, s, opts);
            err = std::abs(ab.b - eps * fourier);
        }
        rep.set("err_" + std::to_string(i), err);
        if (eps > 0.0 && err > 0.0) {
            lx.push_back(std::log(eps));
            ly.push_back(std::log(err));
        }
    }
    double slope = 0.0;
    if (lx.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) { mx += lx[i]; my += ly[i]; }
        mx /= lx.size(); my /= ly.size();
        double num = 0, den = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            num += (lx[i] - mx) * (ly[i] - my);
            den += (lx[i] - mx) * (lx[i] - mx);
        }
        slope = num / den;
    }
    rep.set("slope", slope);
    rep.set("fourier_re", fourier.real());
    rep.set("fourier_im", fourier.imag());
    return rep;
}

}  // namespace nlft
