#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "nlft/zeros.hpp"

namespace nlft {

/// f_T^dagger(s) sampled over an ascending T grid, with suffix Cauchy moduli.
struct ConvergenceScan {
    double s = 0.0;
    std::vector<double> T_grid;
    std::vector<cplx> values;
    std::vector<double> cauchy_moduli;  // nonincreasing by construction
};

inline ConvergenceScan convergence_scan(const Potential& f, double s,
                                        const std::vector<double>& T_grid,
                                        const PropagationOptions& opts = {}) {
    ConvergenceScan scan;
    scan.s = s;
    scan.T_grid = T_grid;
    for (double T : T_grid) scan.values.push_back(nlft_partial(f, T, s, opts));
    scan.cauchy_moduli.resize(T_grid.size(), 0.0);
    for (std::size_t k = 0; k < T_grid.size(); ++k) {
        double m = 0.0;
        for (std::size_t i = k; i < T_grid.size(); ++i)
            for (std::size_t j = i + 1; j < T_grid.size(); ++j)
                m = std::max(m, std::abs(scan.values[i] - scan.values[j]));
        scan.cauchy_moduli[k] = m;
    }
    return scan;
}

/// One sample of the scattering flow u -> (a(u,s), b(u,s)) with the
/// continuously tracked branch of arg a (arg a(0,s) = 0).
struct FlowSample {
    double u = 0.0;
    cplx a{1.0};
    cplx b{0.0};
    double arg_a = 0.0;
    double q = 0.0;  // potential value on the piece this sample closes
};

namespace detail {

inline void ab_from_mat(const Mat2& M, double t, double s, cplx& a, cplx& b) {
    const cplx i(0.0, 1.0);
    const cplx E = M.a11 - i * M.a21;
    const cplx Et = M.a12 - i * M.a22;
    const cplx phase = std::exp(i * t * s);
    a = 0.5 * phase * (E + i * Et);
    b = 0.5 * phase * (E - i * Et);
}

}  // namespace detail

/// Walks [0, t] on the propagation partition refined to spacing <= max_du,
/// with per-piece even sample counts (ready for composite Simpson).  Branch
/// tracking requires every phase step of a to stay below pi/2; violations
/// rerun at half the spacing.
inline std::vector<FlowSample> scattering_flow(const Potential& f, double t, double s,
                                               double max_du,
                                               const PropagationOptions& opts = {}) {
    for (int attempt = 0; attempt < 8; ++attempt) {
        const std::vector<double> nodes = propagation_nodes(f, 0.0, t, opts.step_budget);
        std::vector<FlowSample> flow;
        flow.push_back({0.0, 1.0, 0.0, 0.0, 0.0});
        Mat2 M = Mat2::identity();
        bool ok = true;
        for (std::size_t i = 0; i + 1 < nodes.size() && ok; ++i) {
            const double u0 = nodes[i], u1 = nodes[i + 1];
            const double q = interval_potential_value(f, u0, u1, opts.step_budget);
            const long half = std::lround(std::ceil((u1 - u0) / max_du / 2.0));
            const int n = 2 * static_cast<int>(std::max(1L, half));
            const double h = (u1 - u0) / n;
            const Mat2 P = step_exact(q, h, s, opts.small_omega_threshold);
            for (int k = 1; k <= n; ++k) {
                M = P * M;
                FlowSample smp;
                smp.u = (k == n) ? u1 : u0 + k * h;
                smp.q = q;
                detail::ab_from_mat(M, smp.u, s, smp.a, smp.b);
                const double dphi = std::arg(smp.a / flow.back().a);
                if (std::abs(dphi) >= 1.5707963267948966) {
                    ok = false;
                    break;
                }
                smp.arg_a = flow.back().arg_a + dphi;
                flow.push_back(smp);
            }
        }
        if (ok) return flow;
        max_du *= 0.5;
    }
    throw Error("scattering_flow: arg a branch tracking failed to refine");
}

namespace detail {

// Composite Simpson of g over the flow, piece by piece (g may jump with f).
template <class G>
cplx flow_simpson(const std::vector<FlowSample>& flow, G&& g) {
    cplx total = 0.0;
    std::size_t i = 0;
    while (i + 1 < flow.size()) {
        // A piece is a run with constant q and uniform spacing.
        std::size_t j = i;
        const double q = flow[i + 1].q;
        const double h = flow[i + 1].u - flow[i].u;
        while (j + 1 < flow.size() && flow[j + 1].q == q &&
               std::abs((flow[j + 1].u - flow[j].u) - h) < 1e-12 * std::max(1.0, h))
            ++j;
        const std::size_t n = j - i;  // even by construction
        cplx acc = g(flow[i], q) + g(flow[j], q);
        for (std::size_t k = 1; k < n; ++k)
            acc += g(flow[i + k], q) * ((k % 2 == 1) ? 4.0 : 2.0);
        total += acc * (h / 3.0);
        i = j;
    }
    return total;
}

}  // namespace detail

struct LogAIdentity {
    cplx log_a{};       // log|a(t,s)| + i arg a(t,s), tracked branch
    cplx integral{};    // int_0^t f (conj b / a) e^{2ius} du
    double residual = 0.0;
    double alt_form_residual = 0.0;  // variant |a|-1-i arg a vs 8 int f (b/conj a) e^{-2ius}
    double quad_error = 0.0;
};

/// Exact integral form of log a, from a' = f e^{2its} conj(b):
/// log a(t,s) = int_0^t f(u) (conj b(u,s)/a(u,s)) e^{2ius} du.  A commonly
/// quoted variant (factor 8, |a|-1 in place of log|a|) is evaluated alongside
/// for the record; its residual does not vanish.
inline LogAIdentity log_a_identity_residual(const Potential& f, double t, double s,
                                            const PropagationOptions& opts = {},
                                            double tol = 1e-9) {
    auto integrand = [&](const FlowSample& smp, double q) {
        return q * (std::conj(smp.b) / smp.a) * std::exp(cplx(0.0, 2.0 * s) * smp.u);
    };

    double du = std::min(0.25, 1.0 / (8.0 * (1.0 + std::abs(s))));
    std::vector<FlowSample> flow = scattering_flow(f, t, s, du, opts);
    cplx I = detail::flow_simpson(flow, integrand);
    double err = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 12 && err > tol; ++it) {
        du *= 0.5;
        std::vector<FlowSample> fine = scattering_flow(f, t, s, du, opts);
        const cplx I2 = detail::flow_simpson(fine, integrand);
        err = std::abs(I2 - I) / 15.0;
        I = I2;
        flow = std::move(fine);
    }

    const FlowSample& last = flow.back();
    LogAIdentity out;
    out.log_a = {std::log(std::abs(last.a)), last.arg_a};
    out.integral = I;
    out.residual = std::abs(out.log_a - I);
    const cplx alt_lhs = cplx(std::abs(last.a) - 1.0, -last.arg_a);
    out.alt_form_residual = std::abs(alt_lhs - 8.0 * std::conj(I));
    out.quad_error = err;
    return out;
}

struct ScatteringOdeResiduals {
    double d_abs_fd = 0.0, d_abs_oracle = 0.0, d_abs_alt = 0.0;
    double d_arg_fd = 0.0, d_arg_oracle = 0.0;
    double abs_residual = 0.0;          // FD vs oracle, O(h^2)
    double arg_residual = 0.0;
    double abs_alt_form_residual = 0.0;  // FD vs the variant right-hand side
    double arg_alt_form_residual = 0.0;
};

/// Central differences of |a| and arg a in t against the exact forms built
/// from a' = f e^{2its} conj(b), plus the variant right-hand sides with the
/// alternate constants.
inline ScatteringOdeResiduals ab_ode_residuals(const Potential& f, double t, double s,
                                                double h = 1e-4,
                                                const PropagationOptions& opts = {}) {
    const ABPair abp = ab_coefficients(f, t + h, s, opts);
    const ABPair abm = ab_coefficients(f, t - h, s, opts);
    const ABPair ab = ab_coefficients(f, t, s, opts);
    const ScatteringPair sp = hermite_biehler(f, t, s, false, opts);

    ScatteringOdeResiduals r;
    r.d_abs_fd = (std::abs(abp.a) - std::abs(abm.a)) / (2.0 * h);
    r.d_arg_fd = std::arg(abp.a / abm.a) / (2.0 * h);

    const double q = f.evaluate(t);
    const cplx a_dot = q * std::exp(cplx(0.0, 2.0 * t * s)) * std::conj(ab.b);
    r.d_abs_oracle = (std::conj(ab.a) * a_dot).real() / std::abs(ab.a);
    r.d_arg_oracle = (a_dot / ab.a).imag();
    r.abs_residual = std::abs(r.d_abs_fd - r.d_abs_oracle);
    r.arg_residual = std::abs(r.d_arg_fd - r.d_arg_oracle);

    // Variant forms: d|a|/dt = 2f [|E|^2 cos 2argE + |Et|^2 cos 2argEt]/|a|^2
    // and d(arg a~)/dt = -s - 2f [|E|^2 sin 2argE + |Et|^2 sin 2argEt].
    const double Esq_re = (sp.E * sp.E).real() + (sp.E_tilde * sp.E_tilde).real();
    const double Esq_im = (sp.E * sp.E).imag() + (sp.E_tilde * sp.E_tilde).imag();
    r.d_abs_alt = 2.0 * q * Esq_re / std::norm(ab.a);
    r.abs_alt_form_residual = std::abs(r.d_abs_fd - r.d_abs_alt);
    const double d_arg_tilde_fd = r.d_arg_fd - s;
    r.arg_alt_form_residual = std::abs(d_arg_tilde_fd - (-s - 2.0 * q * Esq_im));
    return r;
}

struct EquivalenceSurface {
    std::vector<double> s_grid;
    std::vector<double> y_grid;
    std::vector<cplx> values;  // row-major: values[is * y_grid.size() + iy]
    double max_diag_residual = 0.0;

    cplx at(std::size_t is, std::size_t iy) const { return values[is * y_grid.size() + iy]; }
};

/// I(t,s,y) = int_0^t f(u) (b(u,s)/conj a(u,s)) e^{-2iuy} du.  On the diagonal
/// y = s this equals log|a(t,s)| - i arg a(t,s).
inline EquivalenceSurface equivalence_surface(const Potential& f, double t,
                                              const std::vector<double>& s_grid,
                                              const std::vector<double>& y_grid,
                                              const PropagationOptions& opts = {},
                                              int threads = 1) {
    EquivalenceSurface surf;
    surf.s_grid = s_grid;
    surf.y_grid = y_grid;
    surf.values.resize(s_grid.size() * y_grid.size());

    double max_freq = 1.0;
    for (double y : y_grid) max_freq = std::max(max_freq, std::abs(y));

    struct Row {
        std::vector<cplx> vals;
        double diag_res = 0.0;
    };
    const auto rows = parallel_map<Row>(
        s_grid.size(),
        [&](std::size_t is) {
            const double s = s_grid[is];
            const double du = std::min(0.125, 1.0 / (16.0 * (1.0 + std::max(max_freq,
                                                                            std::abs(s)))));
            const std::vector<FlowSample> fine = scattering_flow(f, t, s, du / 2.0, opts);
            Row row;
            for (double y : y_grid) {
                auto g = [&](const FlowSample& smp, double q) {
                    return q * (smp.b / std::conj(smp.a)) * std::exp(cplx(0.0, -2.0 * y) * smp.u);
                };
                const cplx I2 = detail::flow_simpson(fine, g);
                row.vals.push_back(I2);
                if (y == s) {
                    const FlowSample& last = fine.back();
                    const cplx diag(std::log(std::abs(last.a)), -last.arg_a);
                    row.diag_res = std::max(row.diag_res, std::abs(I2 - diag));
                }
            }
            return row;
        },
        threads);

    for (std::size_t is = 0; is < s_grid.size(); ++is) {
        for (std::size_t iy = 0; iy < y_grid.size(); ++iy)
            surf.values[is * y_grid.size() + iy] = rows[is].vals[iy];
        surf.max_diag_residual = std::max(surf.max_diag_residual, rows[is].diag_res);
    }
    return surf;
}

struct LocalAsymptotic {
    double residual = 0.0;
    double eps1 = 0.0, eps2 = 0.0;
    double remainder_scale = 0.0;  // eps1^2 + eps2^2
    cplx a12{};
    cplx formula{};
    double sup_error_t1 = 0.0, sup_error_t2 = 0.0;
};

/// Residual of the window asymptotic a_{t1->t2}(s) ~ e^{i(t2-t1)s} alpha2
/// conj(alpha1) (1 + i eps1 coth(2 t1 y1)) along a tracked zero.
inline LocalAsymptotic local_asymptotic_residual(const Potential& f, double s, double t1,
                                                 double t2, double C,
                                                 const PropagationOptions& opts = {},
                                                 double fit_bound = 0.25) {
    LocalAsymptotic out;
    if (t2 == t1) {
        out.a12 = out.formula = 1.0;
        return out;
    }

    const double hw1 = C / t1;
    const ZeroSearchResult zs = locate_zeros(f, t1, {s - hw1, s + hw1, -hw1, -1e-9}, 1e-11, opts);
    if (zs.zeros.empty()) throw NoZeroInBox("local_asymptotic: no zero in Q(s, C/t1)");
    cplx z1 = zs.zeros.front();
    for (cplx z : zs.zeros)
        if (std::abs(z.real() - s) < std::abs(z1.real() - s)) z1 = z;

    TrackOptions topts;
    topts.box_s = s;
    topts.box_C = C;
    const ZeroTrajectory traj = track_zero(f, t1, t2, z1, (t2 - t1) / 16.0, topts, opts);
    const TrajectoryNode& n1 = traj.nodes.front();
    const TrajectoryNode& n2 = traj.nodes.back();
    const double y1 = -n1.z.imag(), y2 = -n2.z.imag();
    if (!(t1 * y1 > 2.0 && t1 * y1 < C && t2 * y2 > 2.0 && t2 * y2 < C))
        throw NoZeroInBox("local_asymptotic: tracked zero outside the depth range (2, C)");

    const SineFit fit1 = sine_fit(f, t1, s, C, opts, 9, n1.z);
    const SineFit fit2 = sine_fit(f, t2, s, C, opts, 9, n2.z);
    // Quality relative to the size of E on the box (e^C / sqrt(w) scale).
    if (fit1.sup_error > fit_bound * fit1.sup_E || fit2.sup_error > fit_bound * fit2.sup_E)
        throw FitQualityTooLow("local_asymptotic: relative sine fit errors " +
                               std::to_string(fit1.sup_error / fit1.sup_E) + ", " +
                               std::to_string(fit2.sup_error / fit2.sup_E));

    auto [eps1, eps2] = increments(traj, s, t1, t2);
    out.eps1 = eps1;
    out.eps2 = eps2;
    out.remainder_scale = eps1 * eps1 + eps2 * eps2;
    out.a12 = local_scattering(f, t1, t2, s, opts).a;
    out.formula = std::exp(cplx(0.0, (t2 - t1) * s)) * fit2.alpha * std::conj(fit1.alpha) *
                  (1.0 + cplx(0.0, eps1) / std::tanh(2.0 * t1 * y1));
    out.residual = std::abs(out.a12 - out.formula);
    out.sup_error_t1 = fit1.sup_error;
    out.sup_error_t2 = fit2.sup_error;
    return out;
}

}  // namespace nlft
