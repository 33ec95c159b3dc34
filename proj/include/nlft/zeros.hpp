#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "nlft/parallel.hpp"
#include "nlft/scattering.hpp"
#include "nlft/spectral.hpp"

namespace nlft {

/// theta = E#/E with optional z-derivatives.
struct InnerFunctionValue {
    double t = 0.0;
    cplx z{};
    cplx theta{};
    std::optional<cplx> theta_z;
    std::optional<cplx> theta_zz;
};

/// gamma(t) = sqrt(2)/sqrt(sinh 2t), the depth scale of the sine approximation.
struct GammaScale {
    double argument = 0.0;
    double value = 0.0;

    static GammaScale at(double arg) {
        return {arg, std::sqrt(2.0 / std::sinh(2.0 * arg))};
    }
};

struct Rect {
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    cplx center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
    bool contains(cplx z, double slack = 0.0) const {
        return z.real() >= x0 - slack && z.real() <= x1 + slack && z.imag() >= y0 - slack &&
               z.imag() <= y1 + slack;
    }
    Rect dilated(double factor) const {
        const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
        const double hx = 0.5 * width() * factor, hy = 0.5 * height() * factor;
        return {cx - hx, cx + hx, cy - hy, cy + hy};
    }
};

enum class BoxStatus { inside_T0, inside_T1, outside };

inline const char* to_string(BoxStatus s) {
    switch (s) {
        case BoxStatus::inside_T0: return "inside_T0";
        case BoxStatus::inside_T1: return "inside_T1";
        case BoxStatus::outside: return "outside";
    }
    return "outside";
}

struct TrajectoryNode {
    double t = 0.0;
    cplx z{};
    double residual = 0.0;  // |E(t, z)|
    BoxStatus status = BoxStatus::outside;
};

struct ZeroTrajectory {
    std::vector<TrajectoryNode> nodes;

    const TrajectoryNode& at_time(double t) const {
        for (const auto& n : nodes)
            if (std::abs(n.t - t) <= 1e-9 * std::max(1.0, std::abs(t))) return n;
        throw NodeNotOnTrajectory("no trajectory node at t = " + std::to_string(t));
    }
};

/// Evaluates theta = E#/E.  order >= 1 adds theta_z from propagated dE/dz;
/// order 2 adds theta_zz by one central difference of theta_z.
inline InnerFunctionValue theta_eval(const Potential& f, double t, cplx z, int order = 0,
                                     const PropagationOptions& opts = {},
                                     double pole_tol = 1e-12) {
    auto eval_theta_z = [&](cplx at) -> std::pair<cplx, cplx> {
        PropagationOptions popts = opts;
        popts.with_derivative = order >= 1;
        const Propagated p = propagate(f, t, at, popts);
        if (std::abs(p.W.E) <= pole_tol)
            throw PoleAtEvaluationPoint("theta pole: |E| = " + std::to_string(std::abs(p.W.E)));
        const cplx theta = p.W.Es / p.W.E;
        if (order < 1) return {theta, 0.0};
        const cplx theta_z = (p.dW.Es * p.W.E - p.W.Es * p.dW.E) / (p.W.E * p.W.E);
        return {theta, theta_z};
    };

    InnerFunctionValue out;
    out.t = t;
    out.z = z;
    const auto [theta, theta_z] = eval_theta_z(z);
    out.theta = theta;
    if (order >= 1) out.theta_z = theta_z;
    if (order >= 2) {
        const double h = 1e-5 * (1.0 + std::abs(z));
        const cplx tz_p = eval_theta_z(z + h).second;
        const cplx tz_m = eval_theta_z(z - h).second;
        out.theta_zz = (tz_p - tz_m) / (2.0 * h);
    }
    return out;
}

namespace detail {

struct ContourBudget {
    int evals = 0;
    int max_evals = 200000;
};

// Unwraps arg E along [za, zb], bisecting until each step is below pi/2.
inline double unwrap_edge(const std::function<cplx(cplx)>& E, cplx za, cplx zb, cplx Ea, cplx Eb,
                          ContourBudget& budget, int depth = 0) {
    const double d = std::arg(Eb / Ea);
    if (std::abs(d) < 1.5707963267948966) return d;
    if (depth > 48 || ++budget.evals > budget.max_evals)
        throw PhaseStepTooLarge("contour refinement budget exhausted");
    const cplx zm = 0.5 * (za + zb);
    const cplx Em = E(zm);
    return unwrap_edge(E, za, zm, Ea, Em, budget, depth + 1) +
           unwrap_edge(E, zm, zb, Em, Eb, budget, depth + 1);
}

}  // namespace detail

/// Winding number of E(t, .) along the rectangle boundary; equals the number
/// of zeros inside (argument principle).  Grazing contours are dilated by 1%
/// and retried up to 5 times.
inline int winding_count(const Potential& f, double t, Rect rect, int n_contour = 64,
                         const PropagationOptions& opts = {}) {
    auto E = [&](cplx z) { return hermite_biehler(f, t, z, false, opts).E; };

    for (int attempt = 0;; ++attempt) {
        const int per_edge = std::max(4, n_contour / 4);
        std::vector<cplx> pts;
        auto edge = [&](cplx a, cplx b) {
            for (int k = 0; k < per_edge; ++k)
                pts.push_back(a + (b - a) * (static_cast<double>(k) / per_edge));
        };
        const cplx c00{rect.x0, rect.y0}, c10{rect.x1, rect.y0};
        const cplx c11{rect.x1, rect.y1}, c01{rect.x0, rect.y1};
        edge(c00, c10);
        edge(c10, c11);
        edge(c11, c01);
        edge(c01, c00);
        pts.push_back(c00);

        std::vector<cplx> vals(pts.size());
        double min_abs = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            vals[i] = E(pts[i]);
            min_abs = std::min(min_abs, std::abs(vals[i]));
        }
        if (min_abs <= 1e-10) {
            if (attempt >= 5) throw ContourThroughZero("zero on contour after 5 dilations");
            rect = rect.dilated(1.01);
            continue;
        }

        detail::ContourBudget budget;
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            total += detail::unwrap_edge(E, pts[i], pts[i + 1], vals[i], vals[i + 1], budget);
        return static_cast<int>(std::lround(total / (2.0 * 3.14159265358979323846)));
    }
}

struct ZeroSearchResult {
    std::vector<cplx> zeros;
    int winding_total = 0;
    std::vector<Rect> unresolved;          // Newton failed in these cells
    std::vector<Rect> multiplicity_flags;  // winding >= 2 below minimum cell size

    bool consistent() const {
        return unresolved.empty() && multiplicity_flags.empty() &&
               static_cast<int>(zeros.size()) == winding_total;
    }
};

/// Newton iteration on E with exact dE/dz; converged when |E| < tol.
inline std::optional<cplx> newton_polish(const Potential& f, double t, cplx z0, double tol,
                                         const PropagationOptions& opts = {}, int max_iter = 40,
                                         int* iters_out = nullptr) {
    PropagationOptions dopts = opts;
    dopts.with_derivative = true;
    cplx z = z0;
    for (int it = 0; it < max_iter; ++it) {
        const ScatteringPair sp = hermite_biehler(f, t, z, true, dopts);
        if (std::abs(sp.E) < tol) {
            if (iters_out) *iters_out = it;
            return z;
        }
        if (std::abs(*sp.dE_dz) == 0.0) return std::nullopt;
        const cplx step = sp.E / *sp.dE_dz;
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) return std::nullopt;
        z -= step;
    }
    return std::nullopt;
}

/// All zeros of E(t, .) inside rect, by quadrisection of the winding count
/// down to single-winding cells followed by Newton polishing.
inline ZeroSearchResult locate_zeros(const Potential& f, double t, Rect rect, double tol = 1e-11,
                                     const PropagationOptions& opts = {}) {
    ZeroSearchResult out;
    out.winding_total = winding_count(f, t, rect, 64, opts);
    if (out.winding_total == 0) return out;

    const double min_cell = std::max(1e-7, 100.0 * tol);
    std::vector<std::pair<Rect, int>> stack{{rect, out.winding_total}};
    while (!stack.empty()) {
        auto [cell, wind] = stack.back();
        stack.pop_back();
        if (wind == 0) continue;
        bool want_split = wind >= 2;
        if (wind == 1) {
            // The Newton basin shrinks like the oscillation scale of E, so a
            // failed polish from the center just means the cell is too big.
            const auto z = newton_polish(f, t, cell.center(), tol, opts);
            if (z && rect.contains(*z, 10.0 * tol)) {
                bool dup = false;
                for (cplx prev : out.zeros)
                    if (std::abs(prev - *z) <= 10.0 * tol) dup = true;
                if (!dup) {
                    out.zeros.push_back(*z);
                    continue;
                }
            }
            want_split = true;
        }
        if (want_split && std::max(cell.width(), cell.height()) < min_cell) {
            if (wind >= 2) out.multiplicity_flags.push_back(cell);  // anomalous, not fatal
            else out.unresolved.push_back(cell);
            continue;
        }
        // Quadrisect; a seam through a zero makes the child windings disagree
        // with the parent, in which case the split point is shifted.
        bool split_ok = false;
        for (int shift = 0; shift < 4 && !split_ok; ++shift) {
            const double fx = 0.5 + 0.07 * shift, fy = 0.5 - 0.05 * shift;
            const double xm = cell.x0 + fx * cell.width(), ym = cell.y0 + fy * cell.height();
            const Rect quads[4] = {{cell.x0, xm, cell.y0, ym},
                                   {xm, cell.x1, cell.y0, ym},
                                   {cell.x0, xm, ym, cell.y1},
                                   {xm, cell.x1, ym, cell.y1}};
            int wq[4], total = 0;
            bool graze = false;
            for (int qi = 0; qi < 4; ++qi) {
                try {
                    wq[qi] = winding_count(f, t, quads[qi], 32, opts);
                } catch (const ContourThroughZero&) {
                    graze = true;
                    break;
                }
                total += wq[qi];
            }
            if (graze || total != wind) continue;
            for (int qi = 0; qi < 4; ++qi)
                if (wq[qi] > 0) stack.push_back({quads[qi], wq[qi]});
            split_ok = true;
        }
        if (!split_ok) out.unresolved.push_back(cell);
    }

    std::sort(out.zeros.begin(), out.zeros.end(),
              [](cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real()
                                                               : a.imag() < b.imag(); });
    return out;
}

struct TrackOptions {
    double newton_tol = 1e-11;
    double dt_min_factor = 1.0 / (1 << 20);  // dt_min = dt_max * factor
    // Box (s, C) against which node membership is classified.
    double box_s = 0.0;
    double box_C = 0.0;  // 0 disables classification (all nodes "outside")
    Rect search{-1e9, 1e9, -1e9, 0.0};
};

inline BoxStatus classify_node(double t, cplx z, double s, double C) {
    if (C <= 0.0) return BoxStatus::outside;
    const double hw = C / t;
    if (std::abs(z.real() - s) > hw || std::abs(z.imag()) > hw) return BoxStatus::outside;
    return (z.imag() < -1.0 / t) ? BoxStatus::inside_T1 : BoxStatus::inside_T0;
}

/// Predictor-corrector continuation of a zero of E from t0 to t1.  The
/// velocity law z' = -f/theta_z lives on the theta side, whose zeros are the
/// conjugates of the zeros of E, so the predictor runs at the conjugate point.
inline ZeroTrajectory track_zero(const Potential& f, double t0, double t1, cplx z0,
                                 double dt_max, const TrackOptions& topts = {},
                                 const PropagationOptions& opts = {}) {
    const double tol = topts.newton_tol;
    {
        const ScatteringPair sp = hermite_biehler(f, t0, z0, false, opts);
        if (std::abs(sp.E) >= tol)
            throw TrackingLost("track_zero: starting point is not a zero (|E| = " +
                               std::to_string(std::abs(sp.E)) + ")");
    }

    ZeroTrajectory traj;
    auto push_node = [&](double t, cplx z) {
        const double res = std::abs(hermite_biehler(f, t, z, false, opts).E);
        traj.nodes.push_back({t, z, res, classify_node(t, z, topts.box_s, topts.box_C)});
    };
    push_node(t0, z0);

    double t = t0;
    cplx z = z0;
    double dt = dt_max;
    const double dt_min = dt_max * topts.dt_min_factor;
    while (t < t1 - 1e-13 * std::max(1.0, t1)) {
        dt = std::min(dt, t1 - t);
        cplx predicted = z;
        try {
            const InnerFunctionValue iv = theta_eval(f, t, std::conj(z), 1, opts);
            const cplx w_dot = -f.evaluate(t) / *iv.theta_z;
            predicted = std::conj(std::conj(z) + dt * w_dot);
        } catch (const PoleAtEvaluationPoint&) {
            // keep the trivial predictor
        }
        int iters = 0;
        const auto corrected = newton_polish(f, t + dt, predicted, tol, opts, 40, &iters);
        if (!corrected || iters > 4) {
            if (corrected && iters > 4 && dt <= dt_min) {
                // accept a slow step at the floor rather than stalling
            } else if (dt * 0.5 >= dt_min) {
                dt *= 0.5;
                continue;
            } else if (!corrected) {
                throw TrackingLost("track_zero: Newton failed at dt_min near t = " +
                                   std::to_string(t));
            }
        }
        z = *corrected;
        t += dt;
        if (!topts.search.contains(z))
            throw ZeroEscaped("tracked zero left the search rectangle at t = " +
                              std::to_string(t));
        push_node(t, z);
        dt = std::min(dt * 1.5, dt_max);
    }
    return traj;
}

struct DetectorBall {
    double center = 0.0;
    double radius = 0.0;
};

/// Core of the zero detector: |theta'(x)|/|theta'(y)| > 1 + eps yields a ball
/// around x of radius 4|y - x|/eps that must contain a zero of theta.
inline std::optional<DetectorBall> zero_detector_core(double abs_tp_x, double abs_tp_y, double x, double y,
                                             double eps, double eps0 = 0.1) {
    if (!(eps > 0.0) || eps >= eps0)
        throw ConfigError("zero detector: need 0 < eps < eps0");
    if (x == y) throw ConfigError("zero detector: x and y must differ");
    if (abs_tp_x / abs_tp_y > 1.0 + eps) return DetectorBall{x, 4.0 * std::abs(y - x) / eps};
    return std::nullopt;
}

inline std::optional<DetectorBall> zero_detector(const Potential& f, double t, double x, double y,
                                               double eps, double eps0 = 0.1,
                                               const PropagationOptions& opts = {}) {
    const InnerFunctionValue ix = theta_eval(f, t, x, 1, opts);
    const InnerFunctionValue iy = theta_eval(f, t, y, 1, opts);
    return zero_detector_core(std::abs(*ix.theta_z), std::abs(*iy.theta_z), x, y, eps, eps0);
}

/// Confirms a detection: the ball must contain the conjugate of a located
/// zero of E (i.e. a zero of theta in the upper half-plane).  The search is
/// clipped to `search` — the radius 4|y-x|/eps is typically far larger than
/// the region where zeros can live at all.
inline bool ball_contains_theta_zero(const Potential& f, double t, const DetectorBall& ball,
                                     const Rect& search, double tol = 1e-11,
                                     const PropagationOptions& opts = {}) {
    const Rect rect{std::max(ball.center - ball.radius, search.x0),
                    std::min(ball.center + ball.radius, search.x1),
                    std::max(-ball.radius, search.y0), std::min(-1e-9, search.y1)};
    if (!(rect.x0 < rect.x1) || !(rect.y0 < rect.y1)) return false;
    const ZeroSearchResult zs = locate_zeros(f, t, rect, tol, opts);
    for (cplx z : zs.zeros)
        if (std::abs(std::conj(z) - cplx(ball.center, 0.0)) < ball.radius) return true;
    return false;
}

struct SineFit {
    cplx alpha{1.0};
    cplx zero_used{};
    double sup_error = 0.0;
    double sup_E = 0.0;  // max |E| over the fit grid; the natural error scale
    GammaScale gamma;
    double w = 1.0;
};

struct ExpFit {
    cplx alpha{1.0};
    int sign = -1;  // fitted exponent: sign * i * t * z
    double sup_error = 0.0;
    double sup_error_other = 0.0;
    double w = 1.0;
};

namespace detail {

// Golden-section minimization of a smooth 1-d function on [lo, hi].
template <class F>
double golden_min(F&& g, double lo, double hi, int iters = 80) {
    const double r = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = g(x1), f2 = g(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - r * (b - a); f1 = g(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + r * (b - a); f2 = g(x2);
        }
    }
    return f1 < f2 ? x1 : x2;
}

inline std::vector<cplx> box_grid(double s, double hw, int g) {
    std::vector<cplx> pts;
    pts.reserve(static_cast<std::size_t>(g) * g);
    for (int j = 0; j < g; ++j)
        for (int k = 0; k < g; ++k)
            pts.push_back({s - hw + 2.0 * hw * j / (g - 1), -hw + 2.0 * hw * k / (g - 1)});
    return pts;
}

}  // namespace detail

/// Fits E(t, .) on Q(s, C/t) by alpha * gamma(t y)/sqrt(w) * sin[t(z - z*)]
/// with unimodular alpha, using the located zero nearest to s.
inline SineFit sine_fit(const Potential& f, double t, double s, double C,
                        const PropagationOptions& opts = {}, int grid = 9,
                        std::optional<cplx> prescribed_zero = std::nullopt) {
    const double hw = C / t;
    cplx zstar;
    if (prescribed_zero) {
        zstar = *prescribed_zero;
    } else {
        const Rect rect{s - hw, s + hw, -hw, -1e-9};
        const ZeroSearchResult zs = locate_zeros(f, t, rect, 1e-11, opts);
        if (zs.zeros.empty()) throw NoZeroInBox("sine_fit: no zero in Q(s, C/t)");
        // Nearest to s; ties by distance to the real axis.
        zstar = zs.zeros.front();
        for (cplx z : zs.zeros) {
            const double dz = std::abs(z.real() - s), dbest = std::abs(zstar.real() - s);
            if (dz < dbest - 1e-15 ||
                (std::abs(dz - dbest) <= 1e-15 && z.imag() > zstar.imag()))
                zstar = z;
        }
    }
    const double y = -zstar.imag();
    const SpectralWeight wgt = estimate_w(f, s, weight_horizon(f, t), opts);
    const GammaScale gamma = GammaScale::at(t * y);
    const double scale = gamma.value / std::sqrt(wgt.w);

    const std::vector<cplx> pts = detail::box_grid(s, hw, grid);
    std::vector<cplx> Evals(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        Evals[i] = hermite_biehler(f, t, pts[i], false, opts).E;

    auto sup_err = [&](double phi) {
        const cplx alpha = std::polar(1.0, phi);
        double m = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            m = std::max(m, std::abs(Evals[i] - alpha * scale * std::sin(t * (pts[i] - zstar))));
        return m;
    };

    const cplx model_at_s = scale * std::sin(t * (cplx(s, 0.0) - zstar));
    const cplx Es = hermite_biehler(f, t, s, false, opts).E;
    const double phi0 = std::arg(Es / model_at_s);
    const double phi = detail::golden_min(sup_err, phi0 - 0.7, phi0 + 0.7);

    SineFit fit;
    fit.alpha = std::polar(1.0, phi);
    fit.zero_used = zstar;
    fit.sup_error = sup_err(phi);
    for (const cplx& e : Evals) fit.sup_E = std::max(fit.sup_E, std::abs(e));
    fit.gamma = gamma;
    fit.w = wgt.w;
    return fit;
}

/// Zero-free branch: fits c e^{itz} and c e^{-itz} with |c| = 1/sqrt(w) and
/// returns the better direction.
inline ExpFit exp_fit(const Potential& f, double t, double s, double D,
                      const PropagationOptions& opts = {}, int grid = 9) {
    const double hw = D / t;
    if (winding_count(f, t, {s - hw, s + hw, -hw, -1e-9}, 64, opts) > 0)
        throw ZeroInBox("exp_fit: Q(s, D/t) contains a zero");
    const SpectralWeight wgt = estimate_w(f, s, weight_horizon(f, t), opts);
    const double mag = 1.0 / std::sqrt(wgt.w);

    const std::vector<cplx> pts = detail::box_grid(s, hw, grid);
    std::vector<cplx> Evals(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        Evals[i] = hermite_biehler(f, t, pts[i], false, opts).E;

    auto fit_sign = [&](int sign, double& phi_out) {
        auto sup_err = [&](double phi) {
            const cplx c = std::polar(mag, phi);
            double m = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i)
                m = std::max(m, std::abs(Evals[i] -
                                         c * std::exp(cplx(0.0, sign * t) * pts[i])));
            return m;
        };
        const cplx Es = hermite_biehler(f, t, s, false, opts).E;
        const double phi0 = std::arg(Es / (mag * std::exp(cplx(0.0, sign * t) * s)));
        phi_out = detail::golden_min(sup_err, phi0 - 0.7, phi0 + 0.7);
        return sup_err(phi_out);
    };

    double phi_p = 0.0, phi_m = 0.0;
    const double err_p = fit_sign(+1, phi_p);
    const double err_m = fit_sign(-1, phi_m);

    ExpFit fit;
    fit.w = wgt.w;
    if (err_m <= err_p) {
        fit.sign = -1;
        fit.alpha = std::polar(1.0, phi_m);
        fit.sup_error = err_m;
        fit.sup_error_other = err_p;
    } else {
        fit.sign = +1;
        fit.alpha = std::polar(1.0, phi_p);
        fit.sup_error = err_p;
        fit.sup_error_other = err_m;
    }
    return fit;
}

/// Rescaled increments of a tracked zero between two trajectory nodes:
/// eps1 = t2(x2 - s) - t1(x1 - s), eps2 = t2 y2 - t1 y1 with z = x - iy.
inline std::pair<double, double> increments(const ZeroTrajectory& traj, double s, double t1,
                                            double t2) {
    const TrajectoryNode& n1 = traj.at_time(t1);
    const TrajectoryNode& n2 = traj.at_time(t2);
    const double eps1 = t2 * (n2.z.real() - s) - t1 * (n1.z.real() - s);
    const double eps2 = t2 * (-n2.z.imag()) - t1 * (-n1.z.imag());
    return {eps1, eps2};
}

}  // namespace nlft
