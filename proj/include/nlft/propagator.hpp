#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "nlft/potential.hpp"

namespace nlft {

using cplx = std::complex<double>;

/// 2x2 complex matrix in the (A, B; C, D) layout of the Dirac fundamental
/// solution.  det M = 1 holds structurally for every propagation product.
struct Mat2 {
    cplx a11{1.0}, a12{0.0}, a21{0.0}, a22{1.0};

    static Mat2 identity() { return {}; }
    static Mat2 zero() { return {0.0, 0.0, 0.0, 0.0}; }

    cplx det() const { return a11 * a22 - a12 * a21; }

    friend Mat2 operator*(const Mat2& L, const Mat2& R) {
        return {L.a11 * R.a11 + L.a12 * R.a21, L.a11 * R.a12 + L.a12 * R.a22,
                L.a21 * R.a11 + L.a22 * R.a21, L.a21 * R.a12 + L.a22 * R.a22};
    }

    friend Mat2 operator+(const Mat2& L, const Mat2& R) {
        return {L.a11 + R.a11, L.a12 + R.a12, L.a21 + R.a21, L.a22 + R.a22};
    }
};

/// Hermite-Biehler frame W = [[E, Etilde], [E#, Etilde#]].  The propagation
/// runs in this basis: the generator [[-iz, q], [q, iz]] keeps the decaying
/// component E separate from the growing E#, so E(t, z) deep in the lower
/// half-plane comes out accurate relative to its own size (computing it as
/// A - iC would cancel e^{2t|Im z|}).
struct WFrame {
    cplx E{1.0}, Et{0.0, -1.0};
    cplx Es{1.0}, Ets{0.0, 1.0};  // Schwarz transforms E#, Etilde#

    static WFrame initial() { return {}; }

    /// M = [[A, B], [C, D]] with A = (E + E#)/2, C = (E# - E)/(2i), etc.
    Mat2 to_matrix() const {
        const cplx half(0.5), ihalf(0.0, 0.5);
        return {half * (E + Es), half * (Et + Ets),
                ihalf * (E - Es), ihalf * (Et - Ets)};
    }
};

struct PropagationOptions {
    int step_budget = 256;  // substeps per unit time for smooth potentials
    bool with_derivative = false;
    double small_omega_threshold = 1e-4;  // series switchover for sinh(x)/x
};

struct Propagated {
    Mat2 M;
    Mat2 dM;  // dM/dz, valid when has_derivative
    WFrame W;
    WFrame dW;
    bool has_derivative = false;
};

namespace detail {

// sinh(x)/x and cosh(x); even functions of x, so the branch of omega is
// irrelevant.  Below the threshold the degree-7 Taylor series is exact to
// machine precision (next term < 1e-16 at |x| = 1e-2).
inline void sinhc_cosh(cplx x, double threshold, cplx& s, cplx& c) {
    if (std::abs(x) < threshold) {
        const cplx y = x * x;
        s = 1.0 + y * (1.0 / 6.0 + y * (1.0 / 120.0 + y / 5040.0));
        c = 1.0 + y * (0.5 + y * (1.0 / 24.0 + y / 720.0));
    } else {
        s = std::sinh(x) / x;
        c = std::cosh(x);
    }
}

// d/dw [sinh(h sqrt(w))/sqrt(w)] with w = q^2 - z^2; entire in w.  The closed
// form cancels near w = 0, hence the series branch.
inline cplx dphi_dw(double h, cplx w, cplx sinhc_val, cplx cosh_val) {
    const cplx y = h * h * w;  // = x^2
    if (std::abs(y) < 1e-4) {
        return h * h * h *
               (1.0 / 6.0 + y * (1.0 / 60.0 + y * (1.0 / 1680.0 + y / 90720.0)));
    }
    return (h / (2.0 * w)) * (cosh_val - sinhc_val);
}

// One exact step exp(h [[-iz, q], [q, iz]]) acting on a WFrame column pair.
struct WStep {
    cplx p11, p12, p21, p22;
};

inline WStep w_step(double q, double h, cplx z, double threshold) {
    const cplx w = q * q - z * z;
    const cplx x = h * std::sqrt(w);
    cplx s, c;
    sinhc_cosh(x, threshold, s, c);
    const cplx hs = h * s;  // sinh(h omega)/omega
    const cplx iz(0.0, 1.0);
    return {c - iz * z * hs, q * hs, q * hs, c + iz * z * hs};
}

inline void w_step_with_derivative(double q, double h, cplx z, double threshold, WStep& P,
                                   WStep& dP) {
    const cplx w = q * q - z * z;
    const cplx x = h * std::sqrt(w);
    cplx s, c;
    sinhc_cosh(x, threshold, s, c);
    const cplx hs = h * s;
    const cplx i(0.0, 1.0);
    P = {c - i * z * hs, q * hs, q * hs, c + i * z * hs};
    // dP = dc I + ds H + hs dH,   H = [[-iz, q], [q, iz]], dH = [[-i,0],[0,i]]
    const cplx dc = -z * h * h * s;
    const cplx ds = -2.0 * z * dphi_dw(h, w, s, c);
    dP = {dc - i * z * ds - i * hs, q * ds, q * ds, dc + i * z * ds + i * hs};
}

inline void w_apply(const WStep& P, WFrame& W) {
    const WFrame old = W;
    W.E = P.p11 * old.E + P.p12 * old.Es;
    W.Es = P.p21 * old.E + P.p22 * old.Es;
    W.Et = P.p11 * old.Et + P.p12 * old.Ets;
    W.Ets = P.p21 * old.Et + P.p22 * old.Ets;
}

inline void w_apply_with_derivative(const WStep& P, const WStep& dP, WFrame& W, WFrame& dW) {
    const WFrame oldW = W, oldD = dW;
    w_apply(P, W);
    dW.E = dP.p11 * oldW.E + dP.p12 * oldW.Es + P.p11 * oldD.E + P.p12 * oldD.Es;
    dW.Es = dP.p21 * oldW.E + dP.p22 * oldW.Es + P.p21 * oldD.E + P.p22 * oldD.Es;
    dW.Et = dP.p11 * oldW.Et + dP.p12 * oldW.Ets + P.p11 * oldD.Et + P.p12 * oldD.Ets;
    dW.Ets = dP.p21 * oldW.Et + dP.p22 * oldW.Ets + P.p21 * oldD.Et + P.p22 * oldD.Ets;
}

}  // namespace detail

/// Exact propagator over one interval of constant potential in the (A, B; C, D)
/// layout: exp(hG) with G = [[q, -z], [z, -q]], omega^2 = q^2 - z^2.
inline Mat2 step_exact(double q, double h, cplx z, double small_omega_threshold = 1e-4) {
    const cplx w = q * q - z * z;
    const cplx x = h * std::sqrt(w);
    cplx s, c;
    detail::sinhc_cosh(x, small_omega_threshold, s, c);
    const cplx hs = h * s;
    return {c + q * hs, -z * hs, z * hs, c - q * hs};
}

/// Partition of [t0, t1] induced by the potential: its discontinuities, plus
/// (for smooth presets) the absolute grid of pitch 1/step_budget.  Anchoring
/// the substep grid at 0 makes transfer-matrix composition exact.
inline std::vector<double> propagation_nodes(const Potential& f, double t0, double t1,
                                             int step_budget) {
    std::vector<double> nodes;
    nodes.push_back(t0);
    std::vector<double> bps = f.breakpoints(t0, t1);
    if (f.is_smooth()) {
        // Grid nodes computed as k*g (not accumulated) so that windows starting
        // at different times land on bit-identical node positions.
        const double g = 1.0 / std::max(1, step_budget);
        const double hi = std::min(t1, f.support_end());
        for (long k = static_cast<long>(std::floor(t0 / g)) + 1; k * g < hi; ++k)
            bps.push_back(k * g);
        std::sort(bps.begin(), bps.end());
    }
    const double eps = 1e-13 * std::max(1.0, std::abs(t1));
    for (double x : bps)
        if (x > nodes.back() + eps && x < t1 - eps) nodes.push_back(x);
    if (t1 > t0) nodes.push_back(t1);
    return nodes;
}

/// Potential value the propagator uses on a breakpoint-free interval [u, v].
/// Smooth presets are sampled at the midpoint of the absolute grid cell, so
/// the discretized potential is a well-defined piecewise-constant function.
inline double interval_potential_value(const Potential& f, double u, double v, int step_budget) {
    const double mid = 0.5 * (u + v);
    if (!f.is_smooth()) return f.evaluate(mid);
    const double g = 1.0 / std::max(1, step_budget);
    return f.evaluate((std::floor(mid / g) + 0.5) * g);
}

/// Fundamental solution over [t0, t1] from the identity frame at t0.  Long
/// pieces are substepped so each factor's exponent h|Im z| stays bounded;
/// the per-piece exponential is exact, substepping only curbs roundoff.
inline Propagated propagate_window(const Potential& f, double t0, double t1, cplx z,
                                   const PropagationOptions& opts = {}) {
    Propagated out;
    out.has_derivative = opts.with_derivative;
    if (!(t1 > t0)) {
        out.M = Mat2::identity();
        out.dM = Mat2::zero();
        out.W = WFrame::initial();
        out.dW = {0.0, 0.0, 0.0, 0.0};
        return out;
    }
    const std::vector<double> nodes = propagation_nodes(f, t0, t1, opts.step_budget);
    WFrame W = WFrame::initial();
    WFrame dW{0.0, 0.0, 0.0, 0.0};
    const double im = std::abs(z.imag());
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const double u = nodes[i], v = nodes[i + 1];
        const double q = interval_potential_value(f, u, v, opts.step_budget);
        const int k = 1 + static_cast<int>(std::floor((v - u) * im));
        const double h = (v - u) / k;
        if (opts.with_derivative) {
            detail::WStep P, dP;
            detail::w_step_with_derivative(q, h, z, opts.small_omega_threshold, P, dP);
            for (int j = 0; j < k; ++j) detail::w_apply_with_derivative(P, dP, W, dW);
        } else {
            const detail::WStep P = detail::w_step(q, h, z, opts.small_omega_threshold);
            for (int j = 0; j < k; ++j) detail::w_apply(P, W);
        }
    }
    out.W = W;
    out.dW = dW;
    out.M = W.to_matrix();
    out.dM = dW.to_matrix();
    return out;
}

/// Fundamental solution M(t, z) of the Dirac system, from M(0) = I.
inline Propagated propagate(const Potential& f, double t, cplx z,
                            const PropagationOptions& opts = {}) {
    return propagate_window(f, 0.0, t, z, opts);
}

/// Transfer matrix M_{t1 -> t2}(z), by direct propagation from the identity
/// at t1 (never by inversion).
inline Propagated transfer(const Potential& f, double t1, double t2, cplx z,
                           const PropagationOptions& opts = {}) {
    return propagate_window(f, t1, t2, z, opts);
}

}  // namespace nlft

#include "nlft/parallel.hpp"

namespace nlft {

/// Maps propagate over a z grid; results are positional, independent of
/// scheduling or thread count.
inline std::vector<Propagated> propagate_batch(const Potential& f, double t,
                                               const std::vector<cplx>& z_grid,
                                               const PropagationOptions& opts = {},
                                               int threads = 1) {
    return parallel_map<Propagated>(
        z_grid.size(), [&](std::size_t i) { return propagate(f, t, z_grid[i], opts); },
        threads);
}

// ---------------------------------------------------------------------------
// Real fast path.  For real spectral parameter the generator is real, so the
// whole propagation stays in real arithmetic; used by quadrature-heavy loops.
// ---------------------------------------------------------------------------

struct Mat2d {
    double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;

    friend Mat2d operator*(const Mat2d& L, const Mat2d& R) {
        return {L.a11 * R.a11 + L.a12 * R.a21, L.a11 * R.a12 + L.a12 * R.a22,
                L.a21 * R.a11 + L.a22 * R.a21, L.a21 * R.a12 + L.a22 * R.a22};
    }
};

inline Mat2d step_exact_real(double q, double h, double s) {
    const double w = q * q - s * s;
    double sc, ch;
    if (std::abs(w) * h * h < 1e-8) {
        const double y = h * h * w;
        sc = 1.0 + y * (1.0 / 6.0 + y / 120.0);
        ch = 1.0 + y * (0.5 + y / 24.0);
    } else if (w > 0) {
        const double x = h * std::sqrt(w);
        sc = std::sinh(x) / x;
        ch = std::cosh(x);
    } else {
        const double x = h * std::sqrt(-w);
        sc = std::sin(x) / x;
        ch = std::cos(x);
    }
    const double hs = h * sc;
    return {ch + q * hs, -s * hs, s * hs, ch - q * hs};
}

inline Mat2d propagate_real(const Potential& f, double t, double s,
                            const PropagationOptions& opts = {}) {
    Mat2d M;
    if (!(t > 0.0)) return M;
    const std::vector<double> nodes = propagation_nodes(f, 0.0, t, opts.step_budget);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const double q = interval_potential_value(f, nodes[i], nodes[i + 1], opts.step_budget);
        M = step_exact_real(q, nodes[i + 1] - nodes[i], s) * M;
    }
    return M;
}

}  // namespace nlft
