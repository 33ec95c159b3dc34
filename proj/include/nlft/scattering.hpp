#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "nlft/propagator.hpp"
#include "nlft/report.hpp"

namespace nlft {

/// Hermite-Biehler pair E = A - iC, Etilde = B - iD at a single (t, z).
struct ScatteringPair {
    double t = 0.0;
    cplx z{};
    cplx E{1.0};
    cplx E_tilde{0.0, -1.0};
    std::optional<cplx> dE_dz;
    std::optional<cplx> dE_tilde_dz;
};

/// Scattering coefficients a = e^{itz}(E + i Etilde)/2, b = e^{itz}(E - i Etilde)/2.
struct ABPair {
    double t = 0.0;
    cplx z{};
    cplx a{1.0};
    cplx b{0.0};
};

inline ScatteringPair pair_from_propagated(double t, cplx z, const Propagated& p) {
    ScatteringPair sp;
    sp.t = t;
    sp.z = z;
    sp.E = p.W.E;
    sp.E_tilde = p.W.Et;
    if (p.has_derivative) {
        sp.dE_dz = p.dW.E;
        sp.dE_tilde_dz = p.dW.Et;
    }
    return sp;
}

inline ScatteringPair hermite_biehler(const Potential& f, double t, cplx z,
                                      bool with_derivative = false,
                                      PropagationOptions opts = {}) {
    opts.with_derivative = with_derivative;
    return pair_from_propagated(t, z, propagate(f, t, z, opts));
}

/// Schwarz transform E#(t,z): co-propagated as its own solution component
/// (the W frame's second row), never obtained by conjugating E(t,z) pointwise.
inline cplx schwarz_E(const Potential& f, double t, cplx z, const PropagationOptions& opts = {}) {
    return propagate(f, t, z, opts).W.Es;
}

inline ABPair ab_from_pair(const ScatteringPair& sp) {
    const cplx phase = std::exp(cplx(0.0, 1.0) * sp.t * sp.z);
    const cplx i(0.0, 1.0);
    return {sp.t, sp.z, 0.5 * phase * (sp.E + i * sp.E_tilde),
            0.5 * phase * (sp.E - i * sp.E_tilde)};
}

inline ABPair ab_coefficients(const Potential& f, double t, cplx z,
                              const PropagationOptions& opts = {}) {
    // Free case: a == 1 and b == 0 algebraically, so downstream quotients are exact.
    if (f.vanishes_on(t)) return {t, z, 1.0, 0.0};
    return ab_from_pair(hermite_biehler(f, t, z, false, opts));
}

/// Partial non-linear Fourier transform f_T^dagger(s) = b(T,s)/a(T,s).
inline cplx nlft_partial(const Potential& f, double T, double s,
                         const PropagationOptions& opts = {}) {
    const ABPair ab = ab_coefficients(f, T, s, opts);
    const double unimod = std::norm(ab.a) - std::norm(ab.b) - 1.0;
    if (std::abs(unimod) > 1e-6)
        throw NonUnimodularIdentityViolation("|a|^2 - |b|^2 - 1 = " + std::to_string(unimod));
    return ab.b / ab.a;
}

/// Scattering coefficients of the window (t1, t2) built from the transfer
/// matrix; equals ab_coefficients of the time-shifted truncated potential.
inline ABPair local_scattering(const Potential& f, double t1, double t2, double s,
                               const PropagationOptions& opts = {}) {
    const Propagated tr = transfer(f, t1, t2, s, opts);
    const cplx i(0.0, 1.0);
    const cplx phase = std::exp(i * (t2 - t1) * s);
    return {t2, s, 0.5 * phase * (tr.W.E + i * tr.W.Et),
            0.5 * phase * (tr.W.E - i * tr.W.Et)};
}

struct IdentityTolerances {
    double det = 1e-12;
    double det2 = 1e-10;       // E Etilde# - Etilde E# = 2i
    double unimodular = 1e-12; // |a|^2 - |b|^2 = 1 on the real axis
    double schwarz_dual = 1e-11;  // co-propagated E# vs conj(E(t, conj z))
};

/// Residuals of the algebraic identities binding M, E, Etilde, a, b.
inline DiagnosticReport verify_identities(const Potential& f, double t,
                                          std::span<const cplx> z_samples,
                                          const IdentityTolerances& tol = {},
                                          const PropagationOptions& opts = {}) {
    DiagnosticReport rep("identity residuals");
    double max_det = 0.0, max_det2 = 0.0, max_unimod = 0.0, max_dual = 0.0;
    double min_hb_margin = std::numeric_limits<double>::infinity();
    bool any_upper = false;
    for (cplx z : z_samples) {
        const Propagated p = propagate(f, t, z, opts);
        max_det = std::max(max_det, std::abs(p.M.det() - 1.0));
        max_det2 = std::max(max_det2, std::abs(p.W.E * p.W.Ets - p.W.Et * p.W.Es -
                                               cplx(0.0, 2.0)));

        // Dual route to the Schwarz transform: a second propagation at conj z.
        const Propagated pc = propagate(f, t, std::conj(z), opts);
        const double scale = std::max(1.0, std::abs(p.W.Es));
        max_dual = std::max(max_dual, std::abs(p.W.Es - std::conj(pc.W.E)) / scale);

        if (z.imag() == 0.0) {
            const ABPair ab = ab_from_pair(pair_from_propagated(t, z, p));
            max_unimod = std::max(max_unimod, std::abs(std::norm(ab.a) - std::norm(ab.b) - 1.0));
        } else if (z.imag() > 0.0) {
            any_upper = true;
            min_hb_margin = std::min(min_hb_margin, std::abs(p.W.E) - std::abs(pc.W.E));
        }
    }
    rep.add_check("det_residual", max_det, tol.det);
    rep.add_check("det2_residual", max_det2, tol.det2);
    rep.add_check("unimodular_residual", max_unimod, tol.unimodular);
    rep.add_check("schwarz_dual_route_residual", max_dual, tol.schwarz_dual);
    if (any_upper) {
        rep.set("hb_margin_min", min_hb_margin);
        rep.add_flag("hermite_biehler_margin_positive", min_hb_margin > 0.0);
    }
    return rep;
}

// cos(2 arg X) and sin(2 arg X) via X^2; any branch of arg differs by a
// multiple of 2 pi, so no branch tracking is needed here.
inline double cos2arg(cplx x) { return (x * x).real() / std::norm(x); }
inline double sin2arg(cplx x) { return (x * x).imag() / std::norm(x); }

}  // namespace nlft
