// Acceptance suite: one criterion per block, one PASS/FAIL line each, with
// the measured quantity, its tolerance, and the elapsed time.  Exits nonzero
// if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlft/cli.hpp"
#include "nlft/nlft.hpp"

using namespace nlft;

namespace {

int g_failures = 0;

class Criterion {
public:
    Criterion(int id, std::string name)
        : id_(id), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}

    void require(bool ok, const std::string& what) {
        if (!ok) issues_.push_back(what);
    }

    void note(const std::string& s) { notes_.push_back(s); }

    void finish(double runtime_budget_s) {
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        if (elapsed >= runtime_budget_s)
            issues_.push_back("runtime " + std::to_string(elapsed) + " s exceeds budget " +
                              std::to_string(runtime_budget_s) + " s");
        const bool pass = issues_.empty();
        if (!pass) ++g_failures;
        std::printf("%s  criterion %2d: %s [%.2f s]", pass ? "PASS" : "FAIL", id_,
                    name_.c_str(), elapsed);
        for (const auto& n : notes_) std::printf("  {%s}", n.c_str());
        std::printf("\n");
        for (const auto& i : issues_) std::printf("      - %s\n", i.c_str());
    }

private:
    int id_;
    std::string name_;
    std::vector<std::string> issues_;
    std::vector<std::string> notes_;
    std::chrono::steady_clock::time_point start_;
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

// Closed form for f = constant(q): a = e^{ist}(cosh(t w) - is sinh(t w)/w),
// b = e^{ist} q sinh(t w)/w, w = sqrt(q^2 - s^2).
void const_ab(double q, double t, double s, cplx& a, cplx& b) {
    const cplx w = std::sqrt(cplx(q * q - s * s));
    cplx ch, sc;
    if (std::abs(w) < 1e-8) {
        ch = 1.0 + 0.5 * t * t * w * w;
        sc = t * (1.0 + t * t * w * w / 6.0);
    } else {
        ch = std::cosh(t * w);
        sc = std::sinh(t * w) / w;
    }
    const cplx phase = std::exp(cplx(0.0, s * t));
    a = phase * (ch - cplx(0.0, s) * sc);
    b = phase * q * sc;
}

// Piecewise-constant draws with |q| <= max_q and support <= max_support.
// When max_l1 > 0 the draw is rescaled so that int |f| <= max_l1: both sides
// of the det and unimodularity identities are e^{2 int|f|}-sized before they
// cancel to 1, so an absolute 1e-12 residual needs e^{2 int|f|} eps << 1e-12.
Potential random_piecewise(std::mt19937_64& rng, double max_support, double max_q,
                           double max_l1 = 0.0) {
    std::uniform_int_distribution<int> np(1, 4);
    std::uniform_real_distribution<double> uq(-max_q, max_q);
    std::uniform_real_distribution<double> ul(0.1, 1.0);
    const int n = np(rng);
    std::vector<double> breaks{0.0}, values;
    for (int i = 0; i < n; ++i) {
        breaks.push_back(std::min(breaks.back() + ul(rng) * max_support / n,
                                  max_support - 1e-3 * (n - i)));
        values.push_back(uq(rng));
    }
    if (max_l1 > 0.0) {
        double l1 = 0.0;
        for (int i = 0; i < n; ++i) l1 += std::abs(values[i]) * (breaks[i + 1] - breaks[i]);
        if (l1 > max_l1)
            for (double& v : values) v *= max_l1 / l1;
    }
    return Potential::piecewise(breaks, values);
}

void criterion1_free_case() {
    Criterion c(1, "free-case exactness (E, Etilde, a, b, theta, K)");
    const Potential f = Potential::free_case();
    const cplx i(0.0, 1.0);
    const double pi = 3.14159265358979323846;
    const std::vector<cplx> zg = {0.0, pi, -pi, i, -i, 1.0, -1.0, cplx(1.0, 1.0),
                                  cplx(-2.0, 0.5)};
    auto err = [](cplx got, cplx ref) {
        return std::abs(got - ref) / std::max(1.0, std::abs(ref));
    };
    double worst = 0.0;
    for (double t : {0.5, 1.0, 5.0}) {
        for (cplx z : zg) {
            const ScatteringPair sp = hermite_biehler(f, t, z);
            const cplx ref = std::exp(-i * t * z);
            worst = std::max({worst, err(sp.E, ref), err(sp.E_tilde, -i * ref)});
            const ABPair ab = ab_coefficients(f, t, z);
            worst = std::max({worst, std::abs(ab.a - 1.0), std::abs(ab.b)});
            worst = std::max(worst, err(theta_eval(f, t, z).theta, std::exp(2.0 * i * t * z)));
        }
        for (cplx lam : zg)
            for (cplx z : zg) {
                const cplx d = std::conj(lam) - z;
                const cplx sinc = std::abs(d) < 1e-8 ? cplx(t / pi) : std::sin(t * d) / (pi * d);
                worst = std::max(worst, err(kernel_K(f, t, lam, z), sinc));
            }
    }
    c.note("max error " + fmt(worst) + " (tol 1e-12, relative above 1)");
    c.require(worst < 1e-12, "free-case error " + fmt(worst) + " >= 1e-12");
    c.finish(1.0);
}

void criterion2_constant_oracle() {
    Criterion c(2, "constant-potential oracle (a, b, tanh)");
    double worst = 0.0;
    for (double q : {0.5, 1.0})
        for (double s : {0.0, 1.0, 2.0}) {
            const ABPair ab = ab_coefficients(Potential::constant(q), 1.0, s);
            cplx a_ref, b_ref;
            const_ab(q, 1.0, s, a_ref, b_ref);
            worst = std::max({worst, std::abs(ab.a - a_ref), std::abs(ab.b - b_ref)});
        }
    for (double q : {0.5, 1.0})
        worst = std::max(worst,
                         std::abs(nlft_partial(Potential::constant(q), 1.0, 0.0) - std::tanh(q)));
    c.note("max error " + fmt(worst));
    c.require(worst < 1e-12, "constant-potential error " + fmt(worst) + " >= 1e-12");
    c.finish(1.0);
}

void criterion3_determinants() {
    Criterion c(3, "determinant invariants det M = 1, E Et# - Et E# = 2i");
    std::mt19937_64 rng(2026);
    std::uniform_real_distribution<double> ut(0.1, 4.0);
    std::uniform_real_distribution<double> ux(-5.0, 5.0);
    std::uniform_real_distribution<double> uy(-2.0, 2.0);
    double max_det = 0.0, max_det2 = 0.0;
    for (int k = 0; k < 200; ++k) {
        const Potential f = random_piecewise(rng, 4.0, 2.0, 4.0);
        const double t = ut(rng);
        // |Im z| t <= 2: both identities cancel e^{2|Im z| t} down to O(1).
        const cplx z(ux(rng), uy(rng) / t);
        const Propagated p = propagate(f, t, z);
        max_det = std::max(max_det, std::abs(p.M.det() - 1.0));
        max_det2 = std::max(max_det2,
                            std::abs(p.W.E * p.W.Ets - p.W.Et * p.W.Es - cplx(0.0, 2.0)));
    }
    c.note("max |det-1| " + fmt(max_det) + ", max |det2-2i| " + fmt(max_det2));
    c.require(max_det < 1e-12, "det residual " + fmt(max_det) + " >= 1e-12");
    c.require(max_det2 < 1e-10, "det2 residual " + fmt(max_det2) + " >= 1e-10");
    c.finish(5.0);
}

void criterion4_unimodularity() {
    Criterion c(4, "unimodularity |a|^2 - |b|^2 = 1 on the real axis");
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> ut(0.1, 4.0);
    std::uniform_real_distribution<double> us(-5.0, 5.0);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const Potential f = random_piecewise(rng, 4.0, 2.0, 4.0);
        const ABPair ab = ab_coefficients(f, ut(rng), us(rng));
        worst = std::max(worst, std::abs(std::norm(ab.a) - std::norm(ab.b) - 1.0));
    }
    c.note("max residual " + fmt(worst));
    c.require(worst < 1e-12, "unimodularity residual " + fmt(worst) + " >= 1e-12");
    c.finish(5.0);
}

void criterion5_parseval() {
    Criterion c(5, "non-linear Parseval identity (corrected constant pi/2)");
    // Ten piecewise-constant potentials with support <= 2 and |q| <= 2.
    std::vector<Potential> pots;
    pots.push_back(Potential::constant(1.0).truncated(1.0));
    pots.push_back(Potential::constant(2.0).truncated(0.5));
    pots.push_back(Potential::constant(-1.5).truncated(2.0));
    pots.push_back(Potential::constant(0.8).truncated(1.6));
    pots.push_back(Potential::piecewise({0.0, 0.5, 1.0}, {1.0, -1.0}));
    pots.push_back(Potential::piecewise({0.0, 0.8, 2.0}, {1.2, 0.6}));
    pots.push_back(Potential::piecewise({0.0, 0.4, 1.1, 1.8}, {2.0, -0.5, 1.0}));
    pots.push_back(Potential::piecewise({0.0, 1.0, 2.0}, {-2.0, 1.0}));
    pots.push_back(Potential::piecewise({0.0, 0.3, 0.9, 1.5, 2.0}, {1.0, -1.2, 0.7, -0.4}));
    pots.push_back(Potential::piecewise({0.0, 0.7, 1.4}, {1.8, 1.8}));

    double worst_rel = 0.0, min_alt = 1e300;
    for (const Potential& f : pots) {
        const double t = std::min(f.support_end(), 2.0);
        const double l2 = f.l2_norm_sq(0.0, t).value;
        ParsevalOptions quad;
        quad.tail_tol = 0.3e-6 * std::max(1.0, l2);
        quad.panel_abs_tol = quad.tail_tol / 16.0;
        quad.s_max_cap = 3e7;
        quad.threads = 2;
        const DiagnosticReport rep = nonlinear_parseval_residual(f, t, quad);
        worst_rel = std::max(worst_rel,
                             rep.get("residual") / (1e-6 * std::max(1.0, l2)));
        min_alt = std::min(min_alt, rep.get("unnormalized_residual") / l2);
    }
    c.note("worst residual/tolerance " + fmt(worst_rel));
    c.note("unnormalized-form residual >= " + fmt(min_alt) + " * ||f||^2");
    c.require(worst_rel < 1.0, "parseval residual exceeds 1e-6 * max(1, ||f||^2)");
    c.require(min_alt > 0.5, "unnormalized-form residual unexpectedly small");
    c.finish(60.0);
}

void criterion6_linearization() {
    Criterion c(6, "linearization: log-log slope of the Fourier-term error");
    double min_slope = 1e300;
    for (double s : {0.0, 1.0}) {
        const DiagnosticReport rep = linearization_error(
            Potential::constant(1.0), 1.0, s, {1e-1, 1e-2, 1e-3, 1e-4});
        min_slope = std::min(min_slope, rep.get("slope"));
    }
    c.note("min slope " + fmt(min_slope));
    c.require(min_slope >= 1.9, "slope " + fmt(min_slope) + " < 1.9");
    c.finish(2.0);
}

void criterion7_zero_velocity() {
    Criterion c(7, "zero-velocity law: FD residual is O(h^2) along the track");
    const Potential f = Potential::constant(1.0);
    const ZeroSearchResult at1 = locate_zeros(f, 1.0, {0.0, 4.0, -3.0, -0.01});
    c.require(at1.zeros.size() == 1, "expected one zero in the seed rectangle");
    if (at1.zeros.empty()) {
        c.finish(10.0);
        return;
    }
    const cplx z1 = at1.zeros.front();
    auto w_at = [&](double t) {
        return std::conj(track_zero(f, 1.0, t, z1, 0.05).nodes.back().z);
    };
    const double t0 = 1.5;
    const cplx vel = -f.evaluate(t0) / *theta_eval(f, t0, w_at(t0), 1).theta_z;
    double prev = 0.0;
    double min_ratio = 1e300;
    for (double h : {0.08, 0.04, 0.02, 0.01}) {
        const double res = std::abs((w_at(t0 + h) - w_at(t0 - h)) / (2.0 * h) - vel);
        if (prev > 0.0) min_ratio = std::min(min_ratio, prev / res);
        prev = res;
    }
    c.note("min halving ratio " + fmt(min_ratio));
    c.require(min_ratio >= 3.5, "halving ratio " + fmt(min_ratio) + " < 3.5");
    c.finish(10.0);
}

void criterion8_zero_location() {
    Criterion c(8, "zero location: winding counts match the dense-grid oracle");
    const Potential f = Potential::constant(1.0);
    const double t = 1.0;
    const std::vector<Rect> rects = {{-4.0, 4.0, -3.0, -0.01},
                                     {0.0, 4.0, -3.0, -0.01},
                                     {-4.0, 0.0, -3.0, -0.01},
                                     {-8.0, 8.0, -3.0, -0.01},
                                     {-2.0, 2.0, -1.0, -0.05}};
    for (const Rect& rect : rects) {
        const ZeroSearchResult zs = locate_zeros(f, t, rect);
        // independent oracle: dense modulus grid + Newton polish
        int oracle = 0;
        {
            const int nx = 320, ny = 160;
            std::vector<cplx> found;
            for (int iy = 1; iy < ny; ++iy)
                for (int ix = 1; ix < nx; ++ix) {
                    auto at = [&](int a, int b) {
                        return std::abs(hermite_biehler(f, t,
                                                        cplx(rect.x0 + rect.width() * a / nx,
                                                             rect.y0 + rect.height() * b / ny))
                                            .E);
                    };
                    const double m = at(ix, iy);
                    if (m < at(ix - 1, iy) && m < at(ix + 1, iy) && m < at(ix, iy - 1) &&
                        m < at(ix, iy + 1) && m < 0.5) {
                        const auto z =
                            newton_polish(f, t, cplx(rect.x0 + rect.width() * ix / nx,
                                                     rect.y0 + rect.height() * iy / ny),
                                          1e-11);
                        if (!z || !rect.contains(*z)) continue;
                        bool dup = false;
                        for (cplx p : found)
                            if (std::abs(p - *z) < 1e-7) dup = true;
                        if (!dup) found.push_back(*z);
                    }
                }
            oracle = static_cast<int>(found.size());
        }
        c.require(zs.winding_total == oracle,
                  "winding " + std::to_string(zs.winding_total) + " != oracle " +
                      std::to_string(oracle));
        c.require(zs.consistent(), "zero search left unresolved cells");
        for (cplx z : zs.zeros) {
            c.require(std::abs(hermite_biehler(f, t, z).E) < 1e-11, "zero residual >= 1e-11");
            c.require(z.imag() < 0.0, "zero not in the lower half-plane");
        }
    }
    c.finish(20.0);
}

void criterion9_zero_detector() {
    Criterion c(9, "zero detector: Blaschke instance triggers, free case never");
    // synthetic single factor (z - i)/(z + i): |theta'(x)| = 2/(x^2 + 1)
    auto tp = [](double x) { return 2.0 / (x * x + 1.0); };
    const auto ball = zero_detector_core(tp(0.0), tp(1.0), 0.0, 1.0, 0.05);
    c.require(ball.has_value(), "detector did not trigger on the Blaschke instance");
    if (ball) {
        c.require(std::abs(ball->center) < 1e-15 && std::abs(ball->radius - 80.0) < 1e-12,
                  "ball is not {|z| < 80}");
        c.require(std::abs(cplx(0.0, 1.0) - cplx(ball->center, 0.0)) < ball->radius,
                  "ball misses the zero at i");
    }
    int triggers = 0;
    const Potential f = Potential::free_case();
    for (int k = 0; k < 100; ++k) {
        const double x = -5.0 + 10.0 * k / 99.0;
        if (zero_detector(f, 1.0, x, x + 0.5, 0.05)) ++triggers;
    }
    c.note(std::to_string(triggers) + " free-case triggers in 100 sweeps");
    c.require(triggers == 0, "free case triggered the detector");
    c.finish(2.0);
}

void criterion10_kernel_trend() {
    Criterion c(10, "kernel proximity: sup discrepancy at t = 80 <= t = 20");
    const Potential f1 = Potential::constant(1.0).truncated(1.0);
    const Potential f2 = Potential::piecewise({0.0, 0.5, 1.0}, {1.0, -0.5});
    int idx = 0;
    for (const Potential* f : {&f1, &f2}) {
        const double s = (idx == 0) ? 0.7 : 1.3;  // away from resonant points
        const double lo = kernel_proximity(*f, s, 5.0, 20.0, 8, {}, 2).get("sup_discrepancy");
        const double hi = kernel_proximity(*f, s, 5.0, 80.0, 8, {}, 2).get("sup_discrepancy");
        c.note("potential " + std::to_string(idx) + ": " + fmt(lo) + " -> " + fmt(hi));
        c.require(hi <= lo, "sup discrepancy grew from t=20 to t=80");
        ++idx;
    }
    c.finish(60.0);
}

void criterion11_log_a_identity() {
    Criterion c(11, "corrected log-a identity; variant-form residual reported");
    std::mt19937_64 rng(1111);
    std::uniform_real_distribution<double> us(-10.0, 10.0);
    double worst = 0.0, min_alt = 1e300;
    for (int k = 0; k < 20; ++k) {
        const Potential f = random_piecewise(rng, 4.0, 2.0);
        const double t = f.support_end();
        const LogAIdentity id = log_a_identity_residual(f, t, us(rng));
        worst = std::max(worst, id.residual);
        min_alt = std::min(min_alt, id.alt_form_residual);
    }
    c.note("max residual " + fmt(worst) + ", min variant-form residual " + fmt(min_alt));
    c.require(worst < 1e-7, "corrected-identity residual " + fmt(worst) + " >= 1e-7");
    c.require(min_alt > 1e-3, "variant-form residual unexpectedly small");

    // constant-potential diagonal: log a(t, 0) = ln cosh(q t)
    double diag_err = 0.0;
    for (double q : {0.5, 1.0}) {
        const LogAIdentity id = log_a_identity_residual(Potential::constant(q), 1.0, 0.0);
        diag_err = std::max(diag_err,
                            std::abs(id.log_a - cplx(std::log(std::cosh(q)), 0.0)));
    }
    c.note("diagonal error " + fmt(diag_err));
    c.require(diag_err < 1e-8, "ln cosh(qt) diagonal error " + fmt(diag_err) + " >= 1e-8");
    c.finish(20.0);
}

void criterion12_convergence_scans() {
    Criterion c(12, "convergence scans: frozen past support; decreasing Cauchy moduli");
    const Potential compact = Potential::piecewise({0.0, 0.9, 2.0}, {1.4, -0.7});
    const ConvergenceScan s1 = convergence_scan(compact, 1.1, {2.0, 3.0, 5.0, 8.0, 13.0});
    double var = 0.0;
    for (cplx v : s1.values) var = std::max(var, std::abs(v - s1.values.front()));
    c.note("frozen variation " + fmt(var));
    c.require(var < 1e-13, "f_T+ varies past the support by " + fmt(var));

    const ConvergenceScan s2 =
        convergence_scan(Potential::preset("powerdecay"), 0.8, {10.0, 20.0, 40.0, 80.0, 160.0});
    bool decreasing = true;
    for (std::size_t k = 1; k + 1 < s2.cauchy_moduli.size(); ++k)
        decreasing = decreasing && s2.cauchy_moduli[k] < s2.cauchy_moduli[k - 1];
    std::string seq;
    for (std::size_t k = 0; k + 1 < s2.cauchy_moduli.size(); ++k)
        seq += fmt(s2.cauchy_moduli[k]) + (k + 2 < s2.cauchy_moduli.size() ? " > " : "");
    c.note("L2-not-L1 moduli: " + seq);
    c.require(decreasing, "Cauchy moduli not strictly decreasing");
    c.finish(60.0);
}

void criterion13_determinism() {
    Criterion c(13, "determinism: repeated verify runs are byte-identical");
    namespace fs = std::filesystem;
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    ExperimentConfig cfg;
    cfg.potential = Potential::piecewise({0.0, 0.8, 1.7}, {1.1, -0.9});
    cfg.t = 1.7;
    cfg.seed = 11;
    cfg.output_dir = fs::temp_directory_path() / "nlft_acceptance_det_a";
    fs::remove_all(cfg.output_dir);
    ExperimentConfig cfg2 = cfg;
    cfg2.output_dir = fs::temp_directory_path() / "nlft_acceptance_det_b";
    fs::remove_all(cfg2.output_dir);
    c.require(cli::cmd_verify(cfg) == 0, "first verify run failed");
    c.require(cli::cmd_verify(cfg2) == 0, "second verify run failed");
    for (const char* name : {"summary.json", "verify_residuals.csv"})
        c.require(slurp(cfg.output_dir / name) == slurp(cfg2.output_dir / name),
                  std::string(name) + " differs between runs");
    c.finish(30.0);
}

}  // namespace

int main() {
    criterion1_free_case();
    criterion2_constant_oracle();
    criterion3_determinants();
    criterion4_unimodularity();
    criterion5_parseval();
    criterion6_linearization();
    criterion7_zero_velocity();
    criterion8_zero_location();
    criterion9_zero_detector();
    criterion10_kernel_trend();
    criterion11_log_a_identity();
    criterion12_convergence_scans();
    criterion13_determinism();
    if (g_failures == 0) std::printf("all 13 acceptance criteria passed\n");
    else std::printf("%d acceptance criteria FAILED\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
