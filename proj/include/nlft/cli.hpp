#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "nlft/config.hpp"
#include "nlft/convergence.hpp"
#include "nlft/csv.hpp"
#include "nlft/zeros.hpp"

namespace nlft::cli {

namespace fs = std::filesystem;

/// Aggregates per-check verdicts and serializes the summary JSON.
class Summary {
public:
    explicit Summary(std::string command) : command_(std::move(command)) {}

    void absorb(const DiagnosticReport& rep) {
        for (const auto& c : rep.checks()) checks_.push_back(c);
        for (const auto& [k, v] : rep.data()) data_[k] = v;
    }

    void add(const std::string& name, double value, double tol) {
        checks_.push_back({name, value, tol, std::isfinite(value) && std::abs(value) <= tol});
    }

    void add_flag(const std::string& name, bool ok) {
        checks_.push_back({name, ok ? 0.0 : 1.0, 0.5, ok});
    }

    void set(const std::string& key, double v) { data_[key] = v; }

    bool all_pass() const {
        for (const auto& c : checks_)
            if (!c.pass) return false;
        return true;
    }

    void write(const fs::path& path) const {
        json j;
        j["command"] = command_;
        j["pass"] = all_pass();
        json arr = json::array();
        for (const auto& c : checks_) {
            json e;
            e["name"] = c.name;
            e["value"] = c.value;
            e["tolerance"] = c.tolerance;
            e["pass"] = c.pass;
            arr.push_back(e);
        }
        j["checks"] = arr;
        json d;
        for (const auto& [k, v] : data_) d[k] = v;
        j["data"] = d;
        std::ofstream out(path, std::ios::binary);
        out << j.dump(2) << '\n';
    }

private:
    std::string command_;
    std::vector<CheckResult> checks_;
    std::map<std::string, double> data_;
};

// z samples with |Re z| <= radius and |Im z| t <= 2: the det identity cancels
// e^{2|Im z| t} down to 1, so larger heights are not representable in doubles.
inline std::vector<cplx> sample_z_band(std::mt19937_64& rng, int n, double radius, double t) {
    std::uniform_real_distribution<double> ux(-radius, radius);
    std::uniform_real_distribution<double> uy(-2.0, 2.0);
    std::vector<cplx> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.emplace_back(ux(rng), uy(rng) / std::max(1.0, t));
    return out;
}

inline int finish(Summary& summary, const ExperimentConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    summary.write(cfg.output_dir / "summary.json");
    return summary.all_pass() ? 0 : 1;
}

/// `verify`: algebraic identity residuals plus propagator invariants.
inline int cmd_verify(const ExperimentConfig& cfg) {
    Summary summary("verify");
    std::mt19937_64 rng(cfg.seed);
    const Potential& f = cfg.potential;
    const double t = cfg.t;

    std::vector<cplx> zs = sample_z_band(rng, 48, 5.0, t);
    for (double x : GridSpec{-5.0, 5.0, 11}.points()) zs.push_back(x);

    IdentityTolerances tol;
    tol.det = cfg.tolerance("det", 1e-12);
    tol.det2 = cfg.tolerance("det2", 1e-10);
    tol.unimodular = cfg.tolerance("unimodular", 1e-12);
    summary.absorb(verify_identities(f, t, zs, tol, cfg.propagation));

    // Conjugation symmetry M(t, conj z) = conj M(t, z).
    double conj_res = 0.0;
    for (int i = 0; i < 16; ++i) {
        const cplx z = zs[i % zs.size()];
        const Mat2 M = propagate(f, t, z, cfg.propagation).M;
        const Mat2 Mc = propagate(f, t, std::conj(z), cfg.propagation).M;
        conj_res = std::max({conj_res, std::abs(Mc.a11 - std::conj(M.a11)),
                             std::abs(Mc.a12 - std::conj(M.a12)),
                             std::abs(Mc.a21 - std::conj(M.a21)),
                             std::abs(Mc.a22 - std::conj(M.a22))});
    }
    summary.add("conjugation_residual", conj_res, cfg.tolerance("conjugation", 1e-12));

    // Semigroup M(t2) = M_{t1->t2} M(t1).
    std::uniform_real_distribution<double> ut(0.0, t);
    double semi_res = 0.0;
    for (int i = 0; i < 12; ++i) {
        double t1 = ut(rng), t2 = ut(rng);
        if (t1 > t2) std::swap(t1, t2);
        const cplx z = zs[i % zs.size()];
        const Mat2 M2 = propagate(f, t2, z, cfg.propagation).M;
        const Mat2 C = transfer(f, t1, t2, z, cfg.propagation).M *
                       propagate(f, t1, z, cfg.propagation).M;
        semi_res = std::max({semi_res, std::abs(M2.a11 - C.a11), std::abs(M2.a12 - C.a12),
                             std::abs(M2.a21 - C.a21), std::abs(M2.a22 - C.a22)});
    }
    summary.add("semigroup_residual", semi_res, cfg.tolerance("semigroup", 1e-10));

    // dM/dz against central differences.
    double deriv_res = 0.0;
    for (int i = 0; i < 8; ++i) {
        const cplx z = zs[i % zs.size()];
        PropagationOptions dopts = cfg.propagation;
        dopts.with_derivative = true;
        const Propagated p = propagate(f, t, z, dopts);
        const double h = 1e-6 * (1.0 + std::abs(z));
        const Mat2 Mp = propagate(f, t, z + h, cfg.propagation).M;
        const Mat2 Mm = propagate(f, t, z - h, cfg.propagation).M;
        auto fd = [&](cplx a, cplx b) { return (a - b) / (2.0 * h); };
        const double scale = std::max({std::abs(p.dM.a11), std::abs(p.dM.a12),
                                       std::abs(p.dM.a21), std::abs(p.dM.a22), 1.0});
        deriv_res = std::max({deriv_res,
                              std::abs(fd(Mp.a11, Mm.a11) - p.dM.a11) / scale,
                              std::abs(fd(Mp.a12, Mm.a12) - p.dM.a12) / scale,
                              std::abs(fd(Mp.a21, Mm.a21) - p.dM.a21) / scale,
                              std::abs(fd(Mp.a22, Mm.a22) - p.dM.a22) / scale});
    }
    summary.add("derivative_fd_residual", deriv_res, cfg.tolerance("derivative_fd", 1e-6));

    fs::create_directories(cfg.output_dir);
    CsvWriter csv(cfg.output_dir / "verify_residuals.csv",
                  {"re_z", "im_z", "det_residual", "det2_residual"});
    for (const cplx& z : zs) {
        const Propagated p = propagate(f, t, z, cfg.propagation);
        const double det2 =
            std::abs(p.W.E * p.W.Ets - p.W.Et * p.W.Es - cplx(0.0, 2.0));
        csv.row_numeric({z.real(), z.imag(), std::abs(p.M.det() - 1.0), det2});
    }
    return finish(summary, cfg);
}

/// `freecase`: closed-form exactness of every f = 0 quantity.  Errors are
/// measured relative to max(1, |reference|): theta = e^{2itz} and the sinc
/// kernel reach e^{2t|Im z|}, where an absolute comparison would test bits
/// beyond the representable precision.
inline int cmd_freecase(const ExperimentConfig& cfg) {
    Summary summary("freecase");
    const Potential f = Potential::free_case();
    const double tol = cfg.tolerance("freecase", 1e-12);
    const cplx i(0.0, 1.0);
    const std::vector<cplx> zg = {0.0, 3.14159265358979323846, -3.14159265358979323846,
                                  i, -i, 1.0, -1.0, cplx(1.0, 1.0), cplx(-2.0, 0.5)};
    double worst = 0.0;
    auto err = [](cplx got, cplx ref) {
        return std::abs(got - ref) / std::max(1.0, std::abs(ref));
    };
    for (double t : {0.5, 1.0, 5.0}) {
        for (cplx z : zg) {
            const ScatteringPair sp = hermite_biehler(f, t, z, false, cfg.propagation);
            const cplx ref = std::exp(-i * t * z);
            worst = std::max({worst, err(sp.E, ref), err(sp.E_tilde, -i * ref)});
            const ABPair ab = ab_coefficients(f, t, z, cfg.propagation);
            worst = std::max({worst, std::abs(ab.a - 1.0), std::abs(ab.b)});
            const InnerFunctionValue th = theta_eval(f, t, z, 0, cfg.propagation);
            worst = std::max(worst, err(th.theta, std::exp(2.0 * i * t * z)));
        }
        for (cplx lam : zg)
            for (cplx z : zg) {
                const cplx K = kernel_K(f, t, lam, z, cfg.propagation);
                const cplx d = std::conj(lam) - z;
                const double pi = 3.14159265358979323846;
                const cplx sinc = std::abs(d) < 1e-8 ? cplx(t / pi) : std::sin(t * d) / (pi * d);
                worst = std::max(worst, err(K, sinc));
            }
    }
    summary.add("freecase_max_error", worst, tol);
    return finish(summary, cfg);
}

/// `nlft`: a, b and f_T^dagger over the configured T x s grids.
inline int cmd_nlft(const ExperimentConfig& cfg) {
    Summary summary("nlft");
    fs::create_directories(cfg.output_dir);
    CsvWriter csv(cfg.output_dir / "nlft.csv",
                  {"T", "s", "re_a", "im_a", "re_b", "im_b", "re_f_dagger", "im_f_dagger"});
    // |a|^2 - |b|^2 cancels e^{2 int|f|}-sized products down to 1, so the
    // verdict is measured relative to |a|^2.
    double max_unimod = 0.0;
    for (double T : cfg.T_grid.points())
        for (double s : cfg.s_grid.points()) {
            const ABPair ab = ab_coefficients(cfg.potential, T, s, cfg.propagation);
            const cplx fd = ab.b / ab.a;
            max_unimod = std::max(max_unimod,
                                  std::abs(std::norm(ab.a) - std::norm(ab.b) - 1.0) /
                                      std::max(1.0, std::norm(ab.a)));
            csv.row_numeric({T, s, ab.a.real(), ab.a.imag(), ab.b.real(), ab.b.imag(),
                             fd.real(), fd.imag()});
        }
    summary.add("unimodular_relative_residual", max_unimod, cfg.tolerance("unimodular", 1e-12));
    return finish(summary, cfg);
}

/// `parseval`: non-linear Parseval identity residual.
inline int cmd_parseval(const ExperimentConfig& cfg) {
    Summary summary("parseval");
    ParsevalOptions quad = cfg.parseval;
    quad.threads = cfg.threads;
    const DiagnosticReport rep =
        nonlinear_parseval_residual(cfg.potential, cfg.t, quad, cfg.propagation);
    summary.absorb(rep);

    fs::create_directories(cfg.output_dir);
    CsvWriter csv(cfg.output_dir / "parseval.csv", {"s", "log_abs_a"});
    for (double s : cfg.s_grid.points()) {
        const Mat2d M = propagate_real(cfg.potential, cfg.t, s, cfg.propagation);
        const double re_b = 0.5 * (M.a11 - M.a22), im_b = -0.5 * (M.a12 + M.a21);
        csv.row_numeric({s, 0.5 * std::log1p(re_b * re_b + im_b * im_b)});
    }
    return finish(summary, cfg);
}

/// `kernels`: kernel-proximity sweep over the T grid at the configured box.
inline int cmd_kernels(const ExperimentConfig& cfg) {
    Summary summary("kernels");
    fs::create_directories(cfg.output_dir);
    CsvWriter csv(cfg.output_dir / "kernel_proximity.csv", {"t", "sup_discrepancy"});
    std::vector<double> sups;
    for (double t : cfg.T_grid.points()) {
        const DiagnosticReport rep = kernel_proximity(cfg.potential, cfg.box.s, cfg.box.C, t,
                                                      cfg.kernel_grid_n, cfg.propagation,
                                                      cfg.threads);
        sups.push_back(rep.get("sup_discrepancy"));
        csv.row_numeric({t, sups.back()});
    }
    summary.add_flag("sup_discrepancy_trend_nonincreasing",
                     sups.size() < 2 || sups.back() <= sups.front());
    summary.set("sup_first", sups.front());
    summary.set("sup_last", sups.back());
    return finish(summary, cfg);
}

/// `zeros`: locate, track, and sweep the zero detector.
inline int cmd_zeros(const ExperimentConfig& cfg, const Rect& rect) {
    Summary summary("zeros");
    fs::create_directories(cfg.output_dir);
    const Potential& f = cfg.potential;
    const double t = cfg.t;

    const ZeroSearchResult zs = locate_zeros(f, t, rect, 1e-11, cfg.propagation);
    summary.add_flag("zero_search_consistent", zs.consistent());
    summary.set("zero_count", static_cast<double>(zs.zeros.size()));
    summary.set("winding_total", static_cast<double>(zs.winding_total));

    CsvWriter zcsv(cfg.output_dir / "zeros.csv", {"re_z", "im_z", "abs_E"});
    double max_resid = 0.0;
    bool all_lower = true;
    for (cplx z : zs.zeros) {
        const double r = std::abs(hermite_biehler(f, t, z, false, cfg.propagation).E);
        max_resid = std::max(max_resid, r);
        all_lower = all_lower && z.imag() < 0.0;
        zcsv.row_numeric({z.real(), z.imag(), r});
    }
    summary.add("zero_residual_max", max_resid, cfg.tolerance("zero_residual", 1e-11));
    summary.add_flag("zeros_in_lower_half_plane", all_lower);

    if (!zs.zeros.empty()) {
        cplx z0 = zs.zeros.front();
        for (cplx z : zs.zeros)
            if (std::abs(z.real() - cfg.box.s) < std::abs(z0.real() - cfg.box.s)) z0 = z;
        TrackOptions topts;
        topts.box_s = cfg.box.s;
        topts.box_C = cfg.box.C;
        topts.search = rect.dilated(8.0);
        // A zero may legitimately leave the search region or stall; report
        // the event instead of aborting the whole command.
        try {
            const ZeroTrajectory traj =
                track_zero(f, t, 2.0 * t, z0, t / 16.0, topts, cfg.propagation);
            CsvWriter tcsv(cfg.output_dir / "trajectory.csv",
                           {"t", "re_z", "im_z", "residual", "box_status"});
            for (const auto& n : traj.nodes)
                tcsv.row({format_double(n.t), format_double(n.z.real()),
                          format_double(n.z.imag()), format_double(n.residual),
                          to_string(n.status)});
            summary.set("trajectory_nodes", static_cast<double>(traj.nodes.size()));
            summary.set("trajectory_complete", 1.0);
        } catch (const ZeroEscaped&) {
            summary.set("trajectory_complete", 0.0);
        } catch (const TrackingLost&) {
            summary.set("trajectory_complete", 0.0);
        }
    }

    CsvWriter lcsv(cfg.output_dir / "detector.csv",
                   {"x", "y", "triggered", "ball_center", "ball_radius"});
    const std::vector<double> xs = cfg.s_grid.points();
    int triggers = 0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const auto ball = zero_detector(f, t, xs[i], xs[i + 1], cfg.detector_eps, 0.1,
                                        cfg.propagation);
        if (ball) ++triggers;
        lcsv.row_numeric({xs[i], xs[i + 1], ball ? 1.0 : 0.0, ball ? ball->center : 0.0,
                          ball ? ball->radius : 0.0});
    }
    summary.set("detector_triggers", triggers);
    return finish(summary, cfg);
}

/// `converge`: scan, corrected log-a identity, equivalence surface.
inline int cmd_converge(const ExperimentConfig& cfg) {
    Summary summary("converge");
    fs::create_directories(cfg.output_dir);
    const double s = cfg.box.s;

    const ConvergenceScan scan = convergence_scan(cfg.potential, s, cfg.T_grid.points(),
                                                  cfg.propagation);
    CsvWriter scsv(cfg.output_dir / "scan.csv",
                   {"T", "re_f_dagger", "im_f_dagger", "cauchy_modulus"});
    for (std::size_t k = 0; k < scan.T_grid.size(); ++k)
        scsv.row_numeric({scan.T_grid[k], scan.values[k].real(), scan.values[k].imag(),
                          scan.cauchy_moduli[k]});

    const LogAIdentity ident = log_a_identity_residual(cfg.potential, cfg.t, s,
                                                       cfg.propagation);
    summary.add("log_a_identity_residual", ident.residual,
                cfg.tolerance("log_a_identity", 1e-7));
    summary.set("unnormalized_residual", ident.alt_form_residual);
    summary.set("log_abs_a", ident.log_a.real());
    summary.set("arg_a", ident.log_a.imag());

    const std::vector<double> sg = cfg.s_grid.points();
    std::vector<double> yg = sg;
    const EquivalenceSurface surf =
        equivalence_surface(cfg.potential, cfg.t, sg, yg, cfg.propagation, cfg.threads);
    CsvWriter ecsv(cfg.output_dir / "surface.csv", {"s", "y", "re_I", "im_I"});
    for (std::size_t is = 0; is < sg.size(); ++is)
        for (std::size_t iy = 0; iy < yg.size(); ++iy)
            ecsv.row_numeric({sg[is], yg[iy], surf.at(is, iy).real(), surf.at(is, iy).imag()});
    summary.add("surface_diagonal_residual", surf.max_diag_residual,
                cfg.tolerance("surface_diagonal", 1e-6));
    return finish(summary, cfg);
}

}  // namespace nlft::cli
