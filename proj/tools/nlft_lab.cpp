// nlft_lab: batch experiments on the non-linear Fourier transform of a real
// Dirac system.  Subcommands run one experiment each and write CSV artifacts
// plus a summary JSON under the output directory; the exit status is nonzero
// when any residual exceeds its tolerance.

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nlft/cli.hpp"

namespace {

nlft::Rect parse_rect(const std::string& arg) {
    nlft::Rect r;
    char c1, c2, c3;
    std::istringstream in(arg);
    if (!(in >> r.x0 >> c1 >> r.x1 >> c2 >> r.y0 >> c3 >> r.y1) || c1 != ',' || c2 != ',' ||
        c3 != ',')
        throw nlft::ConfigError("--rect expects x0,x1,y0,y1");
    return r;
}

nlft::GridSpec parse_grid(const std::string& arg) {
    nlft::GridSpec g;
    char c1, c2;
    std::istringstream in(arg);
    if (!(in >> g.start >> c1 >> g.stop >> c2 >> g.count) || c1 != ':' || c2 != ':')
        throw nlft::ConfigError("--grid expects start:stop:count");
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"non-linear Fourier transform lab"};
    app.require_subcommand(1);

    std::string config_path, potential_arg, preset_arg, rect_arg, grid_arg, out_dir;
    double t_arg = -1.0, s_arg = 0.0;
    bool s_set = false;
    int threads = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config JSON");
        sub->add_option("--potential", potential_arg, "inline potential spec kind:k=v,...");
        sub->add_option("--preset", preset_arg, "preset potential name");
        sub->add_option("--t", t_arg, "time horizon t");
        sub->add_option("--s", s_arg, "spectral point s")->each([&](std::string) {
            s_set = true;
        });
        sub->add_option("--rect", rect_arg, "search rectangle x0,x1,y0,y1");
        sub->add_option("--grid", grid_arg, "T grid start:stop:count");
        sub->add_option("--threads", threads, "worker threads (env NLFT_LAB_THREADS)");
        sub->add_option("--out", out_dir, "output directory");
    };

    CLI::App* verify = app.add_subcommand("verify", "identity and invariant residuals");
    CLI::App* nlft_cmd = app.add_subcommand("nlft", "a, b, f_T+ over grids");
    CLI::App* parseval = app.add_subcommand("parseval", "non-linear Parseval identity");
    CLI::App* kernels = app.add_subcommand("kernels", "reproducing-kernel proximity sweep");
    CLI::App* zeros = app.add_subcommand("zeros", "locate/track zeros, zero-detector sweep");
    CLI::App* converge = app.add_subcommand("converge", "convergence scan and identities");
    CLI::App* freecase = app.add_subcommand("freecase", "free-case closed-form exactness");
    for (CLI::App* sub : {verify, nlft_cmd, parseval, kernels, zeros, converge, freecase})
        add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        nlft::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = nlft::load_config(config_path);
        if (!potential_arg.empty()) cfg.potential = nlft::parse_potential_arg(potential_arg);
        if (!preset_arg.empty()) cfg.potential = nlft::Potential::preset(preset_arg);
        if (t_arg >= 0.0) cfg.t = t_arg;
        if (s_set) cfg.box.s = s_arg;
        if (!grid_arg.empty()) cfg.T_grid = parse_grid(grid_arg);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (threads > 0) {
            cfg.threads = threads;
        } else if (const char* env = std::getenv("NLFT_LAB_THREADS")) {
            cfg.threads = std::max(1, std::atoi(env));
        }

        if (verify->parsed()) return nlft::cli::cmd_verify(cfg);
        if (nlft_cmd->parsed()) return nlft::cli::cmd_nlft(cfg);
        if (parseval->parsed()) return nlft::cli::cmd_parseval(cfg);
        if (kernels->parsed()) return nlft::cli::cmd_kernels(cfg);
        if (zeros->parsed()) {
            nlft::Rect rect{-4.0, 4.0, -3.0, -0.01};
            if (!rect_arg.empty()) rect = parse_rect(rect_arg);
            return nlft::cli::cmd_zeros(cfg, rect);
        }
        if (converge->parsed()) return nlft::cli::cmd_converge(cfg);
        if (freecase->parsed()) return nlft::cli::cmd_freecase(cfg);
    } catch (const nlft::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
