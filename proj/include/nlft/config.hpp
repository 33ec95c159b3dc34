#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlft/csv.hpp"
#include "nlft/potential.hpp"
#include "nlft/propagator.hpp"
#include "nlft/spectral.hpp"

namespace nlft {

using json = nlohmann::json;

/// Linear grid start:stop:count (count points inclusive of both ends).
struct GridSpec {
    double start = 0.0;
    double stop = 1.0;
    int count = 2;

    std::vector<double> points() const {
        std::vector<double> out;
        if (count == 1) {
            out.push_back(start);
            return out;
        }
        for (int i = 0; i < count; ++i)
            out.push_back(start + (stop - start) * i / (count - 1));
        return out;
    }
};

struct BoxSpec {
    double s = 0.0;
    double C = 5.0;
};

struct ExperimentConfig {
    Potential potential = Potential::free_case();
    std::map<std::string, double> tolerances;
    GridSpec z_grid{-5.0, 5.0, 21};
    GridSpec s_grid{-10.0, 10.0, 81};
    GridSpec T_grid{1.0, 16.0, 5};
    BoxSpec box;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 1;
    double t = 1.0;
    PropagationOptions propagation;
    ParsevalOptions parseval;
    int threads = 1;
    double detector_eps = 0.05;
    int kernel_grid_n = 8;

    double tolerance(const std::string& name, double fallback) const {
        auto it = tolerances.find(name);
        return it == tolerances.end() ? fallback : it->second;
    }
};

namespace detail {

inline double require_number(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number())
        throw ConfigError("config: " + path + "." + key + " must be a number");
    return j[key].get<double>();
}

inline GridSpec parse_grid(const json& j, const std::string& path) {
    GridSpec g;
    g.start = require_number(j, path, "start");
    g.stop = require_number(j, path, "stop");
    g.count = static_cast<int>(require_number(j, path, "count"));
    if (g.count < 1) throw ConfigError("config: " + path + ".count must be >= 1");
    return g;
}

}  // namespace detail

/// Potential from its JSON spec; `base` resolves relative CSV paths.
inline Potential parse_potential(const json& j, const std::string& path,
                                 const std::filesystem::path& base = ".") {
    if (!j.is_object() || !j.contains("kind"))
        throw ConfigError("config: " + path + ".kind is required");
    const std::string kind = j["kind"].get<std::string>();
    Potential p = Potential::free_case();
    if (kind == "constant") {
        p = Potential::constant(detail::require_number(j, path, "q"));
    } else if (kind == "piecewise") {
        if (!j.contains("breaks") || !j.contains("values"))
            throw ConfigError("config: " + path + " needs breaks and values");
        p = Potential::piecewise(j["breaks"].get<std::vector<double>>(),
                                 j["values"].get<std::vector<double>>());
    } else if (kind == "sampled") {
        if (j.contains("csv")) {
            auto [step, samples] = read_sampled_csv(base / j["csv"].get<std::string>());
            p = Potential::sampled(step, samples);
        } else {
            p = Potential::sampled(detail::require_number(j, path, "grid_step"),
                                   j["samples"].get<std::vector<double>>());
        }
    } else if (kind == "preset") {
        std::map<std::string, double> params;
        if (j.contains("params"))
            for (auto& [k, v] : j["params"].items()) params[k] = v.get<double>();
        p = Potential::preset(j["name"].get<std::string>(), params);
    } else {
        throw ConfigError("config: " + path + ".kind unknown: " + kind);
    }
    if (j.contains("support_end")) p = p.truncated(j["support_end"].get<double>());
    if (j.contains("T")) p = p.truncated(j["T"].get<double>());
    return p;
}

/// Inline potential spec "kind:key=val,key=val", e.g. "constant:q=1,T=1" or
/// "preset:name=powerdecay,p=0.7" or the shorthand "free".
inline Potential parse_potential_arg(const std::string& arg) {
    const auto colon = arg.find(':');
    const std::string kind = arg.substr(0, colon);
    std::map<std::string, std::string> kv;
    if (colon != std::string::npos) {
        std::string rest = arg.substr(colon + 1);
        std::size_t pos = 0;
        while (pos < rest.size()) {
            auto next = rest.find(',', pos);
            if (next == std::string::npos) next = rest.size();
            const std::string item = rest.substr(pos, next - pos);
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw ConfigError("potential spec: expected key=value in '" + item + "'");
            kv[item.substr(0, eq)] = item.substr(eq + 1);
            pos = next + 1;
        }
    }
    auto num = [&](const std::string& key, double fallback, bool required = false) {
        auto it = kv.find(key);
        if (it == kv.end()) {
            if (required) throw ConfigError("potential spec: missing " + key);
            return fallback;
        }
        return std::stod(it->second);
    };

    Potential p = Potential::free_case();
    if (kind == "free") {
        return p;
    } else if (kind == "constant") {
        p = Potential::constant(num("q", 0.0, true));
    } else if (kind == "powerdecay" || kind == "preset") {
        std::map<std::string, double> params;
        for (auto& [k, v] : kv)
            if (k != "name" && k != "T") params[k] = std::stod(v);
        const std::string name = kind == "powerdecay"
                                     ? "powerdecay"
                                     : (kv.count("name") ? kv["name"] : "free");
        p = Potential::preset(name, params);
    } else {
        throw ConfigError("potential spec: unknown kind '" + kind + "'");
    }
    if (kv.count("T")) p = p.truncated(num("T", 0.0));
    return p;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    ExperimentConfig cfg;
    if (j.contains("potential")) cfg.potential = parse_potential(j["potential"], "potential",
                                                                 path.parent_path());
    if (j.contains("tolerances")) {
        for (auto& [k, v] : j["tolerances"].items()) {
            const double tol = v.get<double>();
            if (!(tol > 0)) throw ConfigError("config: tolerances." + k + " must be > 0");
            cfg.tolerances[k] = tol;
        }
    }
    if (j.contains("grids")) {
        const json& g = j["grids"];
        if (g.contains("z")) cfg.z_grid = detail::parse_grid(g["z"], "grids.z");
        if (g.contains("s")) cfg.s_grid = detail::parse_grid(g["s"], "grids.s");
        if (g.contains("T")) cfg.T_grid = detail::parse_grid(g["T"], "grids.T");
        if (g.contains("box")) {
            cfg.box.s = detail::require_number(g["box"], "grids.box", "s");
            cfg.box.C = detail::require_number(g["box"], "grids.box", "C");
        }
    }
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("t")) cfg.t = j["t"].get<double>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("detector_eps")) cfg.detector_eps = j["detector_eps"].get<double>();
    if (j.contains("kernel_grid_n")) cfg.kernel_grid_n = j["kernel_grid_n"].get<int>();
    if (j.contains("propagation")) {
        const json& p = j["propagation"];
        if (p.contains("step_budget")) cfg.propagation.step_budget = p["step_budget"].get<int>();
        if (p.contains("small_omega_threshold")) {
            cfg.propagation.small_omega_threshold = p["small_omega_threshold"].get<double>();
            if (cfg.propagation.small_omega_threshold <= 0 ||
                cfg.propagation.small_omega_threshold >= 1)
                throw ConfigError("config: propagation.small_omega_threshold must be in (0,1)");
        }
    }
    if (j.contains("quadrature")) {
        const json& q = j["quadrature"];
        if (q.contains("tail_tol")) cfg.parseval.tail_tol = q["tail_tol"].get<double>();
        if (q.contains("s_max_cap")) cfg.parseval.s_max_cap = q["s_max_cap"].get<double>();
        if (q.contains("panel_abs_tol"))
            cfg.parseval.panel_abs_tol = q["panel_abs_tol"].get<double>();
    }
    return cfg;
}

}  // namespace nlft
