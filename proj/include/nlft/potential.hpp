#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nlft/quadrature.hpp"
#include "nlft/report.hpp"

namespace nlft {

enum class PotentialKind { constant, piecewise_constant, sampled, preset };

/// Real potential f on [0, t_max] driving the Dirac system.  Immutable after
/// construction; evaluation is total (0 outside the support).
class Potential {
public:
    static Potential constant(double q,
                              double support_end = std::numeric_limits<double>::infinity()) {
        Potential p;
        p.kind_ = PotentialKind::constant;
        p.q_ = q;
        p.support_end_ = support_end;
        return p;
    }

    // breaks strictly ascending, len(values) = len(breaks) - 1.
    static Potential piecewise(std::vector<double> breaks, std::vector<double> values) {
        if (breaks.size() < 2 || values.size() + 1 != breaks.size())
            throw ConfigError("piecewise potential: need len(values) = len(breaks) - 1");
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
            if (!(breaks[i] < breaks[i + 1]))
                throw ConfigError("piecewise potential: breaks must be strictly ascending");
        Potential p;
        p.kind_ = PotentialKind::piecewise_constant;
        p.breaks_ = std::move(breaks);
        p.values_ = std::move(values);
        p.support_end_ = p.breaks_.back();
        return p;
    }

    // samples[k] lives at time k*grid_step; midpoint-constant interpolation.
    static Potential sampled(double grid_step, std::vector<double> samples) {
        if (!(grid_step > 0)) throw ConfigError("sampled potential: grid_step must be > 0");
        if (samples.empty()) throw ConfigError("sampled potential: no samples");
        Potential p;
        p.kind_ = PotentialKind::sampled;
        p.grid_step_ = grid_step;
        p.values_ = std::move(samples);
        p.support_end_ = (static_cast<double>(p.values_.size()) - 0.5) * grid_step;
        return p;
    }

    // Presets: "free" (f == 0) and "powerdecay" (amp*(1+t)^-p, L2 but not L1
    // for 1/2 < p <= 1; defaults p = 0.7, amp = 1).
    static Potential preset(const std::string& name, std::map<std::string, double> params = {}) {
        Potential p;
        p.kind_ = PotentialKind::preset;
        p.preset_name_ = name;
        p.params_ = std::move(params);
        if (name == "free") {
            p.support_end_ = 0.0;
        } else if (name == "powerdecay") {
            p.support_end_ = std::numeric_limits<double>::infinity();
        } else {
            throw ConfigError("unknown preset potential: " + name);
        }
        return p;
    }

    static Potential free_case() { return preset("free"); }

    PotentialKind kind() const { return kind_; }
    double support_end() const { return support_end_; }
    const std::string& preset_name() const { return preset_name_; }

    double param(const std::string& key, double fallback) const {
        auto it = params_.find(key);
        return it == params_.end() ? fallback : it->second;
    }

    /// True when the propagator needs substepping (no exact breakpoint set).
    bool is_smooth() const {
        return kind_ == PotentialKind::preset && preset_name_ != "free";
    }

    /// True when f vanishes identically on [0, t].
    bool vanishes_on(double t) const {
        if (std::min(t, support_end_) <= 0.0) return true;
        if (kind_ == PotentialKind::constant) return q_ == 0.0;
        if (kind_ == PotentialKind::preset && preset_name_ == "free") return true;
        return false;
    }

    double evaluate(double t) const {
        if (t >= support_end_ || t < 0.0) return 0.0;
        switch (kind_) {
            case PotentialKind::constant:
                return q_;
            case PotentialKind::piecewise_constant: {
                if (t < breaks_.front() || t >= breaks_.back()) return 0.0;
                auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
                std::size_t idx = static_cast<std::size_t>(it - breaks_.begin()) - 1;
                if (idx >= values_.size()) return 0.0;
                return values_[idx];
            }
            case PotentialKind::sampled: {
                const double k = std::floor(t / grid_step_ + 0.5);
                if (k < 0 || k >= static_cast<double>(values_.size())) return 0.0;
                return values_[static_cast<std::size_t>(k)];
            }
            case PotentialKind::preset: {
                if (preset_name_ == "free") return 0.0;
                const double p = param("p", 0.7);
                const double amp = param("amp", 1.0);
                return amp * std::pow(1.0 + t, -p);
            }
        }
        return 0.0;
    }

    /// f_T: same values below T, zero from T on.
    Potential truncated(double T) const {
        Potential p = *this;
        p.support_end_ = std::min(support_end_, T);
        return p;
    }

    /// c*f, same support.
    Potential scaled(double c) const {
        Potential p = *this;
        switch (kind_) {
            case PotentialKind::constant:
                p.q_ *= c;
                break;
            case PotentialKind::piecewise_constant:
            case PotentialKind::sampled:
                for (double& v : p.values_) v *= c;
                break;
            case PotentialKind::preset:
                if (preset_name_ != "free") p.params_["amp"] = param("amp", 1.0) * c;
                break;
        }
        return p;
    }

    /// Discontinuity points of f strictly inside (a, b), ascending.
    std::vector<double> breakpoints(double a, double b) const {
        std::vector<double> out;
        auto push = [&](double x) {
            if (x > a && x < b) out.push_back(x);
        };
        switch (kind_) {
            case PotentialKind::constant:
            case PotentialKind::preset:
                break;
            case PotentialKind::piecewise_constant:
                for (double x : breaks_) push(x);
                break;
            case PotentialKind::sampled:
                for (std::size_t k = 0; k < values_.size(); ++k)
                    push((static_cast<double>(k) + 0.5) * grid_step_);
                break;
        }
        if (std::isfinite(support_end_)) push(support_end_);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    /// Integral of f^2 over [t0, t1]; exact for piecewise-constant kinds,
    /// adaptive Simpson for smooth presets.
    IntegralValue l2_norm_sq(double t0, double t1, int quad_panels = 16) const {
        return integrate([](double v) { return v * v; }, t0, t1, quad_panels);
    }

    /// sigma-interval test: |int f| >= (1 - sigma) * int |f| over (t0, t1).
    bool is_sigma_interval(double t0, double t1, double sigma, int quad_panels = 16) const {
        const double plain = integrate([](double v) { return v; }, t0, t1, quad_panels).value;
        const double abs_v =
            integrate([](double v) { return std::abs(v); }, t0, t1, quad_panels).value;
        return std::abs(plain) >= (1.0 - sigma) * abs_v;
    }

private:
    template <class G>
    IntegralValue integrate(G&& g, double t0, double t1, int quad_panels) const {
        if (!(t1 > t0)) return {0.0, 0.0};
        const double hi = std::min(t1, support_end_);
        if (hi <= t0) return {0.0, 0.0};
        if (!is_smooth()) {
            // Piecewise constant: sum value^2 * length over constancy cells.
            std::vector<double> nodes = breakpoints(t0, hi);
            nodes.insert(nodes.begin(), t0);
            nodes.push_back(hi);
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
                acc += g(evaluate(0.5 * (nodes[i] + nodes[i + 1]))) * (nodes[i + 1] - nodes[i]);
            return {acc, 0.0};
        }
        return simpson_adaptive([&](double u) { return g(evaluate(u)); }, t0, hi, 1e-10, 1e-14,
                                quad_panels);
    }

    PotentialKind kind_ = PotentialKind::constant;
    double q_ = 0.0;
    double grid_step_ = 1.0;
    double support_end_ = 0.0;
    std::vector<double> breaks_;
    std::vector<double> values_;
    std::string preset_name_;
    std::map<std::string, double> params_;
};

}  // namespace nlft
