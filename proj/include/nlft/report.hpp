#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlft {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonUnimodularIdentityViolation : Error { using Error::Error; };
struct TailNotConverged : Error { using Error::Error; };
struct PoleAtEvaluationPoint : Error { using Error::Error; };
struct ContourThroughZero : Error { using Error::Error; };
struct PhaseStepTooLarge : Error { using Error::Error; };
struct NewtonDiverged : Error { using Error::Error; };
struct TrackingLost : Error { using Error::Error; };
struct ZeroEscaped : Error { using Error::Error; };
struct NodeNotOnTrajectory : Error { using Error::Error; };
struct NoZeroInBox : Error { using Error::Error; };
struct ZeroInBox : Error { using Error::Error; };
struct FitQualityTooLow : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

/// One named residual compared against its tolerance.
struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Named residuals plus free-form numeric data produced by a verification run.
class DiagnosticReport {
public:
    DiagnosticReport() = default;
    explicit DiagnosticReport(std::string title) : title_(std::move(title)) {}

    // |value| <= tolerance counts as pass; NaN never passes.
    void add_check(const std::string& name, double value, double tolerance) {
        checks_.push_back({name, value, tolerance,
                           std::isfinite(value) && std::abs(value) <= tolerance});
    }

    // For conditions that are booleans rather than residuals.
    void add_flag(const std::string& name, bool ok) {
        checks_.push_back({name, ok ? 0.0 : 1.0, 0.5, ok});
    }

    void set(const std::string& key, double value) { data_[key] = value; }

    double get(const std::string& key) const {
        auto it = data_.find(key);
        if (it == data_.end()) throw Error("report key not found: " + key);
        return it->second;
    }

    bool has(const std::string& key) const { return data_.count(key) > 0; }

    bool all_pass() const {
        for (const auto& c : checks_)
            if (!c.pass) return false;
        return true;
    }

    double max_residual() const {
        double m = 0.0;
        for (const auto& c : checks_) m = std::max(m, std::abs(c.value));
        return m;
    }

    const std::string& title() const { return title_; }
    const std::vector<CheckResult>& checks() const { return checks_; }
    const std::map<std::string, double>& data() const { return data_; }

private:
    std::string title_;
    std::vector<CheckResult> checks_;
    std::map<std::string, double> data_;
};

}  // namespace nlft
