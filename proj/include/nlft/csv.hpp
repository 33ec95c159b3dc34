#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nlft/report.hpp"

namespace nlft {

/// 17 significant digits: doubles round-trip bit-exactly, '.' decimal point.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// CSV writer with LF line endings regardless of platform.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary) {
        if (!out_) throw Error("cannot open " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ',';
            out_ << header[i];
        }
        out_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void row_numeric(const std::vector<double>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << format_double(cells[i]);
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

/// Two-column (t, f) CSV with a fixed grid step starting at t = 0; feeds the
/// sampled potential kind.  A leading header line is allowed.
inline std::pair<double, std::vector<double>> read_sampled_csv(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sampled CSV: " + path.string());
    std::vector<double> ts, vs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ConfigError("sampled CSV: expected two columns");
        try {
            ts.push_back(std::stod(line.substr(0, comma)));
            vs.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            if (ts.empty() && vs.empty()) continue;  // header line
            throw ConfigError("sampled CSV: bad number in line: " + line);
        }
    }
    if (ts.size() < 2) throw ConfigError("sampled CSV: need at least two rows");
    const double step = ts[1] - ts[0];
    if (!(step > 0)) throw ConfigError("sampled CSV: grid step must be positive");
    if (std::abs(ts[0]) > 1e-9 * step)
        throw ConfigError("sampled CSV: grid must start at t = 0");
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (std::abs(ts[i] - ts[0] - static_cast<double>(i) * step) > 1e-6 * step)
            throw ConfigError("sampled CSV: grid step is not fixed");
    return {step, vs};
}

}  // namespace nlft
