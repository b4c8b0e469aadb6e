#pragma once

// Dataset ingestion (CSV), standardization, seeded Gaussian generation, and
// report serialization (JSON / CSV).
//
// Random streams: std::mt19937_64 seeded with the 64-bit seed. Each uniform is
// u = (word >> 11) * 2^-53. Normals come in Box-Muller pairs from consecutive
// uniforms (u1, u2): r = sqrt(-2 ln(1 - u1)), z0 = r cos(2 pi u2),
// z1 = r sin(2 pi u2), consumed z0 then z1. Row i draws p normals g and is
// set to mu + L g (L the lower Cholesky factor of Sigma); with a response
// model one more normal follows for the noise term.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pcinfluence/dataset.hpp"
#include "pcinfluence/error.hpp"
#include "pcinfluence/sample_influence.hpp"
#include "pcinfluence/spectral.hpp"

namespace pcinfluence {

// --- CSV ---------------------------------------------------------------------

struct CsvOptions {
    char delimiter = ',';
    bool header = false;
    /// Header name, or a 1-based column number, of the response column.
    std::optional<std::string> response_column;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Splits one record, honouring double-quoted fields with "" escapes.
inline std::vector<std::string> split_record(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == delim) {
            out.push_back(trim(cell));
            cell.clear();
        } else {
            cell += ch;
        }
    }
    out.push_back(trim(cell));
    return out;
}

inline std::string cell_position(std::size_t row, std::size_t col) {
    return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

inline double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (cell.empty() || ec != std::errc{} || ptr != last)
        fail(ErrorCode::parse_error,
             cell_position(row, col) + ": non-numeric cell '" + cell + "'");
    if (!std::isfinite(value))
        fail(ErrorCode::non_finite, cell_position(row, col) + ": non-finite cell '" + cell + "'");
    return value;
}

}  // namespace detail

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

/// Rows/columns numbering in error messages is 1-based and counts the header.
inline Dataset load_csv(const std::string& path, const CsvOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) detail::fail(ErrorCode::io_error, "cannot open '" + path + "'");

    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_record(line, opt.delimiter);
        if (width == 0) width = cells.size();
        if (cells.size() != width)
            detail::fail(ErrorCode::parse_error,
                         "row " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " fields, expected " +
                             std::to_string(width));
        if (opt.header && names.empty()) {
            names = std::move(cells);
            continue;
        }
        std::vector<double> values(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            values[c] = detail::parse_cell(cells[c], line_no, c + 1);
        rows.push_back(std::move(values));
    }
    if (rows.empty()) detail::fail(ErrorCode::parse_error, "'" + path + "' has no data rows");

    std::optional<std::size_t> response;
    if (opt.response_column) {
        const std::string& want = *opt.response_column;
        for (std::size_t c = 0; c < names.size(); ++c)
            if (names[c] == want) response = c;
        if (!response) {
            std::size_t col = 0;
            const auto [ptr, ec] = std::from_chars(want.data(), want.data() + want.size(), col);
            if (ec != std::errc{} || ptr != want.data() + want.size() || col == 0 || col > width)
                detail::fail(ErrorCode::invalid_argument,
                             "response column '" + want + "' not found");
            response = col - 1;
        }
    }

    Dataset data;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(width - (response ? 1 : 0));
    if (p == 0) detail::fail(ErrorCode::invalid_argument, "no predictor columns");
    data.x.resize(n, p);
    if (response) data.y = Vector(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index col = 0;
        for (std::size_t c = 0; c < width; ++c) {
            const double v = rows[static_cast<std::size_t>(i)][c];
            if (response && c == *response)
                (*data.y)[i] = v;
            else
                data.x(i, col++) = v;
        }
    }
    for (std::size_t c = 0; c < names.size(); ++c)
        if (!response || c != *response) data.column_names.push_back(names[c]);
    return data;
}

/// Writes predictors (and the response as the last column, named "y") with
/// round-trip exact numbers.
inline void write_csv(const Dataset& data, const std::string& path, char delimiter = ',',
                      bool header = false) {
    std::ofstream out(path);
    if (!out) detail::fail(ErrorCode::io_error, "cannot write '" + path + "'");
    if (header) {
        for (Eigen::Index j = 0; j < data.p(); ++j) {
            if (j) out << delimiter;
            const auto ju = static_cast<std::size_t>(j);
            out << (ju < data.column_names.size() ? data.column_names[ju]
                                                  : "x" + std::to_string(j + 1));
        }
        if (data.y) out << delimiter << "y";
        out << '\n';
    }
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index j = 0; j < data.p(); ++j) {
            if (j) out << delimiter;
            out << format_double(data.x(i, j));
        }
        if (data.y) out << delimiter << format_double((*data.y)[i]);
        out << '\n';
    }
    if (!out) detail::fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

// --- standardization ---------------------------------------------------------

/// Re-applies a recorded standardization to raw predictors.
inline Matrix apply_standardization(const StandardizationRecord& rec, const Matrix& raw) {
    switch (rec.mode) {
        case StandardizationMode::none: return raw;
        case StandardizationMode::rows:
            return (raw.colwise() - rec.centers).array().colwise() / rec.scales.array();
        case StandardizationMode::columns:
            return (raw.rowwise() - rec.centers.transpose()).array().rowwise() /
                   rec.scales.transpose().array();
    }
    return raw;
}

/// Per-row or per-column mean 0 and standard deviation 1 (n - 1 divisor).
inline Dataset standardize(const Dataset& data, StandardizationMode mode) {
    data.validate();
    StandardizationRecord rec;
    rec.mode = mode;
    if (mode == StandardizationMode::rows) {
        if (data.p() < 2) detail::fail(ErrorCode::degenerate_sample, "row standardization needs p >= 2");
        rec.centers = data.x.rowwise().mean();
        const Matrix c = data.x.colwise() - rec.centers;
        rec.scales = (c.rowwise().squaredNorm() / static_cast<double>(data.p() - 1)).cwiseSqrt();
    } else if (mode == StandardizationMode::columns) {
        if (data.n() < 2)
            detail::fail(ErrorCode::degenerate_sample, "column standardization needs n >= 2");
        rec.centers = data.x.colwise().mean().transpose();
        const Matrix c = data.x.rowwise() - rec.centers.transpose();
        rec.scales =
            (c.colwise().squaredNorm().transpose() / static_cast<double>(data.n() - 1)).cwiseSqrt();
    }
    if (mode != StandardizationMode::none) {
        const char* unit = mode == StandardizationMode::rows ? "row " : "column ";
        for (Eigen::Index k = 0; k < rec.scales.size(); ++k)
            if (!(rec.scales[k] > 0))
                detail::fail(ErrorCode::degenerate_sample,
                             std::string(unit) + std::to_string(k + 1) + " has zero variance");
    }
    Dataset out = data;
    out.x = apply_standardization(rec, data.x);
    out.standardization = std::move(rec);
    return out;
}

// --- synthetic data ------------------------------------------------------------

/// y = linear * (beta^T x) + quadratic * (beta^T x)^2 + noise_sd * e.
struct ResponseModel {
    Vector beta;
    double linear = 0.0;
    double quadratic = 1.0;
    double noise_sd = 0.1;
};

struct SyntheticSpec {
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    Vector mu;
    SymmetricMatrix sigma;
    std::uint64_t seed = 0;
    std::optional<ResponseModel> response;
};

/// Seeded standard normal stream; see the header comment for the algorithm.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double next() {
        if (cached_) {
            cached_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        cached_ = true;
        return r * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool cached_ = false;
};

/// diag(spikes..., 1, ..., 1) of size p: a few dominant, well separated
/// components over unit noise. Used by the CLI's synthetic inputs.
inline SymmetricMatrix spiked_covariance(Eigen::Index p, const std::vector<double>& spikes) {
    Vector d = Vector::Ones(p);
    for (std::size_t k = 0; k < spikes.size() && static_cast<Eigen::Index>(k) < p; ++k)
        d[static_cast<Eigen::Index>(k)] = spikes[k];
    return SymmetricMatrix::diagonal(d);
}

/// Spikes used when a synthetic spec names none: four components at
/// 20 (1 + p/n) / 2^k, k = 0..3, which keeps them clear of the sample noise
/// bulk (whose edge is near (1 + sqrt(p/n))^2) for any aspect ratio.
inline std::vector<double> default_spikes(Eigen::Index n, Eigen::Index p) {
    const double level = 20.0 * (1.0 + static_cast<double>(p) / static_cast<double>(n));
    return {level, level / 2, level / 4, level / 8};
}

inline Dataset generate_gaussian(const SyntheticSpec& spec) {
    if (spec.n <= 0 || spec.p <= 0)
        detail::fail(ErrorCode::invalid_argument, "synthetic n and p must be positive");
    if (spec.mu.size() != spec.p || spec.sigma.dim() != spec.p)
        detail::fail(ErrorCode::dimension_mismatch, "synthetic mu/sigma dimensions differ from p");
    Eigen::LLT<Matrix> llt(spec.sigma.matrix());
    if (llt.info() != Eigen::Success)
        detail::fail(ErrorCode::not_positive_definite, "synthetic sigma is not positive definite");
    if (spec.response && spec.response->beta.size() != spec.p)
        detail::fail(ErrorCode::dimension_mismatch, "response beta length differs from p");

    NormalStream normals(spec.seed);
    Matrix g(spec.p, spec.n);
    Vector noise(spec.n);
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        for (Eigen::Index j = 0; j < spec.p; ++j) g(j, i) = normals.next();
        if (spec.response) noise[i] = normals.next();
    }
    const Matrix lower = llt.matrixL();
    Dataset data;
    data.x = (lower.triangularView<Eigen::Lower>() * g).transpose();
    data.x.rowwise() += spec.mu.transpose();
    if (spec.response) {
        const auto& rm = *spec.response;
        const Vector index = data.x * rm.beta;
        data.y = (rm.linear * index.array() + rm.quadratic * index.array().square() +
                  rm.noise_sd * noise.array())
                     .matrix();
    }
    return data;
}

// --- reports -------------------------------------------------------------------

enum class ReportFormat { json, csv };

inline nlohmann::json report_to_json(const InfluenceReport& r) {
    nlohmann::json j;
    j["n"] = r.n;
    nlohmann::json cols = nlohmann::json::object();
    if (r.exact) cols["exact"] = *r.exact;
    if (r.approx) cols["approx"] = *r.approx;
    if (r.shortcut) cols["shortcut"] = *r.shortcut;
    j["columns"] = cols;
    if (r.spearman) j["spearman"] = {{"pair", r.spearman_pair}, {"value", *r.spearman}};
    j["timings"] = r.timings;
    j["iterations"] = r.iterations;
    j["flagged"] = r.flagged;
    j["warnings"] = r.warnings;
    j["config"] = r.config;
    return j;
}

inline InfluenceReport report_from_json(const nlohmann::json& j) {
    try {
        InfluenceReport r;
        r.n = j.at("n").get<std::size_t>();
        const auto& cols = j.at("columns");
        if (cols.contains("exact")) r.exact = cols["exact"].get<std::vector<double>>();
        if (cols.contains("approx")) r.approx = cols["approx"].get<std::vector<double>>();
        if (cols.contains("shortcut")) r.shortcut = cols["shortcut"].get<std::vector<double>>();
        if (j.contains("spearman")) {
            r.spearman = j["spearman"].at("value").get<double>();
            r.spearman_pair = j["spearman"].at("pair").get<std::string>();
        }
        r.timings = j.value("timings", std::map<std::string, double>{});
        r.iterations = j.value("iterations", std::map<std::string, std::uint64_t>{});
        r.flagged = j.value("flagged", std::map<std::string, std::vector<std::size_t>>{});
        r.warnings = j.value("warnings", std::vector<std::string>{});
        r.config = j.value("config", std::map<std::string, std::string>{});
        return r;
    } catch (const nlohmann::json::exception& e) {
        detail::fail(ErrorCode::parse_error, std::string("malformed report: ") + e.what());
    }
}

/// CSV layout: index,exact,approx,shortcut with 1-based index; absent columns
/// are left empty.
inline std::string report_to_csv(const InfluenceReport& r) {
    std::ostringstream out;
    out << "index,exact,approx,shortcut\n";
    auto cell = [](const std::optional<std::vector<double>>& col, std::size_t i) {
        return col ? format_double((*col)[i]) : std::string{};
    };
    for (std::size_t i = 0; i < r.n; ++i)
        out << (i + 1) << ',' << cell(r.exact, i) << ',' << cell(r.approx, i) << ','
            << cell(r.shortcut, i) << '\n';
    return out.str();
}

inline void write_report(const InfluenceReport& r, const std::string& path, ReportFormat fmt) {
    std::ofstream out(path);
    if (!out) detail::fail(ErrorCode::io_error, "cannot write '" + path + "'");
    if (fmt == ReportFormat::json)
        out << report_to_json(r).dump(2) << '\n';
    else
        out << report_to_csv(r);
    if (!out) detail::fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

/// Reads a report back. CSV carries the value columns only.
inline InfluenceReport read_report(const std::string& path, ReportFormat fmt) {
    std::ifstream in(path);
    if (!in) detail::fail(ErrorCode::io_error, "cannot open '" + path + "'");
    if (fmt == ReportFormat::json) {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            detail::fail(ErrorCode::parse_error, std::string("malformed report: ") + e.what());
        }
        return report_from_json(j);
    }
    InfluenceReport r;
    std::string line;
    std::getline(in, line);
    if (detail::trim(line) != "index,exact,approx,shortcut")
        detail::fail(ErrorCode::parse_error, "unexpected report CSV header");
    std::array<std::vector<double>, 3> cols;
    std::array<bool, 3> present{true, true, true};
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_record(line, ',');
        if (cells.size() != 4) detail::fail(ErrorCode::parse_error, "ragged report CSV row");
        for (std::size_t c = 0; c < 3; ++c) {
            if (cells[c + 1].empty())
                present[c] = false;
            else
                cols[c].push_back(detail::parse_cell(cells[c + 1], row, c + 2));
        }
        ++r.n;
    }
    if (present[0] && !cols[0].empty()) r.exact = cols[0];
    if (present[1] && !cols[1].empty()) r.approx = cols[1];
    if (present[2] && !cols[2].empty()) r.shortcut = cols[2];
    return r;
}

}  // namespace pcinfluence
