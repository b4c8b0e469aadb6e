#pragma once

// Orchestration shared by the command-line front end: run the requested
// sample-influence methods on a dataset, time them, compare rankings.

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pcinfluence/data_io.hpp"
#include "pcinfluence/dataset.hpp"
#include "pcinfluence/sample_influence.hpp"
#include "pcinfluence/spectral.hpp"

namespace pcinfluence {

enum class Method { exact, approx, shortcut };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::exact: return "exact";
        case Method::approx: return "approx";
        case Method::shortcut: return "shortcut";
    }
    return "exact";
}

inline Method parse_method(const std::string& s) {
    if (s == "exact") return Method::exact;
    if (s == "approx") return Method::approx;
    if (s == "shortcut") return Method::shortcut;
    detail::fail(ErrorCode::invalid_argument, "unknown method '" + s + "'");
}

struct AnalysisConfig {
    Estimator estimator = Estimator::covariance;
    /// 1-based eigen indices; takes precedence over k when non-empty.
    std::vector<std::size_t> subset;
    std::size_t k = 1;
    std::set<Method> methods{Method::approx};
    CovarianceDivisor divisor = CovarianceDivisor::n;
    std::size_t threads = 1;
    std::size_t top = 5;
    std::optional<double> gap_tol;
    /// Extra entries copied into the report's config echo.
    std::map<std::string, std::string> echo;

    SubspaceSelection selection(std::size_t p) const {
        return subset.empty() ? SubspaceSelection::leading(k, p)
                              : SubspaceSelection::from_one_based(subset, p);
    }
};

namespace detail {

inline std::string join_indices(const std::vector<std::size_t>& v) {
    std::ostringstream out;
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    return out.str();
}

template <class F>
double time_seconds(F&& f) {
    const auto start = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Spectrum of W(F_n); for dual-space covariance only the Gram eigenvalues.
inline Vector full_sample_spectrum(const Dataset& data, const AnalysisConfig& cfg) {
    if (cfg.estimator == Estimator::covariance && use_dual_space(data.n(), data.p()))
        return dual_fit(centered_rows(data.x), divisor_value(cfg.divisor, data.n())).values;
    return eigendecompose(fit_estimator(cfg.estimator, data, cfg.divisor)).values;
}

}  // namespace detail

inline InfluenceReport run_analysis(const Dataset& data, const AnalysisConfig& cfg) {
    data.validate();
    if (cfg.methods.empty()) detail::fail(ErrorCode::invalid_argument, "no methods requested");
    if (cfg.methods.count(Method::shortcut) && cfg.estimator != Estimator::covariance)
        detail::fail(ErrorCode::invalid_argument,
                     "the shortcut method exists for the covariance estimator only");
    if (cfg.estimator == Estimator::phd && !data.has_response())
        detail::fail(ErrorCode::invalid_argument, "phd requires a response column");
    const auto p = static_cast<std::size_t>(data.p());
    const auto n = static_cast<std::size_t>(data.n());
    const SubspaceSelection sel = cfg.selection(p);

    InfluenceReport report;
    report.n = n;
    report.config = cfg.echo;
    report.config["estimator"] = to_string(cfg.estimator);
    report.config["selection"] = detail::join_indices(sel.one_based());
    report.config["divisor"] = cfg.divisor == CovarianceDivisor::n ? "n" : "n-1";
    report.config["gap_tol"] = cfg.gap_tol ? format_double(*cfg.gap_tol) : "1e-8*max|k|";
    report.config["n"] = std::to_string(n);
    report.config["p"] = std::to_string(p);
    {
        std::string ms;
        for (auto m : cfg.methods) ms += (ms.empty() ? "" : ",") + to_string(m);
        report.config["methods"] = ms;
    }

    const Vector spectrum = detail::full_sample_spectrum(data, cfg);
    const auto rep = check_condition1(spectrum, sel, cfg.gap_tol);
    if (!rep.ok) throw Condition1Error(rep.j, rep.r, rep.gap, "full sample");
    const double scale = spectrum.cwiseAbs().maxCoeff();
    if (rep.gap < ill_conditioned_gap_ratio * scale)
        report.warnings.push_back("ill-conditioned: eigen gap " + format_double(rep.gap) +
                                  " between indices " + std::to_string(rep.j) + " and " +
                                  std::to_string(rep.r));

    const auto k = static_cast<std::uint64_t>(sel.k());
    const auto comp = static_cast<std::uint64_t>(sel.complement().size());

    if (cfg.methods.count(Method::exact)) {
        ExactLooOptions opt;
        opt.divisor = cfg.divisor;
        opt.gap_tol = cfg.gap_tol;
        opt.threads = cfg.threads;
        Vector v;
        report.timings["exact"] = detail::time_seconds([&] { v = exact_loo(data, cfg.estimator, sel, opt); });
        report.exact = detail::to_std(v);
        report.iterations["exact_fits"] = n + 1;
        report.flagged["exact"] = top_indices(v, cfg.top);
    }
    if (cfg.methods.count(Method::approx)) {
        ApproxOptions opt;
        opt.divisor = cfg.divisor;
        opt.gap_tol = cfg.gap_tol;
        Vector v;
        report.timings["approx"] =
            detail::time_seconds([&] { v = approx_influence(data, cfg.estimator, sel, opt); });
        report.approx = detail::to_std(v);
        report.iterations["approx"] = n * k * comp;
        report.flagged["approx"] = top_indices(v, cfg.top);
    }
    if (cfg.methods.count(Method::shortcut)) {
        SampleOptions opt;
        opt.divisor = cfg.divisor;
        opt.gap_tol = cfg.gap_tol;
        Vector v;
        report.timings["shortcut"] =
            detail::time_seconds([&] { v = shortcut_influence(data, sel, opt); });
        report.shortcut = detail::to_std(v);
        const std::uint64_t bound = std::min<std::uint64_t>(n - 1, p);
        report.iterations["shortcut"] = n * k * (bound > k ? bound - k : 0);
        report.flagged["shortcut"] = top_indices(v, cfg.top);
    }

    // Ranking agreement, preferring exact vs shortcut as reported for the
    // high-dimensional workflow.
    const std::vector<std::pair<const std::optional<std::vector<double>>*,
                                const std::optional<std::vector<double>>*>>
        pairs{{&report.exact, &report.shortcut},
              {&report.exact, &report.approx},
              {&report.approx, &report.shortcut}};
    const std::vector<std::string> names{"exact/shortcut", "exact/approx", "approx/shortcut"};
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        if (*pairs[t].first && *pairs[t].second) {
            try {
                report.spearman = spearman(detail::to_eigen(**pairs[t].first),
                                           detail::to_eigen(**pairs[t].second));
                report.spearman_pair = names[t];
            } catch (const Error& e) {
                report.warnings.push_back(std::string("spearman undefined: ") + e.what());
            }
            break;
        }
    }
    return report;
}

struct BenchRow {
    std::size_t k = 0;
    std::optional<double> t_exact;
    std::optional<double> t_approx;
    std::optional<double> t_shortcut;
    std::optional<double> spearman;  // exact vs shortcut (else the first available pair)
    std::string spearman_pair;
};

/// One analysis per K in the sweep, S = {1, ..., K}.
inline std::vector<BenchRow> run_bench(const Dataset& data, AnalysisConfig cfg,
                                       const std::vector<std::size_t>& ks) {
    if (ks.empty()) detail::fail(ErrorCode::invalid_argument, "empty K sweep");
    if (cfg.methods.size() < 2)
        detail::fail(ErrorCode::invalid_argument, "bench needs at least two methods");
    std::vector<BenchRow> rows;
    for (auto k : ks) {
        cfg.k = k;
        cfg.subset.clear();
        const InfluenceReport r = run_analysis(data, cfg);
        BenchRow row;
        row.k = k;
        auto timing = [&](const char* m) -> std::optional<double> {
            const auto it = r.timings.find(m);
            return it == r.timings.end() ? std::nullopt : std::optional<double>(it->second);
        };
        row.t_exact = timing("exact");
        row.t_approx = timing("approx");
        row.t_shortcut = timing("shortcut");
        row.spearman = r.spearman;
        row.spearman_pair = r.spearman_pair;
        rows.push_back(row);
    }
    return rows;
}

inline std::string bench_to_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out << "K,T_exact,T_approx,T_shortcut,SR,SR_pair\n";
    auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; };
    for (const auto& r : rows)
        out << r.k << ',' << cell(r.t_exact) << ',' << cell(r.t_approx) << ','
            << cell(r.t_shortcut) << ',' << cell(r.spearman) << ',' << r.spearman_pair << '\n';
    return out.str();
}

}  // namespace pcinfluence
