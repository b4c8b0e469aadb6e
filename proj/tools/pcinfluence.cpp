// pcinfluence: influence of single observations on principal component
// subspaces. Subcommands: analyze, bench, verify.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pcinfluence/pcinfluence.hpp"
#include "verify/checks.hpp"

namespace {

using namespace pcinfluence;

constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        item = detail::trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& what) {
    T v{};
    std::istringstream in(s);
    if (!(in >> v) || !in.eof()) throw UsageError("bad " + what + " '" + s + "'");
    return v;
}

std::size_t default_threads() {
    if (const char* env = std::getenv("THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct DataOptions {
    std::string input;
    std::string synthetic;
    std::uint64_t seed = 1;
    std::string delimiter = ",";
    bool header = false;
    std::string response;
    std::string standardize = "auto";
};

struct RunOptions {
    std::string estimator = "cov";
    std::size_t k = 1;
    std::string subset;
    std::string methods;
    std::string divisor = "n";
    std::size_t threads = default_threads();
    std::size_t top = 5;
    std::optional<double> gap_tol;
    std::string output;
    std::string format = "json";
};

// Accepts integers >= 1 with a readable message.
const CLI::Validator positive_integer(
    [](const std::string& s) -> std::string {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(s, &used);
            if (used == s.size() && v >= 1) return {};
        } catch (const std::exception&) {
        }
        return "must be a positive integer, got '" + s + "'";
    },
    "POSITIVE");

void add_data_options(CLI::App& cmd, DataOptions& d) {
    auto* in = cmd.add_option("--input", d.input, "CSV file, one observation per row");
    auto* syn = cmd.add_option("--synthetic", d.synthetic,
                               "Seeded Gaussian data: n=..,p=..[,spikes=a:b:..][,response=1]");
    in->excludes(syn);
    cmd.add_option("--seed", d.seed, "Seed for --synthetic")->capture_default_str();
    cmd.add_option("--delimiter", d.delimiter, "CSV delimiter (one character)")
        ->capture_default_str()
        ->check([](const std::string& s) { return s.size() == 1 ? "" : "delimiter must be one character"; });
    cmd.add_flag("--header", d.header, "First CSV row holds column names");
    cmd.add_option("--response", d.response, "Response column (header name or 1-based number)");
    cmd.add_option("--standardize", d.standardize, "auto, none, rows or columns")
        ->capture_default_str()
        ->check(CLI::IsMember({"auto", "none", "rows", "columns"}));
}

void add_run_options(CLI::App& cmd, RunOptions& r, bool with_k) {
    cmd.add_option("--estimator", r.estimator, "cov, corr or phd")
        ->capture_default_str()
        ->check(CLI::IsMember({"cov", "corr", "phd"}));
    if (with_k) {
        cmd.add_option("--k", r.k, "Leading subspace dimension, S = {1..K}")
            ->capture_default_str()
            ->check(positive_integer);
        cmd.add_option("--subset", r.subset, "Explicit 1-based eigen indices, e.g. 1,3 (overrides --k)");
    }
    cmd.add_option("--methods", r.methods, "Comma list of exact, approx, shortcut")->capture_default_str();
    cmd.add_option("--divisor", r.divisor, "Covariance divisor: n or n-1")
        ->capture_default_str()
        ->check(CLI::IsMember({"n", "n-1"}));
    cmd.add_option("--threads", r.threads, "Worker threads for exact leave-one-out")
        ->capture_default_str()
        ->check(positive_integer);
    cmd.add_option("--top", r.top, "Observations flagged per method")->capture_default_str();
    cmd.add_option("--gap-tol", r.gap_tol, "Absolute eigen-gap tolerance (default 1e-8 max|k|)")
        ->check(CLI::NonNegativeNumber);
    cmd.add_option("--output", r.output, "Output path (default: standard output)");
    cmd.add_option("--format", r.format, "json or csv")->capture_default_str()->check(CLI::IsMember({"json", "csv"}));
}

struct LoadedData {
    Dataset data;
    std::map<std::string, std::string> echo;
};

LoadedData load_data(const DataOptions& d, Estimator est) {
    LoadedData out;
    if (d.input.empty() == d.synthetic.empty()) throw UsageError("give exactly one of --input, --synthetic");
    bool synthetic = false;
    if (!d.input.empty()) {
        CsvOptions csv;
        csv.delimiter = d.delimiter[0];
        csv.header = d.header;
        if (!d.response.empty()) csv.response_column = d.response;
        out.data = load_csv(d.input, csv);
        out.echo["input"] = d.input;
    } else {
        synthetic = true;
        std::map<std::string, std::string> kv;
        for (const auto& item : split(d.synthetic, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw UsageError("bad --synthetic entry '" + item + "'");
            kv[detail::trim(item.substr(0, eq))] = detail::trim(item.substr(eq + 1));
        }
        for (const auto& [key, value] : kv)
            if (key != "n" && key != "p" && key != "spikes" && key != "response")
                throw UsageError("unknown --synthetic key '" + key + "'");
        if (!kv.count("n") || !kv.count("p")) throw UsageError("--synthetic needs n and p");
        SyntheticSpec spec;
        spec.n = parse_number<Eigen::Index>(kv["n"], "n");
        spec.p = parse_number<Eigen::Index>(kv["p"], "p");
        if (spec.n < 1 || spec.p < 1) throw UsageError("--synthetic n and p must be positive");
        std::vector<double> spikes;
        if (kv.count("spikes"))
            for (const auto& s : split(kv["spikes"], ':')) spikes.push_back(parse_number<double>(s, "spike"));
        else
            spikes = default_spikes(spec.n, spec.p);
        spec.mu = Vector::Zero(spec.p);
        spec.sigma = spiked_covariance(spec.p, spikes);
        spec.seed = d.seed;
        const bool response = kv.count("response") ? kv["response"] != "0" : est == Estimator::phd;
        if (response) {
            ResponseModel rm;
            rm.beta = Vector::Zero(spec.p);
            rm.beta[0] = 1.0;
            spec.response = rm;
        }
        out.data = generate_gaussian(spec);
        out.echo["synthetic"] = d.synthetic;
        out.echo["seed"] = std::to_string(d.seed);
    }

    StandardizationMode mode = StandardizationMode::none;
    if (d.standardize == "rows")
        mode = StandardizationMode::rows;
    else if (d.standardize == "columns")
        mode = StandardizationMode::columns;
    else if (d.standardize == "auto" && !synthetic && out.data.p() > out.data.n())
        mode = StandardizationMode::rows;
    if (mode != StandardizationMode::none) out.data = standardize(out.data, mode);
    out.echo["standardize"] = to_string(mode);
    return out;
}

AnalysisConfig make_config(const RunOptions& r, const std::string& default_methods) {
    AnalysisConfig cfg;
    cfg.estimator = parse_estimator(r.estimator);
    cfg.k = r.k;
    for (const auto& s : split(r.subset, ',')) {
        const auto v = parse_number<long long>(s, "subset index");
        if (v < 1) throw UsageError("subset indices are 1-based");
        cfg.subset.push_back(static_cast<std::size_t>(v));
    }
    cfg.methods.clear();
    const auto names = split(r.methods.empty() ? default_methods : r.methods, ',');
    for (const auto& m : names) {
        if (m != "exact" && m != "approx" && m != "shortcut") throw UsageError("unknown method '" + m + "'");
        cfg.methods.insert(parse_method(m));
    }
    if (cfg.methods.empty()) throw UsageError("--methods is empty");
    cfg.divisor = r.divisor == "n" ? CovarianceDivisor::n : CovarianceDivisor::n_minus_1;
    cfg.threads = r.threads;
    cfg.top = r.top;
    cfg.gap_tol = r.gap_tol;
    return cfg;
}

// Writes `text` to `path`, or standard output when `path` is empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) detail::fail(ErrorCode::io_error, "cannot write '" + path + "'");
    out << text;
    if (!out) detail::fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

int cmd_analyze(const DataOptions& d, const RunOptions& r, const std::string& plot_path) {
    AnalysisConfig cfg = make_config(r, "approx");
    LoadedData loaded = load_data(d, cfg.estimator);
    cfg.echo = loaded.echo;
    const InfluenceReport report = run_analysis(loaded.data, cfg);
    emit(r.output, r.format == "json" ? report_to_json(report).dump(2) + "\n" : report_to_csv(report));

    if (!plot_path.empty()) {
        // index, exact, approx; the approximation column falls back to the
        // shortcut values, which coincide with it.
        const auto& approx = report.approx ? report.approx : report.shortcut;
        std::ostringstream out;
        out << "index,exact,approx\n";
        for (std::size_t i = 0; i < report.n; ++i)
            out << (i + 1) << ',' << (report.exact ? format_double((*report.exact)[i]) : "") << ','
                << (approx ? format_double((*approx)[i]) : "") << '\n';
        emit(plot_path, out.str());
    }
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    return 0;
}

int cmd_bench(const DataOptions& d, const RunOptions& r, const std::string& sweep) {
    std::vector<std::size_t> ks;
    for (const auto& s : split(sweep, ',')) {
        const auto v = parse_number<long long>(s, "K");
        if (v < 1) throw UsageError("K values must be positive");
        ks.push_back(static_cast<std::size_t>(v));
    }
    if (ks.empty()) throw UsageError("empty K sweep");
    AnalysisConfig cfg = make_config(r, "exact,approx,shortcut");
    if (cfg.methods.size() < 2) throw UsageError("bench needs at least two methods");
    LoadedData loaded = load_data(d, cfg.estimator);
    cfg.echo = loaded.echo;
    emit(r.output, bench_to_csv(run_bench(loaded.data, cfg, ks)));
    return 0;
}

int cmd_verify(const std::string& checks, const std::string& eps, std::uint64_t seed) {
    verify::CheckOptions opt;
    opt.seed = seed;
    if (!eps.empty()) {
        opt.eps.clear();
        for (const auto& s : split(eps, ',')) {
            const double e = parse_number<double>(s, "epsilon");
            if (!(e > 0 && e < 1)) throw UsageError("epsilon values must lie in (0, 1)");
            opt.eps.push_back(e);
        }
    }
    std::vector<std::string> wanted = split(checks, ',');
    for (const auto& w : wanted) {
        bool known = false;
        for (const auto& [name, fn] : verify::registry()) known = known || name == w;
        if (!known) throw UsageError("unknown check '" + w + "'");
    }

    std::optional<verify::CheckResult> first_failure;
    for (const auto& [name, fn] : verify::registry()) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), name) == wanted.end()) continue;
        verify::CheckResult res;
        try {
            res = fn(opt);
        } catch (const std::exception& e) {
            res = {name, false, std::string("threw: ") + e.what()};
        }
        std::cout << (res.passed ? "[PASS] " : "[FAIL] ") << res.name << ": " << res.detail << std::endl;
        if (!res.passed && !first_failure) first_failure = res;
    }
    if (first_failure) {
        std::cerr << "error[verification_failed]: " << first_failure->name << ": " << first_failure->detail
                  << '\n';
        return exit_runtime;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Influence of single observations on principal component subspaces"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML or INI file whose keys mirror the long flags");
    app.set_version_flag("--version", "pcinfluence 1.0.0");

    DataOptions analyze_data, bench_data;
    RunOptions analyze_run, bench_run;
    std::string plot_path, sweep = "1,2,3", checks, eps;
    std::uint64_t verify_seed = verify::CheckOptions{}.seed;

    auto* analyze = app.add_subcommand("analyze", "Per-observation influence for one subspace");
    add_data_options(*analyze, analyze_data);
    add_run_options(*analyze, analyze_run, true);
    analyze->add_option("--emit-plot-data", plot_path, "Also write index,exact,approx CSV here");

    auto* bench = app.add_subcommand("bench", "Time exact vs approximate influence over a K sweep");
    add_data_options(*bench, bench_data);
    add_run_options(*bench, bench_run, false);
    bench->add_option("--ks", sweep, "Comma list of K values, S = {1..K}")->capture_default_str();

    auto* verify_cmd = app.add_subcommand("verify", "Run the seeded oracle suite");
    std::string names;
    for (const auto& [name, fn] : verify::registry()) names += (names.empty() ? "" : ", ") + name;
    verify_cmd->add_option("--check", checks, "Comma list of checks (default: all): " + names);
    verify_cmd->add_option("--eps", eps, "Epsilon sequence for theorem1, e.g. 1e-3,1e-4,1e-5");
    verify_cmd->add_option("--seed", verify_seed, "Seed for the random instances")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error[usage]: " << e.what() << '\n';
        return exit_usage;
    }

    try {
        if (*analyze) return cmd_analyze(analyze_data, analyze_run, plot_path);
        if (*bench) return cmd_bench(bench_data, bench_run, sweep);
        return cmd_verify(checks, eps, verify_seed);
    } catch (const UsageError& e) {
        std::cerr << "error[usage]: " << e.what() << '\n';
        return exit_usage;
    } catch (const Error& e) {
        std::cerr << "error[" << code_name(e.code()) << "]: " << e.what() << '\n';
        return exit_runtime;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << '\n';
        return exit_runtime;
    }
}
