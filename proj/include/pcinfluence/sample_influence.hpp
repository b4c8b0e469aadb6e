#pragma once

// Sample-level influence of each observation on an eigenvector span:
//
//   exact      r_S(x_i)  = (n-1)^2 [1 - trace(P_S P_S,(i)) / K]   (n+1 fits)
//   approx     r~_S(x_i) = rho~_S evaluated at F_n with the EIF    (1 fit)
//   shortcut   r~*_S     = covariance r~_S summed over r <= n-1 only, computed
//                          in the n-dimensional dual (Gram) space.
//
// Covariance fits switch to the dual space when p > 2n so that no p x p
// matrix is formed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "pcinfluence/dataset.hpp"
#include "pcinfluence/error.hpp"
#include "pcinfluence/influence_functions.hpp"
#include "pcinfluence/influence_measures.hpp"
#include "pcinfluence/spectral.hpp"

namespace pcinfluence {

/// Per-observation influence values plus run metadata.
struct InfluenceReport {
    std::size_t n = 0;
    std::optional<std::vector<double>> exact;
    std::optional<std::vector<double>> approx;
    std::optional<std::vector<double>> shortcut;
    std::optional<double> spearman;
    std::string spearman_pair;  // e.g. "exact/shortcut"
    std::map<std::string, double> timings;
    std::map<std::string, std::uint64_t> iterations;
    std::map<std::string, std::vector<std::size_t>> flagged;  // 1-based, most influential first
    std::vector<std::string> warnings;
    // Echo of the run configuration (estimator, selection, tolerances, seed ...).
    std::map<std::string, std::string> config;

    bool operator==(const InfluenceReport&) const = default;
};

struct SampleOptions {
    CovarianceDivisor divisor = CovarianceDivisor::n;
    std::optional<double> gap_tol;  // default: 1e-8 max|k| per fit
};

struct ExactLooOptions : SampleOptions {
    std::size_t threads = 1;
    /// 0-based observations to evaluate; all when empty.
    std::vector<Eigen::Index> subset;
};

enum class ApproxPath { closed_form, generic };

struct ApproxOptions : SampleOptions {
    ApproxPath path = ApproxPath::closed_form;
};

namespace detail {

inline double divisor_value(CovarianceDivisor d, Eigen::Index m) {
    return d == CovarianceDivisor::n ? static_cast<double>(m) : static_cast<double>(m - 1);
}

inline bool use_dual_space(Eigen::Index n, Eigen::Index p) { return p > 2 * n; }

inline Matrix centered_rows(const Matrix& x) { return x.rowwise() - x.colwise().mean(); }

// Eigen-analysis of the m x m Gram matrix of centered rows. `values` is padded
// with zeros to length p so it describes the full covariance spectrum.
struct DualFit {
    Vector values;    // length p, descending
    Matrix gram_vecs; // m x m, columns paired with values[0..m)
};

inline DualFit dual_fit(const Matrix& centered, double divisor) {
    const auto m = centered.rows();
    const auto p = centered.cols();
    const SymmetricMatrix gram(centered * centered.transpose() / divisor);
    EigenSystem es = eigendecompose(gram, Ordering::descending);
    DualFit fit;
    fit.values = Vector::Zero(p);
    const auto keep = std::min(m, p);
    fit.values.head(keep) = es.values.head(keep);
    fit.gram_vecs = std::move(es.vectors);
    return fit;
}

// Orthonormal p x K frame for the leading selected eigenvectors recovered from
// the dual space, eta = X^T u / ||X^T u||.
inline OrthonormalFrame dual_frame(const Matrix& centered, const DualFit& fit,
                                   const SubspaceSelection& sel) {
    Matrix f = centered.transpose() * fit.gram_vecs(Eigen::all, sel.selected());
    for (Eigen::Index c = 0; c < f.cols(); ++c) f.col(c).normalize();
    // Thin QR restores orthonormality lost to rounding without moving the span.
    Eigen::HouseholderQR<Matrix> qr(f);
    Matrix q = qr.householderQ() * Matrix::Identity(f.rows(), f.cols());
    return OrthonormalFrame(std::move(q));
}

inline void require_dual_selection(const SubspaceSelection& sel, Eigen::Index rank_bound,
                                   const char* what) {
    if (static_cast<Eigen::Index>(sel.max_index()) >= rank_bound)
        fail(ErrorCode::invalid_argument,
             std::string(what) + ": selected index " + std::to_string(sel.max_index() + 1) +
                 " exceeds the sample rank bound " + std::to_string(rank_bound));
}

// Frame of W at the given rows; throws Condition1Error with context.
inline OrthonormalFrame fit_frame(Estimator est, const Dataset& data, const SubspaceSelection& sel,
                                  const SampleOptions& opt, const std::string& context) {
    if (est == Estimator::covariance && use_dual_space(data.n(), data.p())) {
        require_dual_selection(sel, data.n() - 1, "dual-space covariance");
        const Matrix centered = centered_rows(data.x);
        const DualFit fit = dual_fit(centered, divisor_value(opt.divisor, data.n()));
        const auto rep = check_condition1(fit.values, sel, opt.gap_tol);
        if (!rep.ok) throw Condition1Error(rep.j, rep.r, rep.gap, context);
        return dual_frame(centered, fit, sel);
    }
    const EigenSystem es = eigendecompose(fit_estimator(est, data, opt.divisor));
    require_condition1(es, sel, context, opt.gap_tol);
    return OrthonormalFrame::from_selection(es, sel);
}

inline std::vector<Eigen::Index> all_but(Eigen::Index n, Eigen::Index skip) {
    std::vector<Eigen::Index> rows;
    rows.reserve(static_cast<std::size_t>(n - 1));
    for (Eigen::Index i = 0; i < n; ++i)
        if (i != skip) rows.push_back(i);
    return rows;
}

}  // namespace detail

/// Exact leave-one-out influence r_S for every observation (or `opt.subset`).
/// Output has one entry per evaluated observation, in subset order.
inline Vector exact_loo(const Dataset& data, Estimator est, const SubspaceSelection& sel,
                        const ExactLooOptions& opt = {}) {
    data.validate();
    const auto n = data.n();
    if (n < 3) detail::fail(ErrorCode::degenerate_sample, "leave-one-out needs n >= 3");
    if (static_cast<Eigen::Index>(sel.dim()) != data.p())
        detail::fail(ErrorCode::dimension_mismatch, "selection dimension differs from p");

    std::vector<Eigen::Index> targets = opt.subset;
    if (targets.empty()) {
        targets.resize(static_cast<std::size_t>(n));
        std::iota(targets.begin(), targets.end(), Eigen::Index{0});
    }
    for (auto i : targets)
        if (i < 0 || i >= n) detail::fail(ErrorCode::invalid_argument, "subset index out of range");

    Vector out = Vector::Zero(static_cast<Eigen::Index>(targets.size()));
    if (sel.is_full_space()) return out;

    const OrthonormalFrame base = detail::fit_frame(est, data, sel, opt, "full sample");
    const double scale = static_cast<double>((n - 1) * (n - 1));
    const double k = static_cast<double>(sel.k());

    auto evaluate = [&](std::size_t t) {
        const Eigen::Index i = targets[t];
        const Dataset reduced = data.subset(detail::all_but(n, i));
        const OrthonormalFrame frame = detail::fit_frame(
            est, reduced, sel, opt, "without observation " + std::to_string(i + 1));
        out[static_cast<Eigen::Index>(t)] = scale * (1.0 - trace_product(base, frame) / k);
    };

    const std::size_t workers = std::clamp<std::size_t>(opt.threads, 1, targets.size());
    if (workers == 1) {
        for (std::size_t t = 0; t < targets.size(); ++t) evaluate(t);
        return out;
    }

    // Disjoint output slots per worker; the failure with the lowest target
    // position is rethrown so errors are deterministic.
    std::vector<std::exception_ptr> failures(targets.size());
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t t = w; t < targets.size(); t += workers) {
                    try {
                        evaluate(t);
                    } catch (...) {
                        failures[t] = std::current_exception();
                    }
                }
            });
        }
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
    return out;
}

/// One-fit approximation r~_S at F_n for every observation.
inline Vector approx_influence(const Dataset& data, Estimator est, const SubspaceSelection& sel,
                              const ApproxOptions& opt = {}) {
    data.validate();
    const auto n = data.n();
    const auto p = data.p();
    if (n < 2) detail::fail(ErrorCode::degenerate_sample, "need at least 2 observations");
    if (static_cast<Eigen::Index>(sel.dim()) != p)
        detail::fail(ErrorCode::dimension_mismatch, "selection dimension differs from p");

    Vector out = Vector::Zero(n);
    if (sel.is_full_space()) return out;

    if (est == Estimator::covariance) {
        const Matrix centered = detail::centered_rows(data.x);
        const SymmetricMatrix s(centered.transpose() * centered /
                                detail::divisor_value(opt.divisor, n));
        const EigenSystem es = eigendecompose(s);
        require_condition1(es, sel, "full sample", opt.gap_tol);

        if (opt.path == ApproxPath::generic) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const Vector d = centered.row(i).transpose();
                const SymmetricMatrix ifm(d * d.transpose() - s.matrix());
                out[i] = rho_tilde_generic(es, sel, ifm, opt.gap_tol).value;
            }
            return out;
        }

        // y_ri = eta_r^T (x_i - x-bar); the sum over S' is a matrix-vector product
        // per selected j, K (p - K) multiply-adds per observation.
        const Matrix y = centered * es.vectors;
        const Matrix y2_comp = y(Eigen::all, sel.complement()).cwiseAbs2();
        Vector weights(static_cast<Eigen::Index>(sel.complement().size()));
        for (auto js : sel.selected()) {
            const auto j = static_cast<Eigen::Index>(js);
            for (std::size_t b = 0; b < sel.complement().size(); ++b) {
                const double gap = es.values[j] - es.values[static_cast<Eigen::Index>(sel.complement()[b])];
                weights[static_cast<Eigen::Index>(b)] = 1.0 / (gap * gap);
            }
            out += y.col(j).cwiseAbs2().cwiseProduct(y2_comp * weights);
        }
        return out / static_cast<double>(sel.k());
    }

    if (est == Estimator::correlation) {
        const CorrelationModel model = sample_correlation(data, opt.divisor);
        const EigenSystem es = eigendecompose(model.gamma());
        require_condition1(es, sel, "full sample", opt.gap_tol);
        for (Eigen::Index i = 0; i < n; ++i)
            out[i] = rho_tilde_generic(es, sel, if_correlation(model, observation(data, i)),
                                       opt.gap_tol)
                         .value;
        return out;
    }

    const PhdModel model = sample_phd(data);
    const EigenSystem es = eigendecompose(model.hbar);
    require_condition1(es, sel, "full sample", opt.gap_tol);
    for (Eigen::Index i = 0; i < n; ++i)
        out[i] = rho_tilde_generic(es, sel, if_phd(model, observation(data, i)), opt.gap_tol).value;
    return out;
}

/// Covariance r~*_S: inner sum truncated to r <= n - 1 (the sample rank bound),
/// evaluated entirely from the n x n Gram matrix of centered rows. Equal to
/// approx_influence for the covariance estimator.
inline Vector shortcut_influence(const Dataset& data, const SubspaceSelection& sel,
                                 const SampleOptions& opt = {}) {
    data.validate();
    const auto n = data.n();
    const auto p = data.p();
    if (n < 3) detail::fail(ErrorCode::degenerate_sample, "shortcut needs n >= 3");
    if (static_cast<Eigen::Index>(sel.dim()) != p)
        detail::fail(ErrorCode::dimension_mismatch, "selection dimension differs from p");
    detail::require_dual_selection(sel, std::min(n - 2, p), "shortcut");

    const Matrix centered = detail::centered_rows(data.x);
    const double divisor = detail::divisor_value(opt.divisor, n);
    const detail::DualFit fit = detail::dual_fit(centered, divisor);
    const auto rep = check_condition1(fit.values, sel, opt.gap_tol);
    if (!rep.ok) throw Condition1Error(rep.j, rep.r, rep.gap, "full sample");

    // y_ri = sqrt(d lambda_r) u_r[i]; eigenvalues at rounding level carry no
    // signal and are treated as exact zeros.
    const Eigen::Index bound = std::min(n - 1, p);
    const double floor = 1e-12 * std::max(fit.values[0], 0.0);
    Matrix y = Matrix::Zero(n, bound);
    for (Eigen::Index r = 0; r < bound; ++r) {
        const double lr = fit.values[r];
        if (lr > floor) y.col(r) = std::sqrt(divisor * lr) * fit.gram_vecs.col(r);
    }

    std::vector<bool> in_s(static_cast<std::size_t>(bound), false);
    for (auto j : sel.selected()) in_s[j] = true;
    std::vector<Eigen::Index> comp;
    for (Eigen::Index r = 0; r < bound; ++r)
        if (!in_s[static_cast<std::size_t>(r)]) comp.push_back(r);

    Vector out = Vector::Zero(n);
    const Matrix y2_comp = y(Eigen::all, comp).cwiseAbs2();
    Vector weights(static_cast<Eigen::Index>(comp.size()));
    for (auto js : sel.selected()) {
        const auto j = static_cast<Eigen::Index>(js);
        for (std::size_t b = 0; b < comp.size(); ++b) {
            const double gap = fit.values[j] - fit.values[comp[b]];
            weights[static_cast<Eigen::Index>(b)] = 1.0 / (gap * gap);
        }
        out += y.col(j).cwiseAbs2().cwiseProduct(y2_comp * weights);
    }
    return out / static_cast<double>(sel.k());
}

struct IterationCounts {
    std::uint64_t full = 0;
    std::uint64_t shortcut = 0;
};

/// Inner-loop counts over all n observations: n K (p - K) for the full sum over
/// S', n K (n - 1 - K) for the sum truncated at the sample rank bound.
inline IterationCounts iteration_counts(std::uint64_t n, std::uint64_t p, std::uint64_t k) {
    if (n < 2 || k < 1 || k >= std::min(p, n - 1))
        detail::fail(ErrorCode::invalid_argument, "iteration counts need 1 <= k < min(p, n - 1)");
    return {n * k * (p - k), n * k * (n - 1 - k)};
}

namespace detail {
// 1-based ranks with ties sharing their average rank.
inline Vector average_ranks(const Vector& v) {
    const auto n = v.size();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    Vector ranks(n);
    std::size_t start = 0;
    while (start < idx.size()) {
        std::size_t stop = start + 1;
        while (stop < idx.size() && v[idx[stop]] == v[idx[start]]) ++stop;
        const double avg = 0.5 * static_cast<double>(start + stop - 1) + 1.0;
        for (std::size_t t = start; t < stop; ++t) ranks[idx[t]] = avg;
        start = stop;
    }
    return ranks;
}
}  // namespace detail

/// Spearman rank correlation: Pearson correlation of average-tie ranks.
inline double spearman(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        detail::fail(ErrorCode::dimension_mismatch, "spearman inputs differ in length");
    if (a.size() < 2) detail::fail(ErrorCode::invalid_argument, "spearman needs at least 2 values");
    if (!a.allFinite() || !b.allFinite())
        detail::fail(ErrorCode::non_finite, "spearman inputs must be finite");
    const Vector ra = detail::average_ranks(a);
    const Vector rb = detail::average_ranks(b);
    const Vector ca = ra.array() - ra.mean();
    const Vector cb = rb.array() - rb.mean();
    const double va = ca.squaredNorm();
    const double vb = cb.squaredNorm();
    if (va == 0.0 || vb == 0.0)
        detail::fail(ErrorCode::degenerate_sample, "spearman input has zero rank variance");
    return std::clamp(ca.dot(cb) / std::sqrt(va * vb), -1.0, 1.0);
}

/// 1-based indices of the m largest values, largest first; ties by index.
inline std::vector<std::size_t> top_indices(const Vector& v, std::size_t m) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(v.size()));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
        return v[static_cast<Eigen::Index>(a)] > v[static_cast<Eigen::Index>(b)];
    });
    idx.resize(std::min(m, idx.size()));
    for (auto& i : idx) ++i;
    return idx;
}

}  // namespace pcinfluence
