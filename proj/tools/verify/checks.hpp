#pragma once

// The oracle suite behind `pcinfluence verify` and the acceptance binary.
// Every check is seeded and self-contained; tolerances are fixed here.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pcinfluence/pcinfluence.hpp"
#include "verify/instances.hpp"
#include "verify/oracles.hpp"

namespace verify {

using namespace pcinfluence;

struct CheckResult {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct CheckOptions {
    std::vector<double> eps{1e-3, 1e-4, 1e-5};
    std::uint64_t seed = 20240601;
};

namespace detail {

// Records the first failure; later failures only bump the count.
class Tally {
public:
    explicit Tally(std::string name) { result_.name = std::move(name); }

    void expect(bool ok, const std::string& what) {
        ++checked_;
        if (ok) return;
        if (result_.passed) result_.detail = what;
        result_.passed = false;
        ++failed_;
    }

    void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }

    CheckResult done() {
        std::ostringstream out;
        if (result_.passed)
            out << checked_ << " comparisons";
        else
            out << failed_ << "/" << checked_ << " failed, first: " << result_.detail;
        if (!notes_.empty()) out << " (" << notes_ << ")";
        result_.detail = out.str();
        return result_;
    }

private:
    CheckResult result_;
    std::size_t checked_ = 0;
    std::size_t failed_ = 0;
    std::string notes_;
};

inline std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

// |a - b| <= tol * max(1, |a|, |b|)
inline bool close(double a, double b, double tol) { return rel_err(a, b) <= tol; }

}  // namespace detail

/// First-order convergence of the finite-epsilon measure to rho-tilde on
/// Sigma = diag(3, 2, 1), S = {1}, x = (1, 1, 1), where rho-tilde = 1.25.
/// Each successive error ratio must be within 20% of the epsilon ratio.
inline CheckResult check_theorem1(const CheckOptions& opt) {
    detail::Tally t("theorem1");
    if (opt.eps.size() < 2) {
        t.expect(false, "need at least two epsilon values");
        return t.done();
    }
    const PopulationModel m(Vector::Zero(3), SymmetricMatrix::diagonal(Vector{{3.0, 2.0, 1.0}}));
    const auto sel = SubspaceSelection::leading(1, 3);
    const Contaminant c(Vector::Ones(3));
    const double limit = rho_tilde_cov(m, eigendecompose(m.sigma()), sel, c).value;
    t.expect(std::abs(limit - 1.25) <= 1e-12, "rho-tilde " + detail::fmt(limit) + " != 1.25");
    std::vector<double> errs;
    for (double e : opt.eps) errs.push_back(std::abs(finite_epsilon_rho(m, sel, c, e) / limit - 1.0));
    std::string ratios;
    for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
        const double got = errs[i] / errs[i + 1];
        const double want = opt.eps[i] / opt.eps[i + 1];
        ratios += (i ? ", " : "") + detail::fmt(got);
        t.expect(std::abs(got / want - 1.0) <= 0.2,
                 "error ratio " + detail::fmt(got) + " vs epsilon ratio " + detail::fmt(want));
    }
    t.note("error ratios " + ratios);
    return t.done();
}

/// Closed forms against the generic double sum on the influence function,
/// 100 seeded instances per estimator, p <= 6, relative 1e-10.
inline CheckResult check_generic_equivalence(const CheckOptions& opt) {
    detail::Tally t("generic_equivalence");
    std::mt19937_64 rng(opt.seed);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index p = 2 + trial % 5;
        const auto ci = random_cov_instance(rng, p);
        const auto ces = eigendecompose(ci.model.sigma());
        const double a = rho_tilde_cov(ci.model, ces, ci.sel, ci.c).value;
        const double b = rho_tilde_generic(ces, ci.sel, if_covariance(ci.model, ci.c)).value;
        worst = std::max(worst, rel_err(a, b));
        t.expect(detail::close(a, b, 1e-10), "cov trial " + std::to_string(trial));

        const auto ri = random_corr_instance(rng, p);
        const auto res = eigendecompose(ri.model.gamma());
        const double c = rho_tilde_corr(ri.model, res, ri.sel, ri.c).value;
        const double d = rho_tilde_generic(res, ri.sel, if_correlation(ri.model, ri.c)).value;
        worst = std::max(worst, rel_err(c, d));
        t.expect(detail::close(c, d, 1e-10), "corr trial " + std::to_string(trial));

        const auto hi = random_phd_instance(rng, p);
        const auto hes = eigendecompose(hi.model.hbar);
        const double e = rho_tilde_phd(hi.model, hes, hi.sel, hi.c).value;
        const double f = rho_tilde_generic(hes, hi.sel, if_phd(hi.model, hi.c)).value;
        worst = std::max(worst, rel_err(e, f));
        t.expect(detail::close(e, f, 1e-10), "phd trial " + std::to_string(trial));
    }
    t.note("worst relative gap " + detail::fmt(worst));
    return t.done();
}

/// Two-eigenvalue closed form against the covariance measure: the
/// diag(2, 1, 1) fixture (both 2, to 1e-12) and 50 random draws (1e-10).
inline CheckResult check_example1(const CheckOptions& opt) {
    detail::Tally t("example1");
    {
        const PopulationModel m(Vector::Zero(3), SymmetricMatrix::diagonal(Vector{{2.0, 1.0, 1.0}}));
        const Vector x{{std::sqrt(2.0), 1.0, 0.0}};
        const double closed = example1_closed_form(2.0, 1.0, 1, mahalanobis(m, x), 0.5).value;
        const double cov =
            rho_tilde_cov(m, eigendecompose(m.sigma()), SubspaceSelection::leading(1, 3), Contaminant(x))
                .value;
        t.expect(std::abs(closed - 2.0) <= 1e-12, "closed form " + detail::fmt(closed) + " != 2");
        t.expect(std::abs(cov - 2.0) <= 1e-12, "covariance measure " + detail::fmt(cov) + " != 2");
    }
    std::mt19937_64 rng(opt.seed + 1);
    std::uniform_real_distribution<double> level(0.5, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index p = 2 + trial % 5;
        std::uniform_int_distribution<Eigen::Index> kd(1, p - 1);
        const Eigen::Index k = kd(rng);
        const double lp = level(rng);
        const double l1 = lp + level(rng);
        Vector spectrum = Vector::Constant(p, lp);
        spectrum.head(k).setConstant(l1);
        const Matrix q = random_orthogonal(rng, p);
        const PopulationModel m(gaussian_vector(rng, p),
                                SymmetricMatrix(q * spectrum.asDiagonal() * q.transpose()));
        const Vector x = m.mu() + 2.0 * gaussian_vector(rng, p);
        // Whitened contaminant in the eigenbasis; theta is its angle to span(S).
        const Vector z = (q.transpose() * (x - m.mu())).cwiseQuotient(spectrum.cwiseSqrt());
        const double cos2 = z.head(k).squaredNorm() / z.squaredNorm();
        const double closed =
            example1_closed_form(l1, lp, static_cast<std::size_t>(k), mahalanobis(m, x), cos2).value;
        const double cov = rho_tilde_cov(m, eigendecompose(m.sigma()),
                                         SubspaceSelection::leading(static_cast<std::size_t>(k),
                                                                    static_cast<std::size_t>(p)),
                                         Contaminant(x))
                               .value;
        t.expect(detail::close(closed, cov, 1e-10),
                 "draw " + std::to_string(trial) + ": " + detail::fmt(closed) + " vs " + detail::fmt(cov));
    }
    return t.done();
}

/// Truncated-sum shortcut equals the full one-fit approximation elementwise
/// (1e-10 relative to max(1, |value|)) on seeded n = 20, p = 200, K = 1..5.
inline CheckResult check_shortcut_exactness(const CheckOptions& opt) {
    detail::Tally t("shortcut_exactness");
    const Dataset d = default_synthetic(opt.seed, 20, 200);
    double worst = 0.0;
    for (std::size_t k = 1; k <= 5; ++k) {
        const auto sel = SubspaceSelection::leading(k, 200);
        const Vector a = approx_influence(d, Estimator::covariance, sel);
        const Vector s = shortcut_influence(d, sel);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            worst = std::max(worst, rel_err(a[i], s[i]));
            t.expect(detail::close(a[i], s[i], 1e-10),
                     "K=" + std::to_string(k) + " i=" + std::to_string(i + 1) + ": " +
                         detail::fmt(a[i]) + " vs " + detail::fmt(s[i]));
        }
    }
    t.note("worst relative gap " + detail::fmt(worst));
    return t.done();
}

/// Exact leave-one-out against the naive recompute (Jacobi eigen of each
/// deleted-sample covariance), n = 8, p = 3, K = 1, 2, relative 1e-10.
inline CheckResult check_exact_loo_oracle(const CheckOptions& opt) {
    detail::Tally t("exact_loo_oracle");
    std::mt19937_64 rng(opt.seed + 2);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        Dataset d;
        d.x = gaussian_matrix(rng, 8, 3) * Vector{{3.0, 1.5, 0.6}}.asDiagonal();
        for (std::size_t k : {1u, 2u}) {
            const auto sel = SubspaceSelection::leading(k, 3);
            const Vector got = exact_loo(d, Estimator::covariance, sel);
            const auto want = oracle::brute_force_loo_covariance(to_rows(d.x), sel.selected());
            for (Eigen::Index i = 0; i < 8; ++i) {
                const double w = want[static_cast<std::size_t>(i)];
                worst = std::max(worst, rel_err(got[i], w));
                t.expect(detail::close(got[i], w, 1e-10),
                         "trial " + std::to_string(trial) + " K=" + std::to_string(k) + " i=" +
                             std::to_string(i + 1));
            }
        }
    }
    t.note("worst relative gap " + detail::fmt(worst));
    return t.done();
}

/// Ranking agreement of exact leave-one-out and the shortcut on seeded
/// n = 40, p = 200 data: Spearman >= 0.9 for K = 1, 2, 3.
inline CheckResult check_detection(const CheckOptions& opt) {
    detail::Tally t("detection");
    const Dataset d = default_synthetic(opt.seed, 40, 200);
    std::string values;
    for (std::size_t k = 1; k <= 3; ++k) {
        const auto sel = SubspaceSelection::leading(k, 200);
        const double sr =
            spearman(exact_loo(d, Estimator::covariance, sel), shortcut_influence(d, sel));
        values += (k > 1 ? ", " : "") + detail::fmt(sr);
        t.expect(sr >= 0.9, "K=" + std::to_string(k) + " Spearman " + detail::fmt(sr));
    }
    t.note("Spearman " + values);
    return t.done();
}

/// Cases where the measure vanishes identically (to 1e-12): contaminant at
/// the mean, whitened contaminant inside span(S) or span(S'), and PHD with
/// standard predictors and x in span(S) for any response.
inline CheckResult check_zero_influence(const CheckOptions& opt) {
    detail::Tally t("zero_influence");
    std::mt19937_64 rng(opt.seed + 3);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index p = 3 + trial % 4;
        const auto ci = random_cov_instance(rng, p);
        const auto es = eigendecompose(ci.model.sigma());
        const std::string tag = " trial " + std::to_string(trial);
        t.expect(std::abs(rho_tilde_cov(ci.model, es, ci.sel, Contaminant(ci.model.mu())).value) <= 1e-12,
                 "cov at mean" + tag);

        const auto ri = random_corr_instance(rng, p);
        const auto res = eigendecompose(ri.model.gamma());
        t.expect(std::abs(rho_tilde_corr(ri.model, res, ri.sel, Contaminant(ri.model.mu())).value) <= 1e-12,
                 "corr at mean" + tag);

        // z = Sigma^{-1/2}(x - mu) in a span means x - mu = sum c_j sqrt(l_j) eta_j there.
        for (const auto* part : {&ci.sel.selected(), &ci.sel.complement()}) {
            Vector shift = Vector::Zero(p);
            for (auto j : *part) {
                const auto jj = static_cast<Eigen::Index>(j);
                shift += 3.0 * gaussian_vector(rng, 1)[0] * std::sqrt(es.values[jj]) * es.vectors.col(jj);
            }
            const double v = rho_tilde_cov(ci.model, es, ci.sel, Contaminant(ci.model.mu() + shift)).value;
            t.expect(std::abs(v) <= 1e-12, "cov inside one span" + tag + ": " + detail::fmt(v));
        }

        const Matrix q = random_orthogonal(rng, p);
        const Matrix h = 2.0 * q.col(0) * q.col(0).transpose() - 0.7 * q.col(1) * q.col(1).transpose();
        const PhdModel pm(SymmetricMatrix(h),
                          PopulationModel(Vector::Zero(p), SymmetricMatrix(Matrix::Identity(p, p))),
                          0.4 * q.col(0) - 0.1 * q.col(1), 0.3);
        const auto hes = eigendecompose(pm.hbar);
        const auto sel = SubspaceSelection::leading(2, static_cast<std::size_t>(p));
        for (double y : {0.0, 5.0, -1e3, 1e6}) {
            const Vector x = 10.0 * gaussian_vector(rng, 1)[0] * q.col(0) + 4.0 * q.col(1);
            const double v = rho_tilde_phd(pm, hes, sel, Contaminant(x, y)).value;
            t.expect(std::abs(v) <= 1e-12, "phd x in span(S), y=" + detail::fmt(y) + tag + ": " + detail::fmt(v));
        }
    }
    return t.done();
}

/// Trace coefficient against the squared-residual form on 100 random frame
/// pairs (1e-12), and the residual coefficient of a frame with itself is 1.
inline CheckResult check_identities(const CheckOptions& opt) {
    detail::Tally t("identities");
    std::mt19937_64 rng(opt.seed + 4);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index p = 2 + trial % 7;
        std::uniform_int_distribution<Eigen::Index> kd(1, p);
        const Eigen::Index k = kd(rng);
        const OrthonormalFrame a(random_orthogonal(rng, p).leftCols(k));
        const OrthonormalFrame b(random_orthogonal(rng, p).leftCols(k));
        t.expect(std::abs(rv_gcd(a, b) - squared_residual_identity(a, b)) <= 1e-12,
                 "pair " + std::to_string(trial));
        t.expect(std::abs(benasseni_rho1(a, a) - 1.0) <= 1e-12, "self pair " + std::to_string(trial));
    }
    return t.done();
}

/// Empirical influence functions average to zero under the 1/n divisor.
inline CheckResult check_eif_mean_zero(const CheckOptions& opt) {
    detail::Tally t("eif_mean_zero");
    std::mt19937_64 rng(opt.seed + 5);
    Dataset d = gaussian_dataset(opt.seed + 5, 30, 4, {6.0, 3.0});
    d.y = d.x.col(0).cwiseAbs2() + 0.2 * gaussian_vector(rng, 30);
    for (Estimator est : {Estimator::covariance, Estimator::correlation, Estimator::phd}) {
        Matrix total = Matrix::Zero(4, 4);
        for (Eigen::Index i = 0; i < d.n(); ++i) total += eif(est, d, i).matrix();
        const double scale = fit_estimator(est, d, CovarianceDivisor::n).matrix().cwiseAbs().maxCoeff();
        t.expect(total.cwiseAbs().maxCoeff() / d.n() <= 1e-12 * std::max(1.0, scale),
                 to_string(est) + " mean EIF " + detail::fmt(total.cwiseAbs().maxCoeff() / d.n()));
    }
    return t.done();
}

/// Closed-form iteration counts against literal loop counts of the full and
/// truncated inner sums.
inline CheckResult check_iteration_counts(const CheckOptions&) {
    detail::Tally t("iteration_counts");
    for (std::uint64_t n : {5u, 20u, 62u})
        for (std::uint64_t p : {8u, 100u, 2000u})
            for (std::uint64_t k : {1u, 2u, 3u}) {
                if (k >= std::min(p, n - 1)) continue;
                std::uint64_t full = 0, truncated = 0;
                for (std::uint64_t i = 0; i < n; ++i)
                    for (std::uint64_t j = 0; j < k; ++j) {
                        for (std::uint64_t r = k; r < p; ++r) ++full;
                        for (std::uint64_t r = k; r < std::min(p, n - 1); ++r) ++truncated;
                    }
                const auto c = iteration_counts(n, p, k);
                const bool shortcut_ok = p >= n - 1 ? c.shortcut == truncated : true;
                t.expect(c.full == full && shortcut_ok,
                         "n=" + std::to_string(n) + " p=" + std::to_string(p) + " k=" + std::to_string(k));
            }
    const auto c = iteration_counts(62, 2000, 10);
    t.note("n=62 p=2000 K=10: " + std::to_string(c.full) + " vs " + std::to_string(c.shortcut) + " (" +
           detail::fmt(100.0 * static_cast<double>(c.shortcut) / static_cast<double>(c.full)) + "%)");
    return t.done();
}

/// Same seed, same data; different seed, different data.
inline CheckResult check_generation(const CheckOptions& opt) {
    detail::Tally t("generation");
    const Dataset a = default_synthetic(opt.seed, 25, 7);
    const Dataset b = default_synthetic(opt.seed, 25, 7);
    const Dataset c = default_synthetic(opt.seed + 1, 25, 7);
    t.expect(a.x == b.x, "same seed produced different data");
    t.expect(a.x != c.x, "different seeds produced identical data");
    return t.done();
}

using CheckFn = std::function<CheckResult(const CheckOptions&)>;

inline const std::vector<std::pair<std::string, CheckFn>>& registry() {
    static const std::vector<std::pair<std::string, CheckFn>> checks{
        {"theorem1", check_theorem1},
        {"generic_equivalence", check_generic_equivalence},
        {"example1", check_example1},
        {"shortcut_exactness", check_shortcut_exactness},
        {"exact_loo_oracle", check_exact_loo_oracle},
        {"detection", check_detection},
        {"zero_influence", check_zero_influence},
        {"identities", check_identities},
        {"eif_mean_zero", check_eif_mean_zero},
        {"iteration_counts", check_iteration_counts},
        {"generation", check_generation},
    };
    return checks;
}

}  // namespace verify
