#pragma once

// Second-order subspace influence measure
//
//   rho~_S = (1/K) sum_{j in S} sum_{r in S'} (v_j^T IF v_r)^2 / (k_j - k_r)^2,
//
// its closed forms for the covariance, correlation and PHD estimators, and the
// finite-epsilon perturbation oracle it is the limit of.

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "pcinfluence/error.hpp"
#include "pcinfluence/influence_functions.hpp"
#include "pcinfluence/spectral.hpp"

namespace pcinfluence {

/// Gap below this fraction of max|k| marks a value as ill-conditioned.
inline constexpr double ill_conditioned_gap_ratio = 1e-6;

struct InfluenceValue {
    double value = 0.0;
    std::size_t k = 0;
    std::optional<Estimator> estimator;  // empty for the generic path
    double min_gap = 0.0;
    bool ill_conditioned = false;
};

namespace detail {

inline InfluenceValue make_value(double v, const EigenSystem& es, const SubspaceSelection& sel,
                                 const Condition1Report& rep, std::optional<Estimator> est) {
    InfluenceValue out;
    out.value = v;
    out.k = sel.k();
    out.estimator = est;
    out.min_gap = rep.gap;
    out.ill_conditioned = rep.gap < ill_conditioned_gap_ratio * es.max_abs_value();
    return out;
}

inline void require_same_dim(const EigenSystem& es, const SubspaceSelection& sel,
                             Eigen::Index p) {
    if (es.dim() != p || static_cast<Eigen::Index>(sel.dim()) != p)
        fail(ErrorCode::dimension_mismatch, "eigensystem, selection and model dimensions differ");
}

// sum_{j in S, r in S'} cross(j, r)^2 / (k_j - k_r)^2, `cross` indexed by
// positions in S and S'.
inline double weighted_cross_sum(const EigenSystem& es, const SubspaceSelection& sel,
                                 const Matrix& cross) {
    double total = 0.0;
    const auto& s = sel.selected();
    const auto& sc = sel.complement();
    for (std::size_t a = 0; a < s.size(); ++a) {
        const double kj = es.values[static_cast<Eigen::Index>(s[a])];
        for (std::size_t b = 0; b < sc.size(); ++b) {
            const double diff = kj - es.values[static_cast<Eigen::Index>(sc[b])];
            const double c = cross(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            total += (c * c) / (diff * diff);
        }
    }
    return total;
}

}  // namespace detail

/// Generic form: any symmetric estimator given its eigensystem and influence
/// function value. Throws Condition1Error when the S / S' gap closes.
inline InfluenceValue rho_tilde_generic(const EigenSystem& es, const SubspaceSelection& sel,
                                        const SymmetricMatrix& ifm,
                                        std::optional<double> gap_tol = std::nullopt) {
    detail::require_same_dim(es, sel, ifm.dim());
    const auto rep = check_condition1(es, sel, gap_tol);
    if (!rep.ok) throw Condition1Error(rep.j, rep.r, rep.gap);
    if (sel.is_full_space()) return detail::make_value(0.0, es, sel, rep, std::nullopt);
    const Matrix vs = es.vectors(Eigen::all, sel.selected());
    const Matrix vc = es.vectors(Eigen::all, sel.complement());
    const Matrix cross = vs.transpose() * ifm.matrix() * vc;
    const double v = detail::weighted_cross_sum(es, sel, cross) / static_cast<double>(sel.k());
    return detail::make_value(v, es, sel, rep, std::nullopt);
}

/// Covariance closed form: (1/K) sum y_j^2 y_r^2 / (l_j - l_r)^2 with
/// y_m = eta_m^T (x - mu). `es` must be the eigensystem of model.sigma().
inline InfluenceValue rho_tilde_cov(const PopulationModel& model, const EigenSystem& es,
                                    const SubspaceSelection& sel, const Contaminant& c,
                                    std::optional<double> gap_tol = std::nullopt) {
    detail::require_same_dim(es, sel, model.dim());
    detail::require_dim(model.dim(), c.x);
    const auto rep = check_condition1(es, sel, gap_tol);
    if (!rep.ok) throw Condition1Error(rep.j, rep.r, rep.gap);
    const Vector y = es.vectors.transpose() * (c.x - model.mu());
    const Vector ys = y(sel.selected());
    const Vector yc = y(sel.complement());
    const Matrix cross = ys * yc.transpose();
    const double v = sel.is_full_space()
                         ? 0.0
                         : detail::weighted_cross_sum(es, sel, cross) / static_cast<double>(sel.k());
    return detail::make_value(v, es, sel, rep, Estimator::covariance);
}

/// Correlation closed form:
///   (1/K) sum {u_j u_r - (a_j + a_r)/2 g_j^T D g_r}^2 / (a_j - a_r)^2,
/// u_m = g_m^T z~. `es` must be the eigensystem of model.gamma().
inline InfluenceValue rho_tilde_corr(const CorrelationModel& model, const EigenSystem& es,
                                     const SubspaceSelection& sel, const Contaminant& c,
                                     std::optional<double> gap_tol = std::nullopt) {
    detail::require_same_dim(es, sel, model.dim());
    detail::require_dim(model.dim(), c.x);
    const auto rep = check_condition1(es, sel, gap_tol);
    if (!rep.ok) throw Condition1Error(rep.j, rep.r, rep.gap);
    if (sel.is_full_space()) return detail::make_value(0.0, es, sel, rep, Estimator::correlation);

    const Vector z = model.standardize(c.x);
    const Vector d = z.cwiseAbs2();
    const Vector u = es.vectors.transpose() * z;
    const Matrix gs = es.vectors(Eigen::all, sel.selected());
    const Matrix gc = es.vectors(Eigen::all, sel.complement());
    const Matrix gdg = gs.transpose() * d.asDiagonal() * gc;

    Matrix cross(gdg.rows(), gdg.cols());
    for (Eigen::Index a = 0; a < cross.rows(); ++a) {
        const auto j = static_cast<Eigen::Index>(sel.selected()[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < cross.cols(); ++b) {
            const auto r = static_cast<Eigen::Index>(sel.complement()[static_cast<std::size_t>(b)]);
            cross(a, b) = u[j] * u[r] - 0.5 * (es.values[j] + es.values[r]) * gdg(a, b);
        }
    }
    const double v = detail::weighted_cross_sum(es, sel, cross) / static_cast<double>(sel.k());
    return detail::make_value(v, es, sel, rep, Estimator::correlation);
}

/// Relative threshold below which an average-Hessian eigenvalue counts as zero.
inline constexpr double phd_zero_eigenvalue_ratio = 1e-10;

/// PHD closed form, valid when S indexes exactly the non-zero eigenvalues of
/// H and b_OLS lies in their span:
///   (1/K) sum_j l_j^{-2} sum_r [{y - E(Y)}(w_j w_r - e_j^T S^{-1} e_r)
///                               - (l_j e_j^T Sigma w + e_j^T b) w_r]^2.
inline InfluenceValue rho_tilde_phd(const PhdModel& model, const EigenSystem& es,
                                    const SubspaceSelection& sel, const Contaminant& c,
                                    std::optional<double> gap_tol = std::nullopt) {
    detail::require_same_dim(es, sel, model.dim());
    detail::require_dim(model.dim(), c.x);
    if (!c.y) detail::fail(ErrorCode::invalid_argument, "PHD influence needs a response value y");

    const double zero_tol = phd_zero_eigenvalue_ratio * std::max(es.max_abs_value(), 1e-300);
    for (auto j : sel.selected())
        if (std::abs(es.values[static_cast<Eigen::Index>(j)]) <= zero_tol)
            detail::fail(ErrorCode::invalid_argument,
                         "PHD selection includes a zero eigenvalue at index " +
                             std::to_string(j + 1));
    for (auto r : sel.complement())
        if (std::abs(es.values[static_cast<Eigen::Index>(r)]) > zero_tol)
            detail::fail(ErrorCode::invalid_argument,
                         "PHD selection must cover every non-zero eigenvalue; index " +
                             std::to_string(r + 1) + " is non-zero");
    const auto rep = check_condition1(es, sel, gap_tol);
    if (!rep.ok) throw Condition1Error(rep.j, rep.r, rep.gap);
    if (sel.is_full_space()) return detail::make_value(0.0, es, sel, rep, Estimator::phd);

    const Matrix es_sel = es.vectors(Eigen::all, sel.selected());
    const Vector b_off = model.b_ols - es_sel * (es_sel.transpose() * model.b_ols);
    if (b_off.norm() > 1e-8 * std::max(1.0, model.b_ols.norm()))
        detail::fail(ErrorCode::invalid_argument,
                     "b_OLS is not in the span of the selected eigenvectors");

    const Vector w = model.pop.solve(c.x - model.pop.mu());
    const Vector wm = es.vectors.transpose() * w;
    const Vector sigma_w = model.pop.sigma().matrix() * w;
    const Matrix sinv_cross =
        es_sel.transpose() * model.pop.inverse() * es.vectors(Eigen::all, sel.complement());
    const double dy = *c.y - model.ey;

    double total = 0.0;
    for (std::size_t a = 0; a < sel.k(); ++a) {
        const auto j = static_cast<Eigen::Index>(sel.selected()[a]);
        const double lj = es.values[j];
        const auto ej = es.vectors.col(j);
        const double lead = lj * ej.dot(sigma_w) + ej.dot(model.b_ols);
        double inner = 0.0;
        for (std::size_t b = 0; b < sel.complement().size(); ++b) {
            const auto r = static_cast<Eigen::Index>(sel.complement()[b]);
            const double term = dy * (wm[j] * wm[r] - sinv_cross(static_cast<Eigen::Index>(a),
                                                                 static_cast<Eigen::Index>(b))) -
                                lead * wm[r];
            inner += term * term;
        }
        total += inner / (lj * lj);
    }
    return detail::make_value(total / static_cast<double>(sel.k()), es, sel, rep, Estimator::phd);
}

/// Influence function of the j-th eigenvector (0-based j, unique k_j):
///   sum_{r != j} (v_r^T IF v_j) / (k_j - k_r) v_r.
inline Vector eigenvector_influence(const EigenSystem& es, std::size_t j,
                                    const SymmetricMatrix& ifm) {
    const auto jj = static_cast<Eigen::Index>(j);
    if (jj >= es.dim()) detail::fail(ErrorCode::invalid_argument, "eigen index out of range");
    const Vector ifv = ifm.matrix() * es.vectors.col(jj);
    Vector out = Vector::Zero(es.dim());
    for (Eigen::Index r = 0; r < es.dim(); ++r) {
        if (r == jj) continue;
        const double gap = es.values[jj] - es.values[r];
        if (std::abs(gap) <= default_gap_tolerance(es))
            throw Condition1Error(j + 1, static_cast<std::size_t>(r) + 1, std::abs(gap));
        out += (es.vectors.col(r).dot(ifv) / gap) * es.vectors.col(r);
    }
    return out;
}

/// rho~ for S = {j}; equals ||IF(v_j)||^2.
inline InfluenceValue k1_norm_reduction(const EigenSystem& es, std::size_t j,
                                        const SymmetricMatrix& ifm) {
    return rho_tilde_generic(es, SubspaceSelection({j}, static_cast<std::size_t>(es.dim())), ifm);
}

/// lambda_1 lambda_p MD^4 / (K (lambda_1 - lambda_p)^2) cos^2(t) (1 - cos^2(t)),
/// for Sigma with two eigenvalue blocks and S the leading block.
inline InfluenceValue example1_closed_form(double lambda1, double lambdap, std::size_t k,
                                           double md, double cos2theta) {
    if (!(lambdap < lambda1))
        detail::fail(ErrorCode::invalid_argument, "need lambda_p < lambda_1");
    if (k == 0) detail::fail(ErrorCode::invalid_argument, "k must be positive");
    if (!(md >= 0)) detail::fail(ErrorCode::invalid_argument, "Mahalanobis distance must be >= 0");
    if (!(cos2theta >= 0 && cos2theta <= 1))
        detail::fail(ErrorCode::invalid_argument, "cos^2(theta) must lie in [0, 1]");
    const double gap = lambda1 - lambdap;
    const double md4 = md * md * md * md;
    InfluenceValue out;
    out.value = lambda1 * lambdap * md4 / (static_cast<double>(k) * gap * gap) * cos2theta *
                (1.0 - cos2theta);
    out.k = k;
    out.estimator = Estimator::covariance;
    out.min_gap = gap;
    return out;
}

/// sqrt((x - mu)^T Sigma^{-1} (x - mu)) through a triangular solve.
inline double mahalanobis(const PopulationModel& model, const Vector& x) {
    detail::require_dim(model.dim(), x);
    return model.whiten(x).norm();
}

/// (1/eps^2)[1 - trace(P_S P_S(eps))/K] for the covariance functional at the
/// mixture (1 - eps)F + eps Delta_x, whose covariance is
/// (1 - eps)Sigma + eps(1 - eps)(x - mu)(x - mu)^T.
///
/// K - trace(P_S P_S(eps)) is evaluated as trace(P_S' P_S(eps)) to avoid the
/// cancellation in 1 - trace/K at small eps.
inline double finite_epsilon_rho(const PopulationModel& model, const SubspaceSelection& sel,
                                 const Contaminant& c, double epsilon) {
    if (!(epsilon > 0 && epsilon < 1))
        detail::fail(ErrorCode::invalid_argument, "epsilon must lie in (0, 1)");
    detail::require_dim(model.dim(), c.x);
    const Vector d = c.x - model.mu();
    const Matrix& sigma = model.sigma().matrix();
    const SymmetricMatrix perturbed((1.0 - epsilon) * sigma +
                                    epsilon * (1.0 - epsilon) * d * d.transpose());
    const EigenSystem base = eigendecompose(model.sigma());
    const EigenSystem moved = eigendecompose(perturbed);
    require_condition1(base, sel, "unperturbed");
    require_condition1(moved, sel, "perturbed");
    if (sel.is_full_space()) return 0.0;
    const auto complement = OrthonormalFrame::from_complement(base, sel);
    const auto frame = OrthonormalFrame::from_selection(moved, sel);
    const double deficit = trace_product(complement, frame) / static_cast<double>(sel.k());
    return deficit / (epsilon * epsilon);
}

}  // namespace pcinfluence
