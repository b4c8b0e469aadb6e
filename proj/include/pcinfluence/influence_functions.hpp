#pragma once

// Population influence functions of three symmetric-matrix estimators
// (classical covariance, classical correlation, PHD average Hessian) and their
// plug-in empirical counterparts.

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "pcinfluence/dataset.hpp"
#include "pcinfluence/error.hpp"
#include "pcinfluence/spectral.hpp"

namespace pcinfluence {

/// Location mu and positive definite scatter Sigma of F_{mu,Sigma}.
class PopulationModel {
public:
    PopulationModel(Vector mu, SymmetricMatrix sigma) : mu_(std::move(mu)), sigma_(std::move(sigma)) {
        if (mu_.size() != sigma_.dim())
            detail::fail(ErrorCode::dimension_mismatch, "mu and sigma dimensions differ");
        if (!mu_.allFinite()) detail::fail(ErrorCode::non_finite, "mu has non-finite entries");
        llt_.compute(sigma_.matrix());
        if (llt_.info() != Eigen::Success)
            detail::fail(ErrorCode::not_positive_definite, "sigma is not positive definite");
    }

    Eigen::Index dim() const noexcept { return mu_.size(); }
    const Vector& mu() const noexcept { return mu_; }
    const SymmetricMatrix& sigma() const noexcept { return sigma_; }
    /// Lower Cholesky factor L with Sigma = L L^T.
    Matrix cholesky_lower() const { return llt_.matrixL(); }

    /// Sigma^{-1} v
    Vector solve(const Vector& v) const { return llt_.solve(v); }
    Matrix inverse() const { return llt_.solve(Matrix::Identity(dim(), dim())); }

    /// L^{-1}(x - mu); its norm is the Mahalanobis distance.
    Vector whiten(const Vector& x) const {
        return llt_.matrixL().solve(x - mu_);
    }

private:
    Vector mu_;
    SymmetricMatrix sigma_;
    Eigen::LLT<Matrix> llt_;
};

/// Correlation matrix Gamma together with the means and variances used to
/// standardize a contaminant.
class CorrelationModel {
public:
    CorrelationModel(SymmetricMatrix gamma, Vector mu, Vector sigma_diag)
        : gamma_(std::move(gamma)), mu_(std::move(mu)), sigma_diag_(std::move(sigma_diag)) {
        const auto p = gamma_.dim();
        if (mu_.size() != p || sigma_diag_.size() != p)
            detail::fail(ErrorCode::dimension_mismatch, "correlation model dimensions differ");
        if (!mu_.allFinite() || !sigma_diag_.allFinite())
            detail::fail(ErrorCode::non_finite, "correlation model has non-finite entries");
        if ((sigma_diag_.array() <= 0.0).any())
            detail::fail(ErrorCode::invalid_argument, "variances must be positive");
        const Matrix& g = gamma_.matrix();
        if ((g.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12)
            detail::fail(ErrorCode::invalid_argument, "correlation matrix must have unit diagonal");
        if (g.cwiseAbs().maxCoeff() > 1.0 + 1e-12)
            detail::fail(ErrorCode::invalid_argument, "correlation entries must lie in [-1, 1]");
        Eigen::SelfAdjointEigenSolver<Matrix> solver(g, Eigen::EigenvaluesOnly);
        if (solver.eigenvalues().minCoeff() < -1e-10)
            detail::fail(ErrorCode::not_positive_definite,
                         "correlation matrix is not positive semidefinite");
    }

    Eigen::Index dim() const noexcept { return mu_.size(); }
    const SymmetricMatrix& gamma() const noexcept { return gamma_; }
    const Vector& mu() const noexcept { return mu_; }
    const Vector& sigma_diag() const noexcept { return sigma_diag_; }

    /// z~_i = (x_i - mu_i) / sqrt(sigma_ii)
    Vector standardize(const Vector& x) const {
        return (x - mu_).cwiseQuotient(sigma_diag_.cwiseSqrt());
    }

private:
    SymmetricMatrix gamma_;
    Vector mu_;
    Vector sigma_diag_;
};

/// Quantities the PHD influence function needs: the average Hessian matrix,
/// predictor moments, the OLS slope and E(Y).
struct PhdModel {
    SymmetricMatrix hbar;
    PopulationModel pop;
    Vector b_ols;
    double ey = 0.0;

    PhdModel(SymmetricMatrix h, PopulationModel population, Vector b, double mean_y)
        : hbar(std::move(h)), pop(std::move(population)), b_ols(std::move(b)), ey(mean_y) {
        if (hbar.dim() != pop.dim() || b_ols.size() != pop.dim())
            detail::fail(ErrorCode::dimension_mismatch, "PHD model dimensions differ");
        if (!b_ols.allFinite() || !std::isfinite(ey))
            detail::fail(ErrorCode::non_finite, "PHD model has non-finite entries");
    }

    Eigen::Index dim() const noexcept { return pop.dim(); }
};

/// Point-mass location (x, and y for regression estimators).
struct Contaminant {
    Vector x;
    std::optional<double> y;

    Contaminant() = default;
    explicit Contaminant(Vector point, std::optional<double> response = std::nullopt)
        : x(std::move(point)), y(response) {
        if (!x.allFinite() || (y && !std::isfinite(*y)))
            detail::fail(ErrorCode::non_finite, "contaminant has non-finite entries");
    }
};

namespace detail {
inline void require_dim(Eigen::Index expected, const Vector& x) {
    if (x.size() != expected)
        fail(ErrorCode::dimension_mismatch, "contaminant has dimension " +
                                                std::to_string(x.size()) + ", expected " +
                                                std::to_string(expected));
}
}  // namespace detail

/// (x - mu)(x - mu)^T - Sigma
inline SymmetricMatrix if_covariance(const PopulationModel& model, const Contaminant& c) {
    detail::require_dim(model.dim(), c.x);
    const Vector d = c.x - model.mu();
    return SymmetricMatrix(d * d.transpose() - model.sigma().matrix());
}

/// z~ z~^T - (D Gamma + Gamma D) / 2 with D = diag(z~_i^2). The diagonal is
/// identically zero.
inline SymmetricMatrix if_correlation(const CorrelationModel& model, const Contaminant& c) {
    detail::require_dim(model.dim(), c.x);
    const Vector z = model.standardize(c.x);
    const Vector d = z.cwiseAbs2();
    const Matrix& g = model.gamma().matrix();
    Matrix out = z * z.transpose() - 0.5 * (d.asDiagonal() * g + g * d.asDiagonal());
    // z_i^2 - z_i^2 * Gamma_ii with Gamma_ii == 1 is exactly zero.
    out.diagonal().setZero();
    return SymmetricMatrix(out);
}

/// {y - E(Y)}(w w^T - Sigma^{-1}) - w(w^T Sigma H + b^T) - (H Sigma w + b) w^T + H,
/// with w = Sigma^{-1}(x - mu). Differentiating H = Sigma^{-1} M Sigma^{-1}
/// gives +H: -H from M, +2H from the two Sigma^{-1} factors. The sign only
/// touches the diagonal of H's eigenbasis, so subspace influence is unaffected.
inline SymmetricMatrix if_phd(const PhdModel& model, const Contaminant& c) {
    detail::require_dim(model.dim(), c.x);
    if (!c.y) detail::fail(ErrorCode::invalid_argument, "PHD influence needs a response value y");
    const Matrix& h = model.hbar.matrix();
    const Matrix& sigma = model.pop.sigma().matrix();
    const Vector w = model.pop.solve(c.x - model.pop.mu());
    const Vector hsw = h * (sigma * w) + model.b_ols;
    const Matrix m = (*c.y - model.ey) * (w * w.transpose() - model.pop.inverse()) -
                     w * hsw.transpose() - hsw * w.transpose() + h;
    return SymmetricMatrix(m);
}

// --- plug-in estimates at the empirical distribution F_n --------------------

inline Vector sample_mean(const Dataset& data) { return data.x.colwise().mean().transpose(); }

inline Matrix sample_covariance_matrix(const Dataset& data,
                                       CovarianceDivisor divisor = CovarianceDivisor::n) {
    const auto n = data.n();
    const double denom = divisor == CovarianceDivisor::n ? static_cast<double>(n)
                                                         : static_cast<double>(n - 1);
    if (denom <= 0) detail::fail(ErrorCode::degenerate_sample, "too few observations");
    const Matrix centered = data.x.rowwise() - data.x.colwise().mean();
    return (centered.transpose() * centered) / denom;
}

/// (x-bar, S). Fails when S is not positive definite, e.g. p >= n.
inline PopulationModel sample_population(const Dataset& data,
                                         CovarianceDivisor divisor = CovarianceDivisor::n) {
    try {
        return PopulationModel(sample_mean(data),
                               SymmetricMatrix(sample_covariance_matrix(data, divisor)));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::not_positive_definite)
            detail::fail(ErrorCode::degenerate_sample, "sample covariance is singular");
        throw;
    }
}

inline CorrelationModel sample_correlation(const Dataset& data,
                                           CovarianceDivisor divisor = CovarianceDivisor::n) {
    const Matrix s = sample_covariance_matrix(data, divisor);
    const Vector var = s.diagonal();
    for (Eigen::Index i = 0; i < var.size(); ++i)
        if (!(var[i] > 0))
            detail::fail(ErrorCode::degenerate_sample,
                         "column " + std::to_string(i + 1) + " has zero variance");
    const Vector inv_sd = var.cwiseSqrt().cwiseInverse();
    Matrix gamma = inv_sd.asDiagonal() * s * inv_sd.asDiagonal();
    gamma.diagonal().setOnes();
    return CorrelationModel(SymmetricMatrix(gamma), sample_mean(data), var);
}

/// Plug-in PHD quantities:
///   H = S^{-1} [(1/n) sum (y_i - y-bar)(x_i - x-bar)(x_i - x-bar)^T] S^{-1},
///   b = S^{-1} (1/n) sum (x_i - x-bar)(y_i - y-bar),  E(Y) = y-bar.
inline PhdModel sample_phd(const Dataset& data) {
    if (!data.y) detail::fail(ErrorCode::invalid_argument, "PHD needs a response column");
    if (data.n() <= data.p())
        detail::fail(ErrorCode::degenerate_sample,
                     "PHD needs n > p for an invertible sample covariance");
    PopulationModel pop = sample_population(data);
    const auto n = static_cast<double>(data.n());
    const Matrix centered = data.x.rowwise() - data.x.colwise().mean();
    const double ybar = data.y->mean();
    const Vector yc = data.y->array() - ybar;
    const Matrix weighted = centered.transpose() * yc.asDiagonal() * centered / n;
    const Matrix sinv = pop.inverse();
    Vector b = pop.solve(centered.transpose() * yc / n);
    return PhdModel(SymmetricMatrix(sinv * weighted * sinv), std::move(pop), std::move(b), ybar);
}

/// Estimator matrix W(F_n) the influence functions above differentiate.
inline SymmetricMatrix fit_estimator(Estimator est, const Dataset& data,
                                     CovarianceDivisor divisor = CovarianceDivisor::n) {
    switch (est) {
        case Estimator::covariance:
            return SymmetricMatrix(sample_covariance_matrix(data, divisor));
        case Estimator::correlation: return sample_correlation(data, divisor).gamma();
        case Estimator::phd: return sample_phd(data).hbar;
    }
    detail::fail(ErrorCode::invalid_argument, "unknown estimator");
}

inline Contaminant observation(const Dataset& data, Eigen::Index i) {
    if (i < 0 || i >= data.n())
        detail::fail(ErrorCode::invalid_argument, "observation index out of range");
    std::optional<double> y;
    if (data.y) y = (*data.y)[i];
    return Contaminant(data.x.row(i).transpose(), y);
}

/// Empirical influence function EIF(W, F_n; x_i).
inline SymmetricMatrix eif(Estimator est, const Dataset& data, Eigen::Index i,
                           CovarianceDivisor divisor = CovarianceDivisor::n) {
    if (data.n() < 2) detail::fail(ErrorCode::degenerate_sample, "need at least 2 observations");
    const Contaminant c = observation(data, i);
    switch (est) {
        case Estimator::covariance: {
            const Vector mean = sample_mean(data);
            const Vector d = c.x - mean;
            return SymmetricMatrix(d * d.transpose() - sample_covariance_matrix(data, divisor));
        }
        case Estimator::correlation: return if_correlation(sample_correlation(data, divisor), c);
        case Estimator::phd: return if_phd(sample_phd(data), c);
    }
    detail::fail(ErrorCode::invalid_argument, "unknown estimator");
}

}  // namespace pcinfluence
