#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcinfluence/error.hpp"

namespace pcinfluence {

enum class StandardizationMode { none, rows, columns };

inline std::string to_string(StandardizationMode m) {
    switch (m) {
        case StandardizationMode::none: return "none";
        case StandardizationMode::rows: return "rows";
        case StandardizationMode::columns: return "columns";
    }
    return "none";
}

/// Statistics removed by a standardization pass; `apply` reproduces it.
struct StandardizationRecord {
    StandardizationMode mode = StandardizationMode::none;
    Eigen::VectorXd centers;
    Eigen::VectorXd scales;
};

/// n x p observation matrix with an optional response column.
struct Dataset {
    Eigen::MatrixXd x;
    std::optional<Eigen::VectorXd> y;
    StandardizationRecord standardization;
    std::vector<std::string> column_names;

    Eigen::Index n() const noexcept { return x.rows(); }
    Eigen::Index p() const noexcept { return x.cols(); }
    bool has_response() const noexcept { return y.has_value(); }

    void validate() const {
        if (x.rows() == 0 || x.cols() == 0)
            detail::fail(ErrorCode::invalid_argument, "dataset is empty");
        if (!x.allFinite()) detail::fail(ErrorCode::non_finite, "dataset has non-finite entries");
        if (y) {
            if (y->size() != x.rows())
                detail::fail(ErrorCode::dimension_mismatch, "response length differs from n");
            if (!y->allFinite())
                detail::fail(ErrorCode::non_finite, "response has non-finite entries");
        }
    }

    /// Copy with the given rows, in order.
    Dataset subset(const std::vector<Eigen::Index>& rows) const {
        Dataset out;
        out.x = x(rows, Eigen::all);
        if (y) out.y = Eigen::VectorXd((*y)(rows));
        out.standardization = standardization;
        out.column_names = column_names;
        return out;
    }
};

enum class Estimator { covariance, correlation, phd };

inline std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::covariance: return "cov";
        case Estimator::correlation: return "corr";
        case Estimator::phd: return "phd";
    }
    return "cov";
}

inline Estimator parse_estimator(const std::string& s) {
    if (s == "cov" || s == "covariance") return Estimator::covariance;
    if (s == "corr" || s == "correlation") return Estimator::correlation;
    if (s == "phd") return Estimator::phd;
    detail::fail(ErrorCode::invalid_argument, "unknown estimator '" + s + "'");
}

/// Divisor used by the sample covariance. `n` matches the covariance
/// functional evaluated at the empirical distribution.
enum class CovarianceDivisor { n, n_minus_1 };

}  // namespace pcinfluence
