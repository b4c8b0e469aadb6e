#pragma once

// Symmetric eigen-analysis, subspace selections and subspace agreement
// measures (RV / GCD trace coefficient, Benasseni's coefficient).
//
// Projectors onto K-dimensional subspaces are always kept in factored form
// (a p x K orthonormal frame); traces of projector products are evaluated
// through the K x K cross-Gram matrix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcinfluence/error.hpp"

namespace pcinfluence {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Square real matrix that is exactly symmetric and finite.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;

    /// Symmetrizes with (M + M^T) / 2, which is bitwise symmetric.
    explicit SymmetricMatrix(const Matrix& m) {
        if (m.rows() != m.cols() || m.rows() == 0)
            detail::fail(ErrorCode::dimension_mismatch,
                         "symmetric matrix must be square and non-empty, got " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
        if (!m.allFinite()) detail::fail(ErrorCode::non_finite, "matrix has non-finite entries");
        entries_ = 0.5 * (m + m.transpose());
    }

    static SymmetricMatrix diagonal(const Vector& d) {
        return SymmetricMatrix(Matrix(d.asDiagonal()));
    }

    Eigen::Index dim() const noexcept { return entries_.rows(); }
    const Matrix& matrix() const noexcept { return entries_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

private:
    Matrix entries_;
};

enum class Ordering {
    absolute_descending,  // |k_1| >= |k_2| >= ... ; ties by signed value, then index
    descending,           // k_1 >= k_2 >= ...
};

/// Ordered eigenpairs of a symmetric matrix. Column i of `vectors` pairs with
/// `values[i]`.
struct EigenSystem {
    Vector values;
    Matrix vectors;
    Ordering ordering = Ordering::absolute_descending;

    Eigen::Index dim() const noexcept { return values.size(); }
    double max_abs_value() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

namespace detail {

// Largest-magnitude entry made positive; near-ties resolved to the first
// index so that tests stay reproducible across backends.
inline void canonicalize_sign(Eigen::Ref<Vector> v) {
    const double top = v.cwiseAbs().maxCoeff();
    const double tol = 1e-12 * std::max(top, 1.0);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) >= top - tol) {
            if (v[i] < 0) v = -v;
            return;
        }
    }
}

inline std::vector<Eigen::Index> eigen_order(const Vector& raw, Ordering ordering) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(raw.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    if (ordering == Ordering::descending) {
        std::stable_sort(idx.begin(), idx.end(),
                         [&](auto a, auto b) { return raw[a] > raw[b]; });
        return idx;
    }
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
        return std::abs(raw[a]) > std::abs(raw[b]);
    });
    // |k| clusters that agree to rounding are re-sorted by signed value.
    const double scale = raw.size() ? raw.cwiseAbs().maxCoeff() : 0.0;
    const double tol = 64.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
    std::size_t start = 0;
    while (start < idx.size()) {
        std::size_t stop = start + 1;
        while (stop < idx.size() &&
               std::abs(raw[idx[stop - 1]]) - std::abs(raw[idx[stop]]) <= tol)
            ++stop;
        std::stable_sort(idx.begin() + static_cast<std::ptrdiff_t>(start),
                         idx.begin() + static_cast<std::ptrdiff_t>(stop),
                         [&](auto a, auto b) { return raw[a] > raw[b]; });
        start = stop;
    }
    return idx;
}

}  // namespace detail

/// Eigen-decomposes `m` and returns the pairs in the requested order with
/// canonical eigenvector signs.
inline EigenSystem eigendecompose(const SymmetricMatrix& m,
                                  Ordering ordering = Ordering::absolute_descending) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
    if (solver.info() != Eigen::Success)
        detail::fail(ErrorCode::convergence_failure, "symmetric eigensolver did not converge");
    const Vector& raw_values = solver.eigenvalues();
    const Matrix& raw_vectors = solver.eigenvectors();

    const auto order = detail::eigen_order(raw_values, ordering);
    EigenSystem es;
    es.ordering = ordering;
    es.values.resize(raw_values.size());
    es.vectors.resize(raw_vectors.rows(), raw_vectors.cols());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        es.values[col] = raw_values[order[k]];
        es.vectors.col(col) = raw_vectors.col(order[k]);
        detail::canonicalize_sign(es.vectors.col(col));
    }
    return es;
}

/// sum_i k_i v_i v_i^T
inline Matrix reconstruct(const EigenSystem& es) {
    return es.vectors * es.values.asDiagonal() * es.vectors.transpose();
}

/// A set S of eigen-indices inside {0, ..., p-1} together with its complement
/// S'. Stored 0-based; constructors taking user input accept 1-based indices.
class SubspaceSelection {
public:
    SubspaceSelection(std::vector<std::size_t> zero_based, std::size_t p) : p_(p) {
        std::sort(zero_based.begin(), zero_based.end());
        if (zero_based.empty())
            detail::fail(ErrorCode::invalid_argument, "subspace selection must be non-empty");
        if (std::adjacent_find(zero_based.begin(), zero_based.end()) != zero_based.end())
            detail::fail(ErrorCode::invalid_argument, "subspace selection has repeated indices");
        if (zero_based.back() >= p)
            detail::fail(ErrorCode::invalid_argument,
                         "subspace index " + std::to_string(zero_based.back() + 1) +
                             " exceeds dimension " + std::to_string(p));
        selected_ = std::move(zero_based);
        std::vector<bool> in(p, false);
        for (auto j : selected_) in[j] = true;
        for (std::size_t r = 0; r < p; ++r)
            if (!in[r]) complement_.push_back(r);
    }

    /// S = {1, ..., k}
    static SubspaceSelection leading(std::size_t k, std::size_t p) {
        if (k == 0) detail::fail(ErrorCode::invalid_argument, "subspace size k must be at least 1");
        std::vector<std::size_t> s(k);
        std::iota(s.begin(), s.end(), std::size_t{0});
        return SubspaceSelection(std::move(s), p);
    }

    static SubspaceSelection from_one_based(const std::vector<std::size_t>& one_based,
                                            std::size_t p) {
        std::vector<std::size_t> s;
        s.reserve(one_based.size());
        for (auto i : one_based) {
            if (i == 0) detail::fail(ErrorCode::invalid_argument, "subspace indices are 1-based");
            s.push_back(i - 1);
        }
        return SubspaceSelection(std::move(s), p);
    }

    std::size_t k() const noexcept { return selected_.size(); }
    std::size_t dim() const noexcept { return p_; }
    const std::vector<std::size_t>& selected() const noexcept { return selected_; }
    const std::vector<std::size_t>& complement() const noexcept { return complement_; }
    bool is_full_space() const noexcept { return complement_.empty(); }
    std::size_t max_index() const noexcept { return selected_.back(); }

    std::vector<std::size_t> one_based() const {
        std::vector<std::size_t> out(selected_);
        for (auto& i : out) ++i;
        return out;
    }

private:
    std::size_t p_ = 0;
    std::vector<std::size_t> selected_;
    std::vector<std::size_t> complement_;
};

/// Outcome of the eigen-gap check across the S / S' partition. Indices are
/// 1-based.
struct Condition1Report {
    bool ok = true;
    std::size_t j = 0;
    std::size_t r = 0;
    double gap = std::numeric_limits<double>::infinity();
};

inline double default_gap_tolerance(const EigenSystem& es) { return 1e-8 * es.max_abs_value(); }

/// Gap check on an ordered eigenvalue list of length p (used where only part of
/// the spectrum has eigenvectors, as in the dual-space paths).
inline Condition1Report check_condition1(const Vector& values, const SubspaceSelection& sel,
                                         std::optional<double> gap_tol = std::nullopt) {
    if (static_cast<std::size_t>(values.size()) != sel.dim())
        detail::fail(ErrorCode::dimension_mismatch, "selection and eigensystem dimensions differ");
    const double tol =
        gap_tol.value_or(1e-8 * (values.size() ? values.cwiseAbs().maxCoeff() : 0.0));
    Condition1Report rep;
    for (auto j : sel.selected()) {
        for (auto r : sel.complement()) {
            const double gap = std::abs(values[static_cast<Eigen::Index>(j)] -
                                        values[static_cast<Eigen::Index>(r)]);
            if (gap < rep.gap) {
                rep.gap = gap;
                rep.j = j + 1;
                rep.r = r + 1;
            }
        }
    }
    rep.ok = rep.gap > tol;
    return rep;
}

inline Condition1Report check_condition1(const EigenSystem& es, const SubspaceSelection& sel,
                                         std::optional<double> gap_tol = std::nullopt) {
    return check_condition1(es.values, sel, gap_tol);
}

inline void require_condition1(const EigenSystem& es, const SubspaceSelection& sel,
                               const std::string& context = {},
                               std::optional<double> gap_tol = std::nullopt) {
    const auto rep = check_condition1(es, sel, gap_tol);
    if (!rep.ok) throw Condition1Error(rep.j, rep.r, rep.gap, context);
}

/// p x K matrix with orthonormal columns; stands for the projector F F^T.
class OrthonormalFrame {
public:
    explicit OrthonormalFrame(Matrix columns, double tol = 1e-10) : columns_(std::move(columns)) {
        if (columns_.cols() == 0 || columns_.rows() < columns_.cols())
            detail::fail(ErrorCode::dimension_mismatch, "frame must have 1 <= K <= p columns");
        const Matrix gram = columns_.transpose() * columns_;
        const double err =
            (gram - Matrix::Identity(columns_.cols(), columns_.cols())).cwiseAbs().maxCoeff();
        if (!(err <= tol))
            detail::fail(ErrorCode::invalid_argument,
                         "frame columns are not orthonormal (max Gram error " +
                             std::to_string(err) + ")");
    }

    static OrthonormalFrame from_selection(const EigenSystem& es, const SubspaceSelection& sel) {
        return OrthonormalFrame(es.vectors(Eigen::all, sel.selected()));
    }

    static OrthonormalFrame from_complement(const EigenSystem& es, const SubspaceSelection& sel) {
        return OrthonormalFrame(es.vectors(Eigen::all, sel.complement()));
    }

    Eigen::Index dim() const noexcept { return columns_.rows(); }
    Eigen::Index k() const noexcept { return columns_.cols(); }
    const Matrix& columns() const noexcept { return columns_; }

private:
    Matrix columns_;
};

/// trace(P_A P_B) = ||A^T B||_F^2. Frames may differ in K.
inline double trace_product(const OrthonormalFrame& a, const OrthonormalFrame& b) {
    if (a.dim() != b.dim())
        detail::fail(ErrorCode::dimension_mismatch, "frames live in different dimensions");
    return (a.columns().transpose() * b.columns()).squaredNorm();
}

namespace detail {
inline void require_same_shape(const OrthonormalFrame& a, const OrthonormalFrame& b) {
    if (a.dim() != b.dim())
        fail(ErrorCode::dimension_mismatch, "frames live in different dimensions");
    if (a.k() != b.k()) fail(ErrorCode::dimension_mismatch, "frames have different K");
}
}  // namespace detail

/// RV(A, B) = GCD(A, B) = trace(P_A P_B) / K.
inline double rv_gcd(const OrthonormalFrame& a, const OrthonormalFrame& b) {
    detail::require_same_shape(a, b);
    return trace_product(a, b) / static_cast<double>(a.k());
}

/// 1 - (1/K) sum_k ||a_k - P_B a_k||. Not symmetric in its arguments.
inline double benasseni_rho1(const OrthonormalFrame& a, const OrthonormalFrame& b) {
    detail::require_same_shape(a, b);
    const Matrix& A = a.columns();
    const Matrix& B = b.columns();
    const Matrix residual = A - B * (B.transpose() * A);
    return 1.0 - residual.colwise().norm().sum() / static_cast<double>(a.k());
}

/// 1 - (1/K) sum_k ||a_k - P_B a_k||^2, which equals rv_gcd(a, b).
inline double squared_residual_identity(const OrthonormalFrame& a, const OrthonormalFrame& b) {
    detail::require_same_shape(a, b);
    const Matrix& A = a.columns();
    const Matrix& B = b.columns();
    const Matrix residual = A - B * (B.transpose() * A);
    return 1.0 - residual.colwise().squaredNorm().sum() / static_cast<double>(a.k());
}

}  // namespace pcinfluence
