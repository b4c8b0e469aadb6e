#pragma once

// Independent reference computations for the tests and the verify command. Nothing here uses Eigen or
// the library: plain nested vectors, a cyclic Jacobi eigensolver, explicit
// p x p projectors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, Vec(c, 0.0)); }

/// Eigenpairs of a symmetric matrix by cyclic Jacobi rotations, sorted by
/// eigenvalue descending. vectors[k] is the k-th eigenvector.
struct Eig {
    Vec values;
    Mat vectors;
};

inline Eig jacobi_eigen(Mat a) {
    const std::size_t p = a.size();
    Mat v = zeros(p, p);
    for (std::size_t i = 0; i < p; ++i) v[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i + 1; j < p; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-30) break;
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                if (std::abs(a[i][j]) < 1e-300) continue;
                const double theta = (a[j][j] - a[i][i]) / (2.0 * a[i][j]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < p; ++k) {
                    const double aki = a[k][i], akj = a[k][j];
                    a[k][i] = c * aki - s * akj;
                    a[k][j] = s * aki + c * akj;
                }
                for (std::size_t k = 0; k < p; ++k) {
                    const double aik = a[i][k], ajk = a[j][k];
                    a[i][k] = c * aik - s * ajk;
                    a[j][k] = s * aik + c * ajk;
                }
                for (std::size_t k = 0; k < p; ++k) {
                    const double vki = v[k][i], vkj = v[k][j];
                    v[k][i] = c * vki - s * vkj;
                    v[k][j] = s * vki + c * vkj;
                }
            }
        }
    }
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return a[x][x] > a[y][y]; });
    Eig out;
    for (auto k : idx) {
        out.values.push_back(a[k][k]);
        Vec col(p);
        for (std::size_t r = 0; r < p; ++r) col[r] = v[r][k];
        out.vectors.push_back(col);
    }
    return out;
}

/// Covariance with 1/n divisor of the listed rows.
inline Mat covariance(const Mat& rows) {
    const std::size_t n = rows.size(), p = rows[0].size();
    Vec mean(p, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < p; ++j) mean[j] += r[j] / static_cast<double>(n);
    Mat s = zeros(p, p);
    for (const auto& r : rows)
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b)
                s[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]) / static_cast<double>(n);
    return s;
}

/// sum_{j in sel} v_j v_j^T as an explicit p x p matrix.
inline Mat projector(const Eig& e, const std::vector<std::size_t>& sel) {
    const std::size_t p = e.values.size();
    Mat proj = zeros(p, p);
    for (auto j : sel)
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) proj[a][b] += e.vectors[j][a] * e.vectors[j][b];
    return proj;
}

inline double trace_of_product(const Mat& a, const Mat& b) {
    double t = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < a.size(); ++k) t += a[i][k] * b[k][i];
    return t;
}

/// (n-1)^2 [1 - trace(P_S P_S,(i)) / K] for the covariance estimator, every i,
/// recomputed from scratch. `sel` is 0-based.
inline Vec brute_force_loo_covariance(const Mat& rows, const std::vector<std::size_t>& sel) {
    const std::size_t n = rows.size();
    const Mat full = projector(jacobi_eigen(covariance(rows)), sel);
    Vec out;
    for (std::size_t i = 0; i < n; ++i) {
        Mat reduced;
        for (std::size_t t = 0; t < n; ++t)
            if (t != i) reduced.push_back(rows[t]);
        const Mat part = projector(jacobi_eigen(covariance(reduced)), sel);
        const double k = static_cast<double>(sel.size());
        out.push_back(static_cast<double>((n - 1) * (n - 1)) *
                      (1.0 - trace_of_product(full, part) / k));
    }
    return out;
}

/// Term-by-term rho-tilde for the covariance estimator, diagonal Sigma, mu = 0:
/// eigenvectors are the axes, sorted by variance.
inline double rho_cov_diagonal(const Vec& variances, const Vec& x, const std::vector<std::size_t>& sel) {
    const std::size_t p = variances.size();
    std::vector<bool> in(p, false);
    for (auto j : sel) in[j] = true;
    double total = 0.0;
    for (auto j : sel)
        for (std::size_t r = 0; r < p; ++r)
            if (!in[r]) {
                const double gap = variances[j] - variances[r];
                total += x[j] * x[j] * x[r] * x[r] / (gap * gap);
            }
    return total / static_cast<double>(sel.size());
}

}  // namespace oracle
