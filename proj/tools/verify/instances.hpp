#pragma once

// Seeded random instances shared by the unit tests, the acceptance suite and
// the verify command.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "pcinfluence/pcinfluence.hpp"
#include "verify/oracles.hpp"

namespace verify {

using pcinfluence::Matrix;
using pcinfluence::Vector;

inline Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> g;
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(rng);
    return m;
}

inline Vector gaussian_vector(std::mt19937_64& rng, Eigen::Index n) {
    return gaussian_matrix(rng, n, 1).col(0);
}

inline Matrix random_orthogonal(std::mt19937_64& rng, Eigen::Index p) {
    Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(rng, p, p));
    return qr.householderQ() * Matrix::Identity(p, p);
}

/// Q diag(values) Q^T with a random orthogonal Q.
inline pcinfluence::SymmetricMatrix with_spectrum(std::mt19937_64& rng, const Vector& values) {
    const Matrix q = random_orthogonal(rng, values.size());
    return pcinfluence::SymmetricMatrix(q * values.asDiagonal() * q.transpose());
}

/// Distinct positive eigenvalues separated by at least 0.25.
inline Vector separated_spectrum(std::mt19937_64& rng, Eigen::Index p) {
    std::uniform_real_distribution<double> u(0.25, 1.5);
    Vector v(p);
    double level = 0.5;
    for (Eigen::Index i = p - 1; i >= 0; --i) {
        level += u(rng);
        v[i] = level;
    }
    return v;
}

inline pcinfluence::SubspaceSelection random_selection(std::mt19937_64& rng, std::size_t p) {
    std::uniform_int_distribution<std::size_t> ksize(1, p - 1);
    std::vector<std::size_t> all(p);
    for (std::size_t i = 0; i < p; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(ksize(rng));
    return pcinfluence::SubspaceSelection(all, p);
}

inline pcinfluence::Dataset gaussian_dataset(std::uint64_t seed, Eigen::Index n, Eigen::Index p,
                                             const std::vector<double>& spikes = {}) {
    pcinfluence::SyntheticSpec spec;
    spec.n = n;
    spec.p = p;
    spec.mu = Vector::Zero(p);
    spec.sigma = pcinfluence::spiked_covariance(p, spikes);
    spec.seed = seed;
    return pcinfluence::generate_gaussian(spec);
}

inline oracle::Mat to_rows(const Matrix& x) {
    oracle::Mat rows(static_cast<std::size_t>(x.rows()), oracle::Vec(static_cast<std::size_t>(x.cols())));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = x(i, j);
    return rows;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

/// The CLI's `--synthetic n=..,p=..` dataset for a given seed.
inline pcinfluence::Dataset default_synthetic(std::uint64_t seed, Eigen::Index n, Eigen::Index p) {
    return gaussian_dataset(seed, n, p, pcinfluence::default_spikes(n, p));
}

/// Random population instances for the closed-form vs generic comparisons.
struct CovInstance {
    pcinfluence::PopulationModel model;
    pcinfluence::SubspaceSelection sel;
    pcinfluence::Contaminant c;
};

inline CovInstance random_cov_instance(std::mt19937_64& rng, Eigen::Index p) {
    pcinfluence::PopulationModel m(gaussian_vector(rng, p), with_spectrum(rng, separated_spectrum(rng, p)));
    return {std::move(m), random_selection(rng, static_cast<std::size_t>(p)),
            pcinfluence::Contaminant(2.0 * gaussian_vector(rng, p))};
}

struct CorrInstance {
    pcinfluence::CorrelationModel model;
    pcinfluence::SubspaceSelection sel;
    pcinfluence::Contaminant c;
};

inline CorrInstance random_corr_instance(std::mt19937_64& rng, Eigen::Index p) {
    const Matrix s = with_spectrum(rng, separated_spectrum(rng, p)).matrix();
    const Vector isd = s.diagonal().cwiseSqrt().cwiseInverse();
    Matrix gamma = isd.asDiagonal() * s * isd.asDiagonal();
    gamma.diagonal().setOnes();
    pcinfluence::CorrelationModel m(pcinfluence::SymmetricMatrix(gamma), gaussian_vector(rng, p),
                                    s.diagonal());
    return {std::move(m), random_selection(rng, static_cast<std::size_t>(p)),
            pcinfluence::Contaminant(2.0 * gaussian_vector(rng, p))};
}

struct PhdInstance {
    pcinfluence::PhdModel model;
    pcinfluence::SubspaceSelection sel;
    pcinfluence::Contaminant c;
};

/// Rank-K average Hessian with b_OLS inside its range; S = {1..K}.
inline PhdInstance random_phd_instance(std::mt19937_64& rng, Eigen::Index p) {
    std::uniform_int_distribution<Eigen::Index> kd(1, p - 1);
    std::uniform_real_distribution<double> mag(0.5, 3.0);
    std::bernoulli_distribution neg(0.4);
    const Eigen::Index k = kd(rng);
    const Matrix q = random_orthogonal(rng, p);
    Matrix h = Matrix::Zero(p, p);
    Vector b = Vector::Zero(p);
    double level = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
        level += mag(rng);
        const double lam = neg(rng) ? -level : level;
        h += lam * q.col(j) * q.col(j).transpose();
        b += gaussian_vector(rng, 1)[0] * q.col(j);
    }
    pcinfluence::PopulationModel pop(gaussian_vector(rng, p),
                                     with_spectrum(rng, separated_spectrum(rng, p)));
    pcinfluence::PhdModel m(pcinfluence::SymmetricMatrix(h), std::move(pop), b,
                            gaussian_vector(rng, 1)[0]);
    const double y = 3.0 * gaussian_vector(rng, 1)[0];
    return {std::move(m), pcinfluence::SubspaceSelection::leading(static_cast<std::size_t>(k),
                                                                  static_cast<std::size_t>(p)),
            pcinfluence::Contaminant(2.0 * gaussian_vector(rng, p), y)};
}

}  // namespace verify
