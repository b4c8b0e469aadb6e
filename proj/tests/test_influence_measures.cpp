#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pcinfluence/influence_measures.hpp"
#include "support/fixtures.hpp"

using namespace pcinfluence;

namespace {

PopulationModel diag_model(Vector d) {
    return PopulationModel(Vector::Zero(d.size()), SymmetricMatrix::diagonal(d));
}

}  // namespace

TEST(RhoTildeGeneric, DiagonalInEigenbasisIsZero) {
    std::mt19937_64 rng(4);
    const auto sigma = fixtures::with_spectrum(rng, Vector{{4.0, 2.0, 1.0, 0.5}});
    const auto es = eigendecompose(sigma);
    const SymmetricMatrix ifm(es.vectors * Vector{{1.0, -3.0, 2.0, 7.0}}.asDiagonal() *
                              es.vectors.transpose());
    EXPECT_NEAR(rho_tilde_generic(es, SubspaceSelection::leading(2, 4), ifm).value, 0.0, 1e-12);
}

TEST(RhoTildeGeneric, SingleSurvivingTerm) {
    const auto es = eigendecompose(SymmetricMatrix::diagonal(Vector{{3.0, 2.0, 1.0}}));
    const Vector v1 = es.vectors.col(0), v2 = es.vectors.col(1);
    const SymmetricMatrix ifm(v1 * v2.transpose() + v2 * v1.transpose());
    EXPECT_NEAR(rho_tilde_generic(es, SubspaceSelection::leading(1, 3), ifm).value, 1.0, 1e-15);
}

TEST(RhoTildeGeneric, RefusesConditionViolation) {
    const auto es = eigendecompose(SymmetricMatrix::diagonal(Vector{{2.0, 2.0, 1.0}}));
    const SymmetricMatrix ifm(Matrix::Ones(3, 3));
    try {
        rho_tilde_generic(es, SubspaceSelection::leading(1, 3), ifm);
        FAIL();
    } catch (const Condition1Error& e) {
        EXPECT_EQ(e.selected_index(), 1u);
        EXPECT_EQ(e.complement_index(), 2u);
        EXPECT_EQ(e.gap(), 0.0);
    }
    EXPECT_NO_THROW(rho_tilde_generic(es, SubspaceSelection::leading(2, 3), ifm));
}

TEST(RhoTildeGeneric, IllConditionedAnnotation) {
    const auto es = eigendecompose(SymmetricMatrix::diagonal(Vector{{1.0, 1.0 - 1e-7, 0.1}}));
    const auto v = rho_tilde_generic(es, SubspaceSelection::leading(1, 3),
                                     SymmetricMatrix(Matrix::Identity(3, 3)));
    EXPECT_TRUE(v.ill_conditioned);
    EXPECT_NEAR(v.min_gap, 1e-7, 1e-15);
}

TEST(RhoTildeCov, WorkedExample) {
    const auto m = diag_model(Vector{{3.0, 2.0, 1.0}});
    const auto es = eigendecompose(m.sigma());
    const auto sel = SubspaceSelection::leading(1, 3);
    const Contaminant c(Vector::Ones(3));
    // 1*1/(3-2)^2 + 1*1/(3-1)^2
    const double expected = oracle::rho_cov_diagonal({3, 2, 1}, {1, 1, 1}, {0});
    EXPECT_DOUBLE_EQ(expected, 1.25);
    EXPECT_NEAR(rho_tilde_cov(m, es, sel, c).value, 1.25, 1e-14);
    EXPECT_NEAR(rho_tilde_generic(es, sel, if_covariance(m, c)).value, 1.25, 1e-12);
}

TEST(RhoTildeCov, ZeroAtMeanAndAlongSelectedEigenvector) {
    std::mt19937_64 rng(31);
    const PopulationModel m(fixtures::gaussian_vector(rng, 4),
                            fixtures::with_spectrum(rng, Vector{{5.0, 3.0, 2.0, 1.0}}));
    const auto es = eigendecompose(m.sigma());
    const auto sel = SubspaceSelection::leading(1, 4);
    EXPECT_EQ(rho_tilde_cov(m, es, sel, Contaminant(m.mu())).value, 0.0);
    for (double c : {0.1, 5.0, -40.0}) {
        const Vector x = m.mu() + c * es.vectors.col(0);
        EXPECT_NEAR(rho_tilde_cov(m, es, sel, Contaminant(x)).value, 0.0, 1e-12);
    }
}

TEST(RhoTildeCorr, ZeroAtMeanAndConditionViolation) {
    std::mt19937_64 rng(41);
    const auto inst = fixtures::random_corr_instance(rng, 4);
    const auto es = eigendecompose(inst.model.gamma());
    EXPECT_EQ(rho_tilde_corr(inst.model, es, inst.sel, Contaminant(inst.model.mu())).value, 0.0);

    const CorrelationModel identity(SymmetricMatrix(Matrix::Identity(2, 2)), Vector::Zero(2),
                                    Vector::Ones(2));
    EXPECT_THROW(rho_tilde_corr(identity, eigendecompose(identity.gamma()),
                                SubspaceSelection::leading(1, 2), Contaminant(Vector::Ones(2))),
                 Condition1Error);
}

TEST(ClosedForms, AgreeWithGenericProperty) {
    std::mt19937_64 rng(20240601);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index p = 2 + trial % 5;
        {
            const auto inst = fixtures::random_cov_instance(rng, p);
            const auto es = eigendecompose(inst.model.sigma());
            const double a = rho_tilde_cov(inst.model, es, inst.sel, inst.c).value;
            const double b = rho_tilde_generic(es, inst.sel, if_covariance(inst.model, inst.c)).value;
            EXPECT_LE(fixtures::rel_err(a, b), 1e-10) << "cov trial " << trial;
        }
        {
            const auto inst = fixtures::random_corr_instance(rng, p);
            const auto es = eigendecompose(inst.model.gamma());
            const double a = rho_tilde_corr(inst.model, es, inst.sel, inst.c).value;
            const double b =
                rho_tilde_generic(es, inst.sel, if_correlation(inst.model, inst.c)).value;
            EXPECT_LE(fixtures::rel_err(a, b), 1e-10) << "corr trial " << trial;
        }
        {
            const auto inst = fixtures::random_phd_instance(rng, p);
            const auto es = eigendecompose(inst.model.hbar);
            const double a = rho_tilde_phd(inst.model, es, inst.sel, inst.c).value;
            const double b = rho_tilde_generic(es, inst.sel, if_phd(inst.model, inst.c)).value;
            EXPECT_LE(fixtures::rel_err(a, b), 1e-10) << "phd trial " << trial;
        }
    }
}

TEST(RhoTildePhd, ZeroInsideTargetSpanForStandardPredictors) {
    std::mt19937_64 rng(77);
    const Eigen::Index p = 4;
    const Matrix q = fixtures::random_orthogonal(rng, p);
    const Matrix h = 2.0 * q.col(0) * q.col(0).transpose() - 0.8 * q.col(1) * q.col(1).transpose();
    const Vector b = 0.3 * q.col(0) + 0.2 * q.col(1);
    const PhdModel m(SymmetricMatrix(h),
                     PopulationModel(Vector::Zero(p), SymmetricMatrix(Matrix::Identity(p, p))), b, 0.5);
    const auto es = eigendecompose(m.hbar);
    const auto sel = SubspaceSelection::leading(2, 4);
    for (double y : {0.0, 10.0, -1e4}) {
        const Vector x = 7.0 * q.col(0) - 3.0 * q.col(1);
        EXPECT_NEAR(rho_tilde_phd(m, es, sel, Contaminant(x, y)).value, 0.0, 1e-12);
    }
}

TEST(RhoTildePhd, GrowsQuadraticallyInResponse) {
    std::mt19937_64 rng(78);
    const auto inst = fixtures::random_phd_instance(rng, 4);
    const auto es = eigendecompose(inst.model.hbar);
    const double a = rho_tilde_phd(inst.model, es, inst.sel, Contaminant(inst.c.x, 1e3)).value;
    const double b = rho_tilde_phd(inst.model, es, inst.sel, Contaminant(inst.c.x, 1e4)).value;
    EXPECT_NEAR(b / a, 100.0, 1.0);
}

TEST(RhoTildePhd, ValidatesSelection) {
    std::mt19937_64 rng(79);
    const Eigen::Index p = 3;
    const Matrix q = fixtures::random_orthogonal(rng, p);
    const Matrix h = 2.0 * q.col(0) * q.col(0).transpose();
    const PhdModel m(SymmetricMatrix(h),
                     PopulationModel(Vector::Zero(p), SymmetricMatrix(Matrix::Identity(p, p))),
                     0.1 * q.col(0), 0.0);
    const auto es = eigendecompose(m.hbar);
    const Contaminant c(Vector::Ones(p), 1.0);
    EXPECT_THROW(rho_tilde_phd(m, es, SubspaceSelection::leading(2, 3), c), Error);
    EXPECT_THROW(rho_tilde_phd(m, es, SubspaceSelection::leading(1, 3), Contaminant(Vector::Ones(p))),
                 Error);
    const PhdModel off_span(SymmetricMatrix(h), m.pop, q.col(1), 0.0);
    EXPECT_THROW(rho_tilde_phd(off_span, es, SubspaceSelection::leading(1, 3), c), Error);
}

TEST(K1Reduction, MatchesEigenvectorInfluenceNorm) {
    std::mt19937_64 rng(90);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index p = 2 + trial % 6;
        const auto es = eigendecompose(fixtures::with_spectrum(rng, fixtures::separated_spectrum(rng, p)));
        const SymmetricMatrix ifm(fixtures::gaussian_matrix(rng, p, p));
        for (std::size_t j = 0; j < static_cast<std::size_t>(p); ++j) {
            const double a = k1_norm_reduction(es, j, ifm).value;
            const double b = eigenvector_influence(es, j, ifm).squaredNorm();
            EXPECT_LE(fixtures::rel_err(a, b), 1e-12);
        }
    }
    const auto es = eigendecompose(SymmetricMatrix::diagonal(Vector{{3.0, 2.0, 1.0}}));
    const PopulationModel m(Vector::Zero(3), SymmetricMatrix::diagonal(Vector{{3.0, 2.0, 1.0}}));
    EXPECT_NEAR(k1_norm_reduction(es, 0, if_covariance(m, Contaminant(Vector::Ones(3)))).value, 1.25,
                1e-12);
    const SymmetricMatrix diag_if(Matrix(Vector{{1.0, 2.0, 3.0}}.asDiagonal()));
    EXPECT_NEAR(k1_norm_reduction(es, 1, diag_if).value, 0.0, 1e-15);
}

TEST(SpikedClosedForm, ClosedFormMatchesCovariance) {
    const auto m = diag_model(Vector{{2.0, 1.0, 1.0}});
    const auto es = eigendecompose(m.sigma());
    const Vector x{{std::sqrt(2.0), 1.0, 0.0}};
    const double md = mahalanobis(m, x);
    EXPECT_NEAR(md * md, 2.0, 1e-14);
    // z = Sigma^{-1/2} x = (1, 1, 0); projection on S = {1} keeps half of |z|^2.
    const double closed = example1_closed_form(2.0, 1.0, 1, md, 0.5).value;
    const double cov = rho_tilde_cov(m, es, SubspaceSelection::leading(1, 3), Contaminant(x)).value;
    EXPECT_NEAR(closed, 2.0, 1e-12);
    EXPECT_NEAR(cov, 2.0, 1e-12);
}

TEST(SpikedClosedForm, AngularFactor) {
    EXPECT_EQ(example1_closed_form(3.0, 1.0, 2, 4.0, 0.0).value, 0.0);
    EXPECT_EQ(example1_closed_form(3.0, 1.0, 2, 4.0, 1.0).value, 0.0);
    const double peak = example1_closed_form(3.0, 1.0, 2, 1.0, 0.5).value;
    for (double c : {0.1, 0.3, 0.49, 0.51, 0.9})
        EXPECT_LT(example1_closed_form(3.0, 1.0, 2, 1.0, c).value, peak);
    EXPECT_NEAR(peak, 3.0 / (2.0 * 4.0) * 0.25, 1e-15);
    EXPECT_THROW(example1_closed_form(1.0, 1.0, 1, 1.0, 0.5), Error);
    EXPECT_THROW(example1_closed_form(2.0, 1.0, 1, 1.0, 1.5), Error);
}

TEST(Mahalanobis, Examples) {
    const auto m = diag_model(Vector{{4.0, 1.0}});
    EXPECT_DOUBLE_EQ(mahalanobis(m, Vector{{2.0, 3.0}}), std::sqrt(10.0));
    EXPECT_EQ(mahalanobis(m, Vector::Zero(2)), 0.0);
    const PopulationModel unit(Vector{{1.0, 1.0}}, SymmetricMatrix(Matrix::Identity(2, 2)));
    EXPECT_DOUBLE_EQ(mahalanobis(unit, Vector{{4.0, 5.0}}), 5.0);
}

TEST(FiniteEpsilon, ZeroAtMean) {
    std::mt19937_64 rng(2);
    const auto inst = fixtures::random_cov_instance(rng, 4);
    for (double eps : {1e-2, 1e-4})
        EXPECT_NEAR(finite_epsilon_rho(inst.model, inst.sel, Contaminant(inst.model.mu()), eps), 0.0,
                    1e-12);
}

TEST(FiniteEpsilon, ConvergesAtFirstOrder) {
    const auto m = diag_model(Vector{{3.0, 2.0, 1.0}});
    const auto sel = SubspaceSelection::leading(1, 3);
    const Contaminant c(Vector::Ones(3));
    std::vector<double> errs;
    for (double eps : {1e-3, 1e-4, 1e-5})
        errs.push_back(std::abs(finite_epsilon_rho(m, sel, c, eps) - 1.25));
    EXPECT_LE(errs[2] / 1.25, 1e-3);
    EXPECT_NEAR(errs[0] / errs[1], 10.0, 1.0);
    EXPECT_NEAR(errs[1] / errs[2], 10.0, 1.0);
    EXPECT_THROW(finite_epsilon_rho(m, sel, c, 0.0), Error);
    EXPECT_THROW(finite_epsilon_rho(m, sel, c, 1.0), Error);
}

TEST(FiniteEpsilon, ConvergesOnRandomInstances) {
    std::mt19937_64 rng(123);
    int checked = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const auto inst = fixtures::random_cov_instance(rng, 2 + trial % 5);
        const auto es = eigendecompose(inst.model.sigma());
        const double limit = rho_tilde_cov(inst.model, es, inst.sel, inst.c).value;
        if (limit < 1e-3) continue;
        const double e3 = std::abs(finite_epsilon_rho(inst.model, inst.sel, inst.c, 1e-3) / limit - 1);
        const double e5 = std::abs(finite_epsilon_rho(inst.model, inst.sel, inst.c, 1e-5) / limit - 1);
        EXPECT_LT(e5, e3);
        EXPECT_LT(e5, 1e-2);
        ++checked;
    }
    EXPECT_GT(checked, 20);
}

TEST(Invariance, SignFlipsAndRotationInsideDegenerateBlock) {
    std::mt19937_64 rng(55);
    const Vector spectrum{{4.0, 4.0, 2.0, 1.0, 1.0}};
    const Matrix q = fixtures::random_orthogonal(rng, 5);
    const SymmetricMatrix sigma(q * spectrum.asDiagonal() * q.transpose());
    const PopulationModel m(Vector::Zero(5), sigma);
    const Contaminant c(fixtures::gaussian_vector(rng, 5));
    const auto ifm = if_covariance(m, c);

    EigenSystem base;
    base.values = spectrum;
    base.vectors = q;
    const auto sel = SubspaceSelection::leading(2, 5);  // {4, 4} inside S, {1, 1} inside S'
    const double ref = rho_tilde_generic(base, sel, ifm).value;

    EigenSystem moved = base;
    const double t = 0.7;
    Matrix rot2{{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}};
    moved.vectors.leftCols(2) = q.leftCols(2) * rot2;
    moved.vectors.rightCols(2) = q.rightCols(2) * rot2.transpose();
    moved.vectors.col(2) *= -1.0;
    EXPECT_LE(fixtures::rel_err(rho_tilde_generic(moved, sel, ifm).value, ref), 1e-10);
    EXPECT_LE(fixtures::rel_err(rho_tilde_cov(m, moved, sel, c).value, ref), 1e-10);
}

TEST(Nonnegativity, RandomInstances) {
    std::mt19937_64 rng(66);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = fixtures::random_cov_instance(rng, 3 + trial % 4);
        const auto es = eigendecompose(inst.model.sigma());
        EXPECT_GE(rho_tilde_cov(inst.model, es, inst.sel, inst.c).value, 0.0);
    }
}
