#include <gtest/gtest.h>

#include "dfc/linalg.hpp"
#include "test_support.hpp"

using namespace dfc;
using dfc::testing::Rng;

namespace {

double orthonormality_defect(const ComplexMatrix& U) {
    return (U.adjoint() * U - ComplexMatrix::Identity(U.cols(), U.cols())).norm() / std::sqrt(double(U.cols()));
}

}  // namespace

TEST(Svd, IdentityHasUnitSingularValues) {
    const ComplexMatrix I = ComplexMatrix::Identity(3, 3);
    const SvdResult s = linalg::svd(I);
    EXPECT_TRUE(s.S.isApprox(RealVector::Ones(3), 1e-14));
    EXPECT_LT((s.U * s.V.adjoint() - I).norm(), 1e-14);
}

TEST(Svd, DiagonalPhasesAbsorbed) {
    ComplexMatrix D = ComplexMatrix::Zero(2, 2);
    D(0, 0) = 3.0;
    D(1, 1) = Complex(0, 4);
    const SvdResult s = linalg::svd(D);
    EXPECT_NEAR(s.S(0), 4.0, 1e-14);
    EXPECT_NEAR(s.S(1), 3.0, 1e-14);
    // U, V are diagonal up to the ordering swap
    EXPECT_NEAR(std::abs(s.U(0, 0)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(s.V(0, 0)), 0.0, 1e-14);
    const ComplexMatrix rec = s.U * s.S.cast<Complex>().asDiagonal() * s.V.adjoint();
    EXPECT_LT((rec - D).norm(), 1e-13);
}

TEST(Svd, RandomReconstructionAndOrthonormality) {
    Rng rng(11);
    for (Index m : {5, 3, 7}) {
        const ComplexMatrix M = dfc::testing::random_complex(m, 5, rng);
        const SvdResult s = linalg::svd(M);
        const ComplexMatrix rec = s.U * s.S.cast<Complex>().asDiagonal() * s.V.adjoint();
        EXPECT_LT(linalg::relative_error(rec, M), 1e-10);
        EXPECT_LT(orthonormality_defect(s.U), 1e-10);
        EXPECT_LT(orthonormality_defect(s.V), 1e-10);
        for (Index i = 1; i < s.S.size(); ++i) EXPECT_GE(s.S(i - 1), s.S(i));
        EXPECT_GE(s.S.minCoeff(), 0.0);
    }
}

TEST(Svd, FullModeIsSquare) {
    Rng rng(12);
    const ComplexMatrix M = dfc::testing::random_complex(3, 6, rng);
    const SvdResult s = linalg::svd(M, true);
    EXPECT_EQ(s.U.rows(), 3);
    EXPECT_EQ(s.U.cols(), 3);
    EXPECT_EQ(s.V.rows(), 6);
    EXPECT_EQ(s.V.cols(), 6);
    EXPECT_LT(orthonormality_defect(s.V), 1e-10);
}

TEST(Svd, RankDeficiencyShowsAsZeroSingularValue) {
    Rng rng(13);
    const ComplexVector a = dfc::testing::random_complex_vector(4, rng), b = dfc::testing::random_complex_vector(4, rng);
    const ComplexMatrix M = a * b.adjoint();
    const RealVector s = linalg::singular_values(M);
    EXPECT_GT(s(0), 1.0);
    EXPECT_LT(s(1), 1e-12 * s(0));
}

TEST(Svd, UnitaryHasUnitSingularValues) {
    Rng rng(14);
    const ComplexMatrix Q = dfc::testing::random_unitary(6, rng);
    const RealVector s = linalg::singular_values(Q);
    EXPECT_LT((s - RealVector::Ones(6)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Svd, RejectsNonFinite) {
    ComplexMatrix M = ComplexMatrix::Identity(2, 2);
    M(0, 1) = Complex(std::nan(""), 0);
    EXPECT_THROW(linalg::svd(M), DimensionError);
}

TEST(Svd, Deterministic) {
    Rng rng(15);
    const ComplexMatrix M = dfc::testing::random_complex(6, 6, rng);
    const SvdResult a = linalg::svd(M), b = linalg::svd(M);
    EXPECT_EQ((a.U - b.U).norm(), 0.0);
    EXPECT_EQ((a.S - b.S).norm(), 0.0);
}

TEST(Eig, DiagonalInput) {
    ComplexMatrix M = ComplexMatrix::Zero(2, 2);
    M(0, 0) = 2.0;
    M(1, 1) = 3.0;
    const EigResult e = linalg::eig(M);
    std::vector<double> re{e.lambdas(0).real(), e.lambdas(1).real()};
    std::sort(re.begin(), re.end());
    EXPECT_DOUBLE_EQ(re[0], 2.0);
    EXPECT_DOUBLE_EQ(re[1], 3.0);
    // columns of a permuted identity up to phase
    for (Index j = 0; j < 2; ++j) EXPECT_NEAR(e.R.col(j).cwiseAbs().maxCoeff(), 1.0, 1e-14);
    EXPECT_NEAR(e.conditionNumber, 1.0, 1e-12);
}

TEST(Eig, RotationGenerator) {
    ComplexMatrix M(2, 2);
    M << 0.0, 1.0, -1.0, 0.0;
    const EigResult e = linalg::eig(M);
    std::vector<double> im{e.lambdas(0).imag(), e.lambdas(1).imag()};
    std::sort(im.begin(), im.end());
    EXPECT_NEAR(im[0], -1.0, 1e-14);
    EXPECT_NEAR(im[1], 1.0, 1e-14);
    EXPECT_NEAR(e.lambdas(0).real(), 0.0, 1e-14);
}

TEST(Eig, RandomResidual) {
    Rng rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const ComplexMatrix M = dfc::testing::random_complex(6, 6, rng);
        const EigResult e = linalg::eig(M);
        const double res = (M * e.R - e.R * e.lambdas.asDiagonal()).norm() / M.norm();
        EXPECT_LT(res, 1e-8);
        for (Index j = 0; j < 6; ++j) EXPECT_NEAR(e.R.col(j).norm(), 1.0, 1e-12);
    }
}

TEST(Eig, RealInputTakesConjugatePairs) {
    Rng rng(22);
    const RealMatrix A = dfc::testing::random_complex(7, 7, rng).real();
    const ComplexMatrix M = A.cast<Complex>();
    const EigResult e = linalg::eig(M);
    EXPECT_LT((M * e.R - e.R * e.lambdas.asDiagonal()).norm() / M.norm(), 1e-10);
}

TEST(Eig, DefectiveMatrixRejected) {
    ComplexMatrix J(2, 2);
    J << 1.0, 1.0, 0.0, 1.0;
    EXPECT_THROW(linalg::eig(J), DiagonalizabilityError);
}

TEST(Eig, NonSquareRejected) { EXPECT_THROW(linalg::eig(ComplexMatrix::Zero(2, 3)), DimensionError); }

TEST(Eig, StableOrderForFixedInput) {
    Rng rng(23);
    const ComplexMatrix M = dfc::testing::random_complex(5, 5, rng);
    const EigResult a = linalg::eig(M), b = linalg::eig(M);
    EXPECT_EQ((a.lambdas - b.lambdas).norm(), 0.0);
    EXPECT_EQ((a.R - b.R).norm(), 0.0);
}

TEST(Pinv, InvertibleMatchesInverse) {
    ComplexMatrix M(2, 2);
    M << Complex(1, 1), 2.0, Complex(0, -1), 3.0;
    EXPECT_LT(linalg::relative_error(linalg::pinv(M), M.inverse()), 1e-10);
}

TEST(Pinv, ZeroMatrix) {
    const ComplexMatrix Z = ComplexMatrix::Zero(3, 2);
    const ComplexMatrix P = linalg::pinv(Z);
    EXPECT_EQ(P.rows(), 2);
    EXPECT_EQ(P.cols(), 3);
    EXPECT_EQ(P.norm(), 0.0);
}

TEST(Pinv, MoorePenroseIdentitiesRankOne) {
    Rng rng(31);
    const ComplexVector a = dfc::testing::random_complex_vector(3, rng), b = dfc::testing::random_complex_vector(3, rng);
    const ComplexMatrix M = a * b.adjoint();
    const ComplexMatrix P = linalg::pinv(M);
    EXPECT_LT(linalg::relative_error(M * P * M, M), 1e-8);
    EXPECT_LT(linalg::relative_error(P * M * P, P), 1e-8);
    EXPECT_LT(linalg::relative_error((M * P).adjoint(), M * P), 1e-8);
    EXPECT_LT(linalg::relative_error((P * M).adjoint(), P * M), 1e-8);
}

TEST(Pinv, DiagonalTruncation) {
    ComplexMatrix D = ComplexMatrix::Zero(4, 4);
    D(0, 0) = 2.0;
    D(1, 1) = Complex(0, 0.5);
    D(2, 2) = 1e-12;  // below rtol * max
    const ComplexMatrix P = linalg::pinv(D, 1e-10);
    EXPECT_NEAR(std::abs(P(0, 0) - 0.5), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(P(1, 1) - Complex(0, -2.0)), 0.0, 1e-14);
    EXPECT_EQ(std::abs(P(2, 2)), 0.0);
    EXPECT_EQ(std::abs(P(3, 3)), 0.0);
}

TEST(Pinv, RejectsNonPositiveTolerance) { EXPECT_THROW(linalg::pinv(ComplexMatrix::Identity(2, 2), 0.0), DimensionError); }

TEST(Unitarity, DefectOfUnitaryIsSmall) {
    Rng rng(41);
    EXPECT_LT(linalg::unitarity_defect(dfc::testing::random_unitary(8, rng)), 1e-12);
    EXPECT_GT(linalg::unitarity_defect(2.0 * ComplexMatrix::Identity(2, 2)), 1.0);
}
