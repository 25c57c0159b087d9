#include <gtest/gtest.h>

#include "dfc/assignment.hpp"
#include "dfc/conjugacy.hpp"
#include "test_support.hpp"

using namespace dfc;
using dfc::testing::Rng;

TEST(Assignment, SwapSpectrum) {
    ComplexVector f(2), g(2);
    f << 1.0, Complex(0, 2);
    g << Complex(0, 2), 1.0;
    const Permutation p = solve_permutation(f, g);
    EXPECT_EQ(p.sigma[0], 1);
    EXPECT_EQ(p.sigma[1], 0);
}

TEST(Assignment, IdenticalSpectraGiveIdentity) {
    Rng rng(1);
    const ComplexVector l = dfc::testing::random_spectrum(6, rng);
    EXPECT_TRUE(solve_permutation(l, l).is_identity());
}

TEST(Assignment, MatchesBruteForce) {
    Rng rng(2);
    for (int trial = 0; trial < 60; ++trial) {
        const Index n = 1 + trial % 8;
        const Eigen::MatrixXd D =
            spectral_distance_matrix(dfc::testing::random_complex_vector(n, rng), dfc::testing::random_complex_vector(n, rng));
        const Assignment a = solve_assignment(D);
        EXPECT_EQ(a.cost, dfc::testing::brute_force_assignment(D)) << "n = " << n;
    }
}

TEST(Assignment, TiesResolveToLowestIndex) {
    const Eigen::MatrixXd D = Eigen::MatrixXd::Ones(4, 4);
    const Assignment a = solve_assignment(D);
    EXPECT_TRUE(a.permutation.is_identity());
    EXPECT_DOUBLE_EQ(a.cost, 4.0);
}

TEST(Assignment, PermutationMatrixConvention) {
    Permutation p;
    p.sigma = {2, 0, 1};
    const ComplexMatrix P = p.matrix();
    ComplexMatrix A(3, 1);
    A << 10.0, 20.0, 30.0;
    const ComplexMatrix PA = P * A;
    EXPECT_EQ(PA(2, 0), Complex(10.0));
    EXPECT_EQ(PA(0, 0), Complex(20.0));
    EXPECT_EQ((p.apply_rows(A) - PA).norm(), 0.0);
}

TEST(Assignment, RejectsNonSquare) {
    EXPECT_THROW(solve_assignment(Eigen::MatrixXd::Zero(2, 3)), DimensionError);
}

TEST(Assignment, EmptyProblem) {
    const Assignment a = solve_assignment(Eigen::MatrixXd(0, 0));
    EXPECT_EQ(a.permutation.size(), 0);
    EXPECT_EQ(a.cost, 0.0);
}
