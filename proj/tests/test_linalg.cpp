#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dppfl/error.hpp"
#include "dppfl/linalg.hpp"
#include "support/oracles.hpp"

using dppfl::linalg::Matrix;
namespace la = dppfl::linalg;

namespace {

Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = g(rng);
    return a;
}

// Roots of det(A - x I) for symmetric 3x3 A via the trigonometric form of the cubic.
std::vector<double> cubic_eigenvalues(const Matrix& a) {
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double q = (a(0, 0) + a(1, 1) + a(2, 2)) / 3.0;
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) + (a(2, 2) - q) * (a(2, 2) - q) + 2 * p1;
    const double p = std::sqrt(p2 / 6.0);
    Matrix b(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) b(i, j) = (a(i, j) - (i == j ? q : 0.0)) / p;
    const double r = std::clamp(la::determinant(b) / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2 * p * std::cos(phi);
    const double e3 = q + 2 * p * std::cos(phi + 2 * std::numbers::pi / 3);
    std::vector<double> e{e3, 3 * q - e1 - e3, e1};
    std::sort(e.begin(), e.end());
    return e;
}

void expect_decomposes(const Matrix& a, const la::EigenDecomposition& e, double tol) {
    const std::size_t n = a.rows();
    EXPECT_TRUE(std::is_sorted(e.values.begin(), e.values.end()));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double vtv = 0.0, rec = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                vtv += e.vectors(k, i) * e.vectors(k, j);
                rec += e.vectors(i, k) * e.values[k] * e.vectors(j, k);
            }
            EXPECT_NEAR(vtv, i == j ? 1.0 : 0.0, tol);
            EXPECT_NEAR(rec, a(i, j), tol);
        }
}

}  // namespace

TEST(Eigh, TwoByTwoClosedForm) {
    Matrix a(2, 2, std::vector<double>{2.0, 1.0, 1.0, 2.0});
    const auto e = la::eigh(a);
    EXPECT_NEAR(e.values[0], 1.0, 1e-14);
    EXPECT_NEAR(e.values[1], 3.0, 1e-14);
    expect_decomposes(a, e, 1e-13);
}

TEST(Eigh, ThreeByThreeMatchesCharacteristicPolynomial) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto a = random_symmetric(3, seed);
        const auto e = la::eigh(a);
        const auto want = cubic_eigenvalues(a);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(e.values[i], want[i], 1e-10) << "seed " << seed;
        expect_decomposes(a, e, 1e-12);
    }
}

TEST(Eigh, LargerRandomAndDegenerate) {
    for (std::size_t n : {1u, 5u, 12u, 30u}) expect_decomposes(random_symmetric(n, n), la::eigh(random_symmetric(n, n)), 1e-10);
    const auto id = la::eigh(Matrix::identity(6));
    for (double v : id.values) EXPECT_DOUBLE_EQ(v, 1.0);
    const auto d = la::eigh(Matrix::diagonal(std::vector<double>{3.0, -1.0, 2.0}));
    EXPECT_EQ(d.values, (std::vector<double>{-1.0, 2.0, 3.0}));
    const auto zero = la::eigh(Matrix(0, 0));
    EXPECT_TRUE(zero.values.empty());
}

TEST(Eigh, RejectsAsymmetricAndReportsNonConvergence) {
    Matrix a(2, 2, std::vector<double>{1.0, 2.0, 0.0, 1.0});
    EXPECT_THROW(la::eigh(a), dppfl::ValueError);
    EXPECT_THROW(la::eigh(random_symmetric(8, 1), {.max_sweeps = 1}), dppfl::NumericError);
    EXPECT_THROW(la::eigh(Matrix(2, 3)), dppfl::ShapeError);
}

TEST(Determinant, MatchesCofactorExpansion) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 1 + seed % 5;
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        Matrix a(n, n);
        std::vector<std::vector<double>> rows(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) rows[i][j] = a(i, j) = g(rng);
        EXPECT_NEAR(la::determinant(a), oracle::cofactor_det(rows), 1e-10);
    }
    EXPECT_EQ(la::determinant(Matrix(0, 0)), 1.0);
    EXPECT_EQ(la::determinant(Matrix(3, 3, 1.0)), 0.0);
}

TEST(Matrix, ProductsAndSubmatrices) {
    Matrix a(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
    const auto ata = la::matmul(la::transpose(a), a);
    EXPECT_EQ(ata.rows(), 3u);
    EXPECT_DOUBLE_EQ(ata(0, 0), 17.0);
    EXPECT_DOUBLE_EQ(ata(1, 2), 2 * 3 + 5 * 6);
    const std::vector<std::size_t> idx{0, 2};
    const auto sub = la::principal_submatrix(ata, idx);
    EXPECT_DOUBLE_EQ(sub(1, 0), ata(2, 0));
    EXPECT_THROW(la::matmul(a, a), dppfl::ShapeError);
}
