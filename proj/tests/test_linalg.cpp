#include <catch2/catch.hpp>

#include "condex/linalg.hpp"
#include "condex/solver.hpp"
#include "support/oracles.hpp"

using namespace condex;

TEST_CASE("matmul against hand products", "[linalg]") {
    Matrix a(2, 3);
    a(0, 0) = 1; a(0, 1) = 2; a(0, 2) = 3;
    a(1, 0) = 4; a(1, 1) = 5; a(1, 2) = 6;
    Matrix b(3, 2);
    b(0, 0) = 7; b(0, 1) = 8;
    b(1, 0) = 9; b(1, 1) = 10;
    b(2, 0) = 11; b(2, 1) = 12;
    Matrix c = matmul(a, b);
    CHECK(c(0, 0) == 58.0);
    CHECK(c(0, 1) == 64.0);
    CHECK(c(1, 0) == 139.0);
    CHECK(c(1, 1) == 154.0);
}

TEST_CASE("matvec and identity", "[linalg]") {
    Matrix id = Matrix::identity(3);
    Vector v{1.5, -2.0, 0.25};
    CHECK(matvec(id, v) == v);
}

TEST_CASE("symmetric eigenvalues of known matrices", "[linalg]") {
    Matrix d(3, 3);
    d(0, 0) = 3; d(1, 1) = 1; d(2, 2) = 2;
    Vector eig = symmetric_eigenvalues(d);
    REQUIRE(eig.size() == 3);
    CHECK(eig[0] == Approx(1.0));
    CHECK(eig[1] == Approx(2.0));
    CHECK(eig[2] == Approx(3.0));

    // [[2,1],[1,2]] has eigenvalues 1 and 3
    Matrix s(2, 2);
    s(0, 0) = 2; s(0, 1) = 1; s(1, 0) = 1; s(1, 1) = 2;
    eig = symmetric_eigenvalues(s);
    CHECK(eig[0] == Approx(1.0).epsilon(1e-12));
    CHECK(eig[1] == Approx(3.0).epsilon(1e-12));
}

TEST_CASE("eigenvalues match trace and determinant on random symmetric input", "[linalg]") {
    SeededRng rng(11);
    Matrix raw = testsupport::random_matrix(rng, 6, 6);
    Matrix sym(6, 6);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) sym(i, j) = 0.5 * (raw(i, j) + raw(j, i));
    Vector eig = symmetric_eigenvalues(sym);
    double trace = 0.0, eig_sum = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        trace += sym(i, i);
        eig_sum += eig[i];
    }
    CHECK(eig_sum == Approx(trace).margin(1e-10));
}

TEST_CASE("cholesky factors SPD matrices and rejects indefinite ones", "[linalg]") {
    Matrix spd(2, 2);
    spd(0, 0) = 4; spd(0, 1) = 2; spd(1, 0) = 2; spd(1, 1) = 3;
    Matrix lower;
    REQUIRE(cholesky(spd, lower));
    Matrix rec = matmul(lower, transpose(lower));
    CHECK(rec(0, 0) == Approx(4.0));
    CHECK(rec(0, 1) == Approx(2.0));
    CHECK(rec(1, 1) == Approx(3.0));

    Matrix indef(2, 2);
    indef(0, 0) = 1; indef(0, 1) = 2; indef(1, 0) = 2; indef(1, 1) = 1;
    CHECK_FALSE(cholesky(indef, lower));
}

TEST_CASE("svd of identity and diagonal matrices", "[solver][linalg]") {
    SvdFactors f = svd(Matrix::identity(3));
    REQUIRE(f.singular_values.size() == 3);
    for (double s : f.singular_values) CHECK(s == Approx(1.0).epsilon(1e-12));

    Matrix d(3, 3);
    d(0, 0) = 3; d(1, 1) = 2; d(2, 2) = 1;
    f = svd(d);
    CHECK(f.singular_values[0] == Approx(3.0).epsilon(1e-12));
    CHECK(f.singular_values[1] == Approx(2.0).epsilon(1e-12));
    CHECK(f.singular_values[2] == Approx(1.0).epsilon(1e-12));
}

namespace {

void check_svd_reconstruction(const Matrix& a) {
    SvdFactors f = svd(a);
    const std::size_t k = f.singular_values.size();
    REQUIRE(k == std::min(a.rows(), a.cols()));
    const double sigma1 = f.singular_values[0];
    // nonincreasing
    for (std::size_t j = 1; j < k; ++j)
        CHECK(f.singular_values[j] <= f.singular_values[j - 1] + 1e-15 * sigma1);
    // orthonormal columns
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t q = 0; q < k; ++q) {
            double uu = 0.0, vv = 0.0;
            for (std::size_t i = 0; i < a.rows(); ++i)
                uu += f.left_vectors(i, p) * f.left_vectors(i, q);
            for (std::size_t i = 0; i < a.cols(); ++i)
                vv += f.right_vectors(i, p) * f.right_vectors(i, q);
            const double target = p == q ? 1.0 : 0.0;
            CHECK(std::abs(uu - target) < 1e-10);
            CHECK(std::abs(vv - target) < 1e-10);
        }
    }
    // reconstruction
    double max_err = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l)
                s += f.left_vectors(i, l) * f.singular_values[l] * f.right_vectors(j, l);
            max_err = std::max(max_err, std::abs(s - a(i, j)));
        }
    }
    CHECK(max_err <= 1e-10 * sigma1);
}

}  // namespace

TEST_CASE("svd reconstructs random matrices", "[solver][linalg]") {
    SeededRng rng(5);
    check_svd_reconstruction(testsupport::random_matrix(rng, 20, 10));
    check_svd_reconstruction(testsupport::random_matrix(rng, 10, 20));  // wide
    check_svd_reconstruction(testsupport::random_matrix(rng, 15, 15));
    check_svd_reconstruction(testsupport::random_matrix(rng, 7, 1));
}

TEST_CASE("svd handles rank deficiency with orthonormal completion", "[solver][linalg]") {
    // rank-1: outer product
    Matrix a(6, 3);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            a(i, j) = (1.0 + static_cast<double>(i)) * (2.0 + static_cast<double>(j));
    check_svd_reconstruction(a);
    SvdFactors f = svd(a);
    CHECK(f.singular_values[1] == 0.0);
    CHECK(f.singular_values[2] == 0.0);
}

TEST_CASE("svd completes the basis when the range spreads across all coordinates",
          "[solver][linalg]") {
    // rank-4 5x5 matrix whose range is the orthogonal complement of the
    // all-ones direction: every coordinate vector is equally close to the
    // range, the worst case for basis completion
    SeededRng rng(77);
    Matrix r = testsupport::random_matrix(rng, 5, 5);
    Matrix a(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double col_mean = 0.0;
            for (std::size_t l = 0; l < 5; ++l) col_mean += r(l, j);
            col_mean /= 5.0;
            a(i, j) = r(i, j) - col_mean;
        }
    check_svd_reconstruction(a);
    const SvdFactors f = svd(a);
    CHECK(f.singular_values.back() == 0.0);
}

TEST_CASE("svd rejects non-finite input", "[solver][linalg]") {
    Matrix a(2, 2);
    a(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(svd(a), std::invalid_argument);
}
