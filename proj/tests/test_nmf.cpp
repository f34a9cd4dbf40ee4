#include "citymf/errors.hpp"
#include "citymf/nmf.hpp"
#include "citymf/rng.hpp"

#include <doctest.h>

#include <random>

using namespace citymf;

namespace {

double rel_error(const Matrix& x, const NmfResult& r) {
    return (x - r.coefficients * r.basis).norm() / x.norm();
}

Matrix random_nonneg(Index rows, Index cols, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

Matrix planted(Index rows, Index cols, int k, Rng& rng) {
    return random_nonneg(rows, k, rng) * random_nonneg(k, cols, rng);
}

}  // namespace

TEST_CASE("rank-1 recovery") {
    Vector u(6), v(4);
    u << 1, 2, 0.5, 3, 0.1, 4;
    v << 2, 0.3, 1, 5;
    Matrix x = u * v.transpose();
    auto r = nmf(x, 1, {2000, 0.0, 1});
    CHECK(rel_error(x, r) <= 1e-6);
}

TEST_CASE("all-zero input short-circuits") {
    Matrix x = Matrix::Zero(4, 3);
    auto r = nmf(x, 2, {});
    CHECK(r.coefficients.isZero(0.0));
    CHECK((r.coefficients * r.basis).norm() == 0.0);
    CHECK(r.basis.rowwise().sum().isApproxToConstant(1.0));
}

TEST_CASE("diagonal rank-2 counts") {
    Matrix x(2, 2);
    x << 3, 0, 0, 5;
    auto r = nmf(x, 2, {5000, 0.0, 3});
    CHECK(rel_error(x, r) <= 1e-6);
}

TEST_CASE("argument checks") {
    Matrix x = Matrix::Ones(3, 4);
    CHECK_THROWS_AS(nmf(x, 0), InvalidArgument);
    CHECK_THROWS_AS(nmf(x, 4), InvalidArgument);
    x(1, 1) = -1.0;
    CHECK_THROWS_AS(nmf(x, 1), InvalidArgument);
    x(1, 1) = NAN;
    CHECK_THROWS_AS(nmf(x, 1), InvalidArgument);
}

TEST_CASE("output invariants") {
    Rng rng(21);
    Matrix x = random_nonneg(12, 9, rng);
    auto r = nmf(x, 3, {300, 1e-9, 5});
    REQUIRE(r.basis.rows() == 3);
    REQUIRE(r.basis.cols() == 9);
    REQUIRE(r.coefficients.rows() == 12);
    REQUIRE(r.coefficients.cols() == 3);
    CHECK(r.basis.minCoeff() >= 0.0);
    CHECK(r.coefficients.minCoeff() >= 0.0);
    for (Index a = 0; a < 3; ++a) CHECK(r.basis.row(a).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.loss_trace.size() == static_cast<std::size_t>(r.iterations) + 1);
}

TEST_CASE("loss is monotone non-increasing") {
    Rng rng(22);
    for (int t = 0; t < 25; ++t) {
        Index rows = std::uniform_int_distribution<Index>(2, 30)(rng);
        Index cols = std::uniform_int_distribution<Index>(2, 30)(rng);
        int k = std::uniform_int_distribution<int>(1, static_cast<int>(std::min<Index>({rows, cols, 6})))(rng);
        Matrix x = random_nonneg(rows, cols, rng);
        if (t % 3 == 0) x = (x.array() < 0.5).select(0.0, x);  // sparse
        auto r = nmf(x, k, {200, 0.0, static_cast<std::uint64_t>(t)});
        for (std::size_t s = 1; s < r.loss_trace.size(); ++s)
            CHECK(r.loss_trace[s] <= r.loss_trace[s - 1] * (1.0 + 1e-12));
    }
}

TEST_CASE("planted low-rank recovery up to 50x30") {
    Rng rng(23);
    const Index shapes[][2] = {{8, 5}, {20, 12}, {35, 21}, {50, 30}};
    int trial = 0;
    for (auto [rows, cols] : shapes) {
        for (int k = 1; k <= std::min<Index>(5, cols); ++k) {
            Matrix x = planted(rows, cols, k, rng);
            NmfOptions o{10000, 1e-15, static_cast<std::uint64_t>(100 + trial++), 6};
            auto r = nmf(x, k, o);
            INFO("shape " << rows << "x" << cols << " k=" << k << " iters=" << r.iterations);
            CHECK(rel_error(x, r) <= 1e-6);
        }
    }
}

TEST_CASE("restarts keep the best start") {
    Rng rng(25);
    Matrix x = planted(20, 12, 4, rng);
    NmfOptions one{300, 0.0, 7, 1}, many{300, 0.0, 7, 3};
    auto a = nmf(x, 4, one);
    auto b = nmf(x, 4, many);
    CHECK(b.loss_trace.back() <= a.loss_trace.back());
    CHECK_THROWS_AS(nmf(x, 4, {300, 0.0, 7, 0}), InvalidArgument);
}

TEST_CASE("deterministic per seed") {
    Rng rng(24);
    Matrix x = random_nonneg(10, 8, rng);
    auto a = nmf(x, 3, {100, 0.0, 9});
    auto b = nmf(x, 3, {100, 0.0, 9});
    CHECK(a.basis == b.basis);
    CHECK(a.coefficients == b.coefficients);
}
