#include "citymf/errors.hpp"
#include "citymf/nmf.hpp"
#include "citymf/patterns.hpp"
#include "citymf/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace citymf;

TEST_CASE("count matrix") {
    std::vector<CategoryObservation> recs{{"L1", 2}, {"L1", 2}, {"L2", 0}};
    auto c = build_count_matrix(recs, 3);
    CHECK(c.row_keys == std::vector<std::string>{"L1", "L2"});
    Matrix expect(2, 3);
    expect << 0, 0, 2, 1, 0, 0;
    CHECK(c.values == expect);

    CHECK(build_count_matrix(std::vector<CategoryObservation>{}, 3).values.rows() == 0);

    std::vector<CategoryObservation> five(5, {"U1", 0});
    auto one = build_count_matrix(five, 1);
    REQUIRE(one.values.rows() == 1);
    CHECK(one.values(0, 0) == 5.0);

    CHECK_THROWS_AS(build_count_matrix(std::vector<CategoryObservation>{{"x", 3}}, 3), InvalidArgument);
    CHECK_THROWS_AS(build_count_matrix(std::vector<CategoryObservation>{{"x", -1}}, 3), InvalidArgument);
}

TEST_CASE("count matrix from records keeps first-seen order") {
    std::vector<BrowsingRecord> b{{"T9", 1}, {"T2", 0}, {"T9", 1}};
    auto cb = build_count_matrix(b, 2);
    CHECK(cb.row_keys == std::vector<std::string>{"T9", "T2"});
    CHECK(cb.values(0, 1) == 2.0);
    std::vector<CheckinRecord> c{{"u", 1, {0, 0}, 0}, {"v", 0, {0, 0}, 1}};
    auto cc = build_count_matrix(c, 2);
    CHECK(cc.row_keys == std::vector<std::string>{"u", "v"});
}

TEST_CASE("shopping aggregation") {
    auto g = RegionGrid::planar(1.0, 2, 2);
    std::unordered_map<std::string, GeoPoint> towers{
        {"A", {1.2, 1.5}}, {"B", {1.9, 1.1}}, {"C", {0.5, 0.5}}, {"far", {9.0, 9.0}}};
    Matrix coef(4, 2);
    coef << 1, 0, 0.5, 2, 0.25, 0.75, 7, 7;
    auto s = aggregate_shopping({"A", "B", "C", "far"}, coef, towers, g);
    CHECK(s.values.row(3) == Eigen::RowVector2d(1.5, 2.0));
    CHECK(s.mask.row(3) == Eigen::RowVector2d(1, 1));
    CHECK(s.values.row(0) == Eigen::RowVector2d(0.25, 0.75));
    CHECK(s.values.row(1).isZero(0.0));
    CHECK(s.mask.row(1).isZero(0.0));
    CHECK(s.values.row(2).isZero(0.0));
    CHECK_NOTHROW(s.validate());

    auto missing = [&] { aggregate_shopping({"A", "ghost"}, coef.topRows(2), towers, g); };
    CHECK_THROWS_WITH_AS(missing(), doctest::Contains("ghost"), InputError);
}

TEST_CASE("activity shares") {
    auto g = RegionGrid::planar(1.0, 1, 2);  // region 0 = A, region 1 = B
    std::vector<CheckinRecord> c{{"u", 0, {0.5, 0.5}, 0}, {"u", 0, {0.5, 0.5}, 1}, {"u", 0, {0.5, 0.5}, 2},
                                 {"u", 0, {0.5, 1.5}, 3}, {"solo", 0, {0.5, 1.5}, 4},
                                 {"half", 0, {0.2, 0.2}, 5}, {"half", 0, {0.3, 0.3}, 6},
                                 {"half", 0, {-3.0, 0.3}, 7}, {"half", 0, {0.3, 50.0}, 8},
                                 {"gone", 0, {10.0, 10.0}, 9}};
    auto w = activity_shares(c, g);
    REQUIRE(w.user_ids == std::vector<std::string>{"u", "solo", "half"});
    Matrix d(w.shares);
    CHECK(d(0, 0) == 0.75);
    CHECK(d(0, 1) == 0.25);
    CHECK(d(1, 1) == 1.0);
    CHECK(d(2, 0) == 1.0);
    CHECK(d(2, 1) == 0.0);
}

TEST_CASE("mobility aggregation examples") {
    auto g = RegionGrid::planar(1.0, 1, 3);
    ActivityShareMatrix w;
    w.user_ids = {"u"};
    w.shares.resize(1, 3);
    w.shares.insert(0, 2) = 1.0;
    Matrix u(1, 2);
    u << 0.2, 0.8;
    auto rm = aggregate_mobility(w, u);
    CHECK(rm.values.row(2) == Eigen::RowVector2d(0.2, 0.8));
    CHECK(rm.values.topRows(2).isZero(0.0));

    ActivityShareMatrix w2;
    w2.user_ids = {"a", "b"};
    w2.shares.resize(2, 2);
    w2.shares.insert(0, 0) = 0.5;
    w2.shares.insert(0, 1) = 0.5;
    w2.shares.insert(1, 1) = 1.0;
    Matrix u2(2, 2);
    u2 << 1, 0, 0, 2;
    auto rm2 = aggregate_mobility(w2, u2);
    CHECK(rm2.values.row(0) == Eigen::RowVector2d(0.5, 0.0));
    CHECK(rm2.values.row(1) == Eigen::RowVector2d(0.5, 2.0));

    auto none = activity_shares({}, g);
    auto rm0 = aggregate_mobility(none, Matrix(0, 4));
    CHECK(rm0.values.rows() == 3);
    CHECK(rm0.values.isZero(0.0));

    CHECK_THROWS_AS(aggregate_mobility(w2, Matrix::Ones(3, 2)), InvalidArgument);
}

TEST_CASE("mobility aggregation matches the brute-force sum") {
    Rng rng(31);
    for (int t = 0; t < 200; ++t) {
        auto inst = oracle::random_mobility_instance(rng);
        auto w = activity_shares(inst.checkins, inst.grid);
        auto rm = aggregate_mobility(w, select_rows(inst.users, inst.user_coefficients, w.user_ids));
        Matrix expect = oracle::brute_force_mobility(inst);
        REQUIRE(rm.values.rows() == expect.rows());
        CHECK((rm.values - expect).cwiseAbs().maxCoeff() <= 1e-12);
        Matrix d(w.shares);
        for (Index k = 0; k < d.rows(); ++k) CHECK(d.row(k).sum() == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("select_rows") {
    Matrix v(3, 1);
    v << 1, 2, 3;
    CHECK(select_rows({"a", "b", "c"}, v, {"c", "a"}) == Eigen::Vector2d(3, 1));
    CHECK_THROWS_WITH_AS(select_rows({"a"}, v.topRows(1), {"z"}), doctest::Contains("z"), InputError);
}

TEST_CASE("top categories") {
    Matrix b(1, 3);
    b << 0.1, 0.7, 0.2;
    auto top = top_categories(b, 0, 2);
    CHECK(top == std::vector<std::pair<int, double>>{{1, 0.7}, {2, 0.2}});
    Matrix tie(1, 2);
    tie << 0.5, 0.5;
    CHECK(top_categories(tie, 0, 1) == std::vector<std::pair<int, double>>{{0, 0.5}});
    CHECK(top_categories(b, 0, 10).size() == 3);
    CHECK_THROWS_AS(top_categories(b, 1, 1), InvalidArgument);
}

TEST_CASE("shopping matrix validation") {
    ShoppingPatternMatrix s{Matrix::Ones(2, 2), Matrix::Ones(2, 2)};
    CHECK_NOTHROW(s.validate());
    s.mask(0, 0) = 0.0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.values(0, 0) = 0.0;
    CHECK_NOTHROW(s.validate());
    s.mask(1, 1) = 0.5;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("row normalization leaves the product unchanged") {
    Rng rng(32);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    Matrix p(4, 6), c(5, 4);
    for (Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
    for (Index i = 0; i < c.size(); ++i) c.data()[i] = u(rng);
    p.row(2).setZero();
    Matrix before = c * p;
    normalize_basis_rows(p, c);
    CHECK((c * p - before).cwiseAbs().maxCoeff() <= 1e-12);
    for (Index a = 0; a < 4; ++a) CHECK(p.row(a).sum() == doctest::Approx(1.0).epsilon(1e-12));
}
