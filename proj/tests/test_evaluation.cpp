#include "citymf/errors.hpp"
#include "citymf/evaluation.hpp"
#include "citymf/grid.hpp"
#include "citymf/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

using namespace citymf;

namespace {

ShoppingPatternMatrix rows_pattern(Index r, Index n, const std::vector<Index>& empty) {
    ShoppingPatternMatrix s{Matrix::Constant(r, n, 1.0), Matrix::Ones(r, n)};
    for (Index i = 0; i < r; ++i) s.values.row(i) *= static_cast<double>(i + 1);
    for (Index i : empty) {
        s.values.row(i).setZero();
        s.mask.row(i).setZero();
    }
    return s;
}

}  // namespace

TEST_CASE("metric examples") {
    std::vector<double> t{1, 2, 3}, p{2, 2, 5};
    CHECK(rmse(t, p) == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(mae(t, p) == doctest::Approx(1.0));
    std::vector<double> a{0, 0}, b{1, 1};
    CHECK(rmse(a, b) == doctest::Approx(1.0));
    std::vector<double> c{0, 0, 0}, d{1, 1, 2};
    CHECK(rmse(c, d) == doctest::Approx(std::sqrt(2.0)));
    CHECK(mae(c, d) == doctest::Approx(4.0 / 3.0));
    std::vector<double> one{-3}, zero{0};
    CHECK(rmse(one, zero) == 3.0);
    CHECK(mae(one, zero) == 3.0);
    CHECK(rmse(t, t) == 0.0);
    std::vector<double> empty;
    CHECK_THROWS_AS(rmse(empty, empty), InvalidArgument);
    CHECK_THROWS_AS(mae(t, a), InvalidArgument);
}

TEST_CASE("metric properties") {
    Rng rng(71);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    std::uniform_int_distribution<int> len(1, 30);
    for (int k = 0; k < 10000; ++k) {
        const int n = len(rng);
        std::vector<double> t(n), p(n), ts(n), ps(n);
        const double shift = u(rng);
        for (int i = 0; i < n; ++i) {
            t[i] = u(rng);
            p[i] = u(rng);
            ts[i] = t[i] + shift;
            ps[i] = p[i] + shift;
        }
        const double r = rmse(t, p), m = mae(t, p);
        CHECK(r >= m - 1e-12);
        CHECK(m >= 0.0);
        CHECK(rmse(p, t) == r);
        CHECK(mae(p, t) == m);
        CHECK(rmse(ts, ps) == doctest::Approx(r).epsilon(1e-9));
        CHECK(mae(ts, ps) == doctest::Approx(m).epsilon(1e-9));
    }
}

TEST_CASE("improvement percentage") {
    CHECK(improvement_pct(0.443, 0.394) == doctest::Approx(11.0609).epsilon(1e-5));
    CHECK(improvement_pct(2.0, 1.0) == 50.0);
    CHECK(improvement_pct(1.0, 1.5) == -50.0);
    CHECK_THROWS_AS(improvement_pct(0.0, 1.0), InvalidArgument);
}

TEST_CASE("row holdout split") {
    auto s = rows_pattern(14, 3, {1, 5, 9, 12});  // 10 non-empty rows
    auto split = split_rows(s, 0.8, 4);
    CHECK(split.held_out_rows.size() == 2);
    CHECK(std::is_sorted(split.held_out_rows.begin(), split.held_out_rows.end()));
    for (Index i : split.held_out_rows) {
        CHECK(split.train_mask.row(i).sum() == 0.0);
        CHECK(s.mask.row(i).sum() == 3.0);
    }
    CHECK(split.test_entries.size() == 6);
    for (const auto& e : split.test_entries) CHECK(e.value == s.values(e.row, e.col));
    CHECK(split.train_mask.sum() == doctest::Approx(8 * 3));

    CHECK(split_rows(s, 0.9, 4).held_out_rows.size() == 1);
    CHECK(split_rows(s, 0.5, 4).held_out_rows.size() == 5);

    auto v = training_view(s, split);
    for (Index i : split.held_out_rows) CHECK(v.values.row(i).cwiseAbs().sum() == 0.0);

    CHECK_THROWS_AS(split_rows(s, 1.0, 0), InvalidArgument);
    CHECK_THROWS_AS(split_rows(s, 0.0, 0), InvalidArgument);
    CHECK_THROWS_AS(split_rows(rows_pattern(3, 2, {0, 1}), 0.5, 0), InvalidArgument);
}

TEST_CASE("split draws only non-empty rows and is seeded") {
    std::set<Index> seen;
    const std::vector<Index> empty{0, 3, 4, 7, 11, 15};
    auto s = rows_pattern(20, 2, empty);
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        auto split = split_rows(s, 0.7, seed);
        CHECK(split.held_out_rows.size() == 5);  // ceil(0.3 * 14)
        for (Index i : split.held_out_rows) {
            CHECK(std::find(empty.begin(), empty.end(), i) == empty.end());
            seen.insert(i);
        }
        CHECK(split.held_out_rows == split_rows(s, 0.7, seed).held_out_rows);
    }
    CHECK(seen.size() == 14);
    CHECK(split_rows(s, 0.7, 1).held_out_rows != split_rows(s, 0.7, 2).held_out_rows);
}

TEST_CASE("experiment report") {
    Rng rng(72);
    auto grid = RegionGrid::planar(1.0, 4, 4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix rl(16, 2), v1(3, 2), v2(4, 2);
    for (Matrix* x : {&rl, &v1, &v2})
        for (Index i = 0; i < x->size(); ++i) x->data()[i] = u(rng);
    ExperimentData data;
    data.shopping = {rl * v1.transpose(), Matrix::Ones(16, 3)};
    for (Index i : {2, 6, 13}) {
        data.shopping.values.row(i).setZero();
        data.shopping.mask.row(i).setZero();
    }
    data.mobility = {rl * v2.transpose()};
    data.neighbor_weights = neighbor_weights(grid);
    data.interaction_weights = Matrix::Constant(16, 16, 1.0 / 16);

    ExperimentOptions opts;
    opts.fractions = {0.6, 0.8};
    opts.repeats = 3;
    opts.hyper.l = 2;
    opts.hyper.max_iters = 60;
    opts.seed = 3;
    auto rep = run_experiment(data, opts);
    REQUIRE(rep.cells.size() == 4);
    for (const auto& v : rep.cells) {
        REQUIRE(v.size() == 2);
        for (const auto& f : v) CHECK(f.size() == 3);
    }
    for (std::size_t v = 0; v < 4; ++v)
        for (std::size_t f = 0; f < 2; ++f) {
            double s = 0.0;
            for (const auto& c : rep.cells[v][f]) {
                s += c.mae;
                CHECK(c.rmse >= c.mae - 1e-12);
                CHECK(c.iterations >= 1);
            }
            CHECK(rep.mean_mae[v][f] == doctest::Approx(s / 3));
        }
    CHECK(rep.total_improvement_mae(0) ==
          doctest::Approx(improvement_pct(rep.mean_mae[0][0], rep.mean_mae[3][0])));
    CHECK(rep.step_improvement_rmse(2, 1) ==
          doctest::Approx(improvement_pct(rep.mean_rmse[1][1], rep.mean_rmse[2][1])));

    // same seed, same report, threads or not
    opts.threads = 3;
    auto again = run_experiment(data, opts);
    CHECK(again.mean_rmse == rep.mean_rmse);
    CHECK(again.mean_mae == rep.mean_mae);

    // CMF+I at alpha 0 is CMF on the same split and seed
    opts.hyper.alpha = 0.0;
    opts.variants = {Variant::cmf, Variant::cmf_i};
    auto nested = run_experiment(data, opts);
    CHECK(nested.mean_rmse[0] == nested.mean_rmse[1]);

    auto table = format_table(rep);
    CHECK(table.find("Training Size") != std::string::npos);
    CHECK(table.find("CMF+N") != std::string::npos);
    CHECK(table.find("Total") != std::string::npos);

    opts.repeats = 0;
    CHECK_THROWS_AS(run_experiment(data, opts), InvalidArgument);
}

TEST_CASE("cell seeds differ") {
    std::set<std::uint64_t> s;
    for (std::size_t f = 0; f < 3; ++f)
        for (int k = 0; k < 10; ++k) {
            s.insert(split_seed(5, f, k));
            s.insert(train_seed(5, f, k));
        }
    CHECK(s.size() == 60);
    CHECK(split_seed(5, 1, 2) == split_seed(5, 1, 2));
}
