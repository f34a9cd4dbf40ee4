#include "citymf/errors.hpp"
#include "citymf/factorize.hpp"
#include "citymf/gravity.hpp"
#include "citymf/synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace citymf;

namespace {

SynthConfig small(std::uint64_t seed) {
    SynthConfig c;
    c.n_rows = 6;
    c.n_cols = 7;
    c.n = 5;
    c.m = 6;
    c.l = 3;
    c.trips_taxi = 2000;
    c.trips_bus = 1500;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("empty row count") {
    SynthConfig c = small(1);
    c.n_rows = 29;
    c.n_cols = 30;
    c.trips_taxi = c.trips_bus = 0;
    auto d = generate(c);
    int empty = 0;
    for (Index i = 0; i < d.grid.size(); ++i) {
        const bool observed = d.shopping.row_observed(i);
        if (!observed) {
            ++empty;
            CHECK(d.shopping.values.row(i).cwiseAbs().sum() == 0.0);
        } else {
            CHECK(d.shopping.mask.row(i).minCoeff() == 1.0);
        }
    }
    CHECK(d.grid.size() == 870);
    CHECK(empty == 548);
    CHECK(d.taxi_trips.empty());
}

TEST_CASE("noiseless matrices are the planted products") {
    SynthConfig c = small(2);
    c.noise_sigma = 0.0;
    c.empty_row_fraction = 0.0;
    auto d = generate(c);
    const auto& t = d.truth;
    CHECK(d.shopping.values == t.lifestyles * t.shopping_view.transpose());
    CHECK(d.mobility.values == t.lifestyles * t.mobility_view.transpose());
    CHECK(t.lifestyles.minCoeff() > 0.0);
    CHECK(t.shopping_view.maxCoeff() < 1.0);
}

TEST_CASE("noisy matrices stay non-negative") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        SynthConfig c = small(s);
        c.noise_sigma = 1.5;
        auto d = generate(c);
        CHECK(d.shopping.values.minCoeff() >= 0.0);
        CHECK(d.mobility.values.minCoeff() >= 0.0);
    }
}

TEST_CASE("generation is deterministic in the seed") {
    auto a = generate(small(9)), b = generate(small(9)), c = generate(small(10));
    CHECK(a.shopping.values == b.shopping.values);
    CHECK(a.mobility.values == b.mobility.values);
    CHECK(a.truth.origin_mass == b.truth.origin_mass);
    REQUIRE(a.taxi_trips.size() == b.taxi_trips.size());
    for (std::size_t k = 0; k < a.taxi_trips.size(); ++k) {
        CHECK(a.taxi_trips[k].origin.lat == b.taxi_trips[k].origin.lat);
        CHECK(a.taxi_trips[k].destination.lon == b.taxi_trips[k].destination.lon);
    }
    CHECK(a.shopping.values != c.shopping.values);

    auto ra = emit_raw_records(a, small(9)), rb = emit_raw_records(b, small(9));
    CHECK(ra.browsing.size() == rb.browsing.size());
    CHECK(ra.checkins.size() == rb.checkins.size());
    CHECK(ra.shopping_basis == rb.shopping_basis);
}

TEST_CASE("trips land inside their cells") {
    auto d = generate(small(3));
    CHECK(d.taxi_trips.size() == 2000);
    CHECK(d.bus_trips.size() == 1500);
    for (const auto& t : d.taxi_trips) {
        CHECK(t.mode == TransportMode::taxi);
        CHECK(d.grid.region_of(t.origin).has_value());
        CHECK(d.grid.region_of(t.destination).has_value());
    }
}

TEST_CASE("planted lifestyles sit closer to their interaction average than to their neighbors") {
    for (std::uint64_t s = 0; s < 8; ++s) {
        SynthConfig c = small(s);
        c.trips_taxi = c.trips_bus = 0;
        auto d = generate(c);
        const Matrix dis = d.grid.center_distance();
        Matrix qt = interaction_matrix(d.truth.taxi, d.truth.origin_mass, d.truth.dest_mass, dis);
        Matrix qb = interaction_matrix(d.truth.bus, d.truth.origin_mass, d.truth.dest_mass, dis);
        const Matrix w = combined_weights(qt, qb, d.grid);
        const Matrix uniform = Matrix::Constant(d.grid.size(), d.grid.size(), 1.0 / d.grid.size());
        const double pull_w = mean_pull_distance(d.truth.lifestyles, w);
        INFO("seed " << s);
        CHECK(pull_w < mean_pull_distance(d.truth.lifestyles, neighbor_weights(d.grid)));
        CHECK(pull_w < mean_pull_distance(d.truth.lifestyles, uniform));
    }
}

TEST_CASE("gravity parameters survive sampling") {
    SynthConfig c = small(4);
    c.n_rows = c.n_cols = 8;
    c.taxi = {1.0, 1.0, 0.3, 1.0};
    c.trips_taxi = 400000;
    c.trips_bus = 0;
    auto d = generate(c);
    const FlowTable f = build_flows(d.taxi_trips, d.grid, TransportMode::taxi);
    CHECK(f.q.sum() == doctest::Approx(400000.0));
    auto p = fit_gravity(f.q, d.truth.origin_mass, d.truth.dest_mass, d.grid.center_distance(), TransportMode::taxi);
    CHECK(std::abs(p.a - 1.0) <= 0.1);
    CHECK(std::abs(p.b - 1.0) <= 0.1);
    CHECK(std::abs(p.g - 0.3) <= 0.03);
}

TEST_CASE("raw records") {
    SynthConfig c = small(5);
    auto d = generate(c);
    auto raw = emit_raw_records(d, c);
    CHECK(raw.shopping_basis.rows() == c.n);
    CHECK(raw.shopping_basis.cols() == c.shopping_categories);
    CHECK(raw.mobility_basis.cols() == c.mobility_categories);
    for (Index p = 0; p < raw.shopping_basis.rows(); ++p)
        CHECK(raw.shopping_basis.row(p).sum() == doctest::Approx(1.0));
    CHECK(raw.towers.back().first == "T_outside");
    CHECK_FALSE(d.grid.region_of(raw.towers.back().second).has_value());
    for (std::size_t k = 0; k + 1 < raw.towers.size(); ++k) CHECK(d.grid.region_of(raw.towers[k].second).has_value());
    for (const auto& ck : raw.checkins) {
        CHECK(ck.poi_category_id >= 0);
        CHECK(ck.poi_category_id < c.mobility_categories);
    }
}

TEST_CASE("invalid configurations") {
    SynthConfig c = small(0);
    c.empty_row_fraction = 1.0;
    CHECK_THROWS_AS(generate(c), InvalidArgument);
    c = small(0);
    c.taxi.c = 0.0;
    CHECK_THROWS_AS(generate(c), InvalidArgument);
    c = small(0);
    c.l = 0;
    CHECK_THROWS_AS(generate(c), InvalidArgument);
}
