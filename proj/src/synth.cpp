#include "citymf/synth.hpp"

#include "citymf/errors.hpp"
#include "citymf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace citymf {

void SynthConfig::validate() const {
    if (n_rows < 1 || n_cols < 1 || n < 1 || m < 1 || l < 1)
        throw InvalidArgument("synth: grid and pattern dimensions must be >= 1");
    if (!(cell_size_km > 0.0)) throw InvalidArgument("synth: cell_size_km must be > 0");
    if (!(empty_row_fraction >= 0.0 && empty_row_fraction < 1.0))
        throw InvalidArgument("synth: empty_row_fraction must lie in [0, 1)");
    if (!(spatial_smoothing >= 0.0 && spatial_smoothing < 1.0))
        throw InvalidArgument("synth: spatial_smoothing must lie in [0, 1)");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        throw InvalidArgument("synth: noise_sigma must be >= 0");
    if (trips_taxi < 0 || trips_bus < 0) throw InvalidArgument("synth: trip counts must be >= 0");
    if (!(mass_scale > 0.0)) throw InvalidArgument("synth: mass_scale must be > 0");
    for (const GravityTruth* t : {&taxi, &bus})
        if (!(t->c > 0.0) || !std::isfinite(t->a) || !std::isfinite(t->b) || !std::isfinite(t->g))
            throw InvalidArgument("synth: gravity truth must be finite with c > 0");
    if (shopping_categories < 1 || mobility_categories < 1 || users_per_region < 1)
        throw InvalidArgument("synth: vocabularies and users_per_region must be >= 1");
    if (!(records_per_unit > 0.0) || !(checkins_per_unit > 0.0))
        throw InvalidArgument("synth: emission rates must be > 0");
}

namespace {

// Cell-jittered point, kept strictly inside the half-open cell.
GeoPoint jitter(const RegionGrid& grid, Index region, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 0.999999);
    const double east = (grid.col_of(region) + u(rng)) * grid.cell_size_km();
    const double north = (grid.row_of(region) + u(rng)) * grid.cell_size_km();
    return grid.from_km(east, north);
}

std::vector<TripRecord> sample_trips(const RegionGrid& grid, const Matrix& interaction,
                                     std::int64_t count, TransportMode mode, Rng& rng) {
    std::vector<TripRecord> trips;
    if (count == 0) return trips;
    const Index r = grid.size();
    std::vector<double> weights(static_cast<std::size_t>(r * r));
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < r; ++j) weights[static_cast<std::size_t>(i * r + j)] = interaction(i, j);
    std::discrete_distribution<Index> pick(weights.begin(), weights.end());
    trips.reserve(static_cast<std::size_t>(count));
    for (std::int64_t t = 0; t < count; ++t) {
        const Index pair = pick(rng);
        const Index from = pair / r, to = pair % r;
        TripRecord rec;
        rec.mode = mode;
        rec.origin = jitter(grid, from, rng);
        rec.destination = jitter(grid, to, rng);
        trips.push_back(rec);
    }
    return trips;
}

GravityParams to_params(const GravityTruth& t, TransportMode mode) {
    GravityParams p;
    p.a = t.a;
    p.b = t.b;
    p.g = t.g;
    p.ln_c = std::log(t.c);
    p.mode = mode;
    return p;
}

}  // namespace

SynthData generate(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    SynthData out{RegionGrid::planar(cfg.cell_size_km, cfg.n_rows, cfg.n_cols), {}, {}, {}, {}, {}};
    const RegionGrid& grid = out.grid;
    const Index r = grid.size();

    std::gamma_distribution<double> gamma21(2.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    Matrix raw(r, cfg.l);
    for (Index j = 0; j < raw.cols(); ++j)
        for (Index i = 0; i < r; ++i) raw(i, j) = gamma21(rng);
    Matrix& Rl = out.truth.lifestyles;
    Rl = raw;
    if (cfg.spatial_smoothing > 0.0) {
        for (Index i = 0; i < r; ++i) {
            const auto nb = grid.neighbors(i);
            if (nb.empty()) continue;
            Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(cfg.l);
            for (Index j : nb) mean += raw.row(j);
            mean /= static_cast<double>(nb.size());
            Rl.row(i) = (1.0 - cfg.spatial_smoothing) * raw.row(i) + cfg.spatial_smoothing * mean;
        }
    }

    auto uniform_matrix = [&](Index rows, Index cols) {
        Matrix x(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) x(i, j) = unit(rng);
        return x;
    };
    out.truth.shopping_view = uniform_matrix(cfg.n, cfg.l);
    out.truth.mobility_view = uniform_matrix(cfg.m, cfg.l);

    auto observe = [&](const Matrix& clean) {
        Matrix x = clean;
        const double sigma =
            cfg.relative_noise ? cfg.noise_sigma * std::sqrt(clean.squaredNorm() / static_cast<double>(clean.size()))
                               : cfg.noise_sigma;
        if (sigma > 0.0) {
            for (Index j = 0; j < x.cols(); ++j)
                for (Index i = 0; i < x.rows(); ++i)
                    x(i, j) = std::max(0.0, x(i, j) + sigma * noise(rng));
        }
        return x;
    };
    out.shopping.values = observe(Rl * out.truth.shopping_view.transpose());
    out.mobility.values = observe(Rl * out.truth.mobility_view.transpose());
    out.shopping.mask = Matrix::Ones(r, cfg.n);

    // 1e-9 guards products like 0.629 * 870 = 547.23 against representation error.
    const auto n_empty = static_cast<Index>(std::ceil(cfg.empty_row_fraction * static_cast<double>(r) - 1e-9));
    std::vector<Index> rows(static_cast<std::size_t>(r));
    std::iota(rows.begin(), rows.end(), Index{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    for (Index k = 0; k < n_empty; ++k) {
        out.shopping.values.row(rows[static_cast<std::size_t>(k)]).setZero();
        out.shopping.mask.row(rows[static_cast<std::size_t>(k)]).setZero();
    }

    Vector& O = out.truth.origin_mass;
    Vector& D = out.truth.dest_mass;
    O.resize(r);
    D.resize(r);
    for (Index i = 0; i < r; ++i) O(i) = gamma21(rng) * cfg.mass_scale;
    for (Index i = 0; i < r; ++i) D(i) = gamma21(rng) * cfg.mass_scale;

    out.truth.taxi = to_params(cfg.taxi, TransportMode::taxi);
    out.truth.bus = to_params(cfg.bus, TransportMode::bus);
    const Matrix dis = grid.center_distance();
    out.taxi_trips = sample_trips(grid, interaction_matrix(out.truth.taxi, O, D, dis), cfg.trips_taxi,
                                  TransportMode::taxi, rng);
    out.bus_trips = sample_trips(grid, interaction_matrix(out.truth.bus, O, D, dis), cfg.trips_bus,
                                 TransportMode::bus, rng);
    return out;
}

double mean_pull_distance(const Matrix& lifestyles, const Matrix& weights) {
    if (weights.rows() != lifestyles.rows() || weights.cols() != lifestyles.rows())
        throw InvalidArgument("mean_pull_distance: weights must be r x r");
    const Matrix diff = lifestyles - weights.transpose() * lifestyles;
    return diff.rowwise().norm().mean();
}

namespace {

// Rows concentrate on a handful of categories over a faint background.
Matrix planted_basis(Index patterns, Index categories, Rng& rng) {
    std::gamma_distribution<double> heavy(1.0, 1.0);
    std::uniform_int_distribution<Index> cat(0, categories - 1);
    Matrix P = Matrix::Constant(patterns, categories, 0.01 / static_cast<double>(categories));
    const Index focus = std::max<Index>(1, std::min<Index>(8, categories));
    for (Index p = 0; p < patterns; ++p) {
        for (Index k = 0; k < focus; ++k) P(p, cat(rng)) += heavy(rng);
        P.row(p) /= P.row(p).sum();
    }
    return P;
}

void emit_counts(const Eigen::RowVectorXd& expected, Rng& rng,
                 const std::function<void(int)>& emit) {
    Index best = 0;
    std::int64_t total = 0;
    for (Index c = 0; c < expected.size(); ++c) {
        if (expected(c) > expected(best)) best = c;
        if (expected(c) <= 0.0) continue;
        std::poisson_distribution<std::int64_t> pois(expected(c));
        const std::int64_t k = pois(rng);
        for (std::int64_t t = 0; t < k; ++t) emit(static_cast<int>(c));
        total += k;
    }
    if (total == 0) emit(static_cast<int>(best));
}

}  // namespace

RawRecords emit_raw_records(const SynthData& data, const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, {0x726177}));
    RawRecords raw;
    raw.shopping_basis = planted_basis(data.shopping.patterns(), cfg.shopping_categories, rng);
    raw.mobility_basis = planted_basis(data.mobility.values.cols(), cfg.mobility_categories, rng);
    const RegionGrid& grid = data.grid;
    std::uniform_int_distribution<int> tower_count(1, 3);
    std::gamma_distribution<double> split(1.0, 1.0);

    for (Index i = 0; i < grid.size(); ++i) {
        if (!data.shopping.row_observed(i)) continue;
        const int towers = tower_count(rng);
        std::vector<double> share(static_cast<std::size_t>(towers));
        for (auto& s : share) s = split(rng) + 1e-3;
        const double total = std::accumulate(share.begin(), share.end(), 0.0);
        for (int t = 0; t < towers; ++t) {
            const std::string id = "T" + std::to_string(i) + "_" + std::to_string(t);
            raw.towers.emplace_back(id, jitter(grid, i, rng));
            const Eigen::RowVectorXd expected = cfg.records_per_unit * (share[static_cast<std::size_t>(t)] / total) *
                                                data.shopping.values.row(i) * raw.shopping_basis;
            emit_counts(expected, rng, [&](int c) { raw.browsing.push_back({id, c}); });
        }
    }
    // One tower beyond the north-east corner; extraction must drop it.
    raw.towers.emplace_back("T_outside", grid.from_km(grid.n_cols() * grid.cell_size_km() + 0.5,
                                                      grid.n_rows() * grid.cell_size_km() + 0.5));
    raw.browsing.push_back({"T_outside", 0});

    std::int64_t clock = 1'420'070'400;  // 2015-01-01
    for (Index i = 0; i < grid.size(); ++i) {
        for (int u = 0; u < cfg.users_per_region; ++u) {
            const std::string id = "U" + std::to_string(i) + "_" + std::to_string(u);
            const Eigen::RowVectorXd expected = (cfg.checkins_per_unit / cfg.users_per_region) *
                                                data.mobility.values.row(i) * raw.mobility_basis;
            emit_counts(expected, rng, [&](int c) {
                raw.checkins.push_back({id, c, jitter(grid, i, rng), clock});
                clock += 37;
            });
        }
    }
    return raw;
}

}  // namespace citymf
