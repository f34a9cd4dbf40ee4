#pragma once

#include "citymf/common.hpp"
#include "citymf/gravity.hpp"
#include "citymf/grid.hpp"
#include "citymf/patterns.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace citymf {

struct GravityTruth {
    double a = 1.0;
    double b = 1.0;
    double g = 0.3;  // per km
    double c = 1.0;

    friend bool operator==(const GravityTruth&, const GravityTruth&) = default;
};

struct SynthConfig {
    int n_rows = 20;
    int n_cols = 20;
    double cell_size_km = 1.0;
    int n = 30;  // shopping patterns
    int m = 40;  // mobility patterns
    int l = 10;  // latent lifestyles
    double empty_row_fraction = 0.629;
    double noise_sigma = 0.05;
    // When set, the noise standard deviation is noise_sigma times the RMS
    // of the clean matrix it is added to.
    bool relative_noise = true;
    double spatial_smoothing = 0.5;
    GravityTruth taxi{1.0, 1.0, 3.0, 1.0};
    GravityTruth bus{0.8, 0.9, 3.6, 1.0};
    std::int64_t trips_taxi = 100000;
    std::int64_t trips_bus = 100000;
    double mass_scale = 100.0;  // region masses are Gamma(2, 1) * mass_scale

    // Raw-record emission (used by the CSV pipeline only).
    int shopping_categories = 250;
    int mobility_categories = 200;
    double records_per_unit = 0.5;   // browsing records per unit of tower coefficient mass
    double checkins_per_unit = 0.25;  // check-ins per unit of user coefficient mass
    int users_per_region = 3;

    std::uint64_t seed = 0;

    // Throws InvalidArgument.
    void validate() const;

    friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

struct SynthTruth {
    Matrix lifestyles;     // R_l*
    Matrix shopping_view;  // V1*
    Matrix mobility_view;  // V2*
    GravityParams taxi;
    GravityParams bus;
    Vector origin_mass;  // O*
    Vector dest_mass;    // D*
};

struct SynthData {
    RegionGrid grid;
    ShoppingPatternMatrix shopping;
    MobilityPatternMatrix mobility;
    std::vector<TripRecord> taxi_trips;
    std::vector<TripRecord> bus_trips;
    SynthTruth truth;
};

// Planted city: smoothed Gamma(2, 1) lifestyles, Uniform(0, 1) views,
// noisy truncated products, ceil(empty_row_fraction * r) blank R_s rows,
// and gravity-law trips jittered inside their cells. Deterministic in
// cfg.seed.
SynthData generate(const SynthConfig& cfg);

// Average over regions of |R_l,i - sum_j W(j,i) R_l,j|.
double mean_pull_distance(const Matrix& lifestyles, const Matrix& weights);

// Browsing logs, tower positions and check-ins whose extraction reproduces
// the planted matrices up to the NMF gauge.
struct RawRecords {
    std::vector<BrowsingRecord> browsing;
    std::vector<std::pair<std::string, GeoPoint>> towers;
    std::vector<CheckinRecord> checkins;
    Matrix shopping_basis;  // planted P_s, n x shopping_categories
    Matrix mobility_basis;  // planted P_m, m x mobility_categories
};

RawRecords emit_raw_records(const SynthData& data, const SynthConfig& cfg);

}  // namespace citymf
