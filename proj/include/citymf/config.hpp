#pragma once

#include "citymf/factorize.hpp"
#include "citymf/grid.hpp"
#include "citymf/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

namespace citymf {

struct GridConfig {
    GridMode mode = GridMode::planar;
    double origin_lat = 0.0;
    double origin_lon = 0.0;
    double cell_size_km = 1.0;
    int n_rows = 20;
    int n_cols = 20;
    std::optional<double> reference_lat;

    RegionGrid build() const;  // throws InvalidArgument

    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

// Empty paths fall back to the default file names inside output_dir.
struct InputPaths {
    std::string browsing;
    std::string towers;
    std::string checkins;
    std::string trips;
    std::string shopping_matrix;  // R_s
    std::string shopping_mask;
    std::string mobility_matrix;  // R_m
    std::string weights;          // combined W
    std::string model;

    friend bool operator==(const InputPaths&, const InputPaths&) = default;
};

struct EvaluationConfig {
    std::vector<double> fractions{0.8, 0.9};
    int repeats = 10;
    std::vector<Variant> variants{std::begin(kAllVariants), std::end(kAllVariants)};
    int threads = 1;

    friend bool operator==(const EvaluationConfig&, const EvaluationConfig&) = default;
};

struct RunConfig {
    GridConfig grid;
    int n = 30;  // shopping patterns
    int m = 40;  // mobility patterns
    int shopping_categories = 0;  // 0: one past the largest id seen
    int mobility_categories = 0;
    int nmf_max_iters = 500;
    double nmf_tol = 1e-6;
    int nmf_restarts = 1;
    int top_k = 10;
    Hyperparams hyper;  // seed is ignored; see `seed`
    InputPaths inputs;
    EvaluationConfig evaluation;
    // Grid size, n, m and seed come from the fields above when synthesizing.
    SynthConfig synth;
    std::string output_dir = "out";
    bool emit_pgm = false;
    std::optional<std::uint64_t> seed;

    // Throws InvalidArgument on values the owning modules reject.
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Unknown keys and wrongly typed values raise InputError.
RunConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace citymf
