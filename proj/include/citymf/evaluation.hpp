#pragma once

#include "citymf/common.hpp"
#include "citymf/factorize.hpp"
#include "citymf/patterns.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace citymf {

struct TestEntry {
    Index row = 0;
    Index col = 0;
    double value = 0.0;
};

// Whole regions withheld from training. Test entries are the non-zero
// entries of the held-out rows.
struct RowHoldoutSplit {
    std::vector<Index> held_out_rows;  // ascending
    Matrix train_mask;
    std::vector<TestEntry> test_entries;
};

// Holds out ceil((1 - train_fraction) * k) of the k non-empty rows, chosen
// uniformly with the given seed. A row is non-empty when it is observed and
// has a non-zero entry.
// Throws InvalidArgument for a fraction outside (0, 1) or fewer than two
// non-empty rows.
RowHoldoutSplit split_rows(const ShoppingPatternMatrix& shopping, double train_fraction, std::uint64_t seed);

// The training view of a split: held-out rows zeroed in values and mask.
ShoppingPatternMatrix training_view(const ShoppingPatternMatrix& shopping, const RowHoldoutSplit& split);

// Throw InvalidArgument on empty or mismatched inputs.
double rmse(std::span<const double> truth, std::span<const double> pred);
double mae(std::span<const double> truth, std::span<const double> pred);

// 100 * (baseline - improved) / baseline. Throws InvalidArgument unless
// baseline > 0.
double improvement_pct(double baseline, double improved);

struct ExperimentData {
    ShoppingPatternMatrix shopping;
    MobilityPatternMatrix mobility;
    Matrix interaction_weights;  // combined W, needed by CMF+I
    Matrix neighbor_weights;     // needed by CMF+N
};

struct ExperimentOptions {
    std::vector<double> fractions{0.8, 0.9};
    int repeats = 10;
    std::vector<Variant> variants{Variant::mf, Variant::cmf, Variant::cmf_n, Variant::cmf_i};
    Hyperparams hyper;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct MetricCell {
    double rmse = 0.0;
    double mae = 0.0;
    int iterations = 0;
    StopReason stop = StopReason::max_iters;
};

struct MetricsReport {
    std::vector<Variant> variants;
    std::vector<double> fractions;
    int repeats = 0;
    Hyperparams hyper;
    std::uint64_t seed = 0;
    // cells[v][f][k]: variant v, fraction f, repeat k
    std::vector<std::vector<std::vector<MetricCell>>> cells;
    std::vector<std::vector<double>> mean_rmse;  // [v][f]
    std::vector<std::vector<double>> mean_mae;   // [v][f]

    // improvement of variant v over v-1 (v >= 1), in percent
    double step_improvement_rmse(std::size_t v, std::size_t f) const;
    double step_improvement_mae(std::size_t v, std::size_t f) const;
    // last variant over the first
    double total_improvement_rmse(std::size_t f) const;
    double total_improvement_mae(std::size_t f) const;
};

// Seeds used for one (fraction, repeat) cell; every variant shares them.
std::uint64_t split_seed(std::uint64_t master, std::size_t fraction_index, int repeat);
std::uint64_t train_seed(std::uint64_t master, std::size_t fraction_index, int repeat);

// For every fraction and repeat: one split, every variant trained on it,
// metrics on the held-out entries in the input's units. Training errors
// are rethrown with the (variant, fraction, repeat) that failed.
MetricsReport run_experiment(const ExperimentData& data, const ExperimentOptions& opts);

// Aligned text table: variants as rows, RMSE/MAE per fraction, an
// "improve" row under every variant but the first and a "Total" row.
std::string format_table(const MetricsReport& report);

}  // namespace citymf
