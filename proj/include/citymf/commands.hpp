#pragma once

#include "citymf/config.hpp"
#include "citymf/evaluation.hpp"
#include "citymf/factorize.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace citymf {

// Default artifact names inside the output directory.
namespace files {
inline constexpr const char* browsing = "browsing.csv";
inline constexpr const char* towers = "towers.csv";
inline constexpr const char* checkins = "checkins.csv";
inline constexpr const char* trips = "trips.csv";
inline constexpr const char* truth = "truth.json";
inline constexpr const char* planted_shopping = "planted_R_s.csv";
inline constexpr const char* planted_mask = "planted_mask.csv";
inline constexpr const char* planted_mobility = "planted_R_m.csv";
inline constexpr const char* shopping_basis = "P_s.csv";
inline constexpr const char* mobility_basis = "P_m.csv";
inline constexpr const char* shopping_coefficients = "shopping_coefficients.csv";
inline constexpr const char* mobility_coefficients = "mobility_coefficients.csv";
inline constexpr const char* shopping = "R_s.csv";
inline constexpr const char* mask = "mask.csv";
inline constexpr const char* mobility = "R_m.csv";
inline constexpr const char* top_shopping = "top_shopping.csv";
inline constexpr const char* top_mobility = "top_mobility.csv";
inline constexpr const char* weights = "W.csv";
inline constexpr const char* model = "model.json";
inline constexpr const char* loss_trace = "loss_trace.csv";
inline constexpr const char* report_json = "report.json";
inline constexpr const char* report_text = "report.txt";
inline constexpr const char* predicted = "R_s_predicted.csv";
inline constexpr const char* heatmap_dir = "heatmaps";
}  // namespace files

inline constexpr const char* kOutputDirEnv = "CITYMF_OUTPUT_DIR";

// Replaces output_dir with $CITYMF_OUTPUT_DIR when that is set and non-empty.
void apply_env_overrides(RunConfig& cfg);

// Every command validates the config, reads its inputs, and writes its
// artifacts atomically under cfg.output_dir. Errors keep their type and
// gain a "<command>: " prefix.
void cmd_synth(const RunConfig& cfg);
void cmd_extract(const RunConfig& cfg);
void cmd_fit_gravity(const RunConfig& cfg);
TrainResult cmd_train(const RunConfig& cfg, Variant variant);  // needs cfg.seed
MetricsReport cmd_evaluate(const RunConfig& cfg);              // needs cfg.seed
// One heatmap per shopping pattern: observed rows keep their values, the
// rest take the model's prediction. Returns the number of heatmaps.
int cmd_predict(const RunConfig& cfg);
// Heatmap of one column of a region-by-something matrix CSV.
void cmd_export_heatmap(const RunConfig& cfg, const std::filesystem::path& matrix, int column,
                        const std::string& name);

}  // namespace citymf
