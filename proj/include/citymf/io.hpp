#pragma once

#include "citymf/common.hpp"
#include "citymf/evaluation.hpp"
#include "citymf/factorize.hpp"
#include "citymf/gravity.hpp"
#include "citymf/grid.hpp"
#include "citymf/patterns.hpp"
#include "citymf/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace citymf::io {

namespace fs = std::filesystem;
using nlohmann::json;

// Shortest text that parses back to the same double.
std::string format_double(double x);

// Writes to a sibling temporary file, then renames it over `path`.
// Creates missing parent directories.
void write_text_atomic(const fs::path& path, const std::string& content);
std::string read_text(const fs::path& path);

// Record files. A header line naming the expected columns is optional on
// read and always written. Malformed lines raise InputError with
// "file:line". `geographic` additionally range-checks lat/lon.
std::vector<BrowsingRecord> read_browsing_csv(const fs::path& path);
std::vector<std::pair<std::string, GeoPoint>> read_towers_csv(const fs::path& path, bool geographic);
std::vector<CheckinRecord> read_checkins_csv(const fs::path& path, bool geographic);
std::vector<TripRecord> read_trips_csv(const fs::path& path, bool geographic);

std::string browsing_csv(const std::vector<BrowsingRecord>& records);
std::string towers_csv(const std::vector<std::pair<std::string, GeoPoint>>& towers);
std::string checkins_csv(const std::vector<CheckinRecord>& records);
std::string trips_csv(const std::vector<TripRecord>& trips);

// Plain numeric matrices: one row per line, comma separated, no header.
Matrix read_matrix_csv(const fs::path& path);
std::string matrix_csv(const Matrix& m);

// Keyed rows: "key,v0,v1,..." under a header "<key_name>,0,1,...".
std::string keyed_matrix_csv(const std::string& key_name, const std::vector<std::string>& keys, const Matrix& m);

// "pattern,rank,category_id,weight"
std::string top_categories_csv(const Matrix& basis, int k);

json to_json(const GravityParams& p);
GravityParams gravity_from_json(const json& j);

// dims {r, n, m, l}, row-major factor arrays, scales, hyperparameters,
// variant, final loss.
json to_json(const TrainedModel& m);
TrainedModel model_from_json(const json& j);
json to_json(const Hyperparams& h);
Hyperparams hyperparams_from_json(const json& j, Hyperparams base = {});

// "iter,loss,gamma"
std::string loss_trace_csv(const LossTrace& trace);

json to_json(const MetricsReport& r);
json to_json(const SynthTruth& t);

json matrix_to_json(const Matrix& m);  // row-major nested arrays
Matrix matrix_from_json(const json& j, Index rows, Index cols);

struct Heatmap {
    RegionGrid grid;
    Vector values;  // one per region
};

// "row,col,center_lat,center_lon,value"; planar grids put km offsets in
// the centre columns.
std::string heatmap_csv(const Heatmap& h);
// Plain PGM (P2), values min-max scaled to 0..255, north row first.
std::string heatmap_pgm(const Heatmap& h);

}  // namespace citymf::io
