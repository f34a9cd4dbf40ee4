#pragma once

#include "citymf/common.hpp"
#include "citymf/grid.hpp"

#include <Eigen/SparseCore>

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace citymf {

struct BrowsingRecord {
    std::string location_id;
    int product_category_id = 0;
};

struct CheckinRecord {
    std::string user_id;
    int poi_category_id = 0;
    GeoPoint point;
    std::int64_t timestamp = 0;
};

// Entity x category counts. Entities appear in first-seen order and every
// row has at least one count.
struct CountMatrix {
    std::vector<std::string> row_keys;
    Matrix values;
};

// One (entity, category) observation.
using CategoryObservation = std::pair<std::string, int>;

// Throws InvalidArgument if a category id falls outside [0, n_categories).
CountMatrix build_count_matrix(const std::vector<CategoryObservation>& records, int n_categories);
CountMatrix build_count_matrix(const std::vector<BrowsingRecord>& records, int n_categories);
CountMatrix build_count_matrix(const std::vector<CheckinRecord>& records, int n_categories);

// R_s with its observation indicator. The pipeline only produces
// row-constant masks; arbitrary 0/1 masks are accepted on input.
struct ShoppingPatternMatrix {
    Matrix values;  // r x n
    Matrix mask;    // r x n, entries in {0, 1}

    Index regions() const noexcept { return values.rows(); }
    Index patterns() const noexcept { return values.cols(); }
    bool row_observed(Index i) const { return mask.row(i).maxCoeff() > 0.0; }

    // Throws InvalidArgument on shape mismatch, non-binary mask, negative
    // or non-finite values, or a non-zero value under a zero mask.
    void validate() const;
};

struct MobilityPatternMatrix {
    Matrix values;  // r x m, dense
};

// Per-user share of in-grid check-ins spent in each region.
struct ActivityShareMatrix {
    std::vector<std::string> user_ids;
    Eigen::SparseMatrix<double, Eigen::RowMajor> shares;  // users x regions
};

// Sums the coefficient rows of every tower inside each region. Towers off
// the grid are dropped. Throws InputError naming a location without a
// position.
ShoppingPatternMatrix aggregate_shopping(const std::vector<std::string>& location_ids,
                                         const Matrix& coefficients,
                                         const std::unordered_map<std::string, GeoPoint>& towers,
                                         const RegionGrid& grid);

ActivityShareMatrix activity_shares(const std::vector<CheckinRecord>& checkins,
                                    const RegionGrid& grid);

// R_m = w^T U. Rows of U must follow w.user_ids.
MobilityPatternMatrix aggregate_mobility(const ActivityShareMatrix& w, const Matrix& user_coefficients);

// Picks the rows of `values` (keyed by `keys`) in the order of `wanted`.
// Throws InputError when a wanted key is absent.
Matrix select_rows(const std::vector<std::string>& keys, const Matrix& values,
                   const std::vector<std::string>& wanted);

// The k heaviest categories of one basis row, heaviest first, ties broken
// by the smaller category id.
std::vector<std::pair<int, double>> top_categories(const Matrix& basis, Index pattern, int k);

}  // namespace citymf
