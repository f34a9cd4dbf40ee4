#include "citymf/patterns.hpp"

#include "citymf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace citymf {

CountMatrix build_count_matrix(const std::vector<CategoryObservation>& records, int n_categories) {
    if (n_categories < 1) throw InvalidArgument("count matrix needs at least one category");
    std::unordered_map<std::string, Index> row_of;
    std::vector<std::string> keys;
    std::vector<std::pair<Index, int>> cells;
    cells.reserve(records.size());
    for (const auto& [entity, category] : records) {
        if (category < 0 || category >= n_categories)
            throw InvalidArgument("category id " + std::to_string(category) + " for '" + entity +
                                  "' outside [0, " + std::to_string(n_categories) + ")");
        auto [it, inserted] = row_of.try_emplace(entity, static_cast<Index>(keys.size()));
        if (inserted) keys.push_back(entity);
        cells.emplace_back(it->second, category);
    }
    CountMatrix out;
    out.values = Matrix::Zero(static_cast<Index>(keys.size()), n_categories);
    for (const auto& [row, col] : cells) out.values(row, col) += 1.0;
    out.row_keys = std::move(keys);
    return out;
}

CountMatrix build_count_matrix(const std::vector<BrowsingRecord>& records, int n_categories) {
    std::vector<CategoryObservation> obs;
    obs.reserve(records.size());
    for (const auto& r : records) obs.emplace_back(r.location_id, r.product_category_id);
    return build_count_matrix(obs, n_categories);
}

CountMatrix build_count_matrix(const std::vector<CheckinRecord>& records, int n_categories) {
    std::vector<CategoryObservation> obs;
    obs.reserve(records.size());
    for (const auto& r : records) obs.emplace_back(r.user_id, r.poi_category_id);
    return build_count_matrix(obs, n_categories);
}

void ShoppingPatternMatrix::validate() const {
    if (values.rows() != mask.rows() || values.cols() != mask.cols())
        throw InvalidArgument("shopping matrix and mask differ in shape");
    if (!values.allFinite() || (values.array() < 0.0).any())
        throw InvalidArgument("shopping matrix must be finite and non-negative");
    for (Index i = 0; i < mask.rows(); ++i) {
        for (Index j = 0; j < mask.cols(); ++j) {
            const double m = mask(i, j);
            if (m != 0.0 && m != 1.0)
                throw InvalidArgument("mask entries must be 0 or 1");
            if (m == 0.0 && values(i, j) != 0.0)
                throw InvalidArgument("shopping value present under a zero mask at (" +
                                      std::to_string(i) + ", " + std::to_string(j) + ")");
        }
    }
}

ShoppingPatternMatrix aggregate_shopping(const std::vector<std::string>& location_ids,
                                         const Matrix& coefficients,
                                         const std::unordered_map<std::string, GeoPoint>& towers,
                                         const RegionGrid& grid) {
    if (static_cast<Index>(location_ids.size()) != coefficients.rows())
        throw InvalidArgument("aggregate_shopping: one coefficient row per location required");
    ShoppingPatternMatrix out;
    out.values = Matrix::Zero(grid.size(), coefficients.cols());
    out.mask = Matrix::Zero(grid.size(), coefficients.cols());
    for (std::size_t t = 0; t < location_ids.size(); ++t) {
        const auto pos = towers.find(location_ids[t]);
        if (pos == towers.end())
            throw InputError("no tower position for location_id '" + location_ids[t] + "'");
        const auto region = grid.region_of(pos->second);
        if (!region) continue;
        out.values.row(*region) += coefficients.row(static_cast<Index>(t));
        out.mask.row(*region).setOnes();
    }
    return out;
}

ActivityShareMatrix activity_shares(const std::vector<CheckinRecord>& checkins,
                                    const RegionGrid& grid) {
    std::unordered_map<std::string, Index> user_row;
    ActivityShareMatrix out;
    std::vector<std::unordered_map<Index, double>> counts;
    for (const auto& c : checkins) {
        const auto region = grid.region_of(c.point);
        if (!region) continue;
        auto [it, inserted] = user_row.try_emplace(c.user_id, static_cast<Index>(out.user_ids.size()));
        if (inserted) {
            out.user_ids.push_back(c.user_id);
            counts.emplace_back();
        }
        counts[static_cast<std::size_t>(it->second)][*region] += 1.0;
    }
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t u = 0; u < counts.size(); ++u) {
        double total = 0.0;
        for (const auto& [region, n] : counts[u]) total += n;
        for (const auto& [region, n] : counts[u])
            triplets.emplace_back(static_cast<Index>(u), region, n / total);
    }
    out.shares.resize(static_cast<Index>(out.user_ids.size()), grid.size());
    out.shares.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

MobilityPatternMatrix aggregate_mobility(const ActivityShareMatrix& w, const Matrix& user_coefficients) {
    if (w.shares.rows() != user_coefficients.rows())
        throw InvalidArgument("aggregate_mobility: " + std::to_string(w.shares.rows()) +
                              " users in shares but " + std::to_string(user_coefficients.rows()) +
                              " coefficient rows");
    MobilityPatternMatrix out;
    out.values = Matrix(w.shares.transpose() * user_coefficients);
    return out;
}

Matrix select_rows(const std::vector<std::string>& keys, const Matrix& values,
                   const std::vector<std::string>& wanted) {
    std::unordered_map<std::string, Index> pos;
    for (std::size_t i = 0; i < keys.size(); ++i) pos.emplace(keys[i], static_cast<Index>(i));
    Matrix out(static_cast<Index>(wanted.size()), values.cols());
    for (std::size_t i = 0; i < wanted.size(); ++i) {
        const auto it = pos.find(wanted[i]);
        if (it == pos.end()) throw InputError("no coefficient row for '" + wanted[i] + "'");
        out.row(static_cast<Index>(i)) = values.row(it->second);
    }
    return out;
}

std::vector<std::pair<int, double>> top_categories(const Matrix& basis, Index pattern, int k) {
    if (pattern < 0 || pattern >= basis.rows())
        throw InvalidArgument("pattern index " + std::to_string(pattern) + " out of range");
    std::vector<int> order(static_cast<std::size_t>(basis.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return basis(pattern, a) > basis(pattern, b); });
    const auto take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(k, 0)));
    std::vector<std::pair<int, double>> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.emplace_back(order[i], basis(pattern, order[i]));
    return out;
}

}  // namespace citymf
