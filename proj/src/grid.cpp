#include "citymf/grid.hpp"

#include "citymf/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace citymf {

bool GeoPoint::finite() const noexcept { return std::isfinite(lat) && std::isfinite(lon); }

bool GeoPoint::valid_geographic() const noexcept {
    return finite() && lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
}

namespace {

void check_shape(double cell_size_km, int n_rows, int n_cols) {
    if (!(cell_size_km > 0.0) || !std::isfinite(cell_size_km))
        throw InvalidArgument("grid cell_size_km must be positive and finite");
    if (n_rows < 1 || n_cols < 1) throw InvalidArgument("grid needs n_rows >= 1 and n_cols >= 1");
}

}  // namespace

RegionGrid RegionGrid::planar(double cell_size_km, int n_rows, int n_cols) {
    check_shape(cell_size_km, n_rows, n_cols);
    RegionGrid g;
    g.mode_ = GridMode::planar;
    g.cell_km_ = cell_size_km;
    g.n_rows_ = n_rows;
    g.n_cols_ = n_cols;
    return g;
}

RegionGrid RegionGrid::geographic(GeoPoint origin, double cell_size_km, int n_rows, int n_cols,
                                  std::optional<double> reference_lat) {
    check_shape(cell_size_km, n_rows, n_cols);
    if (!origin.valid_geographic()) throw InvalidArgument("grid origin is not a valid lat/lon");
    RegionGrid g;
    g.mode_ = GridMode::geographic;
    g.origin_ = origin;
    g.cell_km_ = cell_size_km;
    g.n_rows_ = n_rows;
    g.n_cols_ = n_cols;
    // Default to the latitude of the grid's middle.
    g.reference_lat_ = reference_lat.value_or(
        origin.lat + 0.5 * n_rows * cell_size_km / kKmPerDegree);
    if (!std::isfinite(g.reference_lat_) || std::abs(g.reference_lat_) >= 89.0)
        throw InvalidArgument("grid reference_lat must lie strictly inside (-89, 89)");
    return g;
}

Eigen::Vector2d RegionGrid::to_km(GeoPoint p) const noexcept {
    if (mode_ == GridMode::planar) return {p.lon, p.lat};
    const double cos_ref = std::cos(reference_lat_ * std::numbers::pi / 180.0);
    return {kKmPerDegree * cos_ref * (p.lon - origin_.lon), kKmPerDegree * (p.lat - origin_.lat)};
}

GeoPoint RegionGrid::from_km(double east_km, double north_km) const noexcept {
    if (mode_ == GridMode::planar) return {north_km, east_km};
    const double cos_ref = std::cos(reference_lat_ * std::numbers::pi / 180.0);
    return {origin_.lat + north_km / kKmPerDegree,
            origin_.lon + east_km / (kKmPerDegree * cos_ref)};
}

std::optional<Index> RegionGrid::region_of(GeoPoint p) const noexcept {
    if (!p.finite()) return std::nullopt;
    const Eigen::Vector2d km = to_km(p);
    const double col = std::floor(km.x() / cell_km_);
    const double row = std::floor(km.y() / cell_km_);
    if (row < 0.0 || col < 0.0 || row >= n_rows_ || col >= n_cols_) return std::nullopt;
    return index(static_cast<int>(row), static_cast<int>(col));
}

void RegionGrid::check_index(Index i) const {
    if (i < 0 || i >= size())
        throw InvalidArgument("region index " + std::to_string(i) + " out of range [0, " +
                              std::to_string(size()) + ")");
}

GeoPoint RegionGrid::center(Index i) const {
    check_index(i);
    return from_km((col_of(i) + 0.5) * cell_km_, (row_of(i) + 0.5) * cell_km_);
}

std::vector<Index> RegionGrid::neighbors(Index i) const {
    check_index(i);
    const int r0 = row_of(i), c0 = col_of(i);
    std::vector<Index> out;
    out.reserve(8);
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int r = r0 + dr, c = c0 + dc;
            if (r < 0 || c < 0 || r >= n_rows_ || c >= n_cols_) continue;
            out.push_back(index(r, c));
        }
    }
    return out;
}

// Cells are square in km under either mode, so the centre offset is just
// the lattice offset scaled by the cell size.
Eigen::MatrixXd RegionGrid::center_distance() const {
    const Index r = size();
    Eigen::MatrixXd d(r, r);
    for (Index i = 0; i < r; ++i) {
        d(i, i) = 0.0;
        for (Index j = i + 1; j < r; ++j) {
            const double dr = row_of(i) - row_of(j);
            const double dc = col_of(i) - col_of(j);
            d(i, j) = d(j, i) = cell_km_ * std::hypot(dr, dc);
        }
    }
    return d;
}

}  // namespace citymf
