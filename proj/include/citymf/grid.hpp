#pragma once

#include "citymf/common.hpp"

#include <optional>
#include <vector>

namespace citymf {

// Kilometres per degree of latitude used by the equirectangular projection.
inline constexpr double kKmPerDegree = 111.32;

// A location. In geographic mode lat/lon are degrees; on a planar grid the
// same fields carry km north (lat) and km east (lon) of the origin.
struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    bool finite() const noexcept;
    // Finite and within [-90, 90] x [-180, 180].
    bool valid_geographic() const noexcept;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

enum class GridMode { geographic, planar };

// Rectangular lattice of square cells. Region index = row * n_cols + col,
// rows counted northward from the southwest origin, cols eastward.
// Cell extents are half-open: [south, north) x [west, east).
class RegionGrid {
public:
    // Throws InvalidArgument on a non-positive size or non-finite origin.
    static RegionGrid planar(double cell_size_km, int n_rows, int n_cols);
    static RegionGrid geographic(GeoPoint origin, double cell_size_km, int n_rows,
                                 int n_cols, std::optional<double> reference_lat = {});

    GridMode mode() const noexcept { return mode_; }
    GeoPoint origin() const noexcept { return origin_; }
    double cell_size_km() const noexcept { return cell_km_; }
    int n_rows() const noexcept { return n_rows_; }
    int n_cols() const noexcept { return n_cols_; }
    double reference_lat() const noexcept { return reference_lat_; }
    Index size() const noexcept { return static_cast<Index>(n_rows_) * n_cols_; }

    Index index(int row, int col) const noexcept { return static_cast<Index>(row) * n_cols_ + col; }
    int row_of(Index i) const noexcept { return static_cast<int>(i / n_cols_); }
    int col_of(Index i) const noexcept { return static_cast<int>(i % n_cols_); }

    std::optional<Index> region_of(GeoPoint p) const noexcept;

    // Offset of p from the origin in km (east, north).
    Eigen::Vector2d to_km(GeoPoint p) const noexcept;
    GeoPoint from_km(double east_km, double north_km) const noexcept;

    // Centre of region i, in the grid's own coordinates.
    GeoPoint center(Index i) const;

    // Up to eight cells sharing an edge or a corner with i, ascending.
    std::vector<Index> neighbors(Index i) const;

    // r x r centre-to-centre distances in km.
    Eigen::MatrixXd center_distance() const;

    friend bool operator==(const RegionGrid&, const RegionGrid&) = default;

private:
    RegionGrid() = default;
    void check_index(Index i) const;

    GridMode mode_ = GridMode::planar;
    GeoPoint origin_{};
    double cell_km_ = 1.0;
    int n_rows_ = 1;
    int n_cols_ = 1;
    double reference_lat_ = 0.0;
};

inline Eigen::MatrixXd center_distance(const RegionGrid& g) { return g.center_distance(); }
inline std::vector<Index> neighbors(const RegionGrid& g, Index i) { return g.neighbors(i); }
inline std::optional<Index> region_of(GeoPoint p, const RegionGrid& g) { return g.region_of(p); }

}  // namespace citymf
