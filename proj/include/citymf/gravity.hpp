#pragma once

#include "citymf/common.hpp"
#include "citymf/grid.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace citymf {

enum class TransportMode { bus, taxi };

std::string_view to_string(TransportMode m) noexcept;
// Throws InputError on anything but "bus" or "taxi".
TransportMode parse_transport_mode(std::string_view s);

struct TripRecord {
    TransportMode mode = TransportMode::taxi;
    GeoPoint origin;
    GeoPoint destination;
};

// Observed trips between regions. origin_total(i) is the row sum of q,
// dest_total(j) the column sum.
struct FlowTable {
    TransportMode mode = TransportMode::taxi;
    Matrix q;
    Vector origin_total;
    Vector dest_total;

    bool consistent() const;
};

// Gravity law q_ij = c * O_i^a * D_j^b * exp(-g * dis_ij).
struct GravityParams {
    double a = 1.0;
    double b = 1.0;
    double g = 0.0;
    double ln_c = 0.0;
    TransportMode mode = TransportMode::taxi;
    Index n_pairs_used = 0;
};

FlowTable build_flows(const std::vector<TripRecord>& trips, const RegionGrid& grid, TransportMode mode);

// Ordinary least squares of ln q_ij on (ln O_i, ln D_j, -dis_ij, 1) over
// the pairs with q_ij >= 1. The masses come from the flow table.
GravityParams fit_gravity(const FlowTable& flows, const Matrix& dis);

// Same regression with caller-supplied masses and real-valued flows, for
// flows that were generated rather than counted. Pairs with q_ij < 1 are
// still skipped.
// Throws IdentifiabilityError naming the first column that is a linear
// combination of the ones before it (order: intercept, ln_O, ln_D, dis),
// or NumericalError with fewer than four usable pairs.
GravityParams fit_gravity(const Matrix& q, const Vector& origin_mass, const Vector& dest_mass,
                          const Matrix& dis, TransportMode mode);

// Q_ij = exp(ln_c) * O_i^a * D_j^b * exp(-g * dis_ij), diagonal included.
// Zero masses give zero entries (0^a = 0 needs a > 0; otherwise
// InvalidArgument).
Matrix interaction_matrix(const GravityParams& p, const Vector& origin_mass,
                          const Vector& dest_mass, const Matrix& dis);
inline Matrix interaction_matrix(const GravityParams& p, const FlowTable& f, const Matrix& dis) {
    return interaction_matrix(p, f.origin_total, f.dest_total, dis);
}

// Column i holds how strongly every region j feeds region i: each mode's
// inflow column Q(., i) is normalized to one and the modes are averaged.
// A mode without inflow to i is skipped; with none at all the column falls
// back to the uniform distribution over the grid neighbors of i.
//
// The weights are snapped to a 2^-32 grid and renormalized so that scaling
// either Q by a positive constant, which only perturbs the ratios in the
// last bit, reproduces the same matrix bit for bit.
Matrix combined_weights(const Matrix& q_taxi, const Matrix& q_bus, const RegionGrid& grid);

}  // namespace citymf
