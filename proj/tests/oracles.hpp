#pragma once

// Independent reference computations shared by the unit and acceptance
// suites. Everything here is written with plain loops on purpose and does
// not call the library routine it checks.

#include "citymf/factorize.hpp"
#include "citymf/grid.hpp"
#include "citymf/patterns.hpp"
#include "citymf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using citymf::Index;
using citymf::Matrix;

struct MobilityInstance {
    citymf::RegionGrid grid = citymf::RegionGrid::planar(1.0, 1, 1);
    std::vector<citymf::CheckinRecord> checkins;
    std::vector<std::string> users;  // every user, in any order
    Matrix user_coefficients;        // rows follow `users`
};

inline MobilityInstance random_mobility_instance(citymf::Rng& rng) {
    std::uniform_int_distribution<int> dim(1, 5);
    const int rows = dim(rng), cols = dim(rng);
    const int n_users = std::uniform_int_distribution<int>(0, 50)(rng);
    const int n_patterns = std::uniform_int_distribution<int>(1, 10)(rng);
    MobilityInstance inst{citymf::RegionGrid::planar(1.0, rows, cols), {}, {}, Matrix(n_users, n_patterns)};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < n_users; ++k) {
        inst.users.push_back("u" + std::to_string(k));
        for (int j = 0; j < n_patterns; ++j) inst.user_coefficients(k, j) = u(rng);
        const int n = std::uniform_int_distribution<int>(1, 8)(rng);
        for (int c = 0; c < n; ++c) {
            // about one in five check-ins lands off the grid
            double north = std::uniform_real_distribution<double>(-0.25 * rows, 1.25 * rows)(rng);
            double east = std::uniform_real_distribution<double>(-0.25 * cols, 1.25 * cols)(rng);
            inst.checkins.push_back({inst.users.back(), 0, {north, east}, c});
        }
    }
    std::shuffle(inst.checkins.begin(), inst.checkins.end(), rng);
    return inst;
}

// R_m(i, j) = sum_k w(k, i) u(k, j), with w counted straight from the
// check-ins.
inline Matrix brute_force_mobility(const MobilityInstance& inst) {
    const auto& g = inst.grid;
    const Index r = g.size();
    Matrix out = Matrix::Zero(r, inst.user_coefficients.cols());
    for (std::size_t k = 0; k < inst.users.size(); ++k) {
        std::vector<double> count(static_cast<std::size_t>(r), 0.0);
        double total = 0.0;
        for (const auto& c : inst.checkins) {
            if (c.user_id != inst.users[k]) continue;
            double north = c.point.lat, east = c.point.lon;
            if (north < 0 || east < 0) continue;
            int row = static_cast<int>(std::floor(north / g.cell_size_km()));
            int col = static_cast<int>(std::floor(east / g.cell_size_km()));
            if (row >= g.n_rows() || col >= g.n_cols()) continue;
            count[static_cast<std::size_t>(row * g.n_cols() + col)] += 1.0;
            total += 1.0;
        }
        if (total == 0.0) continue;
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < out.cols(); ++j)
                out(i, j) += count[static_cast<std::size_t>(i)] / total * inst.user_coefficients(static_cast<Index>(k), j);
    }
    return out;
}

// Objective written out entry by entry.
inline double objective(const citymf::FactorModel& m, const Matrix& rs, const Matrix& mask, const Matrix& rm,
                        const Matrix* w, double lambda1, double lambda2, double alpha) {
    const Index r = m.lifestyles.rows(), l = m.lifestyles.cols();
    double s = 0.0, mob = 0.0, reg = 0.0, ridge = 0.0;
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < rs.cols(); ++j) {
            double p = 0.0;
            for (Index a = 0; a < l; ++a) p += m.lifestyles(i, a) * m.shopping_view(j, a);
            s += mask(i, j) * (rs(i, j) - p) * (rs(i, j) - p);
        }
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < rm.cols(); ++j) {
            double p = 0.0;
            for (Index a = 0; a < l; ++a) p += m.lifestyles(i, a) * m.mobility_view(j, a);
            mob += (rm(i, j) - p) * (rm(i, j) - p);
        }
    if (w)
        for (Index i = 0; i < r; ++i)
            for (Index a = 0; a < l; ++a) {
                double mean = 0.0;
                for (Index j = 0; j < r; ++j) mean += (*w)(j, i) * m.lifestyles(j, a);
                reg += (m.lifestyles(i, a) - mean) * (m.lifestyles(i, a) - mean);
            }
    ridge = m.lifestyles.squaredNorm() + m.shopping_view.squaredNorm() + m.mobility_view.squaredNorm();
    return 0.5 * s + 0.5 * lambda1 * mob + 0.5 * alpha * reg + 0.5 * lambda2 * ridge;
}

}  // namespace oracle

namespace oracle {

// q_ij = c * O_i^a * D_j^b * exp(-g * dis_ij), one entry at a time.
inline Matrix gravity_flows(double a, double b, double g, double c, const citymf::Vector& o,
                            const citymf::Vector& d, const Matrix& dis) {
    Matrix q(o.size(), d.size());
    for (Index i = 0; i < o.size(); ++i)
        for (Index j = 0; j < d.size(); ++j)
            q(i, j) = c * std::pow(o(i), a) * std::pow(d(j), b) * std::exp(-g * dis(i, j));
    return q;
}

}  // namespace oracle
