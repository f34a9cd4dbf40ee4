#pragma once

// Random factorization problems shared by the unit and acceptance suites.

#include "citymf/factorize.hpp"
#include "citymf/grid.hpp"
#include "citymf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fixtures {

using namespace citymf;

inline Matrix uniform(Index rows, Index cols, Rng& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix x(rows, cols);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    return x;
}

inline Matrix column_stochastic(Index r, Rng& rng) {
    Matrix w = uniform(r, r, rng);
    for (Index i = 0; i < r; ++i) w.col(i) /= w.col(i).sum();
    return w;
}

struct Instance {
    RegionGrid grid = RegionGrid::planar(1.0, 1, 1);
    ShoppingPatternMatrix shopping;
    Matrix mobility;
    Matrix w;
    FactorModel model;
};

inline Instance random_instance(int rows, int cols, Index n, Index m, Index l, Rng& rng) {
    Instance in;
    in.grid = RegionGrid::planar(1.0, rows, cols);
    const Index r = in.grid.size();
    in.shopping.values = uniform(r, n, rng, 0.0, 3.0);
    in.shopping.mask = Matrix::Ones(r, n);
    for (Index i = 0; i < r; i += 2) {
        in.shopping.mask.row(i).setZero();
        in.shopping.values.row(i).setZero();
    }
    in.mobility = uniform(r, m, rng, 0.0, 2.0);
    in.w = column_stochastic(r, rng);
    in.model = {uniform(r, l, rng, -1.0, 1.0), uniform(n, l, rng, -1.0, 1.0), uniform(m, l, rng, -1.0, 1.0)};
    return in;
}

inline RegularizerSpec spec_for(Variant v, const Instance& in) {
    if (v == Variant::cmf_n) return RegularizerSpec::neighbor(in.grid);
    if (v == Variant::cmf_i) return RegularizerSpec::interaction(in.w);
    return RegularizerSpec::none();
}

inline Matrix& block(FactorModel& f, int which) {
    return which == 0 ? f.lifestyles : which == 1 ? f.shopping_view : f.mobility_view;
}

inline const Matrix& block(const Gradient& g, int which) {
    return which == 0 ? g.lifestyles : which == 1 ? g.shopping_view : g.mobility_view;
}

// Largest relative gap between the analytic gradient and central finite
// differences of the objective, over every coordinate.
inline double fd_error(const Instance& in, const RegularizerSpec& reg, const Hyperparams& h) {
    const Gradient g = gradient(in.model, in.shopping, in.mobility, reg, h, GradientMode::exact);
    const double step = 1e-5;
    double worst = 0.0;
    for (int b = 0; b < 3; ++b) {
        FactorModel probe = in.model;
        Matrix& x = block(probe, b);
        for (Index k = 0; k < x.size(); ++k) {
            const double keep = x.data()[k];
            x.data()[k] = keep + step;
            const double up = objective(probe, in.shopping, in.mobility, reg, h);
            x.data()[k] = keep - step;
            const double down = objective(probe, in.shopping, in.mobility, reg, h);
            x.data()[k] = keep;
            const double fd = (up - down) / (2.0 * step);
            const double an = block(g, b).data()[k];
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3}));
        }
    }
    return worst;
}

}  // namespace fixtures
