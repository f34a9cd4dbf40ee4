#include "citymf/gravity.hpp"

#include "citymf/errors.hpp"

#include <array>
#include <cmath>

namespace citymf {

std::string_view to_string(TransportMode m) noexcept {
    return m == TransportMode::bus ? "bus" : "taxi";
}

TransportMode parse_transport_mode(std::string_view s) {
    if (s == "bus") return TransportMode::bus;
    if (s == "taxi") return TransportMode::taxi;
    throw InputError("unknown transport mode '" + std::string(s) + "' (expected bus or taxi)");
}

bool FlowTable::consistent() const {
    return q.rows() == q.cols() && origin_total.size() == q.rows() &&
           dest_total.size() == q.cols() && origin_total == q.rowwise().sum() &&
           dest_total == q.colwise().sum().transpose();
}

FlowTable build_flows(const std::vector<TripRecord>& trips, const RegionGrid& grid, TransportMode mode) {
    FlowTable f;
    f.mode = mode;
    f.q = Matrix::Zero(grid.size(), grid.size());
    for (const auto& t : trips) {
        if (t.mode != mode) continue;
        const auto from = grid.region_of(t.origin);
        const auto to = grid.region_of(t.destination);
        if (!from || !to) continue;
        f.q(*from, *to) += 1.0;
    }
    f.origin_total = f.q.rowwise().sum();
    f.dest_total = f.q.colwise().sum().transpose();
    return f;
}

GravityParams fit_gravity(const FlowTable& flows, const Matrix& dis) {
    return fit_gravity(flows.q, flows.origin_total, flows.dest_total, dis, flows.mode);
}

namespace {

constexpr std::array<const char*, 4> kColumnNames{"intercept", "ln_O", "ln_D", "dis"};
constexpr double kRankTolerance = 1e-10;

// Gram-Schmidt over the design columns in order; the first column left
// with (almost) nothing after projecting out its predecessors is the
// culprit.
void check_identifiable(const Matrix& X) {
    Matrix basis(X.rows(), 0);
    for (Index c = 0; c < X.cols(); ++c) {
        Vector v = X.col(c);
        const double norm = v.norm();
        for (Index k = 0; k < basis.cols(); ++k) v -= basis.col(k).dot(v) * basis.col(k);
        for (Index k = 0; k < basis.cols(); ++k) v -= basis.col(k).dot(v) * basis.col(k);
        const double rest = v.norm();
        if (norm == 0.0 || rest <= kRankTolerance * norm) {
            throw IdentifiabilityError(kColumnNames[static_cast<std::size_t>(c)],
                                       "relative residual " + std::to_string(norm == 0.0 ? 0.0 : rest / norm));
        }
        basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
        basis.col(basis.cols() - 1) = v / rest;
    }
}

}  // namespace

GravityParams fit_gravity(const Matrix& q, const Vector& origin_mass, const Vector& dest_mass,
                          const Matrix& dis, TransportMode mode) {
    const Index r = q.rows();
    if (q.cols() != r || dis.rows() != r || dis.cols() != r || origin_mass.size() != r ||
        dest_mass.size() != r)
        throw InvalidArgument("fit_gravity: flow, mass and distance dimensions disagree");

    Index pairs = 0;
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < r; ++j)
            if (q(i, j) >= 1.0) ++pairs;
    if (pairs < 4)
        throw NumericalError("fit_gravity: need at least 4 region pairs with flow, found " +
                             std::to_string(pairs));

    Matrix X(pairs, 4);
    Vector y(pairs);
    Index row = 0;
    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < r; ++j) {
            if (q(i, j) < 1.0) continue;
            if (!(origin_mass(i) > 0.0) || !(dest_mass(j) > 0.0))
                throw InvalidArgument("fit_gravity: flow between regions with zero mass");
            X(row, 0) = 1.0;
            X(row, 1) = std::log(origin_mass(i));
            X(row, 2) = std::log(dest_mass(j));
            X(row, 3) = -dis(i, j);
            y(row) = std::log(q(i, j));
            ++row;
        }
    }
    check_identifiable(X);

    const Matrix XtX = X.transpose() * X;
    const Vector Xty = X.transpose() * y;
    Vector beta;
    Eigen::LLT<Matrix> llt(XtX);
    if (llt.info() == Eigen::Success) {
        beta = llt.solve(Xty);
    }
    if (llt.info() != Eigen::Success || !beta.allFinite()) {
        Eigen::ColPivHouseholderQR<Matrix> qr(X);
        qr.setThreshold(kRankTolerance);
        beta = qr.solve(y);
    }
    if (!beta.allFinite()) throw NumericalError("fit_gravity: regression produced non-finite coefficients");

    GravityParams p;
    p.ln_c = beta(0);
    p.a = beta(1);
    p.b = beta(2);
    p.g = beta(3);
    p.mode = mode;
    p.n_pairs_used = pairs;
    return p;
}

Matrix interaction_matrix(const GravityParams& p, const Vector& origin_mass, const Vector& dest_mass,
                          const Matrix& dis) {
    const Index r = dis.rows();
    if (dis.cols() != r || origin_mass.size() != r || dest_mass.size() != r)
        throw InvalidArgument("interaction_matrix: mass and distance dimensions disagree");
    if (!std::isfinite(p.a) || !std::isfinite(p.b) || !std::isfinite(p.g) || !std::isfinite(p.ln_c))
        throw InvalidArgument("interaction_matrix: gravity parameters must be finite");
    if ((origin_mass.array() < 0.0).any() || (dest_mass.array() < 0.0).any())
        throw InvalidArgument("interaction_matrix: masses must be non-negative");
    if ((p.a <= 0.0 && (origin_mass.array() == 0.0).any()) ||
        (p.b <= 0.0 && (dest_mass.array() == 0.0).any()))
        throw InvalidArgument("interaction_matrix: zero mass with a non-positive exponent");

    Vector log_o(r), log_d(r);
    for (Index i = 0; i < r; ++i) {
        log_o(i) = origin_mass(i) > 0.0 ? p.a * std::log(origin_mass(i)) : -INFINITY;
        log_d(i) = dest_mass(i) > 0.0 ? p.b * std::log(dest_mass(i)) : -INFINITY;
    }
    Matrix Q(r, r);
    for (Index j = 0; j < r; ++j)
        for (Index i = 0; i < r; ++i)
            Q(i, j) = std::exp(p.ln_c + log_o(i) + log_d(j) - p.g * dis(i, j));
    if (!Q.allFinite()) throw NumericalError("interaction_matrix: entries overflowed");
    return Q;
}

Matrix combined_weights(const Matrix& q_taxi, const Matrix& q_bus, const RegionGrid& grid) {
    const Index r = grid.size();
    if (q_taxi.rows() != r || q_taxi.cols() != r || q_bus.rows() != r || q_bus.cols() != r)
        throw InvalidArgument("combined_weights: interaction matrices must be " + std::to_string(r) +
                              " x " + std::to_string(r));
    if ((q_taxi.array() < 0.0).any() || (q_bus.array() < 0.0).any() || !q_taxi.allFinite() ||
        !q_bus.allFinite())
        throw InvalidArgument("combined_weights: interactions must be finite and non-negative");

    constexpr long double kGrid = 4294967296.0L;  // 2^32
    Matrix W = Matrix::Zero(r, r);
    std::vector<long double> col(static_cast<std::size_t>(r));
    for (Index i = 0; i < r; ++i) {
        std::fill(col.begin(), col.end(), 0.0L);
        int modes = 0;
        for (const Matrix* Q : {&q_taxi, &q_bus}) {
            long double total = 0.0L;
            for (Index j = 0; j < r; ++j) total += (*Q)(j, i);
            if (total <= 0.0L) continue;
            ++modes;
            for (Index j = 0; j < r; ++j) col[static_cast<std::size_t>(j)] += (*Q)(j, i) / total;
        }
        if (modes == 0) {
            const auto nb = grid.neighbors(i);
            for (Index j : nb) W(j, i) = 1.0 / static_cast<double>(nb.size());
            continue;
        }
        double sum = 0.0;
        for (Index j = 0; j < r; ++j) {
            const long double w = col[static_cast<std::size_t>(j)] / modes;
            W(j, i) = static_cast<double>(std::nearbyint(w * kGrid) / kGrid);
            sum += W(j, i);
        }
        W.col(i) /= sum;
    }
    return W;
}

}  // namespace citymf
