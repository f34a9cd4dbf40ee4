#include "citymf/factorize.hpp"

#include "citymf/errors.hpp"
#include "citymf/rng.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cctype>
#include <cmath>

namespace citymf {

std::string_view to_string(Variant v) noexcept {
    switch (v) {
        case Variant::mf: return "mf";
        case Variant::cmf: return "cmf";
        case Variant::cmf_n: return "cmf-n";
        case Variant::cmf_i: return "cmf-i";
    }
    return "?";
}

std::string_view display_name(Variant v) noexcept {
    switch (v) {
        case Variant::mf: return "MF";
        case Variant::cmf: return "CMF";
        case Variant::cmf_n: return "CMF+N";
        case Variant::cmf_i: return "CMF+I";
    }
    return "?";
}

Variant parse_variant(std::string_view s) {
    std::string low(s);
    std::transform(low.begin(), low.end(), low.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::replace(low.begin(), low.end(), '+', '-');
    std::replace(low.begin(), low.end(), '_', '-');
    for (Variant v : kAllVariants)
        if (low == to_string(v)) return v;
    throw InputError("unknown variant '" + std::string(s) + "' (expected mf, cmf, cmf-n or cmf-i)");
}

std::string_view to_string(GradientMode m) noexcept {
    return m == GradientMode::exact ? "exact" : "paper-literal";
}

GradientMode parse_gradient_mode(std::string_view s) {
    if (s == "exact") return GradientMode::exact;
    if (s == "paper-literal" || s == "literal") return GradientMode::paper_literal;
    throw InputError("unknown gradient mode '" + std::string(s) + "' (expected exact or paper-literal)");
}

std::string_view to_string(StopReason r) noexcept {
    switch (r) {
        case StopReason::max_iters: return "max_iters";
        case StopReason::converged: return "converged";
        case StopReason::step_underflow: return "step_underflow";
    }
    return "?";
}

void Hyperparams::validate() const {
    if (l < 1) throw InvalidArgument("hyperparameter l must be >= 1");
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(alpha >= 0.0) || !std::isfinite(lambda1) ||
        !std::isfinite(lambda2) || !std::isfinite(alpha))
        throw InvalidArgument("lambda1, lambda2 and alpha must be finite and >= 0");
    if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
}

bool LossTrace::strictly_decreasing() const {
    for (std::size_t i = 1; i < steps.size(); ++i)
        if (!(steps[i].loss < steps[i - 1].loss)) return false;
    return true;
}

Matrix neighbor_weights(const RegionGrid& grid) {
    if (grid.size() < 2) throw InvalidArgument("neighbor weights need at least two regions");
    Matrix W = Matrix::Zero(grid.size(), grid.size());
    for (Index i = 0; i < grid.size(); ++i) {
        const auto nb = grid.neighbors(i);
        for (Index j : nb) W(j, i) = 1.0 / static_cast<double>(nb.size());
    }
    return W;
}

RegularizerSpec RegularizerSpec::neighbor(const RegionGrid& grid) {
    return {RegularizerKind::neighbor, neighbor_weights(grid)};
}

RegularizerSpec RegularizerSpec::interaction(Matrix combined) {
    return {RegularizerKind::interaction, std::move(combined)};
}

Hyperparams effective_hyperparams(const Hyperparams& h, Variant v) {
    Hyperparams e = h;
    if (v == Variant::mf) e.lambda1 = 0.0;
    if (v == Variant::mf || v == Variant::cmf) e.alpha = 0.0;
    return e;
}

namespace {

double dot(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

void check_dims(const FactorModel& model, const ShoppingPatternMatrix& shopping, const Matrix& mobility,
                const RegularizerSpec& reg) {
    const Index r = shopping.values.rows();
    const Index l = model.lifestyles.cols();
    if (shopping.mask.rows() != r || shopping.mask.cols() != shopping.values.cols())
        throw InvalidArgument("shopping mask shape differs from values");
    if (model.lifestyles.rows() != r || model.shopping_view.rows() != shopping.values.cols() ||
        model.shopping_view.cols() != l || model.mobility_view.cols() != l ||
        mobility.rows() != r || model.mobility_view.rows() != mobility.cols())
        throw InvalidArgument("factor model dimensions do not match the data (r=" + std::to_string(r) +
                              ", l=" + std::to_string(l) + ")");
    if (reg.kind != RegularizerKind::none && (reg.weights.rows() != r || reg.weights.cols() != r))
        throw InvalidArgument("regularizer weights must be r x r");
    if (!model.lifestyles.allFinite() || !model.shopping_view.allFinite() ||
        !model.mobility_view.allFinite() || !shopping.values.allFinite() || !mobility.allFinite() ||
        (reg.kind != RegularizerKind::none && !reg.weights.allFinite()))
        throw InvalidArgument("objective inputs must be finite");
}

// The objective with its data bound, plus the pieces of one evaluation
// that the line search reuses.
class Problem {
public:
    Problem(const Matrix& rs, const Matrix& mask, const Matrix& rm, const RegularizerSpec& reg,
            const Hyperparams& h)
        : rs_(rs), mask_(mask), rm_(rm), lambda1_(h.lambda1), lambda2_(h.lambda2),
          alpha_(reg.kind == RegularizerKind::none ? 0.0 : h.alpha) {
        if (alpha_ != 0.0) {
            const Index nnz = (reg.weights.array() != 0.0).count();
            if (nnz * 10 < reg.weights.size()) {
                sparse_w_ = reg.weights.sparseView();
                sparse_ = true;
            } else {
                dense_w_ = reg.weights;
            }
        }
    }

    struct Eval {
        double loss = 0.0;
        Matrix es;  // I o (R_l V1^T - R_s)
        Matrix em;  // R_l V2^T - R_m
        Matrix d;   // R_l - W^T R_l
    };

    Eval evaluate(const FactorModel& m) const {
        Eval e;
        e.es = mask_.cwiseProduct(m.lifestyles * m.shopping_view.transpose() - rs_);
        e.loss = 0.5 * e.es.squaredNorm();
        if (lambda1_ != 0.0) {
            e.em = m.lifestyles * m.mobility_view.transpose() - rm_;
            e.loss += 0.5 * lambda1_ * e.em.squaredNorm();
        }
        if (alpha_ != 0.0) {
            e.d = m.lifestyles - pull(m.lifestyles);
            e.loss += 0.5 * alpha_ * e.d.squaredNorm();
        }
        if (lambda2_ != 0.0) {
            e.loss += 0.5 * lambda2_ *
                      (m.lifestyles.squaredNorm() + m.shopping_view.squaredNorm() +
                       m.mobility_view.squaredNorm());
        }
        return e;
    }

    Gradient gradient(const FactorModel& m, const Eval& e, GradientMode mode) const {
        Gradient g;
        g.lifestyles = e.es * m.shopping_view;
        g.shopping_view = e.es.transpose() * m.lifestyles;
        if (lambda1_ != 0.0) {
            g.lifestyles += lambda1_ * (e.em * m.mobility_view);
            g.mobility_view = lambda1_ * (e.em.transpose() * m.lifestyles);
        } else {
            g.mobility_view = Matrix::Zero(m.mobility_view.rows(), m.mobility_view.cols());
        }
        if (alpha_ != 0.0) {
            if (mode == GradientMode::exact) {
                g.lifestyles += alpha_ * (e.d - spread(e.d));
            } else {
                g.lifestyles += (alpha_ * static_cast<double>(e.d.rows())) * e.d;
            }
        }
        if (lambda2_ != 0.0) {
            g.lifestyles += lambda2_ * m.lifestyles;
            g.shopping_view += lambda2_ * m.shopping_view;
            g.mobility_view += lambda2_ * m.mobility_view;
        }
        return g;
    }

    // Objective change along -gamma * g is a quartic in gamma with no
    // constant term; c[k] multiplies gamma^(k+1).
    struct Line {
        double c[4] = {0.0, 0.0, 0.0, 0.0};
        double delta(double gamma) const {
            return gamma * (c[0] + gamma * (c[1] + gamma * (c[2] + gamma * c[3])));
        }
        bool finite() const {
            return std::isfinite(c[0]) && std::isfinite(c[1]) && std::isfinite(c[2]) && std::isfinite(c[3]);
        }
    };

    Line line(const FactorModel& m, const Eval& e, const Gradient& g) const {
        Line ln;
        auto add_product_term = [&](double weight, const Matrix& e0, const Matrix& view,
                                    const Matrix& g_view, const Matrix* mask) {
            Matrix p1 = -(g.lifestyles * view.transpose() + m.lifestyles * g_view.transpose());
            Matrix p2 = g.lifestyles * g_view.transpose();
            if (mask) {
                p1 = p1.cwiseProduct(*mask);
                p2 = p2.cwiseProduct(*mask);
            }
            ln.c[0] += weight * dot(e0, p1);
            ln.c[1] += weight * (0.5 * p1.squaredNorm() + dot(e0, p2));
            ln.c[2] += weight * dot(p1, p2);
            ln.c[3] += weight * 0.5 * p2.squaredNorm();
        };
        add_product_term(1.0, e.es, m.shopping_view, g.shopping_view, &mask_);
        if (lambda1_ != 0.0) add_product_term(lambda1_, e.em, m.mobility_view, g.mobility_view, nullptr);
        if (alpha_ != 0.0) {
            const Matrix d1 = g.lifestyles - pull(g.lifestyles);
            ln.c[0] -= alpha_ * dot(e.d, d1);
            ln.c[1] += 0.5 * alpha_ * d1.squaredNorm();
        }
        if (lambda2_ != 0.0) {
            ln.c[0] -= lambda2_ * (dot(m.lifestyles, g.lifestyles) + dot(m.shopping_view, g.shopping_view) +
                                   dot(m.mobility_view, g.mobility_view));
            ln.c[1] += 0.5 * lambda2_ *
                       (g.lifestyles.squaredNorm() + g.shopping_view.squaredNorm() +
                        g.mobility_view.squaredNorm());
        }
        return ln;
    }

private:
    // W^T X: row i is the weighted mean region i is pulled towards.
    Matrix pull(const Matrix& x) const {
        if (sparse_) return sparse_w_.transpose() * x;
        return dense_w_.transpose() * x;
    }
    // W X
    Matrix spread(const Matrix& x) const {
        if (sparse_) return sparse_w_ * x;
        return dense_w_ * x;
    }

    const Matrix& rs_;
    const Matrix& mask_;
    const Matrix& rm_;
    double lambda1_, lambda2_, alpha_;
    bool sparse_ = false;
    Eigen::SparseMatrix<double> sparse_w_;
    Matrix dense_w_;
};

bool finite(const Gradient& g) {
    return g.lifestyles.allFinite() && g.shopping_view.allFinite() && g.mobility_view.allFinite();
}

double max_observed(const Matrix& values, const Matrix* mask) {
    double best = 0.0;
    for (Index j = 0; j < values.cols(); ++j)
        for (Index i = 0; i < values.rows(); ++i)
            if (!mask || (*mask)(i, j) != 0.0) best = std::max(best, std::abs(values(i, j)));
    return best > 0.0 ? best : 1.0;
}

}  // namespace

double objective(const FactorModel& model, const ShoppingPatternMatrix& shopping, const Matrix& mobility,
                 const RegularizerSpec& reg, const Hyperparams& h) {
    check_dims(model, shopping, mobility, reg);
    const Problem p(shopping.values, shopping.mask, mobility, reg, h);
    return p.evaluate(model).loss;
}

Gradient gradient(const FactorModel& model, const ShoppingPatternMatrix& shopping, const Matrix& mobility,
                  const RegularizerSpec& reg, const Hyperparams& h, GradientMode mode) {
    check_dims(model, shopping, mobility, reg);
    const Problem p(shopping.values, shopping.mask, mobility, reg, h);
    return p.gradient(model, p.evaluate(model), mode);
}

TrainResult train(const ShoppingPatternMatrix& shopping, const MobilityPatternMatrix& mobility,
                  const RegularizerSpec& reg, const Hyperparams& h, Variant variant) {
    h.validate();
    shopping.validate();
    const Index r = shopping.regions(), n = shopping.patterns(), m = mobility.values.cols();
    if (mobility.values.rows() != r)
        throw InvalidArgument("mobility matrix has " + std::to_string(mobility.values.rows()) +
                              " regions, shopping matrix " + std::to_string(r));
    if (!mobility.values.allFinite()) throw InvalidArgument("mobility matrix must be finite");

    RegularizerSpec used;
    if (variant == Variant::cmf_n || variant == Variant::cmf_i) {
        const auto want = variant == Variant::cmf_n ? RegularizerKind::neighbor : RegularizerKind::interaction;
        if (reg.kind != want)
            throw InvalidArgument(std::string("variant ") + std::string(display_name(variant)) +
                                  " needs " + (want == RegularizerKind::neighbor ? "neighbor" : "interaction") +
                                  " weights");
        used = reg;
    }
    const Hyperparams eff = effective_hyperparams(h, variant);

    TrainResult out;
    TrainedModel& tm = out.model;
    tm.variant = variant;
    tm.hyper = h;
    tm.shopping_scale = max_observed(shopping.values, &shopping.mask);
    tm.mobility_scale = max_observed(mobility.values, nullptr);
    const Matrix rs = shopping.values / tm.shopping_scale;
    const Matrix rm = mobility.values / tm.mobility_scale;

    const double observed = shopping.mask.sum();
    const double mean_obs = observed > 0.0 ? rs.cwiseProduct(shopping.mask).sum() / observed : 0.0;
    const double hi = 0.1 * std::sqrt((mean_obs > 0.0 ? mean_obs : 1.0) / h.l);
    Rng rng(h.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw = [&](Index rows) {
        Matrix x(rows, h.l);
        for (Index j = 0; j < x.cols(); ++j)
            for (Index i = 0; i < x.rows(); ++i) x(i, j) = (1.0 - unif(rng)) * hi;
        return x;
    };
    FactorModel& model = tm.factors;
    model.lifestyles = draw(r);
    model.shopping_view = draw(n);
    model.mobility_view = draw(m);

    const Problem prob(rs, shopping.mask, rm, used, eff);
    constexpr double kMinGamma = 1e-12;

    Problem::Eval ev = prob.evaluate(model);
    if (!std::isfinite(ev.loss)) throw NumericalError("non-finite objective at iteration 0");
    out.trace.steps.push_back({0, ev.loss, 0.0});
    double last = ev.loss;
    out.trace.stop = StopReason::max_iters;

    for (int t = 0; t < h.max_iters; ++t) {
        if (t > 0) {
            ev = prob.evaluate(model);
            if (!std::isfinite(ev.loss))
                throw NumericalError("non-finite objective at iteration " + std::to_string(t));
        }
        const Gradient g = prob.gradient(model, ev, h.gradient);
        if (!finite(g)) throw NumericalError("non-finite gradient at iteration " + std::to_string(t));
        const Problem::Line line = prob.line(model, ev, g);
        if (!line.finite())
            throw NumericalError("non-finite line-search coefficients at iteration " + std::to_string(t));

        double gamma = 1.0;
        double candidate = last;
        bool accepted = false;
        for (; gamma >= kMinGamma; gamma *= 0.5) {
            const double delta = line.delta(gamma);
            candidate = ev.loss + delta;
            if (std::isfinite(candidate) && delta < 0.0 && candidate < last) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            out.trace.stop = StopReason::step_underflow;
            break;
        }
        model.lifestyles -= gamma * g.lifestyles;
        model.shopping_view -= gamma * g.shopping_view;
        model.mobility_view -= gamma * g.mobility_view;
        out.trace.steps.push_back({t + 1, candidate, gamma});
        const double gain = last - candidate;
        last = candidate;
        if (gain <= h.epsilon) {
            out.trace.stop = StopReason::converged;
            break;
        }
    }
    tm.final_loss = last;
    return out;
}

Matrix predict(const FactorModel& model) {
    return (model.lifestyles * model.shopping_view.transpose()).cwiseMax(0.0);
}

Matrix predict(const TrainedModel& model) { return predict(model.factors) * model.shopping_scale; }

}  // namespace citymf
