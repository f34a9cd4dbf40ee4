#pragma once

#include "citymf/common.hpp"
#include "citymf/grid.hpp"
#include "citymf/patterns.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace citymf {

enum class Variant { mf, cmf, cmf_n, cmf_i };

inline constexpr Variant kAllVariants[] = {Variant::mf, Variant::cmf, Variant::cmf_n, Variant::cmf_i};

// "mf", "cmf", "cmf-n", "cmf-i"
std::string_view to_string(Variant v) noexcept;
// "MF", "CMF", "CMF+N", "CMF+I"
std::string_view display_name(Variant v) noexcept;
// Accepts either spelling, case-insensitively. Throws InputError.
Variant parse_variant(std::string_view s);

enum class GradientMode {
    exact,          // true gradient of the objective, including the coupling terms
    paper_literal,  // interaction term alpha * r * (R_l,i - mean_i), no coupling
};

std::string_view to_string(GradientMode m) noexcept;
GradientMode parse_gradient_mode(std::string_view s);

struct Hyperparams {
    int l = 10;
    double lambda1 = 1.0;
    double lambda2 = 0.01;
    double alpha = 2.0;
    int max_iters = 2000;
    double epsilon = 1e-9;
    std::uint64_t seed = 0;
    GradientMode gradient = GradientMode::exact;

    // Throws InvalidArgument.
    void validate() const;

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct FactorModel {
    Matrix lifestyles;     // R_l, r x l
    Matrix shopping_view;  // V1, n x l
    Matrix mobility_view;  // V2, m x l
};

enum class RegularizerKind { none, neighbor, interaction };

// weights(j, i) is how much region j contributes to the mean that region i
// is pulled towards; every column sums to one.
struct RegularizerSpec {
    RegularizerKind kind = RegularizerKind::none;
    Matrix weights;

    static RegularizerSpec none() { return {}; }
    static RegularizerSpec neighbor(const RegionGrid& grid);
    static RegularizerSpec interaction(Matrix combined);
};

// W(j, i) = 1 / |neighbors(i)| for the grid neighbors j of i.
Matrix neighbor_weights(const RegionGrid& grid);

struct Gradient {
    Matrix lifestyles;
    Matrix shopping_view;
    Matrix mobility_view;
};

//   1/2 |I o (R_s - R_l V1^T)|^2 + lambda1/2 |R_m - R_l V2^T|^2
// + alpha/2 sum_i |R_l,i - sum_j W(j,i) R_l,j|^2
// + lambda2/2 (|R_l|^2 + |V1|^2 + |V2|^2)
// The alpha term is dropped when reg.kind is none. Inputs are used as
// given; no scaling is applied here.
double objective(const FactorModel& model, const ShoppingPatternMatrix& shopping,
                 const Matrix& mobility, const RegularizerSpec& reg, const Hyperparams& h);

Gradient gradient(const FactorModel& model, const ShoppingPatternMatrix& shopping,
                  const Matrix& mobility, const RegularizerSpec& reg, const Hyperparams& h,
                  GradientMode mode = GradientMode::exact);

struct LossStep {
    int iteration = 0;
    double loss = 0.0;
    double gamma = 0.0;  // zero for the starting point
};

enum class StopReason { max_iters, converged, step_underflow };
std::string_view to_string(StopReason r) noexcept;

struct LossTrace {
    std::vector<LossStep> steps;  // steps[0] is the initial objective
    StopReason stop = StopReason::max_iters;

    bool strictly_decreasing() const;
};

// A trained model together with everything needed to map it back to the
// units of the input matrices.
struct TrainedModel {
    FactorModel factors;
    double shopping_scale = 1.0;  // R_s was divided by this before training
    double mobility_scale = 1.0;
    Variant variant = Variant::cmf_i;
    Hyperparams hyper;  // as requested; the variant may zero lambda1/alpha
    double final_loss = 0.0;
};

struct TrainResult {
    TrainedModel model;
    LossTrace trace;
};

// Hyperparameters after the variant's restrictions (MF: lambda1 = alpha = 0,
// CMF: alpha = 0).
Hyperparams effective_hyperparams(const Hyperparams& h, Variant v);

// Gradient descent with a halving line search: every iteration starts at
// gamma = 1 and halves until the objective strictly drops. Stops after
// max_iters steps, when a step gains no more than epsilon, or when gamma
// falls below 1e-12. R_s and R_m are each divided by their largest
// observed entry first.
// Throws InvalidArgument for inconsistent inputs (including a regularizer
// that does not match the variant) and NumericalError when the objective
// or gradient turns non-finite.
TrainResult train(const ShoppingPatternMatrix& shopping, const MobilityPatternMatrix& mobility,
                  const RegularizerSpec& reg, const Hyperparams& h, Variant variant);

// R_l V1^T clamped at zero, in the model's own units.
Matrix predict(const FactorModel& model);
// Same, mapped back to the units of the training input.
Matrix predict(const TrainedModel& model);

}  // namespace citymf
