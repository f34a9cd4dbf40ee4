#include "citymf/nmf.hpp"

#include "citymf/errors.hpp"
#include "citymf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace citymf {

namespace {

constexpr double kDenominatorEps = 1e-12;
constexpr int kMaxInner = 10;
constexpr double kInnerStop = 0.01;

// F <- F * num / (denom(F) + eps), repeated until a step moves F by less
// than kInnerStop of the first step.
template <class Denom>
void inner_updates(Eigen::MatrixXd& F, const Eigen::MatrixXd& num, Denom&& denom) {
    double first = 0.0;
    for (int s = 0; s < kMaxInner; ++s) {
        Eigen::MatrixXd next = F.array() * num.array() / (denom(F).array() + kDenominatorEps);
        const double step = (next - F).norm();
        F = std::move(next);
        if (s == 0) first = step;
        else if (step <= kInnerStop * first) break;
    }
}

}  // namespace

void normalize_basis_rows(Eigen::MatrixXd& basis, Eigen::MatrixXd& coefficients) {
    for (Index p = 0; p < basis.rows(); ++p) {
        const double s = basis.row(p).sum();
        if (s > 0.0) {
            basis.row(p) /= s;
            coefficients.col(p) *= s;
        } else {
            basis.row(p).setConstant(1.0 / static_cast<double>(basis.cols()));
            coefficients.col(p).setZero();
        }
    }
}

namespace {

// Sweeps shorter restarts get before only the best one is continued.
constexpr int kScreenSweeps = 300;

struct Run {
    Eigen::MatrixXd C, P;
    std::vector<double> loss_trace;
    int iterations = 0;
    bool done = false;
};

Run start(const Eigen::MatrixXd& X, int k, std::uint64_t seed) {
    Rng rng(seed);
    // uniform_real_distribution is [0, 1); flipping it gives (0, 1].
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double scale = std::sqrt(X.mean() / k);
    Run run;
    run.C.resize(X.rows(), k);
    run.P.resize(k, X.cols());
    for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < X.rows(); ++i) run.C(i, j) = (1.0 - unif(rng)) * scale;
    for (Index j = 0; j < X.cols(); ++j)
        for (Index i = 0; i < k; ++i) run.P(i, j) = (1.0 - unif(rng)) * scale;
    run.loss_trace.push_back((X - run.C * run.P).squaredNorm());
    return run;
}

void advance(Run& run, const Eigen::MatrixXd& X, double tol, int until) {
    Eigen::MatrixXd& C = run.C;
    Eigen::MatrixXd& P = run.P;
    // Relative error 1e-14: nothing left to fit in double precision.
    const double exact_fit = 1e-28 * X.squaredNorm();
    double loss = run.loss_trace.back();
    while (!run.done && run.iterations < until) {
        // Each factor takes several updates against cached products before
        // the other one moves; every inner step is a plain Lee-Seung step.
        const Eigen::MatrixXd CtC = C.transpose() * C;
        const Eigen::MatrixXd CtX = C.transpose() * X;
        inner_updates(P, CtX, [&](const Eigen::MatrixXd& p) { return Eigen::MatrixXd(CtC * p); });
        const Eigen::MatrixXd PPt = P * P.transpose();
        const Eigen::MatrixXd XPt = X * P.transpose();
        inner_updates(C, XPt, [&](const Eigen::MatrixXd& c) { return Eigen::MatrixXd(c * PPt); });

        const double next = (X - C * P).squaredNorm();
        if (!std::isfinite(next)) throw NumericalError("nmf: loss became non-finite");
        run.loss_trace.push_back(next);
        ++run.iterations;
        const double change = std::abs(loss - next) / std::max(loss, 1e-300);
        loss = next;
        if (change < tol || loss <= exact_fit) run.done = true;
    }
}

}  // namespace

NmfResult nmf(const Eigen::MatrixXd& X, int k, const NmfOptions& opts) {
    const Index rows = X.rows(), cols = X.cols();
    if (k < 1 || k > std::min(rows, cols))
        throw InvalidArgument("nmf: pattern count " + std::to_string(k) +
                              " outside [1, min(rows, cols)] = [1, " +
                              std::to_string(std::min(rows, cols)) + "]");
    if (!X.allFinite() || (X.array() < 0.0).any())
        throw InvalidArgument("nmf: input must be finite and non-negative");
    if (opts.max_iters < 0) throw InvalidArgument("nmf: max_iters must be >= 0");
    if (opts.restarts < 1) throw InvalidArgument("nmf: restarts must be >= 1");

    NmfResult res;
    if (X.mean() == 0.0) {
        res.basis = Eigen::MatrixXd::Constant(k, cols, 1.0 / static_cast<double>(cols));
        res.coefficients = Eigen::MatrixXd::Zero(rows, k);
        res.loss_trace.push_back(0.0);
        return res;
    }

    Run best = start(X, k, opts.seed);
    if (opts.restarts > 1) {
        const int screen = std::min(kScreenSweeps, opts.max_iters);
        advance(best, X, opts.tol, screen);
        for (int r = 1; r < opts.restarts; ++r) {
            Run next = start(X, k, derive_seed(opts.seed, {static_cast<std::uint64_t>(r)}));
            advance(next, X, opts.tol, screen);
            if (next.loss_trace.back() < best.loss_trace.back()) best = std::move(next);
        }
    }
    advance(best, X, opts.tol, opts.max_iters);

    normalize_basis_rows(best.P, best.C);
    res.basis = std::move(best.P);
    res.coefficients = std::move(best.C);
    res.loss_trace = std::move(best.loss_trace);
    res.iterations = best.iterations;
    return res;
}

}  // namespace citymf
