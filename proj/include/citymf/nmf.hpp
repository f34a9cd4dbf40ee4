#pragma once

#include "citymf/common.hpp"

#include <cstdint>
#include <vector>

namespace citymf {

struct NmfOptions {
    int max_iters = 500;
    double tol = 1e-6;  // relative change in loss
    std::uint64_t seed = 0;
    // Independent starts, screened for a few hundred sweeps; only the one
    // with the lowest loss runs to completion. Start 0 uses `seed`.
    int restarts = 1;
};

// X ~= coefficients * basis. Each basis row sums to one; the scale lives in
// the coefficients.
struct NmfResult {
    Eigen::MatrixXd basis;         // k x cols
    Eigen::MatrixXd coefficients;  // rows x k
    std::vector<double> loss_trace;  // squared Frobenius loss, one entry per sweep, plus the start
    int iterations = 0;
};

// Lee-Seung multiplicative updates on the Frobenius loss.
// Throws InvalidArgument when k is outside [1, min(rows, cols)] or X has a
// negative or non-finite entry.
NmfResult nmf(const Eigen::MatrixXd& X, int k, const NmfOptions& opts = {});

// Rescales basis rows to sum one and pushes the factor into coefficients.
// Rows summing to zero become uniform with zero coefficient column.
void normalize_basis_rows(Eigen::MatrixXd& basis, Eigen::MatrixXd& coefficients);

}  // namespace citymf
