#pragma once

#include "das/physics.hpp"
#include "das/spectral.hpp"
#include "das/waterfall.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace das::lasso {

struct LassoConfig {
    double lambda = 0.05;
    std::size_t max_iter = 500;
    double tol = 1e-8; ///< relative objective change that stops a column
    bool accelerated = true;
    std::size_t threads = 1;

    void validate() const;
};

struct ColumnResult {
    std::vector<double> estimate;
    std::vector<double> objective_trace; ///< objective after each iteration
    std::size_t iterations = 0;
};

struct DenoiseResult {
    Waterfall estimate; ///< sparse source x-hat
    /// Sum over columns of each column's objective after iteration i (a
    /// column that stopped early contributes its final value).
    std::vector<double> objective_trace;
    std::size_t iterations_used = 0;
};

inline double soft_threshold(double v, double t)
{
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

/// ||conv_same(x, k) - y||^2 + lambda * ||x||_1
double objective(std::span<const double> x, std::span<const double> y,
                 const physics::ImpulseKernel& kernel, double lambda);

/// Proximal-gradient solver for one spatial profile. Step 1/L with
/// L = 2 * max |K(w)|^2, the Lipschitz constant of the data term's gradient.
class ColumnSolver {
public:
    ColumnSolver(const physics::ImpulseKernel& kernel, std::size_t n, const LassoConfig& config);

    ColumnResult solve(std::span<const double> y) const;
    double lipschitz() const { return lipschitz_; }
    /// Gradient of the data term at x.
    std::vector<double> smooth_gradient(std::span<const double> x, std::span<const double> y) const;
    double value(std::span<const double> x, std::span<const double> y) const;

private:
    spectral::SameConvolver op_;
    LassoConfig config_;
    double lipschitz_;
};

/// Solves every time column independently.
DenoiseResult denoise(const Waterfall& w, const physics::ImpulseKernel& kernel,
                      const LassoConfig& config);

} // namespace das::lasso
