#include "das/lasso.hpp"

#include "das/common.hpp"

#include <cmath>

namespace das::lasso {

void LassoConfig::validate() const
{
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
}

double objective(std::span<const double> x, std::span<const double> y,
                 const physics::ImpulseKernel& kernel, double lambda)
{
    if (x.size() != y.size()) throw ConfigError("profile lengths differ");
    const auto full = spectral::freq_convolve(x, kernel.taps);
    const auto ax = spectral::crop_same(full, x.size(), kernel.taps.size());
    double fit = 0.0;
    double l1 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        fit += (ax[i] - y[i]) * (ax[i] - y[i]);
        l1 += std::abs(x[i]);
    }
    return fit + lambda * l1;
}

ColumnSolver::ColumnSolver(const physics::ImpulseKernel& kernel, std::size_t n,
                           const LassoConfig& config)
    : op_(kernel.taps, n), config_(config)
{
    config.validate();
    if (kernel.taps.size() > n) throw ConfigError("kernel is longer than the waterfall column");
    lipschitz_ = 2.0 * op_.max_gain_squared();
    if (!(lipschitz_ > 0.0)) throw NumericError("zero kernel: the data term has no curvature");
}

double ColumnSolver::value(std::span<const double> x, std::span<const double> y) const
{
    std::vector<double> ax(x.size());
    op_.apply(x, ax);
    double fit = 0.0;
    double l1 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        fit += (ax[i] - y[i]) * (ax[i] - y[i]);
        l1 += std::abs(x[i]);
    }
    return fit + config_.lambda * l1;
}

std::vector<double> ColumnSolver::smooth_gradient(std::span<const double> x,
                                                  std::span<const double> y) const
{
    const std::size_t n = x.size();
    std::vector<double> r(n), g(n);
    op_.apply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] -= y[i];
    op_.adjoint(r, g);
    for (double& v : g) v *= 2.0;
    return g;
}

ColumnResult ColumnSolver::solve(std::span<const double> y) const
{
    const std::size_t n = op_.length();
    if (y.size() != n) throw ConfigError("profile length does not match the solver");
    const double step = 1.0 / lipschitz_;
    const double shrink = config_.lambda * step;

    // Every iterate carries its image under the convolution, so one forward
    // and one adjoint transform per iteration suffice (momentum images follow
    // by linearity).
    std::vector<double> r(n), g(n);
    auto prox_step = [&](const std::vector<double>& from, const std::vector<double>& a_from,
                         std::vector<double>& z, std::vector<double>& az) {
        for (std::size_t i = 0; i < n; ++i) r[i] = a_from[i] - y[i];
        op_.adjoint(r, g);
        for (std::size_t i = 0; i < n; ++i) z[i] = soft_threshold(from[i] - step * 2.0 * g[i], shrink);
        op_.apply(z, az);
        double fit = 0.0, l1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            fit += (az[i] - y[i]) * (az[i] - y[i]);
            l1 += std::abs(z[i]);
        }
        return fit + config_.lambda * l1;
    };

    ColumnResult out;
    std::vector<double> x(n, 0.0), ax(n, 0.0);
    double fx = value(x, y);
    std::vector<double> m = x, am = ax, z(n), az(n);
    double t = 1.0;

    for (std::size_t it = 0; it < config_.max_iter; ++it) {
        double fz = config_.accelerated ? prox_step(m, am, z, az) : prox_step(x, ax, z, az);
        if (config_.accelerated && fz > fx) {
            // Monotone restart: drop the momentum and take a plain step from x.
            t = 1.0;
            fz = prox_step(x, ax, z, az);
        }
        if (fz > fx) {
            // A 1/L step cannot increase the objective; this only absorbs rounding.
            z = x;
            az = ax;
            fz = fx;
        }
        if (config_.accelerated) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double beta = (t - 1.0) / t_next;
            for (std::size_t i = 0; i < n; ++i) {
                m[i] = z[i] + beta * (z[i] - x[i]);
                am[i] = az[i] + beta * (az[i] - ax[i]);
            }
            t = t_next;
        }
        const double change = std::abs(fx - fz) / std::max(std::abs(fx), 1e-300);
        std::swap(x, z);
        std::swap(ax, az);
        fx = fz;
        out.objective_trace.push_back(fx);
        out.iterations = it + 1;
        if (!std::isfinite(fx)) throw NumericError("lasso objective became non-finite");
        if (change < config_.tol) break;
    }
    out.estimate = std::move(x);
    return out;
}

DenoiseResult denoise(const Waterfall& w, const physics::ImpulseKernel& kernel,
                      const LassoConfig& config)
{
    config.validate();
    if (!w.all_finite()) throw NumericError("input waterfall has non-finite values");
    if (kernel.taps.size() > w.n_channels())
        throw ConfigError("kernel is longer than the waterfall column");
    const ColumnSolver solver(kernel, w.n_channels(), config);

    std::vector<ColumnResult> columns(w.n_time());
    parallel_for(w.n_time(), config.threads, [&](std::size_t t) {
        const auto y = w.column(t);
        columns[t] = solver.solve(y);
    });

    DenoiseResult result;
    result.estimate = Waterfall(w.n_channels(), w.n_time(), w.channel_spacing, w.sample_rate);
    for (std::size_t t = 0; t < w.n_time(); ++t) {
        result.estimate.set_column(t, columns[t].estimate);
        result.iterations_used = std::max(result.iterations_used, columns[t].iterations);
    }
    result.objective_trace.assign(result.iterations_used, 0.0);
    for (const auto& c : columns)
        for (std::size_t i = 0; i < result.iterations_used; ++i)
            result.objective_trace[i] += c.objective_trace[std::min(i, c.objective_trace.size() - 1)];
    return result;
}

} // namespace das::lasso
