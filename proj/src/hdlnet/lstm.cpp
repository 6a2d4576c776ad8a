#include "das/hdlnet/lstm.hpp"

#include "das/common.hpp"

#include <cmath>

namespace das::hdl {
namespace {

double sigmoid(double z)
{
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

Tensor transpose2d(const Tensor& t)
{
    if (t.rank() != 2) throw ConfigError("transpose2d: expected rank 2, got " + t.shape_string());
    const std::size_t r = t.dim(0), c = t.dim(1);
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = t[i * c + j];
    return out;
}

Tensor lstm_dense_forward(const Tensor& x, const LstmWeights& p, LstmCache* cache)
{
    if (x.rank() != 2) throw ConfigError("lstm: expected [steps, features], got " + x.shape_string());
    const std::size_t steps = x.dim(0), f = x.dim(1);
    const std::size_t h = p.u->dim(1), d = p.dense_w->dim(0);
    if (p.w->dim(0) != 4 * h || p.w->dim(1) != f)
        throw ConfigError("lstm: input weight " + p.w->shape_string() + " does not fit features "
                          + std::to_string(f));
    if (p.dense_w->dim(1) != h) throw ConfigError("lstm: dense weight does not match hidden size");

    std::vector<double> gates(steps * 4 * h), cell(steps * h), cell_tanh(steps * h),
        hidden(steps * h);
    std::vector<double> z(4 * h);
    std::vector<double> h_prev(h, 0.0), c_prev(h, 0.0);
    Tensor out({steps, d});

    const double* W = p.w->data();
    const double* U = p.u->data();
    for (std::size_t t = 0; t < steps; ++t) {
        const double* xt = x.data() + t * f;
        for (std::size_t r = 0; r < 4 * h; ++r) {
            double s = (*p.b)[r];
            const double* wr = W + r * f;
            for (std::size_t k = 0; k < f; ++k) s += wr[k] * xt[k];
            const double* ur = U + r * h;
            for (std::size_t k = 0; k < h; ++k) s += ur[k] * h_prev[k];
            z[r] = s;
        }
        double* g = gates.data() + t * 4 * h;
        for (std::size_t k = 0; k < h; ++k) {
            g[k] = sigmoid(z[k]);
            g[h + k] = sigmoid(z[h + k]);
            g[2 * h + k] = std::tanh(z[2 * h + k]);
            g[3 * h + k] = sigmoid(z[3 * h + k]);
            const double c = g[h + k] * c_prev[k] + g[k] * g[2 * h + k];
            const double tc = std::tanh(c);
            cell[t * h + k] = c;
            cell_tanh[t * h + k] = tc;
            hidden[t * h + k] = g[3 * h + k] * tc;
        }
        for (std::size_t k = 0; k < h; ++k) {
            h_prev[k] = hidden[t * h + k];
            c_prev[k] = cell[t * h + k];
        }
        for (std::size_t j = 0; j < d; ++j) {
            double s = (*p.dense_b)[j];
            const double* dr = p.dense_w->data() + j * h;
            for (std::size_t k = 0; k < h; ++k) s += dr[k] * h_prev[k];
            out[t * d + j] = s;
        }
    }
    if (cache) {
        cache->input = x;
        cache->gates = std::move(gates);
        cache->cell = std::move(cell);
        cache->cell_tanh = std::move(cell_tanh);
        cache->hidden = std::move(hidden);
    }
    return out;
}

Tensor lstm_dense_backward(const LstmCache& cache, const LstmWeights& p, const Tensor& d_out,
                           const LstmGrads& grads)
{
    const Tensor& x = cache.input;
    const std::size_t steps = x.dim(0), f = x.dim(1);
    const std::size_t h = p.u->dim(1), d = p.dense_w->dim(0);
    const double* W = p.w->data();
    const double* U = p.u->data();

    Tensor d_x({steps, f});
    std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0), dh(h), dz(4 * h);

    for (std::size_t ti = steps; ti-- > 0;) {
        const double* hid = cache.hidden.data() + ti * h;
        const double* dy = d_out.data() + ti * d;
        for (std::size_t j = 0; j < d; ++j) {
            (*grads.dense_b)[j] += dy[j];
            double* gw = grads.dense_w->data() + j * h;
            for (std::size_t k = 0; k < h; ++k) gw[k] += dy[j] * hid[k];
        }
        for (std::size_t k = 0; k < h; ++k) {
            double s = dh_next[k];
            for (std::size_t j = 0; j < d; ++j) s += (*p.dense_w)[j * h + k] * dy[j];
            dh[k] = s;
        }
        const double* g = cache.gates.data() + ti * 4 * h;
        const double* tc = cache.cell_tanh.data() + ti * h;
        for (std::size_t k = 0; k < h; ++k) {
            const double i = g[k], fg = g[h + k], gg = g[2 * h + k], o = g[3 * h + k];
            const double c_prev = ti > 0 ? cache.cell[(ti - 1) * h + k] : 0.0;
            const double dc = dh[k] * o * (1.0 - tc[k] * tc[k]) + dc_next[k];
            dz[k] = dc * gg * i * (1.0 - i);
            dz[h + k] = dc * c_prev * fg * (1.0 - fg);
            dz[2 * h + k] = dc * i * (1.0 - gg * gg);
            dz[3 * h + k] = dh[k] * tc[k] * o * (1.0 - o);
            dc_next[k] = dc * fg;
        }
        const double* xt = x.data() + ti * f;
        const double* h_prev = ti > 0 ? cache.hidden.data() + (ti - 1) * h : nullptr;
        double* dxt = d_x.data() + ti * f;
        for (std::size_t r = 0; r < 4 * h; ++r) {
            const double gz = dz[r];
            (*grads.b)[r] += gz;
            double* gw = grads.w->data() + r * f;
            const double* wr = W + r * f;
            for (std::size_t k = 0; k < f; ++k) {
                gw[k] += gz * xt[k];
                dxt[k] += wr[k] * gz;
            }
            if (h_prev) {
                double* gu = grads.u->data() + r * h;
                for (std::size_t k = 0; k < h; ++k) gu[k] += gz * h_prev[k];
            }
        }
        for (std::size_t k = 0; k < h; ++k) {
            double s = 0.0;
            for (std::size_t r = 0; r < 4 * h; ++r) s += U[r * h + k] * dz[r];
            dh_next[k] = s;
        }
    }
    return d_x;
}

} // namespace das::hdl
