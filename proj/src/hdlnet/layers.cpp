#include "das/hdlnet/layers.hpp"

#include "das/common.hpp"

#include <algorithm>

namespace das::hdl {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what)
{
    if (t.rank() != rank)
        throw ConfigError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got "
                          + t.shape_string());
}

// Row and column ranges where the shifted index stays inside [0, n).
struct Span {
    std::size_t lo, hi;
};

Span valid_range(std::size_t n, long shift)
{
    const long lo = std::max(0L, -shift);
    const long hi = std::min(static_cast<long>(n), static_cast<long>(n) - shift);
    if (hi <= lo) return {0, 0};
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

std::size_t shifted(std::size_t i, long d)
{
    return static_cast<std::size_t>(static_cast<long>(i) + d);
}

} // namespace

Tensor conv2d_same(const Tensor& in, const Tensor& w, const Tensor& b)
{
    require_rank(in, 3, "conv2d input");
    require_rank(w, 4, "conv2d weight");
    const std::size_t ci = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const std::size_t co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(1) != ci) throw ConfigError("conv2d: weight expects " + std::to_string(w.dim(1))
                                          + " input channels, got " + std::to_string(ci));
    if (kh % 2 == 0 || kw % 2 == 0) throw ConfigError("conv2d: kernel sizes must be odd");
    if (b.size() != co) throw ConfigError("conv2d: bias size mismatch");
    const long ph = static_cast<long>(kh / 2), pw = static_cast<long>(kw / 2);
    const std::size_t plane = h * wd;

    Tensor out({co, h, wd});
    for (std::size_t o = 0; o < co; ++o) {
        double* op = out.data() + o * plane;
        std::fill(op, op + plane, b[o]);
        for (std::size_t i = 0; i < ci; ++i) {
            const double* ip = in.data() + i * plane;
            for (std::size_t ky = 0; ky < kh; ++ky) {
                const long dy = static_cast<long>(ky) - ph;
                const Span rows = valid_range(h, dy);
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const long dx = static_cast<long>(kx) - pw;
                    const Span cols = valid_range(wd, dx);
                    const double wv = w[((o * ci + i) * kh + ky) * kw + kx];
                    const std::size_t n = cols.hi - cols.lo;
                    const std::size_t src = shifted(cols.lo, dx);
                    for (std::size_t y = rows.lo; y < rows.hi; ++y) {
                        double* orow = op + y * wd + cols.lo;
                        const double* irow = ip + shifted(y, dy) * wd + src;
                        for (std::size_t x = 0; x < n; ++x) orow[x] += wv * irow[x];
                    }
                }
            }
        }
    }
    return out;
}

Tensor conv2d_same_backward(const Tensor& in, const Tensor& w, const Tensor& d_out, Tensor& dw,
                            Tensor& db)
{
    const std::size_t ci = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const std::size_t co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const long ph = static_cast<long>(kh / 2), pw = static_cast<long>(kw / 2);
    const std::size_t plane = h * wd;

    Tensor d_in({ci, h, wd});
    for (std::size_t o = 0; o < co; ++o) {
        const double* gp = d_out.data() + o * plane;
        double s = 0.0;
        for (std::size_t k = 0; k < plane; ++k) s += gp[k];
        db[o] += s;
        for (std::size_t i = 0; i < ci; ++i) {
            const double* ip = in.data() + i * plane;
            double* dp = d_in.data() + i * plane;
            for (std::size_t ky = 0; ky < kh; ++ky) {
                const long dy = static_cast<long>(ky) - ph;
                const Span rows = valid_range(h, dy);
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const long dx = static_cast<long>(kx) - pw;
                    const Span cols = valid_range(wd, dx);
                    const std::size_t widx = ((o * ci + i) * kh + ky) * kw + kx;
                    const double wv = w[widx];
                    const std::size_t n = cols.hi - cols.lo;
                    const std::size_t src = shifted(cols.lo, dx);
                    double acc = 0.0;
                    for (std::size_t y = rows.lo; y < rows.hi; ++y) {
                        const double* grow = gp + y * wd + cols.lo;
                        const std::size_t off = shifted(y, dy) * wd + src;
                        const double* irow = ip + off;
                        double* drow = dp + off;
                        for (std::size_t x = 0; x < n; ++x) {
                            acc += grow[x] * irow[x];
                            drow[x] += wv * grow[x];
                        }
                    }
                    dw[widx] += acc;
                }
            }
        }
    }
    return d_in;
}

void relu_inplace(Tensor& t)
{
    for (double& v : t.span()) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(const Tensor& out, Tensor& d_out)
{
    for (std::size_t i = 0; i < out.size(); ++i)
        if (!(out[i] > 0.0)) d_out[i] = 0.0;
}

PoolResult max_pool(const Tensor& in, std::size_t ph, std::size_t pw)
{
    require_rank(in, 3, "max_pool input");
    const std::size_t c = in.dim(0), h = in.dim(1), wd = in.dim(2);
    if (ph == 0 || pw == 0 || h % ph != 0 || wd % pw != 0)
        throw ConfigError("max_pool: " + in.shape_string() + " is not divisible by the pool size");
    const std::size_t oh = h / ph, ow = wd / pw;
    PoolResult r{Tensor({c, oh, ow}), std::vector<std::size_t>(c * oh * ow)};
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x) {
                std::size_t best = (ch * h + y * ph) * wd + x * pw;
                for (std::size_t a = 0; a < ph; ++a)
                    for (std::size_t bx = 0; bx < pw; ++bx) {
                        const std::size_t idx = (ch * h + y * ph + a) * wd + x * pw + bx;
                        if (in[idx] > in[best]) best = idx;
                    }
                const std::size_t o = (ch * oh + y) * ow + x;
                r.out[o] = in[best];
                r.argmax[o] = best;
            }
    return r;
}

Tensor max_pool_backward(const PoolResult& pool, const std::vector<std::size_t>& in_shape,
                         const Tensor& d_out)
{
    Tensor d_in(in_shape);
    for (std::size_t o = 0; o < pool.argmax.size(); ++o) d_in[pool.argmax[o]] += d_out[o];
    return d_in;
}

Tensor conv_transpose(const Tensor& in, const Tensor& w, const Tensor& b)
{
    require_rank(in, 3, "conv_transpose input");
    require_rank(w, 4, "conv_transpose weight");
    const std::size_t ci = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const std::size_t co = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(0) != ci) throw ConfigError("conv_transpose: input channel mismatch");
    if (b.size() != co) throw ConfigError("conv_transpose: bias size mismatch");
    const std::size_t oh = h * kh, ow = wd * kw;

    Tensor out({co, oh, ow});
    for (std::size_t o = 0; o < co; ++o) {
        double* op = out.data() + o * oh * ow;
        std::fill(op, op + oh * ow, b[o]);
        for (std::size_t i = 0; i < ci; ++i) {
            const double* ip = in.data() + i * h * wd;
            for (std::size_t a = 0; a < kh; ++a)
                for (std::size_t bx = 0; bx < kw; ++bx) {
                    const double wv = w[((i * co + o) * kh + a) * kw + bx];
                    for (std::size_t y = 0; y < h; ++y) {
                        double* orow = op + (y * kh + a) * ow + bx;
                        const double* irow = ip + y * wd;
                        for (std::size_t x = 0; x < wd; ++x) orow[x * kw] += wv * irow[x];
                    }
                }
        }
    }
    return out;
}

Tensor conv_transpose_backward(const Tensor& in, const Tensor& w, const Tensor& d_out, Tensor& dw,
                               Tensor& db)
{
    const std::size_t ci = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const std::size_t co = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    const std::size_t oh = h * kh, ow = wd * kw;

    Tensor d_in({ci, h, wd});
    for (std::size_t o = 0; o < co; ++o) {
        const double* gp = d_out.data() + o * oh * ow;
        double s = 0.0;
        for (std::size_t k = 0; k < oh * ow; ++k) s += gp[k];
        db[o] += s;
        for (std::size_t i = 0; i < ci; ++i) {
            const double* ip = in.data() + i * h * wd;
            double* dp = d_in.data() + i * h * wd;
            for (std::size_t a = 0; a < kh; ++a)
                for (std::size_t bx = 0; bx < kw; ++bx) {
                    const std::size_t widx = ((i * co + o) * kh + a) * kw + bx;
                    const double wv = w[widx];
                    double acc = 0.0;
                    for (std::size_t y = 0; y < h; ++y) {
                        const double* grow = gp + (y * kh + a) * ow + bx;
                        const double* irow = ip + y * wd;
                        double* drow = dp + y * wd;
                        for (std::size_t x = 0; x < wd; ++x) {
                            acc += irow[x] * grow[x * kw];
                            drow[x] += wv * grow[x * kw];
                        }
                    }
                    dw[widx] += acc;
                }
        }
    }
    return d_in;
}

Tensor concat_channels(const Tensor& a, const Tensor& b)
{
    require_rank(a, 3, "concat");
    require_rank(b, 3, "concat");
    if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
        throw ConfigError("concat: spatial shapes differ: " + a.shape_string() + " vs "
                          + b.shape_string());
    Tensor out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
}

void split_channels(const Tensor& d_out, std::size_t channels_a, Tensor& da, Tensor& db)
{
    const std::size_t h = d_out.dim(1), wd = d_out.dim(2);
    da = Tensor({channels_a, h, wd});
    db = Tensor({d_out.dim(0) - channels_a, h, wd});
    std::copy(d_out.data(), d_out.data() + da.size(), da.data());
    std::copy(d_out.data() + da.size(), d_out.data() + d_out.size(), db.data());
}

} // namespace das::hdl
