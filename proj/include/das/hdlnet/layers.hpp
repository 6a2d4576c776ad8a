#pragma once

#include "das/hdlnet/tensor.hpp"

#include <cstddef>
#include <vector>

// Feature maps are [channels, height, width]; height is the sensor axis and
// width is the time axis.
namespace das::hdl {

/// Zero-padded 'same' 2-D convolution (cross-correlation) with odd kernel
/// sizes. w: [out, in, kh, kw], b: [out].
Tensor conv2d_same(const Tensor& in, const Tensor& w, const Tensor& b);

/// Gradients of conv2d_same. Accumulates into dw and db; returns d(in).
Tensor conv2d_same_backward(const Tensor& in, const Tensor& w, const Tensor& d_out, Tensor& dw,
                            Tensor& db);

void relu_inplace(Tensor& t);
/// Zeroes d_out where the (post-activation) output is not positive.
void relu_backward_inplace(const Tensor& out, Tensor& d_out);

struct PoolResult {
    Tensor out;
    std::vector<std::size_t> argmax; ///< flat input index chosen for each output
};

/// Non-overlapping max pool. Ties go to the first maximum in row-major order
/// within the window. Height and width must be divisible by the pool size.
PoolResult max_pool(const Tensor& in, std::size_t ph, std::size_t pw);
Tensor max_pool_backward(const PoolResult& pool, const std::vector<std::size_t>& in_shape,
                         const Tensor& d_out);

/// Transposed convolution with kernel size equal to stride.
/// w: [in, out, kh, kw], b: [out]. Output is [out, H*kh, W*kw].
Tensor conv_transpose(const Tensor& in, const Tensor& w, const Tensor& b);
Tensor conv_transpose_backward(const Tensor& in, const Tensor& w, const Tensor& d_out, Tensor& dw,
                               Tensor& db);

/// Stacks a then b along the channel axis.
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Splits d_out back into the parts for a (first `channels_a`) and b.
void split_channels(const Tensor& d_out, std::size_t channels_a, Tensor& da, Tensor& db);

} // namespace das::hdl
