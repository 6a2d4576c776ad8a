#pragma once

#include "das/hdlnet/tensor.hpp"

#include <cstddef>
#include <vector>

namespace das::hdl {

/// Parameters of one LSTM layer followed by a linear dense layer applied at
/// every step. Gate order in the stacked rows is input, forget, cell, output.
struct LstmWeights {
    const Tensor* w = nullptr;       ///< [4H, F]
    const Tensor* u = nullptr;       ///< [4H, H]
    const Tensor* b = nullptr;       ///< [4H]
    const Tensor* dense_w = nullptr; ///< [D, H]
    const Tensor* dense_b = nullptr; ///< [D]
};

struct LstmGrads {
    Tensor* w = nullptr;
    Tensor* u = nullptr;
    Tensor* b = nullptr;
    Tensor* dense_w = nullptr;
    Tensor* dense_b = nullptr;
};

struct LstmCache {
    Tensor input;                 ///< [T, F]
    std::vector<double> gates;    ///< [T, 4H] post-activation i, f, g, o
    std::vector<double> cell;     ///< [T, H]
    std::vector<double> cell_tanh;///< [T, H]
    std::vector<double> hidden;   ///< [T, H]
};

/// Runs the sequence x: [T, F] from zero state. Output is [T, D].
Tensor lstm_dense_forward(const Tensor& x, const LstmWeights& p, LstmCache* cache = nullptr);

/// Backpropagation through time. Accumulates into grads; returns d(x).
Tensor lstm_dense_backward(const LstmCache& cache, const LstmWeights& p, const Tensor& d_out,
                           const LstmGrads& grads);

/// 2-D transpose of a [R, C] tensor.
Tensor transpose2d(const Tensor& t);

} // namespace das::hdl
