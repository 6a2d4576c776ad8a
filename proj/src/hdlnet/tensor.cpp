#include "das/hdlnet/tensor.hpp"

#include "das/common.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace das::hdl {

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)),
      data_(std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>()), fill)
{
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const
{
    std::string s;
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(shape_[i]);
    }
    return s;
}

std::size_t ModelParams::add(std::string name, Tensor value)
{
    tensors_.push_back({std::move(name), std::move(value)});
    return tensors_.size() - 1;
}

const Tensor& ModelParams::find(const std::string& name) const
{
    for (const auto& t : tensors_)
        if (t.name == name) return t.value;
    throw ConfigError("no parameter tensor named " + name);
}

std::size_t ModelParams::param_count() const
{
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.value.size();
    return n;
}

ModelParams ModelParams::zeros_like() const
{
    ModelParams out;
    for (const auto& t : tensors_) out.add(t.name, Tensor(t.value.shape(), 0.0));
    return out;
}

void ModelParams::set_zero()
{
    for (auto& t : tensors_) t.value.fill(0.0);
}

void ModelParams::accumulate(const ModelParams& other)
{
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        auto dst = tensors_[i].value.span();
        const auto src = other.tensors_[i].value.span();
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
}

void ModelParams::scale(double s)
{
    for (auto& t : tensors_)
        for (double& v : t.value.span()) v *= s;
}

bool ModelParams::same_layout(const ModelParams& other) const
{
    if (tensors_.size() != other.tensors_.size()) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i)
        if (tensors_[i].name != other.tensors_[i].name
            || !tensors_[i].value.same_shape(other.tensors_[i].value))
            return false;
    return true;
}

} // namespace das::hdl
