#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace das::hdl {

/// Dense row-major array of doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> span() { return data_; }
    std::span<const double> span() const { return data_; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    void fill(double v);
    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_string() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

struct NamedTensor {
    std::string name;
    Tensor value;
};

/// Ordered, named collection of parameter (or gradient) tensors.
class ModelParams {
public:
    std::size_t add(std::string name, Tensor value);

    std::size_t size() const { return tensors_.size(); }
    NamedTensor& operator[](std::size_t i) { return tensors_[i]; }
    const NamedTensor& operator[](std::size_t i) const { return tensors_[i]; }
    Tensor& tensor(std::size_t i) { return tensors_[i].value; }
    const Tensor& tensor(std::size_t i) const { return tensors_[i].value; }
    const Tensor& find(const std::string& name) const;

    auto begin() { return tensors_.begin(); }
    auto end() { return tensors_.end(); }
    auto begin() const { return tensors_.begin(); }
    auto end() const { return tensors_.end(); }

    std::size_t param_count() const;
    /// Same names and shapes, all values zero.
    ModelParams zeros_like() const;
    void set_zero();
    /// this += other (shapes must match).
    void accumulate(const ModelParams& other);
    void scale(double s);
    bool same_layout(const ModelParams& other) const;

private:
    std::vector<NamedTensor> tensors_;
};

} // namespace das::hdl
