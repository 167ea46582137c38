#include "advlab/tensor.hpp"

#include <cmath>
#include <stdexcept>

#include "advlab/kernels.hpp"

namespace advlab {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return shape.empty() ? 0 : n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> s)
    : shape(std::move(s)), data(shape_numel(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != shape_numel(shape))
    throw std::invalid_argument("tensor data size " + std::to_string(data.size()) +
                                " does not match shape " + shape_to_string(shape));
}

Tensor Tensor::full(std::vector<std::size_t> s, double v) {
  Tensor t(std::move(s));
  for (double& x : t.data) x = v;
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

double l2_norm_diff(const Tensor& a, const Tensor& b) {
  return std::sqrt(kernels::active().l2sq_diff(a.data.data(), b.data.data(), a.numel()));
}

double linf_norm_diff(const Tensor& a, const Tensor& b) {
  return kernels::active().linf_diff(a.data.data(), b.data.data(), a.numel());
}

}  // namespace advlab
