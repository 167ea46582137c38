#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace advlab {

// Dense row-major n-dimensional array of doubles; the universal value
// carrier for patterns, activations, parameters and estimated triggers.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<std::size_t> s, double v);

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  // 2-d / 3-d indexing for image-shaped tensors ([H,W] or [C,H,W]).
  double& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }
  double& at3(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * shape[1] + y) * shape[2] + x];
  }
  double at3(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * shape[1] + y) * shape[2] + x];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

double l2_norm_diff(const Tensor& a, const Tensor& b);
double linf_norm_diff(const Tensor& a, const Tensor& b);

// Simple row-major (n x d) sample matrix used by density fitting and the
// feature-space defenses.
struct FeatureRows {
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureRows() = default;
  explicit FeatureRows(std::size_t d) : cols(d) {}

  std::size_t rows() const { return cols == 0 ? 0 : data.size() / cols; }
  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  void push_row(const double* p) { data.insert(data.end(), p, p + cols); }
  void push_row(const std::vector<double>& v) { push_row(v.data()); }
};

}  // namespace advlab
