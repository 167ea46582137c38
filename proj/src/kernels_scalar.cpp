#include "advlab/kernels.hpp"

#include <cmath>

// Reference backend. The comparison forms below ((x > 0) ? x : 0 etc.) are
// chosen to match the vector min/max instruction semantics on x86 and
// aarch64, so SIMD backends can be held to bitwise equality.

namespace advlab::kernels {
namespace {

double dot_(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double l2sq_diff_(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double linf_diff_(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (d > m) m = d;
  }
  return m;
}

void axpy_(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void add_(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void clamp01_(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (x[i] > 0.0) ? x[i] : 0.0;
    x[i] = (t < 1.0) ? t : 1.0;
  }
}

void relu_(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] > 0.0) ? x[i] : 0.0;
}

void relu_mask_(const double* pre, const double* g, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (pre[i] > 0.0) ? g[i] : 0.0;
}

void signed_step_(const double* x, const double* g, double eps, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double s = (g[i] > 0.0) ? 1.0 : ((g[i] < 0.0) ? -1.0 : 0.0);
    out[i] = x[i] + eps * s;
  }
}

void project_box_(const double* lo, const double* hi, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (x[i] > lo[i]) ? x[i] : lo[i];
    x[i] = (t < hi[i]) ? t : hi[i];
  }
}

const Ops kScalarOps = {
    "scalar", dot_,   sum_,  l2sq_diff_, linf_diff_,   axpy_,
    scale_,   add_,   sub_,  mul_,       clamp01_,     relu_,
    relu_mask_, signed_step_, project_box_,
};

}  // namespace

const Ops& scalar() { return kScalarOps; }

}  // namespace advlab::kernels
