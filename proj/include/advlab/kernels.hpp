#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace advlab::kernels {

// Double-precision kernels behind the hot loops: dense layer mat-vec,
// signed-gradient attack steps, norm computations. The scalar backend is
// the semantic reference. SIMD backends must be bitwise-equal for
// elementwise maps and agree to rounding for reductions; the kernel
// equivalence tests hold them to that.
struct Ops {
  const char* name;

  // reductions (summation order is backend-specific)
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*l2sq_diff)(const double* a, const double* b, std::size_t n);

  // exact elementwise / order-free
  double (*linf_diff)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, double* x, std::size_t n);
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*clamp01)(double* x, std::size_t n);
  void (*relu)(const double* x, double* out, std::size_t n);
  // out[i] = pre[i] > 0 ? g[i] : 0   (ReLU gradient; 0 at the kink)
  void (*relu_mask)(const double* pre, const double* g, double* out, std::size_t n);
  // out[i] = x[i] + eps * sign(g[i]), sign(0) = 0
  void (*signed_step)(const double* x, const double* g, double eps, double* out, std::size_t n);
  // x[i] = min(max(x[i], lo[i]), hi[i])
  void (*project_box)(const double* lo, const double* hi, double* x, std::size_t n);
};

const Ops& scalar();

// Active backend. Defaults to the best available ("auto"); the environment
// variable ADVLAB_KERNELS overrides the default at first use.
const Ops& active();

// Select a backend by name: "auto", "scalar", "avx2", "neon".
// Throws std::invalid_argument if the backend is unknown or unavailable.
void select(const std::string& name);

std::vector<const Ops*> available();

// Convenience wrappers over the active backend for row-major matrices.
// out[r] = dot(m[r,:], x) + (bias ? bias[r] : 0)
void matvec(const double* m, std::size_t rows, std::size_t cols,
            const double* x, const double* bias, double* out);
// out[c] += sum_r g[r] * m[r,c]   (transpose apply, accumulating)
void matvec_t_acc(const double* m, std::size_t rows, std::size_t cols,
                  const double* g, double* out);

}  // namespace advlab::kernels
