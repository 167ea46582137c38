#include "advlab/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include <cmath>

// 4-lane double kernels. Elementwise ops round identically to the scalar
// backend; reductions use one vector accumulator plus a scalar tail, so
// results differ from scalar only by summation order.

namespace advlab::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sum_(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}

double l2sq_diff_(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double r = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    r += d * d;
  }
  return r;
}

double linf_diff_(const double* a, const double* b, std::size_t n) {
  const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    m = _mm256_max_pd(m, _mm256_and_pd(d, absmask));
  }
  double lanes[4];
  _mm256_storeu_pd(lanes, m);
  double r = lanes[0];
  for (int k = 1; k < 4; ++k)
    if (lanes[k] > r) r = lanes[k];
  for (; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (d > r) r = d;
  }
  return r;
}

void axpy_(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_add_pd(_mm256_loadu_pd(y + i),
                              _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, t);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_(double alpha, double* x, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void add_(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void clamp01_(double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_min_pd(_mm256_max_pd(_mm256_loadu_pd(x + i), zero), one));
  for (; i < n; ++i) {
    const double t = (x[i] > 0.0) ? x[i] : 0.0;
    x[i] = (t < 1.0) ? t : 1.0;
  }
}

void relu_(const double* x, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) out[i] = (x[i] > 0.0) ? x[i] : 0.0;
}

void relu_mask_(const double* pre, const double* g, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d keep = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_and_pd(_mm256_loadu_pd(g + i), keep));
  }
  for (; i < n; ++i) out[i] = (pre[i] > 0.0) ? g[i] : 0.0;
}

void signed_step_(const double* x, const double* g, double eps, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d ev = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d gv = _mm256_loadu_pd(g + i);
    __m256d pos = _mm256_and_pd(_mm256_cmp_pd(gv, zero, _CMP_GT_OQ), one);
    __m256d neg = _mm256_and_pd(_mm256_cmp_pd(gv, zero, _CMP_LT_OQ), one);
    __m256d s = _mm256_sub_pd(pos, neg);
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(ev, s)));
  }
  for (; i < n; ++i) {
    const double s = (g[i] > 0.0) ? 1.0 : ((g[i] < 0.0) ? -1.0 : 0.0);
    out[i] = x[i] + eps * s;
  }
}

void project_box_(const double* lo, const double* hi, double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_max_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(lo + i));
    _mm256_storeu_pd(x + i, _mm256_min_pd(t, _mm256_loadu_pd(hi + i)));
  }
  for (; i < n; ++i) {
    const double t = (x[i] > lo[i]) ? x[i] : lo[i];
    x[i] = (t < hi[i]) ? t : hi[i];
  }
}

const Ops kAvx2Ops = {
    "avx2", dot_,   sum_,  l2sq_diff_, linf_diff_,   axpy_,
    scale_, add_,   sub_,  mul_,       clamp01_,     relu_,
    relu_mask_, signed_step_, project_box_,
};

}  // namespace

const Ops* avx2_ops() { return &kAvx2Ops; }

}  // namespace advlab::kernels

#else

namespace advlab::kernels {
const Ops* avx2_ops() { return nullptr; }
}

#endif
