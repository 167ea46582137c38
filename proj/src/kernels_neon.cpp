#include "advlab/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

// 2-lane double kernels for aarch64 (NEON is baseline there).

namespace advlab::kernels {
namespace {

inline double hsum(float64x2_t v) { return vgetq_lane_f64(v, 0) + vgetq_lane_f64(v, 1); }

double dot_(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sum_(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}

double l2sq_diff_(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vaddq_f64(acc, vmulq_f64(d, d));
  }
  double r = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    r += d * d;
  }
  return r;
}

double linf_diff_(const double* a, const double* b, std::size_t n) {
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    m = vmaxq_f64(m, vabsq_f64(vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i))));
  double r = vgetq_lane_f64(m, 0);
  if (vgetq_lane_f64(m, 1) > r) r = vgetq_lane_f64(m, 1);
  for (; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (d > r) r = d;
  }
  return r;
}

void axpy_(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(av, vld1q_f64(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_(double alpha, double* x, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(av, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void add_(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void clamp01_(double* x, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t one = vdupq_n_f64(1.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(x + i, vminq_f64(vmaxq_f64(vld1q_f64(x + i), zero), one));
  for (; i < n; ++i) {
    const double t = (x[i] > 0.0) ? x[i] : 0.0;
    x[i] = (t < 1.0) ? t : 1.0;
  }
}

void relu_(const double* x, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmaxq_f64(vld1q_f64(x + i), zero));
  for (; i < n; ++i) out[i] = (x[i] > 0.0) ? x[i] : 0.0;
}

void relu_mask_(const double* pre, const double* g, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    uint64x2_t keep = vcgtq_f64(vld1q_f64(pre + i), zero);
    float64x2_t gv = vld1q_f64(g + i);
    vst1q_f64(out + i, vreinterpretq_f64_u64(
                           vandq_u64(vreinterpretq_u64_f64(gv), keep)));
  }
  for (; i < n; ++i) out[i] = (pre[i] > 0.0) ? g[i] : 0.0;
}

void signed_step_(const double* x, const double* g, double eps, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t ev = vdupq_n_f64(eps);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t gv = vld1q_f64(g + i);
    float64x2_t pos = vreinterpretq_f64_u64(
        vandq_u64(vcgtq_f64(gv, zero), vreinterpretq_u64_f64(one)));
    float64x2_t neg = vreinterpretq_f64_u64(
        vandq_u64(vcltq_f64(gv, zero), vreinterpretq_u64_f64(one)));
    float64x2_t s = vsubq_f64(pos, neg);
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vmulq_f64(ev, s)));
  }
  for (; i < n; ++i) {
    const double s = (g[i] > 0.0) ? 1.0 : ((g[i] < 0.0) ? -1.0 : 0.0);
    out[i] = x[i] + eps * s;
  }
}

void project_box_(const double* lo, const double* hi, double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t t = vmaxq_f64(vld1q_f64(x + i), vld1q_f64(lo + i));
    vst1q_f64(x + i, vminq_f64(t, vld1q_f64(hi + i)));
  }
  for (; i < n; ++i) {
    const double t = (x[i] > lo[i]) ? x[i] : lo[i];
    x[i] = (t < hi[i]) ? t : hi[i];
  }
}

const Ops kNeonOps = {
    "neon", dot_,   sum_,  l2sq_diff_, linf_diff_,   axpy_,
    scale_, add_,   sub_,  mul_,       clamp01_,     relu_,
    relu_mask_, signed_step_, project_box_,
};

}  // namespace

const Ops* neon_ops() { return &kNeonOps; }

}  // namespace advlab::kernels

#else

namespace advlab::kernels {
const Ops* neon_ops() { return nullptr; }
}

#endif
