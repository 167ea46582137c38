#include "advlab/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace advlab::kernels {

const Ops* avx2_ops();
const Ops* neon_ops();

namespace {

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

const Ops* best_available() {
  if (const Ops* a = avx2_ops(); a && avx2_supported()) return a;
  if (const Ops* nops = neon_ops()) return nops;
  return &scalar();
}

const Ops* resolve(const std::string& name) {
  if (name == "auto") return best_available();
  if (name == "scalar") return &scalar();
  if (name == "avx2") {
    const Ops* a = avx2_ops();
    if (a && avx2_supported()) return a;
    throw std::invalid_argument("kernel backend 'avx2' not available on this host");
  }
  if (name == "neon") {
    if (const Ops* nops = neon_ops()) return nops;
    throw std::invalid_argument("kernel backend 'neon' not available on this host");
  }
  throw std::invalid_argument("unknown kernel backend: " + name);
}

const Ops* initial_backend() {
  if (const char* env = std::getenv("ADVLAB_KERNELS")) return resolve(env);
  return best_available();
}

const Ops*& active_slot() {
  static const Ops* slot = initial_backend();
  return slot;
}

}  // namespace

const Ops& active() { return *active_slot(); }

void select(const std::string& name) { active_slot() = resolve(name); }

std::vector<const Ops*> available() {
  std::vector<const Ops*> v{&scalar()};
  if (const Ops* a = avx2_ops(); a && avx2_supported()) v.push_back(a);
  if (const Ops* nops = neon_ops()) v.push_back(nops);
  return v;
}

void matvec(const double* m, std::size_t rows, std::size_t cols,
            const double* x, const double* bias, double* out) {
  const Ops& k = active();
  for (std::size_t r = 0; r < rows; ++r)
    out[r] = k.dot(m + r * cols, x, cols) + (bias ? bias[r] : 0.0);
}

void matvec_t_acc(const double* m, std::size_t rows, std::size_t cols,
                  const double* g, double* out) {
  const Ops& k = active();
  for (std::size_t r = 0; r < rows; ++r) k.axpy(g[r], m + r * cols, out, cols);
}

}  // namespace advlab::kernels
