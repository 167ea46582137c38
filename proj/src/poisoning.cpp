#include "advlab/poisoning.hpp"

#include <cmath>
#include <stdexcept>

#include "advlab/kernels.hpp"
#include "advlab/rng.hpp"

namespace advlab::poison {

void validate(const BackdoorSpec& spec) {
  if (spec.source_class == spec.target_class)
    throw std::invalid_argument("backdoor spec: source and target class must differ");
  switch (spec.kind) {
    case PatternKind::SinglePixel:
      if (spec.delta.empty()) throw std::invalid_argument("backdoor spec: empty delta");
      for (double d : spec.delta)
        if (!std::isfinite(d)) throw std::invalid_argument("backdoor spec: delta not finite");
      break;
    case PatternKind::AdditiveGlobal:
      if (spec.eps < 0.0) throw std::invalid_argument("backdoor spec: eps must be >= 0");
      if (spec.pattern.numel() == 0)
        throw std::invalid_argument("backdoor spec: missing pattern");
      break;
    case PatternKind::Patch:
      if (!spec.patch.same_shape(spec.mask))
        throw std::invalid_argument("backdoor spec: patch/mask shape mismatch");
      for (double m : spec.mask.data)
        if (m != 0.0 && m != 1.0)
          throw std::invalid_argument("backdoor spec: mask must be binary");
      break;
  }
}

Tensor embed(const Tensor& x, const BackdoorSpec& spec) {
  validate(spec);
  Tensor out = x;
  switch (spec.kind) {
    case PatternKind::SinglePixel: {
      if (x.rank() != 3) throw std::invalid_argument("embed: single_pixel expects [C,H,W]");
      const std::size_t C = x.shape[0];
      if (spec.py >= x.shape[1] || spec.px >= x.shape[2])
        throw std::invalid_argument("embed: pixel position outside image");
      for (std::size_t c = 0; c < C; ++c) {
        const double d = spec.delta[spec.delta.size() == 1 ? 0 : c];
        out.at3(c, spec.py, spec.px) += d;
      }
      break;
    }
    case PatternKind::AdditiveGlobal: {
      if (!spec.pattern.same_shape(x))
        throw std::invalid_argument("embed: pattern shape mismatch");
      kernels::active().axpy(spec.eps, spec.pattern.data.data(), out.data.data(), out.numel());
      break;
    }
    case PatternKind::Patch: {
      if (!spec.patch.same_shape(x))
        throw std::invalid_argument("embed: patch shape mismatch");
      for (std::size_t i = 0; i < out.numel(); ++i) {
        const double m = spec.mask.data[i];
        out.data[i] = out.data[i] * (1.0 - m) + spec.patch.data[i] * m;
      }
      break;
    }
  }
  kernels::active().clamp01(out.data.data(), out.numel());
  return out;
}

Tensor chessboard_pattern(const std::vector<std::size_t>& shape) {
  if (shape.size() != 3) throw std::invalid_argument("chessboard_pattern: expects [C,H,W]");
  Tensor v(shape);
  for (std::size_t c = 0; c < shape[0]; ++c)
    for (std::size_t y = 0; y < shape[1]; ++y)
      for (std::size_t x = 0; x < shape[2]; ++x)
        v.at3(c, y, x) = ((y + x) % 2 == 0) ? 1.0 : -1.0;
  return v;
}

PoisonResult poison_trainset(const data::Dataset& ds, const BackdoorSpec& spec,
                             std::uint64_t seed) {
  validate(spec);
  PoisonResult res;
  res.dataset = ds;
  res.dataset.provenance = data::Provenance::Poisoned;
  if (spec.poison_count == 0) {
    res.dataset.provenance = ds.provenance;
    return res;
  }
  std::vector<std::size_t> src = ds.indices_of_class(spec.source_class);
  if (src.size() < spec.poison_count)
    throw std::invalid_argument("poison_trainset: source class has " +
                                std::to_string(src.size()) + " samples, need " +
                                std::to_string(spec.poison_count));
  Rng rng(seed);
  rng.shuffle(src);
  for (std::size_t i = 0; i < spec.poison_count; ++i) {
    res.poison_indices.push_back(res.dataset.size());
    res.dataset.push(embed(ds.samples[src[i]], spec), spec.target_class);
  }
  return res;
}

data::Dataset backdoor_test_set(const data::Dataset& clean_test, const BackdoorSpec& spec) {
  validate(spec);
  data::Dataset out;
  out.class_count = clean_test.class_count;
  out.provenance = data::Provenance::Poisoned;
  for (std::size_t i = 0; i < clean_test.size(); ++i) {
    if (clean_test.labels[i] != spec.source_class) continue;
    out.push(embed(clean_test.samples[i], spec), clean_test.labels[i]);
  }
  return out;
}

double attack_success_rate(const nn::Network& net, const data::Dataset& backdoor_test,
                           int target_class) {
  if (backdoor_test.size() == 0) return 0.0;
  std::size_t hit = 0;
  for (const Tensor& x : backdoor_test.samples)
    if (nn::forward(net, x).decision == target_class) ++hit;
  return static_cast<double>(hit) / static_cast<double>(backdoor_test.size());
}

}  // namespace advlab::poison
