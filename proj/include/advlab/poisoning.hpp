#pragma once

#include <cstdint>
#include <vector>

#include "advlab/dataset.hpp"
#include "advlab/network.hpp"
#include "advlab/tensor.hpp"

namespace advlab::poison {

enum class PatternKind : std::uint32_t { SinglePixel = 0, AdditiveGlobal = 1, Patch = 2 };

struct BackdoorSpec {
  PatternKind kind = PatternKind::SinglePixel;

  // SinglePixel: position plus per-channel delta (one entry broadcasts).
  std::size_t py = 0, px = 0;
  std::vector<double> delta{0.25};

  // AdditiveGlobal: x + eps * pattern, clipped.
  Tensor pattern;
  double eps = 0.0;

  // Patch: x*(1-mask) + patch*mask, mask binary.
  Tensor patch;
  Tensor mask;

  int source_class = 0;
  int target_class = 1;
  std::size_t poison_count = 0;
};

void validate(const BackdoorSpec& spec);

// Applies the backdoor pattern; output stays in [0,1].
Tensor embed(const Tensor& x, const BackdoorSpec& spec);

// The +1/-1 alternating chess-board pattern, replicated on every channel.
Tensor chessboard_pattern(const std::vector<std::size_t>& shape);

struct PoisonResult {
  data::Dataset dataset;                 // original + appended poisons
  std::vector<std::size_t> poison_indices;  // indices into `dataset`
};

// Copies poison_count random source-class samples, embeds the pattern,
// relabels them to the target class and appends them.
// Throws if the source class has fewer than poison_count samples.
PoisonResult poison_trainset(const data::Dataset& ds, const BackdoorSpec& spec,
                             std::uint64_t seed);

// Every source-class test sample embedded, original labels retained.
data::Dataset backdoor_test_set(const data::Dataset& clean_test, const BackdoorSpec& spec);

// Fraction of the given samples decided as the spec's target class.
double attack_success_rate(const nn::Network& net, const data::Dataset& backdoor_test,
                           int target_class);

}  // namespace advlab::poison
