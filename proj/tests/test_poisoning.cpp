#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "advlab/dataset.hpp"
#include "advlab/network.hpp"
#include "advlab/poisoning.hpp"

using namespace advlab;

namespace {

poison::BackdoorSpec pixel_spec(std::size_t py, std::size_t px, double delta, int s, int t,
                                std::size_t n) {
  poison::BackdoorSpec spec;
  spec.kind = poison::PatternKind::SinglePixel;
  spec.py = py;
  spec.px = px;
  spec.delta = {delta};
  spec.source_class = s;
  spec.target_class = t;
  spec.poison_count = n;
  return spec;
}

}  // namespace

TEST_CASE("embed with zero delta leaves the pattern unchanged") {
  Tensor x({1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) x.data[i] = 0.05 * static_cast<double>(i);
  auto out = poison::embed(x, pixel_spec(1, 2, 0.0, 0, 1, 0));
  CHECK(out.data == x.data);
}

TEST_CASE("embed clips a 0.25 bump on a 0.9 pixel to exactly 1") {
  Tensor x = Tensor::full({3, 32, 32}, 0.9);
  auto spec = pixel_spec(9, 18, 0.25, 0, 1, 0);
  auto out = poison::embed(x, spec);
  for (std::size_t c = 0; c < 3; ++c) CHECK(out.at3(c, 9, 18) == 1.0);
  // everything else untouched
  CHECK(out.at3(0, 9, 17) == 0.9);
  CHECK(out.at3(2, 0, 0) == 0.9);
}

TEST_CASE("chess-board embedding at eps=1/255 moves nothing farther than 1/255") {
  poison::BackdoorSpec spec;
  spec.kind = poison::PatternKind::AdditiveGlobal;
  spec.pattern = poison::chessboard_pattern({1, 6, 6});
  spec.eps = 1.0 / 255.0;
  spec.source_class = 0;
  spec.target_class = 1;

  Tensor x({1, 6, 6});
  for (std::size_t i = 0; i < 36; ++i) x.data[i] = 0.5 + 0.01 * static_cast<double>(i % 7);
  auto out = poison::embed(x, spec);
  CHECK(linf_norm_diff(out, x) <= 1.0 / 255.0 + 1e-15);
  // alternation: neighbors move in opposite directions
  CHECK(out.at3(0, 0, 0) - x.at3(0, 0, 0) == doctest::Approx(1.0 / 255.0));
  CHECK(out.at3(0, 0, 1) - x.at3(0, 0, 1) == doctest::Approx(-1.0 / 255.0));
}

TEST_CASE("patch embedding replaces exactly the masked region") {
  poison::BackdoorSpec spec;
  spec.kind = poison::PatternKind::Patch;
  spec.patch = Tensor::full({1, 4, 4}, 0.8);
  spec.mask = Tensor({1, 4, 4});
  spec.mask.at3(0, 1, 1) = 1.0;
  spec.mask.at3(0, 1, 2) = 1.0;
  spec.source_class = 0;
  spec.target_class = 1;

  Tensor x = Tensor::full({1, 4, 4}, 0.2);
  auto out = poison::embed(x, spec);
  CHECK(out.at3(0, 1, 1) == doctest::Approx(0.8));
  CHECK(out.at3(0, 1, 2) == doctest::Approx(0.8));
  CHECK(out.at3(0, 0, 0) == doctest::Approx(0.2));
}

TEST_CASE("poison_trainset appends relabeled copies and records their indices") {
  auto ds = data::synth_blob_images(3, 6, 20, 33);
  auto spec = pixel_spec(2, 3, 0.25, 0, 2, 10);
  auto res = poison::poison_trainset(ds, spec, 5);

  CHECK(res.dataset.size() == ds.size() + 10);
  CHECK(res.poison_indices.size() == 10);
  for (std::size_t idx : res.poison_indices) {
    CHECK(idx >= ds.size());
    CHECK(res.dataset.labels[idx] == 2);  // all relabeled to target
  }
  // removing listed indices restores the original exactly
  data::Dataset restored;
  restored.class_count = res.dataset.class_count;
  for (std::size_t i = 0; i < res.dataset.size(); ++i) {
    if (std::find(res.poison_indices.begin(), res.poison_indices.end(), i) !=
        res.poison_indices.end())
      continue;
    restored.push(res.dataset.samples[i], res.dataset.labels[i]);
  }
  REQUIRE(restored.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(restored.samples[i].data == ds.samples[i].data);
    CHECK(restored.labels[i] == ds.labels[i]);
  }
  // embedded samples stay in [0,1]
  for (std::size_t idx : res.poison_indices)
    for (double v : res.dataset.samples[idx].data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
}

TEST_CASE("poison_trainset with n=0 is a no-op; oversubscription errors") {
  auto ds = data::synth_blob_images(2, 6, 5, 3);
  auto none = poison::poison_trainset(ds, pixel_spec(0, 0, 0.2, 0, 1, 0), 1);
  CHECK(none.dataset.size() == ds.size());
  CHECK(none.poison_indices.empty());

  CHECK_THROWS_AS(poison::poison_trainset(ds, pixel_spec(0, 0, 0.2, 0, 1, 6), 1),
                  std::invalid_argument);
}

TEST_CASE("identical spec and seed give bit-identical poisons") {
  auto ds = data::synth_blob_images(2, 6, 15, 21);
  auto spec = pixel_spec(1, 1, 0.3, 0, 1, 5);
  auto a = poison::poison_trainset(ds, spec, 9);
  auto b = poison::poison_trainset(ds, spec, 9);
  REQUIRE(a.poison_indices == b.poison_indices);
  for (std::size_t idx : a.poison_indices)
    CHECK(a.dataset.samples[idx].data == b.dataset.samples[idx].data);
}

TEST_CASE("backdoor_test_set embeds every source-class sample and keeps labels") {
  auto ds = data::synth_blob_images(3, 6, 12, 8);
  auto spec = pixel_spec(3, 3, 0.25, 1, 0, 0);
  auto bd = poison::backdoor_test_set(ds, spec);
  CHECK(bd.size() == 12);
  for (int y : bd.labels) CHECK(y == 1);  // original labels retained

  // empty source class gives an empty set
  auto spec2 = pixel_spec(3, 3, 0.25, 2, 0, 0);
  data::Dataset only01 = ds;
  only01.samples.clear();
  only01.labels.clear();
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.labels[i] != 2) only01.push(ds.samples[i], ds.labels[i]);
  auto empty = poison::backdoor_test_set(only01, spec2);
  CHECK(empty.size() == 0);
}

TEST_CASE("backdoor spec validation rejects s == t and non-binary masks") {
  auto bad = pixel_spec(0, 0, 0.1, 1, 1, 0);
  CHECK_THROWS_AS(poison::validate(bad), std::invalid_argument);

  poison::BackdoorSpec patch;
  patch.kind = poison::PatternKind::Patch;
  patch.patch = Tensor::full({1, 2, 2}, 0.5);
  patch.mask = Tensor::full({1, 2, 2}, 0.5);  // not binary
  patch.source_class = 0;
  patch.target_class = 1;
  CHECK_THROWS_AS(poison::validate(patch), std::invalid_argument);
}
