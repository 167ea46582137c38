#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "advlab/attacks.hpp"
#include "advlab/dataset.hpp"
#include "advlab/re.hpp"
#include "advlab/rng.hpp"

using namespace advlab;

namespace {

struct ReBed {
  nn::Network victim;
  data::Dataset seed_set;
  data::Dataset eval_set;
};

ReBed make_bed(std::size_t seed_count, double separation = 6.0, std::uint64_t seed = 900) {
  ReBed bed;
  auto all = data::to_unit_box(
      data::synth_manifold_gaussians(4, 4, 16, 200, separation, 0.15, seed), 0.1);
  auto [trainset, rest] = data::split(all, 0.5, 3);
  auto [pool, eval] = data::split(rest, 0.7, 4);
  bed.victim = nn::make_mlp(16, {24, 16}, 4, 51);
  nn::TrainConfig cfg;
  cfg.epochs = 80;
  cfg.lr = 0.1;
  cfg.seed = 42;
  nn::train(bed.victim, trainset, cfg);
  auto [s0, spare] = data::split(pool, static_cast<double>(seed_count) / pool.size(), 9);
  bed.seed_set = std::move(s0);
  bed.eval_set = std::move(eval);
  return bed;
}

}  // namespace

TEST_CASE("query schedule doubles exactly before dedup") {
  auto bed = make_bed(35);
  re::ReConfig rc;
  rc.stages = 4;
  rc.lambda = 0.37;
  rc.surrogate_hidden = {24};
  rc.surrogate_train.epochs = 20;
  rc.seed = 5;
  auto res = re::re_attack(bed.victim, bed.seed_set, rc);
  const std::size_t s0 = bed.seed_set.size();
  REQUIRE(res.log.new_before_dedup.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    const std::size_t expect = k == 0 ? s0 : (s0 << (k - 1));
    CHECK(res.log.new_before_dedup[k] == expect);
    CHECK(res.log.stage_queries[k].size() == expect);
    CHECK(res.log.stage_decisions[k].size() == expect);
  }
}

TEST_CASE("lambda zero reproduces the current set and dedup drops everything") {
  auto bed = make_bed(30);
  re::ReConfig rc;
  rc.stages = 2;
  rc.lambda = 0.0;
  rc.surrogate_hidden = {24};
  rc.surrogate_train.epochs = 10;
  rc.seed = 7;
  auto res = re::re_attack(bed.victim, bed.seed_set, rc);
  // every crafted query duplicates an existing sample
  CHECK(res.log.dedup_dropped[1] == res.log.new_before_dedup[1]);
  CHECK(res.log.dedup_dropped[2] == res.log.new_before_dedup[2]);
  // the new queries are bitwise the originating samples
  for (std::size_t i = 0; i < bed.seed_set.size(); ++i)
    CHECK(res.log.stage_queries[1][i].data == res.log.stage_queries[0][i].data);
}

TEST_CASE("surrogate agreement with the victim grows across stages") {
  auto bed = make_bed(40, 4.5, 901);
  re::ReConfig rc;
  rc.stages = 6;
  rc.lambda = 0.37;
  rc.surrogate_hidden = {24};
  rc.surrogate_train.epochs = 60;
  rc.surrogate_train.batch_size = 16;
  rc.surrogate_train.lr = 0.1;
  rc.seed = 6;
  auto res = re::re_attack(bed.victim, bed.seed_set, rc, &bed.eval_set);
  REQUIRE(res.stage_agreement.size() == 7);
  int nondecreasing = 0;
  for (std::size_t i = 1; i < res.stage_agreement.size(); ++i)
    if (res.stage_agreement[i] >= res.stage_agreement[i - 1] - 1e-12) ++nondecreasing;
  INFO("agreement ", res.stage_agreement.front(), " -> ", res.stage_agreement.back());
  CHECK(nondecreasing >= 4);
  CHECK(res.stage_agreement.back() > res.stage_agreement.front());
}

TEST_CASE("re_attack is deterministic given seeds") {
  auto bed = make_bed(30);
  re::ReConfig rc;
  rc.stages = 2;
  rc.lambda = 0.2;
  rc.surrogate_hidden = {24};
  rc.surrogate_train.epochs = 10;
  rc.seed = 11;
  auto a = re::re_attack(bed.victim, bed.seed_set, rc);
  auto b = re::re_attack(bed.victim, bed.seed_set, rc);
  for (std::size_t li = 0; li < a.surrogate.layers.size(); ++li)
    CHECK(a.surrogate.layers[li].weights.data == b.surrogate.layers[li].weights.data);
  for (std::size_t k = 0; k < a.log.stage_queries.size(); ++k)
    CHECK(a.log.stage_decisions[k] == b.log.stage_decisions[k]);
}

TEST_CASE("identity transfer equals direct attack success") {
  auto bed = make_bed(30);
  data::Dataset eval;
  eval.class_count = 4;
  for (std::size_t i = 0; i < 40; ++i) eval.push(bed.eval_set.samples[i], bed.eval_set.labels[i]);

  attack::CwConfig cw;
  cw.c = 4.0;
  cw.iters = 150;
  cw.step = 1e-2;
  auto rates = re::transfer_eval(bed.victim, bed.victim, cw, eval, 77);

  // replicate the target draws to compute the direct success rate
  Rng rng(77);
  std::size_t targeted = 0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const int y = eval.labels[i];
    int t = static_cast<int>(rng.below(4));
    while (t == y) t = static_cast<int>(rng.below(4));
    auto ar = attack::cw_l2(bed.victim, eval.samples[i], t, cw);
    if (ar.decision == t) ++targeted;
  }
  CHECK(rates.targeted ==
        doctest::Approx(static_cast<double>(targeted) / eval.size()).epsilon(1e-12));
  CHECK(rates.untargeted >= rates.targeted);
}

TEST_CASE("membership gate: matched exact queries are randomized MAP-consistently") {
  auto bed = make_bed(30);
  data::Dataset retained;
  retained.class_count = 4;
  for (std::size_t i = 0; i < 50; ++i)
    retained.push(Tensor({16}, bed.eval_set.samples[i].data), bed.eval_set.labels[i]);

  const Tensor& q = retained.samples[7];
  auto raw = nn::forward(bed.victim, q);
  for (std::uint64_t s = 1; s <= 200; ++s) {
    auto gr = re::membership_gate(bed.victim, q, retained, 0.0, s);
    CHECK(gr.matched);
    CHECK(gr.decision == raw.decision);
    double sum = 0.0;
    double mx = -1.0;
    int amax = -1;
    for (std::size_t c = 0; c < gr.confidence.size(); ++c) {
      CHECK(gr.confidence[c] >= 0.0);
      sum += gr.confidence[c];
      if (gr.confidence[c] > mx) {
        mx = gr.confidence[c];
        amax = static_cast<int>(c);
      }
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(amax == raw.decision);
    // max entry itself is preserved exactly
    CHECK(gr.confidence[static_cast<std::size_t>(raw.decision)] ==
          raw.posterior.data[static_cast<std::size_t>(raw.decision)]);
  }
}

TEST_CASE("membership gate passes far queries through bit-identically") {
  auto bed = make_bed(30);
  data::Dataset retained;
  retained.class_count = 4;
  for (std::size_t i = 0; i < 30; ++i)
    retained.push(Tensor({16}, bed.eval_set.samples[i].data), bed.eval_set.labels[i]);

  Tensor far = Tensor::full({16}, 0.0);  // corner of the box, far from data
  auto raw = nn::forward(bed.victim, far);
  auto gr = re::membership_gate(bed.victim, far, retained, 0.05, 3);
  CHECK(!gr.matched);
  CHECK(gr.confidence == raw.posterior.data);
  CHECK(gr.decision == raw.decision);
}

TEST_CASE("membership gate honors a feature mask") {
  auto bed = make_bed(30);
  data::Dataset retained;
  retained.class_count = 4;
  retained.push(Tensor({16}, bed.eval_set.samples[0].data), bed.eval_set.labels[0]);

  // query differs only outside the mask: matched under the mask
  Tensor q = retained.samples[0];
  q.data[15] = std::min(1.0, q.data[15] + 0.5);
  std::vector<std::size_t> mask;
  for (std::size_t j = 0; j < 15; ++j) mask.push_back(j);
  auto gr = re::membership_gate(bed.victim, q, retained, 1e-9, 4, &mask);
  CHECK(gr.matched);
  auto gr_full = re::membership_gate(bed.victim, q, retained, 1e-9, 4);
  CHECK(!gr_full.matched);
}
