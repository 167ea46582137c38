#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "advlab/ada.hpp"
#include "advlab/dataset.hpp"
#include "advlab/metrics.hpp"
#include "advlab/rng.hpp"

using namespace advlab;

namespace {

// exhaustive pair-count oracle: P(attack > clean) + 0.5 P(equal)
double mann_whitney(const std::vector<double>& a, const std::vector<double>& c) {
  double u = 0.0;
  for (double x : a)
    for (double y : c) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u / (static_cast<double>(a.size()) * static_cast<double>(c.size()));
}

}  // namespace

TEST_CASE("roc endpoints and extreme separations") {
  auto sep = metrics::roc({5.0, 6.0, 7.0}, {1.0, 2.0, 3.0});
  CHECK(sep.auc == doctest::Approx(1.0));
  CHECK(sep.points.front() == std::make_pair(0.0, 0.0));
  CHECK(sep.points.back() == std::make_pair(1.0, 1.0));

  auto same = metrics::roc({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
  CHECK(same.auc == doctest::Approx(0.5));

  auto hand = metrics::roc({3.0, 2.0}, {1.0, 0.0});
  CHECK(hand.auc == doctest::Approx(mann_whitney({3, 2}, {1, 0})));
}

TEST_CASE("roc AUC equals the Mann-Whitney statistic, ties included") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> a, c;
    const std::size_t na = 5 + rng.below(40), nc = 5 + rng.below(40);
    for (std::size_t i = 0; i < na; ++i) a.push_back(static_cast<double>(rng.below(10)));
    for (std::size_t i = 0; i < nc; ++i) c.push_back(static_cast<double>(rng.below(10)));
    auto curve = metrics::roc(a, c);
    CHECK(curve.auc == doctest::Approx(mann_whitney(a, c)).epsilon(1e-9));
    // monotone sweep
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      CHECK(curve.points[i].first >= curve.points[i - 1].first - 1e-15);
      CHECK(curve.points[i].second >= curve.points[i - 1].second - 1e-15);
    }
  }
}

TEST_CASE("conditional correct rate: thresholds and brute-force oracle") {
  auto ds = data::to_unit_box(data::synth_gaussians(3, 6, 40, 5.0, 33), 0.1);
  auto net = nn::make_mlp(6, {10}, 3, 3);
  nn::TrainConfig cfg;
  cfg.epochs = 40;
  cfg.seed = 4;
  nn::train(net, ds, cfg);
  auto score = [&](const Tensor& x) { return ada::confidence_score(net, x); };

  auto all = metrics::conditional_correct_rate(net, score, 1e18, ds);
  CHECK(all.kept == ds.size());
  CHECK(all.rate == doctest::Approx(nn::accuracy(net, ds)));

  auto none = metrics::conditional_correct_rate(net, score, -1.0, ds);
  CHECK(none.kept == 0);  // sentinel: no samples below threshold

  // brute-force filter-then-score oracle at a mid threshold
  const double thr = 0.05;
  std::size_t kept = 0, correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (score(ds.samples[i]) > thr) continue;
    ++kept;
    if (nn::forward(net, ds.samples[i]).decision == ds.labels[i]) ++correct;
  }
  auto mid = metrics::conditional_correct_rate(net, score, thr, ds);
  CHECK(mid.kept == kept);
  if (kept > 0)
    CHECK(mid.rate == doctest::Approx(static_cast<double>(correct) / kept).epsilon(1e-12));
}

TEST_CASE("effective success curve: degenerate strengths and thresholds") {
  auto ds = data::to_unit_box(data::synth_gaussians(3, 6, 50, 5.0, 60), 0.1);
  auto net = nn::make_mlp(6, {12}, 3, 5);
  nn::TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 6;
  nn::train(net, ds, cfg);
  auto score = [&](const Tensor& x) { return ada::confidence_score(net, x); };

  metrics::SweepConfig sc;
  sc.kind = metrics::SweepAttack::Fgsm;
  sc.strengths = {0.0, 0.1};
  auto curve = metrics::effective_success_curve(net, score, 0.5, ds, sc);
  REQUIRE(curve.size() == 2);
  // eps = 0: sources are correctly classified, so no misclassification
  CHECK(curve[0].misclassify_rate == 0.0);
  CHECK(curve[0].effective_rate == 0.0);

  // threshold +inf: effective rate equals the raw misclassification rate
  auto open_gate =
      metrics::effective_success_curve(net, score, std::numeric_limits<double>::infinity(), ds, sc);
  CHECK(open_gate[1].effective_rate == doctest::Approx(open_gate[1].misclassify_rate));
  // effective rate never exceeds the misclassification rate
  for (const auto& pt : curve) CHECK(pt.effective_rate <= pt.misclassify_rate + 1e-15);
}

TEST_CASE("adv_train with eps=0 is bit-identical to plain training") {
  auto ds = data::to_unit_box(data::synth_gaussians(3, 6, 40, 5.0, 71), 0.1);
  nn::TrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 16;
  cfg.lr = 0.1;
  cfg.seed = 21;

  auto plain = nn::make_mlp(6, {10}, 3, 8);
  nn::train(plain, ds, cfg);

  auto robust = nn::make_mlp(6, {10}, 3, 8);
  metrics::AdvTrainConfig ac;
  ac.train = cfg;
  ac.pgd_eps = 0.0;
  metrics::adv_train(robust, ds, ac);

  for (std::size_t li = 0; li < plain.layers.size(); ++li) {
    CHECK(robust.layers[li].weights.data == plain.layers[li].weights.data);
    CHECK(robust.layers[li].bias.data == plain.layers[li].bias.data);
  }
}

TEST_CASE("adversarial training beats plain training under PGD attack") {
  auto all = data::to_unit_box(
      data::synth_manifold_gaussians(3, 3, 12, 150, 6.0, 0.15, 83), 0.1);
  auto [trainset, test] = data::split(all, 0.7, 2);
  nn::TrainConfig cfg;
  cfg.epochs = 60;
  cfg.lr = 0.1;
  cfg.seed = 31;

  auto plain = nn::make_mlp(12, {16}, 3, 9);
  nn::train(plain, trainset, cfg);

  auto robust = nn::make_mlp(12, {16}, 3, 9);
  metrics::AdvTrainConfig ac;
  ac.train = cfg;
  ac.pgd_eps = 0.08;
  ac.pgd_steps = 5;
  ac.pgd_alpha = 0.03;
  metrics::adv_train(robust, trainset, ac);

  auto attacked_accuracy = [&](const nn::Network& net, double eps) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      auto ar = attack::pgd(net, test.samples[i], test.labels[i], eps, 8, eps / 3.0);
      if (ar.decision == test.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / test.size();
  };

  const double plain_clean = nn::accuracy(plain, test);
  const double robust_clean = nn::accuracy(robust, test);
  INFO("clean plain ", plain_clean, " robust ", robust_clean);
  // robustness shows across the attacked grid
  int wins = 0;
  for (double eps : {0.04, 0.08, 0.12}) {
    const double pa = attacked_accuracy(plain, eps);
    const double ra = attacked_accuracy(robust, eps);
    INFO("eps ", eps, ": plain ", pa, " robust ", ra);
    if (ra >= pa) ++wins;
  }
  CHECK(wins == 3);
  // clean accuracy moves in the degradation direction (at most +1 point)
  CHECK(robust_clean <= plain_clean + 0.01);
}
