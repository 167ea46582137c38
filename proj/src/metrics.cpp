#include "advlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "advlab/kernels.hpp"
#include "advlab/rng.hpp"

namespace advlab::metrics {

RocCurve roc(const std::vector<double>& attack_scores,
             const std::vector<double>& clean_scores) {
  if (attack_scores.empty() || clean_scores.empty())
    throw std::invalid_argument("roc: both score lists must be non-empty");
  std::vector<double> thresholds = attack_scores;
  thresholds.insert(thresholds.end(), clean_scores.begin(), clean_scores.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<double>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<double> a = attack_scores, c = clean_scores;
  std::sort(a.begin(), a.end());
  std::sort(c.begin(), c.end());
  const double na = static_cast<double>(a.size());
  const double nc = static_cast<double>(c.size());

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  auto above = [](const std::vector<double>& v, double thr) {
    return static_cast<double>(v.end() - std::upper_bound(v.begin(), v.end(), thr));
  };
  for (double thr : thresholds) {
    curve.thresholds.push_back(thr);
    curve.points.emplace_back(above(c, thr) / nc, above(a, thr) / na);
  }
  if (curve.points.back() != std::make_pair(1.0, 1.0)) curve.points.emplace_back(1.0, 1.0);

  double auc = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& [x0, y0] = curve.points[i - 1];
    const auto& [x1, y1] = curve.points[i];
    auc += (x1 - x0) * 0.5 * (y0 + y1);
  }
  curve.auc = auc;
  return curve;
}

std::vector<SweepPoint> effective_success_curve(const nn::Network& victim,
                                                const ScoreFn& score, double threshold,
                                                const data::Dataset& eval_set,
                                                const SweepConfig& cfg) {
  // attack only correctly classified sources
  std::vector<std::size_t> sources;
  for (std::size_t i = 0; i < eval_set.size(); ++i)
    if (nn::forward(victim, eval_set.samples[i]).decision == eval_set.labels[i])
      sources.push_back(i);
  if (sources.empty()) throw std::invalid_argument("effective_success_curve: no correct sources");

  std::vector<SweepPoint> out;
  for (double strength : cfg.strengths) {
    Rng rng(cfg.seed);  // identical target draws across strengths
    SweepPoint pt;
    pt.strength = strength;
    std::size_t mis = 0, det = 0, eff = 0;
    double score_sum = 0.0;
    for (std::size_t idx : sources) {
      const Tensor& x = eval_set.samples[idx];
      const int y = eval_set.labels[idx];
      attack::AttackResult ar;
      switch (cfg.kind) {
        case SweepAttack::Fgsm:
          ar = attack::fgsm(victim, x, y, strength);
          break;
        case SweepAttack::Pgd:
          ar = attack::pgd(victim, x, y, strength, cfg.pgd_steps,
                           strength / std::max<double>(1.0, cfg.pgd_steps / 2.0));
          break;
        case SweepAttack::CwByC: {
          int t = static_cast<int>(rng.below(victim.class_count));
          while (t == y) t = static_cast<int>(rng.below(victim.class_count));
          attack::CwConfig cw;
          cw.c = strength;
          cw.confidence = cfg.cw_k;
          cw.iters = cfg.cw_iters;
          ar = attack::cw_l2(victim, x, t, cw);
          break;
        }
      }
      const bool misclassified = ar.decision != y;
      const double s = score(ar.x_adv);
      score_sum += s;
      const bool detected = s > threshold;
      if (misclassified) ++mis;
      if (detected) ++det;
      if (misclassified && !detected) ++eff;
    }
    const double n = static_cast<double>(sources.size());
    pt.misclassify_rate = static_cast<double>(mis) / n;
    pt.detection_rate = static_cast<double>(det) / n;
    pt.effective_rate = static_cast<double>(eff) / n;
    pt.mean_score = score_sum / n;
    out.push_back(pt);
  }
  return out;
}

CcrResult conditional_correct_rate(const nn::Network& victim, const ScoreFn& score,
                                   double threshold, const data::Dataset& clean_set) {
  CcrResult res;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < clean_set.size(); ++i) {
    if (score(clean_set.samples[i]) > threshold) continue;
    ++res.kept;
    if (nn::forward(victim, clean_set.samples[i]).decision == clean_set.labels[i]) ++correct;
  }
  res.rate = res.kept ? static_cast<double>(correct) / static_cast<double>(res.kept) : 0.0;
  return res;
}

nn::TrainReport adv_train(nn::Network& net, const data::Dataset& ds,
                          const AdvTrainConfig& cfg) {
  if (ds.samples.empty()) throw std::invalid_argument("adv_train: empty dataset");
  Rng rng(cfg.train.seed);
  nn::TrainReport report;
  const std::size_t n = ds.samples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.train.batch_size) {
      const std::size_t end = std::min(n, start + cfg.train.batch_size);
      std::vector<Tensor> wacc(net.layers.size()), bacc(net.layers.size());
      for (std::size_t li = 0; li < net.layers.size(); ++li)
        if (net.layers[li].has_params()) {
          wacc[li] = Tensor(net.layers[li].weights.shape);
          bacc[li] = Tensor(net.layers[li].bias.shape);
        }
      const std::size_t adv_upto = start + (end - start) / 2;  // first half perturbed
      for (std::size_t bi = start; bi < end; ++bi) {
        const int y = ds.labels[order[bi]];
        Tensor x = ds.samples[order[bi]];
        if (bi < adv_upto && cfg.pgd_eps > 0.0)
          x = attack::pgd(net, x, y, cfg.pgd_eps, cfg.pgd_steps, cfg.pgd_alpha).x_adv;
        nn::ActivationTrace tr = nn::forward(net, x);
        loss_sum += nn::cross_entropy(tr.posterior, y);
        nn::GradientBundle gb =
            nn::backward_from_logits(net, x, tr, nn::ce_logit_grad(tr.posterior, y));
        for (std::size_t li = 0; li < net.layers.size(); ++li)
          if (net.layers[li].has_params()) {
            kernels::active().axpy(1.0, gb.weight_grads[li].data.data(),
                                   wacc[li].data.data(), wacc[li].numel());
            kernels::active().axpy(1.0, gb.bias_grads[li].data.data(),
                                   bacc[li].data.data(), bacc[li].numel());
          }
      }
      const double scale = -cfg.train.lr / static_cast<double>(end - start);
      for (std::size_t li = 0; li < net.layers.size(); ++li)
        if (net.layers[li].has_params()) {
          kernels::active().axpy(scale, wacc[li].data.data(),
                                 net.layers[li].weights.data.data(),
                                 net.layers[li].weights.numel());
          kernels::active().axpy(scale, bacc[li].data.data(),
                                 net.layers[li].bias.data.data(), net.layers[li].bias.numel());
        }
    }
    report.epoch_loss.push_back(loss_sum / static_cast<double>(n));
  }
  return report;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  for (std::size_t i = 0; i < header.size(); ++i)
    std::fprintf(f, "%s%s", header[i].c_str(), i + 1 == header.size() ? "\n" : ",");
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      std::fprintf(f, "%.17g%s", row[i], i + 1 == row.size() ? "\n" : ",");
  }
  std::fclose(f);
}

}  // namespace advlab::metrics
