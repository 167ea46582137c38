#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "advlab/attacks.hpp"
#include "advlab/dataset.hpp"
#include "advlab/network.hpp"

namespace advlab::metrics {

struct RocCurve {
  std::vector<double> thresholds;           // descending sweep
  std::vector<std::pair<double, double>> points;  // (FPR, TPR), (0,0) .. (1,1)
  double auc = 0.0;
};

// Threshold sweep over the union of scores (detection = score > thr),
// trapezoidal AUC. Equals the Mann-Whitney statistic with ties at half
// weight.
RocCurve roc(const std::vector<double>& attack_scores,
             const std::vector<double>& clean_scores);

using ScoreFn = std::function<double(const Tensor&)>;

struct SweepPoint {
  double strength = 0.0;
  double misclassify_rate = 0.0;
  double detection_rate = 0.0;  // among attacked samples
  double effective_rate = 0.0;  // misclassified AND undetected
  double mean_score = 0.0;      // mean detector score on attacked samples
};

enum class SweepAttack { Fgsm, Pgd, CwByC };

struct SweepConfig {
  SweepAttack kind = SweepAttack::Fgsm;
  std::vector<double> strengths;  // eps grid (or c grid for CwByC)
  std::size_t pgd_steps = 10;
  double cw_k = 0.0;
  std::size_t cw_iters = 200;
  std::uint64_t seed = 7;  // random targets for targeted kinds
};

// Effective-attack-success curve over an attack-strength grid. The
// detector threshold is fixed from clean calibration before the sweep.
// Only sources the victim classifies correctly are attacked.
std::vector<SweepPoint> effective_success_curve(const nn::Network& victim,
                                                const ScoreFn& score, double threshold,
                                                const data::Dataset& eval_set,
                                                const SweepConfig& cfg);

struct CcrResult {
  double rate = 0.0;
  std::size_t kept = 0;  // samples below threshold; rate is meaningless at 0
};

// Accuracy restricted to clean samples the detector does not flag.
CcrResult conditional_correct_rate(const nn::Network& victim, const ScoreFn& score,
                                   double threshold, const data::Dataset& clean_set);

struct AdvTrainConfig {
  nn::TrainConfig train;
  double pgd_eps = 0.1;
  std::size_t pgd_steps = 5;
  double pgd_alpha = 0.05;
};

// Adversarial training: the first half of every mini-batch is replaced by
// PGD-perturbed copies before the SGD step. pgd_eps = 0 reproduces plain
// training bit-exactly for the same seed.
nn::TrainReport adv_train(nn::Network& net, const data::Dataset& ds,
                          const AdvTrainConfig& cfg);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace advlab::metrics
