#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advlab/dataset.hpp"
#include "advlab/network.hpp"
#include "advlab/tensor.hpp"

namespace advlab::bddef {

// Penultimate-layer activations of one class's training samples, with
// their dataset indices.
struct FeatureMatrix {
  FeatureRows rows;
  std::vector<std::size_t> indices;
};

FeatureMatrix extract_class_features(const nn::Network& net, const data::Dataset& ds,
                                     int cls);

// Spectral signature defense: flags the removal_fraction of class samples
// with the largest |projection| onto the top covariance eigenvector of the
// centered features. Flag count is ceil(removal_fraction * n) exactly.
std::vector<std::size_t> spectral_signature(const FeatureMatrix& features,
                                            double removal_fraction);

// |projection| per sample onto the top covariance eigenvector; the
// evaluation harness uses these to pin an exact clean-sample FPR.
std::vector<double> spectral_projections(const FeatureMatrix& features);

struct AcResult {
  std::vector<std::size_t> cluster_a;  // dataset indices
  std::vector<std::size_t> cluster_b;
  std::vector<std::size_t> removal;    // chosen cluster's indices
  bool used_ica = false;               // false => whitened-PCA fallback
};

// Activation clustering: project to n_components by FastICA (whitened-PCA
// fallback when ICA does not converge), K-means into two clusters.
// In blind mode the smaller cluster is removed; if known_poisons is given
// the cluster holding most of them is removed (evaluation stance).
AcResult activation_clustering(const FeatureMatrix& features, std::size_t n_components,
                               std::uint64_t seed,
                               const std::vector<std::size_t>* known_poisons = nullptr);

struct ClusterReport {
  int cls = 0;
  std::size_t cluster = 0;
  double impurity = 0.0;
  bool flagged = false;
  std::vector<std::size_t> member_indices;  // dataset indices
};

struct CiConfig {
  double impurity_threshold = 0.1;
  std::size_t bic_kmax = 3;
  std::uint64_t seed = 1;
};

struct CiResult {
  std::vector<ClusterReport> clusters;
  std::vector<std::size_t> flagged_indices;
};

// Cluster impurity defense: per class, GMM clusters (BIC model order) on
// penultimate features; a cluster's impurity is the fraction of members
// whose decisions on the original and 2x2-blurred pattern disagree;
// clusters above the threshold are flagged for removal.
CiResult cluster_impurity(const nn::Network& net, const data::Dataset& trainset,
                          const CiConfig& cfg = {});

struct RetrainOutcome {
  nn::Network net;
  double clean_accuracy = 0.0;
  double residual_attack_success = 0.0;
};

// Removes the flagged samples, retrains from scratch with the same
// protocol, and re-evaluates. Throws if removal empties the dataset.
RetrainOutcome retrain_after_removal(const data::Dataset& trainset,
                                     const std::vector<std::size_t>& flagged,
                                     const nn::Network& arch_template,
                                     const nn::TrainConfig& train_cfg,
                                     const data::Dataset& clean_test,
                                     const data::Dataset& backdoor_test, int target_class);

struct PairPerturbation {
  int source = 0, target = 0;
  Tensor perturbation;
  double norm = 0.0;
  double fraction = 0.0;  // achieved misclassification fraction
  bool feasible = false;
};

struct PerturbConfig {
  double target_fraction = 0.9;
  std::size_t max_iters = 600;
  double step = 0.05;
  double lambda_init = 1e-2;
  std::size_t check_every = 10;
};

// Smallest additive perturbation v (by L2) driving at least
// target_fraction of class-s clean samples to be decided t, found by
// gradient descent with a dynamic norm-penalty schedule.
PairPerturbation estimate_pair_perturbation(const nn::Network& net,
                                            const data::Dataset& clean, int s, int t,
                                            const PerturbConfig& cfg = {});

struct ScanVerdict {
  bool attacked = false;
  int source = -1, target = -1;
  double statistic = 0.0;
  double p_value = 1.0;
  Tensor pattern;
  bool has_pattern = false;
  std::string note;
};

enum class NullMode { GammaOrderStat, EmpiricalQuantile };

// Regularized lower incomplete gamma P(a,x), the Gamma-distribution CDF
// backing the order-statistic p-value.
double regularized_gamma_p(double a, double x);

struct ImperceptibleScanConfig {
  double alpha = 0.05;
  NullMode null_mode = NullMode::GammaOrderStat;
  PerturbConfig perturb;
};

// Post-training imperceptible-backdoor scan: estimate the minimum pair
// perturbation for all K(K-1) ordered pairs; test whether the largest
// reciprocal norm is atypical of the remaining ones.
ScanVerdict scan_imperceptible(const nn::Network& net, const data::Dataset& clean,
                               const ImperceptibleScanConfig& cfg = {},
                               std::vector<PairPerturbation>* pairs_out = nullptr);

struct MamfEntry {
  int source = 0, target = 0;
  std::vector<double> per_width;  // MAMF per support width
  double average = 0.0;
};

struct PerceptibleScanConfig {
  std::vector<std::size_t> widths{2, 3};
  double detect_threshold = 0.9;
  std::size_t position_stride = 2;
  std::size_t patch_iters = 60;
  double patch_step = 0.5;
};

// Perceptible-backdoor scan: per pair and square support width, optimize a
// patch (position by grid search, content by gradient) for maximal
// misclassification fraction; average over widths.
ScanVerdict scan_perceptible(const nn::Network& net, const data::Dataset& clean,
                             const PerceptibleScanConfig& cfg = {},
                             std::vector<MamfEntry>* curves_out = nullptr);

}  // namespace advlab::bddef
