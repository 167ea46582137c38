#pragma once

#include <cstdint>
#include <vector>

#include "advlab/dataset.hpp"
#include "advlab/density.hpp"
#include "advlab/network.hpp"
#include "advlab/tensor.hpp"

namespace advlab::ada {

// Per-(class, layer) null densities of internal-layer activations, fitted
// on clean, correctly-labeled data only.
struct NullModelBank {
  std::vector<std::size_t> layer_ids;  // indices into net.layers
  std::size_t class_count = 0;
  density::Family family = density::Family::Gaussian;
  // models[c * layer_ids.size() + l]
  std::vector<density::MixtureDensity> models;

  const density::MixtureDensity& model(std::size_t cls, std::size_t layer_pos) const {
    return models[cls * layer_ids.size() + layer_pos];
  }
};

struct FitNullConfig {
  density::Family family = density::Family::Gaussian;
  std::size_t components = 0;  // 0 => BIC selection up to bic_kmax
  std::size_t bic_kmax = 3;
  std::uint64_t seed = 1;
};

// Per-class, per-layer mixture fit on activations of that class's samples.
// Requires each class to carry at least 10*K (or 10*bic_kmax) samples;
// otherwise throws naming the class.
NullModelBank fit_null(const nn::Network& net, const data::Dataset& clean,
                       const std::vector<std::size_t>& layer_ids, const FitNullConfig& cfg);

struct AdaScore {
  std::vector<double> per_layer_kl;
  std::vector<int> per_layer_source;  // estimated source class per layer
  double max_kl = 0.0;
  int c_star = -1;  // DNN decision
};

// KL divergence between two discrete distributions of equal length.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

// argmax over c != c_star of log f(z|c) at the given layer; smaller class
// index wins ties.
int source_estimate(const NullModelBank& bank, std::size_t layer_pos,
                    const std::vector<double>& z, int c_star);

struct AdaOptions {
  // Expected-ADA: average KL over candidate source classes weighted by
  // their null densities instead of taking the single best source.
  bool expected_mode = false;
};

// The ADA statistic: per tapped layer, the KL divergence between the
// density-derived two-class posterior P and the DNN posterior Q restricted
// to {c_star, c_s}; the score is the max over layers.
AdaScore ada_statistic(const nn::Network& net, const NullModelBank& bank, const Tensor& x,
                       const AdaOptions& opts = {});

bool detect(const AdaScore& score, double threshold);

// Threshold so that exactly floor(alpha*n) calibration scores exceed it.
double threshold_for_fpr(std::vector<double> clean_scores, double alpha);

// 1 - max posterior.
double confidence_score(const nn::Network& net, const Tensor& x);

// Count of 8-connected regions of pixels >= on_threshold ([H,W] or [1,H,W]).
std::size_t region_count(const Tensor& image, double on_threshold);

// Stride-1 2x2 mean filter anchored top-left with edge replication.
Tensor blur2x2(const Tensor& image);

struct BlurDisagreement {
  bool disagree = false;
  int blurred_decision = -1;
};
BlurDisagreement blur_disagree(const nn::Network& net, const Tensor& x);

// Partition scores (arrival order) into mini-batches, take each batch's
// max, return the max over batches.
double re_batch_statistic(const std::vector<double>& scores, std::size_t minibatch_size = 5);

std::vector<double> ada_scores(const nn::Network& net, const NullModelBank& bank,
                               const std::vector<Tensor>& xs, const AdaOptions& opts = {});

}  // namespace advlab::ada
