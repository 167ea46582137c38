#pragma once

#include <cstdint>
#include <vector>

#include "advlab/attacks.hpp"
#include "advlab/dataset.hpp"
#include "advlab/network.hpp"
#include "advlab/tensor.hpp"

namespace advlab::re {

// Queries issued per augmentation stage, with the victim's decisions.
struct QueryLog {
  std::vector<std::vector<Tensor>> stage_queries;
  std::vector<std::vector<int>> stage_decisions;
  std::vector<std::size_t> new_before_dedup;  // |S_0| * 2^k schedule
  std::vector<std::size_t> dedup_dropped;
};

struct ReConfig {
  std::size_t stages = 5;
  double lambda = 0.37;
  std::vector<std::size_t> surrogate_hidden{32};
  nn::TrainConfig surrogate_train{40, 32, 0.1, 1};
  std::uint64_t seed = 1;
};

struct ReResult {
  nn::Network surrogate;
  QueryLog log;
  std::vector<double> stage_agreement;  // surrogate/victim agreement on eval set (if given)
};

// Stagewise surrogate learning: each stage crafts one query per current
// training sample via the signed gradient of the surrogate's max posterior
// (step lambda, clipped to [0,1]), labels the queries via the victim,
// deduplicates, and retrains the surrogate from scratch.
ReResult re_attack(const nn::Network& victim, const data::Dataset& seed_set,
                   const ReConfig& cfg, const data::Dataset* agreement_eval = nullptr);

struct TransferRates {
  double targeted = 0.0;
  double untargeted = 0.0;
};

// Craft CW attacks against the surrogate on eval samples (random targets
// != true label), measure on the victim: untargeted = decision changed
// away from the true label, targeted = decision equals the chosen target.
TransferRates transfer_eval(const nn::Network& surrogate, const nn::Network& victim,
                            const attack::CwConfig& cfg, const data::Dataset& eval_set,
                            std::uint64_t seed);

struct GateResult {
  int decision = -1;
  std::vector<double> confidence;
  bool matched = false;
};

// Membership-inference defense gate: if the query is within `tolerance`
// (L2 over the mask's feature subset) of a retained training sample, keep
// the MAP decision but redistribute the non-max posterior mass uniformly
// at random over the simplex (rejecting draws that would exceed the max).
GateResult membership_gate(const nn::Network& net, const Tensor& query,
                           const data::Dataset& retained_trainset, double tolerance,
                           std::uint64_t rng_seed,
                           const std::vector<std::size_t>* feature_mask = nullptr);

}  // namespace advlab::re
