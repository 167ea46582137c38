#include "advlab/re.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "advlab/kernels.hpp"
#include "advlab/rng.hpp"

namespace advlab::re {

namespace {

int victim_label(const nn::Network& victim, const Tensor& x) {
  return nn::forward(victim, x).decision;
}

// gradient of max_c P_s[c|x] w.r.t. x through the surrogate's softmax
Tensor max_posterior_grad(const nn::Network& surrogate, const Tensor& x) {
  nn::ActivationTrace tr = nn::forward(surrogate, x);
  const std::size_t chat = static_cast<std::size_t>(tr.decision);
  const std::vector<double>& p = tr.posterior.data;
  std::vector<double> dlogits(p.size());
  for (std::size_t j = 0; j < p.size(); ++j)
    dlogits[j] = p[chat] * ((j == chat ? 1.0 : 0.0) - p[j]);
  return nn::backward_from_logits(surrogate, x, tr, dlogits).input_grad;
}

nn::Network fresh_surrogate(const nn::Network& victim, const ReConfig& cfg,
                            std::uint64_t seed) {
  return nn::make_mlp(shape_numel(victim.input_shape), cfg.surrogate_hidden,
                      victim.class_count, seed);
}

}  // namespace

ReResult re_attack(const nn::Network& victim, const data::Dataset& seed_set,
                   const ReConfig& cfg, const data::Dataset* agreement_eval) {
  if (cfg.lambda < 0.0) throw std::invalid_argument("re_attack: lambda must be >= 0");
  if (seed_set.size() == 0) throw std::invalid_argument("re_attack: empty seed set");

  ReResult res;
  const std::size_t flat_dim = shape_numel(victim.input_shape);

  // S_k follows the doubling recursion as a multiset (one query per
  // element each stage); only the retraining set is deduplicated.
  data::Dataset pool;       // S_k, duplicates kept
  data::Dataset train_set;  // deduplicated view used for retraining
  pool.class_count = train_set.class_count = victim.class_count;
  std::map<std::vector<double>, int> seen;

  auto record_agreement = [&]() {
    if (!agreement_eval) return;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < agreement_eval->size(); ++i) {
      Tensor flat({flat_dim}, agreement_eval->samples[i].data);
      if (nn::forward(res.surrogate, flat).decision ==
          victim_label(victim, agreement_eval->samples[i]))
        ++agree;
    }
    res.stage_agreement.push_back(static_cast<double>(agree) /
                                  static_cast<double>(agreement_eval->size()));
  };

  auto absorb = [&](std::vector<Tensor>&& queries) {
    res.log.new_before_dedup.push_back(queries.size());
    res.log.stage_queries.emplace_back();
    res.log.stage_decisions.emplace_back();
    Tensor shaped(victim.input_shape);
    std::size_t dropped = 0;
    for (Tensor& q : queries) {
      shaped.data = q.data;
      const int y = victim_label(victim, shaped);
      res.log.stage_queries.back().push_back(q);
      res.log.stage_decisions.back().push_back(y);
      if (seen.emplace(q.data, y).second)
        train_set.push(q, y);
      else
        ++dropped;
      pool.push(std::move(q), y);
    }
    res.log.dedup_dropped.push_back(dropped);
  };

  // S_0: seed samples labeled by victim queries
  std::vector<Tensor> seeds;
  seeds.reserve(seed_set.size());
  for (const Tensor& x : seed_set.samples) seeds.push_back(Tensor({flat_dim}, x.data));
  absorb(std::move(seeds));

  nn::TrainConfig tcfg = cfg.surrogate_train;
  tcfg.seed = cfg.seed;
  res.surrogate = fresh_surrogate(victim, cfg, cfg.seed);
  nn::train(res.surrogate, train_set, tcfg);
  record_agreement();

  for (std::size_t stage = 0; stage < cfg.stages; ++stage) {
    // craft one query per element of S_k with the surrogate's gradient
    std::vector<Tensor> queries;
    queries.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const Tensor& x = pool.samples[i];
      Tensor g = max_posterior_grad(res.surrogate, x);
      Tensor q({flat_dim});
      kernels::active().signed_step(x.data.data(), g.data.data(), cfg.lambda, q.data.data(),
                                    flat_dim);
      kernels::active().clamp01(q.data.data(), flat_dim);
      queries.push_back(std::move(q));
    }
    absorb(std::move(queries));

    // retrain from scratch
    res.surrogate = fresh_surrogate(victim, cfg, cfg.seed);
    tcfg.seed = cfg.seed + stage + 1;
    nn::train(res.surrogate, train_set, tcfg);
    record_agreement();
  }
  return res;
}

TransferRates transfer_eval(const nn::Network& surrogate, const nn::Network& victim,
                            const attack::CwConfig& cfg, const data::Dataset& eval_set,
                            std::uint64_t seed) {
  if (eval_set.size() == 0) throw std::invalid_argument("transfer_eval: empty eval set");
  Rng rng(seed);
  const std::size_t flat_dim = shape_numel(surrogate.input_shape);
  std::size_t targeted = 0, untargeted = 0;
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    const int y = eval_set.labels[i];
    int t = static_cast<int>(rng.below(victim.class_count));
    while (t == y) t = static_cast<int>(rng.below(victim.class_count));
    Tensor flat({flat_dim}, eval_set.samples[i].data);
    attack::AttackResult ar = attack::cw_l2(surrogate, flat, t, cfg);
    Tensor shaped(victim.input_shape, ar.x_adv.data);
    const int vd = nn::forward(victim, shaped).decision;
    if (vd != y) ++untargeted;
    if (vd == t) ++targeted;
  }
  TransferRates r;
  r.targeted = static_cast<double>(targeted) / static_cast<double>(eval_set.size());
  r.untargeted = static_cast<double>(untargeted) / static_cast<double>(eval_set.size());
  return r;
}

GateResult membership_gate(const nn::Network& net, const Tensor& query,
                           const data::Dataset& retained_trainset, double tolerance,
                           std::uint64_t rng_seed,
                           const std::vector<std::size_t>* feature_mask) {
  GateResult res;
  nn::ActivationTrace tr = nn::forward(net, query);
  res.decision = tr.decision;
  res.confidence = tr.posterior.data;

  double best = std::numeric_limits<double>::infinity();
  for (const Tensor& x : retained_trainset.samples) {
    double d2 = 0.0;
    if (feature_mask) {
      for (std::size_t j : *feature_mask) {
        const double d = x.data[j] - query.data[j];
        d2 += d * d;
      }
    } else {
      d2 = kernels::active().l2sq_diff(x.data.data(), query.data.data(), query.numel());
    }
    best = std::min(best, d2);
    if (best == 0.0) break;
  }
  res.matched = std::sqrt(best) <= tolerance;
  if (!res.matched) return res;

  // randomize the non-max mass, keeping the decision MAP-consistent
  const std::size_t K = res.confidence.size();
  const std::size_t arg = static_cast<std::size_t>(res.decision);
  const double pmax = res.confidence[arg];
  if (K == 1) return res;
  Rng rng(rng_seed);
  const double rest = 1.0 - pmax;
  std::vector<double> parts(K - 1);
  for (int tries = 0; tries < 10000; ++tries) {
    // uniform simplex via sorted-uniform spacings
    std::vector<double> cuts(K - 2);
    for (double& c : cuts) c = rng.uniform();
    std::sort(cuts.begin(), cuts.end());
    double prev = 0.0;
    bool ok = true;
    for (std::size_t j = 0; j < K - 1; ++j) {
      const double hi = (j == K - 2) ? 1.0 : cuts[j];
      parts[j] = (hi - prev) * rest;
      prev = hi;
      if (parts[j] > pmax) ok = false;
    }
    if (ok) break;
  }
  std::size_t j = 0;
  for (std::size_t c = 0; c < K; ++c) {
    if (c == arg) continue;
    res.confidence[c] = parts[j++];
  }
  return res;
}

}  // namespace advlab::re
