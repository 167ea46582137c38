#include "advlab/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "advlab/kernels.hpp"

namespace advlab::attack {

namespace {

void fill_norms(AttackResult& r, const Tensor& x) {
  r.l2 = l2_norm_diff(r.x_adv, x);
  r.linf = linf_norm_diff(r.x_adv, x);
}

AttackResult signed_step_attack(const nn::Network& net, const Tensor& x, int cls, double eps,
                                bool targeted) {
  if (eps < 0.0) throw std::invalid_argument("fgsm: eps must be >= 0");
  nn::ActivationTrace tr = nn::forward(net, x);
  std::vector<double> dlogits = nn::ce_logit_grad(tr.posterior, cls);
  nn::GradientBundle gb = nn::backward_from_logits(net, x, tr, dlogits);

  AttackResult r;
  r.x_adv = Tensor(x.shape);
  // untargeted ascends the true-class CE; targeted descends the target CE
  const double step = targeted ? -eps : eps;
  kernels::active().signed_step(x.data.data(), gb.input_grad.data.data(), step,
                                r.x_adv.data.data(), x.numel());
  kernels::active().clamp01(r.x_adv.data.data(), r.x_adv.numel());
  r.decision = nn::forward(net, r.x_adv).decision;
  r.success = targeted ? (r.decision == cls) : (r.decision != cls);
  r.iterations = 1;
  fill_norms(r, x);
  return r;
}

AttackResult pgd_impl(const nn::Network& net, const Tensor& x, int cls, double eps,
                      std::size_t steps, double alpha, bool targeted) {
  if (eps < 0.0) throw std::invalid_argument("pgd: eps must be >= 0");
  const std::size_t n = x.numel();
  std::vector<double> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = x.data[i] - eps;
    hi[i] = x.data[i] + eps;
  }
  AttackResult r;
  r.x_adv = x;
  const double step = targeted ? -alpha : alpha;
  for (std::size_t it = 0; it < steps; ++it) {
    nn::ActivationTrace tr = nn::forward(net, r.x_adv);
    nn::GradientBundle gb =
        nn::backward_from_logits(net, r.x_adv, tr, nn::ce_logit_grad(tr.posterior, cls));
    kernels::active().signed_step(r.x_adv.data.data(), gb.input_grad.data.data(), step,
                                  r.x_adv.data.data(), n);
    kernels::active().project_box(lo.data(), hi.data(), r.x_adv.data.data(), n);
    kernels::active().clamp01(r.x_adv.data.data(), n);
  }
  r.decision = nn::forward(net, r.x_adv).decision;
  r.success = targeted ? (r.decision == cls) : (r.decision != cls);
  r.iterations = steps;
  fill_norms(r, x);
  return r;
}

// value and index of the best non-target logit
std::pair<double, std::size_t> runner_up(const std::vector<double>& logits, int target) {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t idx = 0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (static_cast<int>(j) == target) continue;
    if (logits[j] > best) {
      best = logits[j];
      idx = j;
    }
  }
  return {best, idx};
}

}  // namespace

AttackResult fgsm(const nn::Network& net, const Tensor& x, int y_true, double eps) {
  return signed_step_attack(net, x, y_true, eps, false);
}

AttackResult fgsm_targeted(const nn::Network& net, const Tensor& x, int target, double eps) {
  return signed_step_attack(net, x, target, eps, true);
}

AttackResult pgd(const nn::Network& net, const Tensor& x, int y_true, double eps,
                 std::size_t steps, double alpha) {
  return pgd_impl(net, x, y_true, eps, steps, alpha, false);
}

AttackResult pgd_targeted(const nn::Network& net, const Tensor& x, int target, double eps,
                          std::size_t steps, double alpha) {
  return pgd_impl(net, x, target, eps, steps, alpha, true);
}

double eval_cw_objective(const nn::Network& net, const Tensor& x, const Tensor& x_adv,
                         int target, double c, double k) {
  const nn::ActivationTrace tr = nn::forward(net, x_adv);
  const auto [best, idx] = runner_up(tr.outputs.back().data, target);
  const double hinge =
      std::max(best - tr.outputs.back().data[static_cast<std::size_t>(target)], -k);
  const double d2 =
      kernels::active().l2sq_diff(x.data.data(), x_adv.data.data(), x.numel());
  return d2 + c * hinge;
}

AttackResult cw_l2(const nn::Network& net, const Tensor& x, int target, const CwConfig& cfg,
                   std::vector<double>* objective_trace) {
  if (cfg.c <= 0.0) throw std::invalid_argument("cw_l2: c must be > 0");
  if (cfg.confidence < 0.0) throw std::invalid_argument("cw_l2: k must be >= 0");
  const std::size_t n = x.numel();

  AttackResult r;
  r.x_adv = x;
  Tensor cur = x;
  Tensor best_adv = x;
  bool have_success = false;
  double best_norm2 = std::numeric_limits<double>::infinity();
  double best_obj = std::numeric_limits<double>::infinity();

  for (std::size_t it = 0; it < cfg.iters; ++it) {
    nn::ActivationTrace tr = nn::forward(net, cur);
    const std::vector<double>& logits = tr.outputs.back().data;
    const auto [best_other, jmax] = runner_up(logits, target);
    const double margin = best_other - logits[static_cast<std::size_t>(target)];
    const double hinge = std::max(margin, -cfg.confidence);
    const double d2 = kernels::active().l2sq_diff(x.data.data(), cur.data.data(), n);
    const double obj = d2 + cfg.c * hinge;

    if (obj < best_obj) best_obj = obj;
    if (objective_trace) objective_trace->push_back(best_obj);
    if (tr.decision == target && d2 < best_norm2) {
      best_norm2 = d2;
      best_adv = cur;
      have_success = true;
    }

    // gradient of the objective w.r.t. cur
    std::vector<double> grad(n);
    kernels::active().sub(cur.data.data(), x.data.data(), grad.data(), n);
    kernels::active().scale(2.0, grad.data(), n);
    if (margin > -cfg.confidence) {
      std::vector<double> dlogits(net.class_count, 0.0);
      dlogits[jmax] = cfg.c;
      dlogits[static_cast<std::size_t>(target)] = -cfg.c;
      nn::GradientBundle gb = nn::backward_from_logits(net, cur, tr, dlogits);
      kernels::active().axpy(1.0, gb.input_grad.data.data(), grad.data(), n);
    }
    kernels::active().axpy(-cfg.step, grad.data(), cur.data.data(), n);
    kernels::active().clamp01(cur.data.data(), n);
    r.iterations = it + 1;
  }

  if (have_success) {
    r.x_adv = best_adv;
    r.success = true;
  } else {
    r.x_adv = cur;
    r.success = false;
  }
  r.decision = nn::forward(net, r.x_adv).decision;
  fill_norms(r, x);
  return r;
}

std::pair<double, AttackResult> cw_binary_search_c(const nn::Network& net, const Tensor& x,
                                                   int target, double k, double lo, double hi,
                                                   std::size_t rounds,
                                                   std::size_t iters_per_probe, double step) {
  if (lo <= 0.0 || hi < lo) throw std::invalid_argument("cw_binary_search_c: bad bracket");
  CwConfig cfg;
  cfg.confidence = k;
  cfg.iters = iters_per_probe;
  cfg.step = step;

  cfg.c = lo;
  AttackResult at_lo = cw_l2(net, x, target, cfg);
  if (at_lo.success) return {lo, std::move(at_lo)};

  cfg.c = hi;
  AttackResult at_hi = cw_l2(net, x, target, cfg);
  if (!at_hi.success) return {hi, std::move(at_hi)};

  // geometric bisection on [lo(fail), hi(success)]
  double c_lo = lo, c_hi = hi;
  AttackResult best = std::move(at_hi);
  for (std::size_t i = 0; i < rounds; ++i) {
    const double mid = std::sqrt(c_lo * c_hi);
    cfg.c = mid;
    AttackResult at_mid = cw_l2(net, x, target, cfg);
    if (at_mid.success) {
      c_hi = mid;
      best = std::move(at_mid);
    } else {
      c_lo = mid;
    }
  }
  return {c_hi, std::move(best)};
}

AttackResult greedy_pixel(const nn::Network& net, const Tensor& x, int target,
                          std::size_t budget) {
  if (budget < 1) throw std::invalid_argument("greedy_pixel: budget must be >= 1");
  const std::size_t n = x.numel();
  AttackResult r;
  r.x_adv = x;
  std::vector<char> touched(n, 0);

  for (std::size_t it = 0; it < budget; ++it) {
    nn::ActivationTrace tr = nn::forward(net, r.x_adv);
    if (tr.decision == target) break;
    // gradient of F_t - F_chat w.r.t. the input
    std::vector<double> dlogits(net.class_count, 0.0);
    dlogits[static_cast<std::size_t>(target)] = 1.0;
    dlogits[static_cast<std::size_t>(tr.decision)] -= 1.0;
    nn::GradientBundle gb = nn::backward_from_logits(net, r.x_adv, tr, dlogits);

    std::size_t pick = n;
    double best_mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (touched[i]) continue;
      const double mag = std::fabs(gb.input_grad.data[i]);
      if (mag > best_mag) {
        best_mag = mag;
        pick = i;
      }
    }
    if (pick == n) break;  // no useful pixel left
    touched[pick] = 1;
    r.x_adv.data[pick] = gb.input_grad.data[pick] > 0.0 ? 1.0 : 0.0;
    r.iterations = it + 1;
  }

  r.decision = nn::forward(net, r.x_adv).decision;
  r.success = r.decision == target;
  fill_norms(r, x);
  return r;
}

}  // namespace advlab::attack
