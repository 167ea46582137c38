#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "advlab/network.hpp"
#include "advlab/tensor.hpp"

namespace advlab::attack {

struct AttackResult {
  Tensor x_adv;
  double l2 = 0.0;
  double linf = 0.0;
  int decision = -1;
  bool success = false;
  std::size_t iterations = 0;
};

// x_adv = clip01(x + eps * sign(grad_x CE(net, x, y_true))).
// Success: decision != y_true.
AttackResult fgsm(const nn::Network& net, const Tensor& x, int y_true, double eps);

// Targeted variant: descends the target-class cross-entropy.
// Success: decision == target.
AttackResult fgsm_targeted(const nn::Network& net, const Tensor& x, int target, double eps);

// Iterated signed-gradient steps of size alpha, each projected onto the
// L-inf ball of radius eps around x and onto [0,1]. steps=1, alpha=eps
// reproduces fgsm bit-exactly.
AttackResult pgd(const nn::Network& net, const Tensor& x, int y_true, double eps,
                 std::size_t steps, double alpha);
AttackResult pgd_targeted(const nn::Network& net, const Tensor& x, int target, double eps,
                          std::size_t steps, double alpha);

struct CwConfig {
  double c = 4.0;
  double confidence = 0.0;  // hinge margin k
  std::size_t iters = 300;
  double step = 1e-3;
};

// Minimizes ||x'-x||_2^2 + c * max{max_{j!=t} F_j(x') - F_t(x'), -k} by
// plain gradient descent with clamping to [0,1] after each step. Returns
// the lowest-norm successful iterate; if no iterate succeeds, the final
// iterate with success=false. If objective_trace is given, the running
// best objective is appended per iteration (non-increasing).
AttackResult cw_l2(const nn::Network& net, const Tensor& x, int target, const CwConfig& cfg,
                   std::vector<double>* objective_trace = nullptr);

// Smallest c in a geometric bracket [lo, hi] achieving success; returns
// that c and its attack result. If no c in the bracket succeeds, returns
// hi's (failed) result.
std::pair<double, AttackResult> cw_binary_search_c(const nn::Network& net, const Tensor& x,
                                                   int target, double k, double lo, double hi,
                                                   std::size_t rounds,
                                                   std::size_t iters_per_probe = 300,
                                                   double step = 1e-3);

// Greedy pixel-budget attack: repeatedly saturate the pixel with the
// largest |dF_t/dx_i - dF_c/dx_i| (c = current decision) to 0 or 1 by
// gradient sign; stops on success or when the budget is spent.
AttackResult greedy_pixel(const nn::Network& net, const Tensor& x, int target,
                          std::size_t budget);

double eval_cw_objective(const nn::Network& net, const Tensor& x, const Tensor& x_adv,
                         int target, double c, double k);

}  // namespace advlab::attack
