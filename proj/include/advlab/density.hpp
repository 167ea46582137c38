#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "advlab/tensor.hpp"

namespace advlab::density {

enum class Family : std::uint32_t { Gaussian = 0, Lognormal = 1 };
enum class CovMode : std::uint32_t { Full = 0, Diagonal = 1 };

struct Component {
  double weight = 1.0;
  std::vector<double> mean;
  // Full: d*d row-major covariance; Diagonal: d variances.
  std::vector<double> cov;
};

// Mixture null model for detector statistics. Log-normal mixtures model
// log(z + offset) with the Jacobian term folded into log_density, giving
// non-negative support for ReLU features.
struct MixtureDensity {
  Family family = Family::Gaussian;
  CovMode cov_mode = CovMode::Full;
  std::size_t dim = 0;
  std::vector<Component> comps;
  double lognormal_offset = 1e-3;
};

struct EmResult {
  MixtureDensity model;
  double loglik = 0.0;                // final mean-free total log-likelihood
  std::vector<double> loglik_trace;   // per-iteration, non-decreasing
};

// EM fit with k-means++ seeding. Covariances get a ridge of
// 1e-6*mean(diag) every M-step so they stay SPD on small samples.
// Stops when the relative log-likelihood gain drops below tol.
EmResult em_fit(const FeatureRows& samples, std::size_t K, Family family, CovMode cov_mode,
                std::uint64_t seed, std::size_t max_iter = 200, double tol = 1e-7);

// Picks cov_mode by dimension: Full for d <= 64, Diagonal above.
CovMode default_cov_mode(std::size_t dim);

double bic(const EmResult& fit, std::size_t n_samples);

// Smallest K in [1,K_max] minimizing BIC (ties go to the smaller K).
std::pair<std::size_t, MixtureDensity> bic_select(const FeatureRows& samples, Family family,
                                                  std::size_t K_max, std::uint64_t seed,
                                                  CovMode cov_mode);
std::pair<std::size_t, MixtureDensity> bic_select(const FeatureRows& samples, Family family,
                                                  std::size_t K_max, std::uint64_t seed);

double log_density(const MixtureDensity& m, const double* z, std::size_t dim);
double log_density(const MixtureDensity& m, const std::vector<double>& z);

// Per-sample responsibilities under the mixture (E-step posture), used by
// the cluster-impurity defense to assign samples to clusters.
std::vector<std::size_t> hard_assign(const MixtureDensity& m, const FeatureRows& samples);

}  // namespace advlab::density
