#include "advlab/density.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "advlab/rng.hpp"

namespace advlab::density {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Per-component evaluation state: Cholesky factor and log-normalizer.
struct CompEval {
  Matrix chol;           // Full mode
  std::vector<double> inv_var;  // Diagonal mode
  double log_norm = 0.0;        // -(d/2)log(2pi) - (1/2)log|cov|
};

CompEval prepare(const Component& c, CovMode mode, std::size_t d) {
  CompEval ev;
  if (mode == CovMode::Diagonal) {
    ev.inv_var.resize(d);
    double logdet = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double v = std::max(c.cov[i], 1e-12);
      ev.inv_var[i] = 1.0 / v;
      logdet += std::log(v);
    }
    ev.log_norm = -0.5 * (static_cast<double>(d) * kLog2Pi + logdet);
  } else {
    Matrix cov(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov(i, j) = c.cov[i * d + j];
    Eigen::LLT<Matrix> llt(cov);
    double bump = 1e-10 * (cov.diagonal().mean() + 1e-30);
    while (llt.info() != Eigen::Success) {
      cov.diagonal().array() += bump;
      bump *= 10.0;
      llt.compute(cov);
      if (bump > 1e6) throw std::runtime_error("covariance not positive definite");
    }
    ev.chol = llt.matrixL();
    double logdet = 0.0;
    for (std::size_t i = 0; i < d; ++i) logdet += 2.0 * std::log(ev.chol(i, i));
    ev.log_norm = -0.5 * (static_cast<double>(d) * kLog2Pi + logdet);
  }
  return ev;
}

double comp_log_pdf(const Component& c, const CompEval& ev, CovMode mode, const double* z,
                    std::size_t d) {
  if (mode == CovMode::Diagonal) {
    double q = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double r = z[i] - c.mean[i];
      q += r * r * ev.inv_var[i];
    }
    return ev.log_norm - 0.5 * q;
  }
  Vector r(d);
  for (std::size_t i = 0; i < d; ++i) r(i) = z[i] - c.mean[i];
  ev.chol.triangularView<Eigen::Lower>().solveInPlace(r);
  return ev.log_norm - 0.5 * r.squaredNorm();
}

double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// k-means++ seeding followed by a few Lloyd iterations; returns centers.
std::vector<std::vector<double>> kmeanspp(const FeatureRows& rows, std::size_t K, Rng& rng) {
  const std::size_t n = rows.rows(), d = rows.cols;
  std::vector<std::vector<double>> centers;
  centers.reserve(K);
  const std::size_t first = rng.below(n);
  centers.emplace_back(rows.row(first), rows.row(first) + d);

  std::vector<double> d2(n, 0.0);
  auto dist2 = [&](std::size_t i, const std::vector<double>& c) {
    double s = 0.0;
    const double* p = rows.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double r = p[j] - c[j];
      s += r * r;
    }
    return s;
  };
  while (centers.size() < K) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, dist2(i, c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.below(n);
    } else {
      double r = rng.uniform() * total, acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(std::vector<double>(rows.row(pick), rows.row(pick) + d));
  }
  // Lloyd refinement
  std::vector<std::size_t> assign(n, 0);
  for (int it = 0; it < 10; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = dist2(i, centers[0]);
      for (std::size_t k = 1; k < K; ++k) {
        const double dd = dist2(i, centers[k]);
        if (dd < bd) {
          bd = dd;
          best = k;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<double> mean(d, 0.0);
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (assign[i] == k) {
          for (std::size_t j = 0; j < d; ++j) mean[j] += rows.row(i)[j];
          ++cnt;
        }
      if (cnt > 0)
        for (std::size_t j = 0; j < d; ++j) centers[k][j] = mean[j] / static_cast<double>(cnt);
    }
    if (!changed) break;
  }
  return centers;
}

void add_ridge(Component& c, CovMode mode, std::size_t d) {
  double mean_diag = 0.0;
  if (mode == CovMode::Diagonal) {
    for (std::size_t i = 0; i < d; ++i) mean_diag += c.cov[i];
    mean_diag /= static_cast<double>(d);
    const double ridge = 1e-6 * mean_diag + 1e-12;
    for (std::size_t i = 0; i < d; ++i) c.cov[i] += ridge;
  } else {
    for (std::size_t i = 0; i < d; ++i) mean_diag += c.cov[i * d + i];
    mean_diag /= static_cast<double>(d);
    const double ridge = 1e-6 * mean_diag + 1e-12;
    for (std::size_t i = 0; i < d; ++i) c.cov[i * d + i] += ridge;
  }
}

// Fits a Gaussian mixture to rows (already log-transformed for the
// log-normal family).
EmResult em_fit_gaussian(const FeatureRows& rows, std::size_t K, CovMode mode,
                         std::uint64_t seed, std::size_t max_iter, double tol) {
  const std::size_t n = rows.rows(), d = rows.cols;
  Rng rng(seed);

  MixtureDensity m;
  m.family = Family::Gaussian;
  m.cov_mode = mode;
  m.dim = d;
  m.comps.resize(K);

  // init: k-means++ centers, shared global covariance
  std::vector<double> gmean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) gmean[j] += rows.row(i)[j];
  for (double& v : gmean) v /= static_cast<double>(n);
  std::vector<double> gcov(mode == CovMode::Full ? d * d : d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = rows.row(i);
    if (mode == CovMode::Full) {
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
          gcov[a * d + b] += (p[a] - gmean[a]) * (p[b] - gmean[b]);
    } else {
      for (std::size_t a = 0; a < d; ++a) gcov[a] += (p[a] - gmean[a]) * (p[a] - gmean[a]);
    }
  }
  for (double& v : gcov) v /= static_cast<double>(n);

  auto centers = kmeanspp(rows, K, rng);
  for (std::size_t k = 0; k < K; ++k) {
    m.comps[k].weight = 1.0 / static_cast<double>(K);
    m.comps[k].mean = centers[k];
    m.comps[k].cov = gcov;
    add_ridge(m.comps[k], mode, d);
  }

  EmResult res;
  std::vector<CompEval> evals(K);
  std::vector<double> resp(n * K);
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // E-step (also yields the log-likelihood of the current model)
    for (std::size_t k = 0; k < K; ++k) evals[k] = prepare(m.comps[k], mode, d);
    double ll = 0.0;
    std::vector<double> lp(K);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < K; ++k)
        lp[k] = std::log(std::max(m.comps[k].weight, 1e-300)) +
                comp_log_pdf(m.comps[k], evals[k], mode, rows.row(i), d);
      const double lse = logsumexp(lp);
      ll += lse;
      for (std::size_t k = 0; k < K; ++k) resp[i * K + k] = std::exp(lp[k] - lse);
    }
    res.loglik_trace.push_back(ll);
    res.loglik = ll;

    if (iter > 0) {
      const double gain = ll - prev_ll;
      if (gain >= 0.0 && gain < tol * (std::fabs(ll) + 1.0)) break;
    }
    prev_ll = ll;

    // M-step with per-step ridge
    for (std::size_t k = 0; k < K; ++k) {
      double nk = 0.0;
      for (std::size_t i = 0; i < n; ++i) nk += resp[i * K + k];
      nk = std::max(nk, 1e-12);
      Component& c = m.comps[k];
      c.weight = nk / static_cast<double>(n);
      std::fill(c.mean.begin(), c.mean.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * K + k];
        const double* p = rows.row(i);
        for (std::size_t j = 0; j < d; ++j) c.mean[j] += r * p[j];
      }
      for (double& v : c.mean) v /= nk;
      std::fill(c.cov.begin(), c.cov.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * K + k];
        const double* p = rows.row(i);
        if (mode == CovMode::Full) {
          for (std::size_t a = 0; a < d; ++a) {
            const double da = p[a] - c.mean[a];
            for (std::size_t b = a; b < d; ++b)
              c.cov[a * d + b] += r * da * (p[b] - c.mean[b]);
          }
        } else {
          for (std::size_t a = 0; a < d; ++a) {
            const double da = p[a] - c.mean[a];
            c.cov[a] += r * da * da;
          }
        }
      }
      for (double& v : c.cov) v /= nk;
      if (mode == CovMode::Full)
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t b = 0; b < a; ++b) c.cov[a * d + b] = c.cov[b * d + a];
      add_ridge(c, mode, d);
    }
  }
  res.model = std::move(m);
  return res;
}

FeatureRows log_transform(const FeatureRows& rows, double offset) {
  FeatureRows out(rows.cols);
  out.data.resize(rows.data.size());
  for (std::size_t i = 0; i < rows.data.size(); ++i)
    out.data[i] = std::log(std::max(rows.data[i] + offset, 1e-12));
  return out;
}

}  // namespace

CovMode default_cov_mode(std::size_t dim) {
  return dim > 64 ? CovMode::Diagonal : CovMode::Full;
}

EmResult em_fit(const FeatureRows& samples, std::size_t K, Family family, CovMode cov_mode,
                std::uint64_t seed, std::size_t max_iter, double tol) {
  const std::size_t n = samples.rows();
  if (samples.cols < 1) throw std::invalid_argument("em_fit: dimension must be >= 1");
  if (n <= K)
    throw std::invalid_argument("em_fit: need more samples (" + std::to_string(n) +
                                ") than components (" + std::to_string(K) + ")");
  if (family == Family::Gaussian)
    return em_fit_gaussian(samples, K, cov_mode, seed, max_iter, tol);

  const double offset = 1e-3;
  EmResult res = em_fit_gaussian(log_transform(samples, offset), K, cov_mode, seed,
                                 max_iter, tol);
  res.model.family = Family::Lognormal;
  res.model.lognormal_offset = offset;
  // fold the Jacobian into the reported log-likelihood
  double jac = 0.0;
  for (double v : samples.data) jac -= std::log(std::max(v + offset, 1e-12));
  res.loglik += jac;
  for (double& v : res.loglik_trace) v += jac;
  return res;
}

double bic(const EmResult& fit, std::size_t n_samples) {
  const MixtureDensity& m = fit.model;
  const std::size_t K = m.comps.size();
  const std::size_t d = m.dim;
  const std::size_t cov_params = (m.cov_mode == CovMode::Full) ? d * (d + 1) / 2 : d;
  const std::size_t params = (K - 1) + K * d + K * cov_params;
  return -2.0 * fit.loglik +
         static_cast<double>(params) * std::log(static_cast<double>(n_samples));
}

std::pair<std::size_t, MixtureDensity> bic_select(const FeatureRows& samples, Family family,
                                                  std::size_t K_max, std::uint64_t seed,
                                                  CovMode cov_mode) {
  if (K_max < 1) throw std::invalid_argument("bic_select: K_max must be >= 1");
  std::size_t best_k = 0;
  double best_bic = std::numeric_limits<double>::infinity();
  MixtureDensity best_model;
  for (std::size_t K = 1; K <= K_max; ++K) {
    if (samples.rows() <= K) break;
    EmResult fit = em_fit(samples, K, family, cov_mode, seed + K);
    const double b = bic(fit, samples.rows());
    if (b < best_bic) {
      best_bic = b;
      best_k = K;
      best_model = std::move(fit.model);
    }
  }
  if (best_k == 0) throw std::invalid_argument("bic_select: not enough samples");
  return {best_k, std::move(best_model)};
}

std::pair<std::size_t, MixtureDensity> bic_select(const FeatureRows& samples, Family family,
                                                  std::size_t K_max, std::uint64_t seed) {
  return bic_select(samples, family, K_max, seed, default_cov_mode(samples.cols));
}

double log_density(const MixtureDensity& m, const double* z, std::size_t dim) {
  if (dim != m.dim) throw std::invalid_argument("log_density: dimension mismatch");
  std::vector<double> zz;
  const double* p = z;
  double jac = 0.0;
  if (m.family == Family::Lognormal) {
    zz.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      const double shifted = std::max(z[i] + m.lognormal_offset, 1e-12);
      zz[i] = std::log(shifted);
      jac -= std::log(shifted);
    }
    p = zz.data();
  }
  std::vector<double> lp(m.comps.size());
  for (std::size_t k = 0; k < m.comps.size(); ++k) {
    const CompEval ev = prepare(m.comps[k], m.cov_mode, dim);
    lp[k] = std::log(std::max(m.comps[k].weight, 1e-300)) +
            comp_log_pdf(m.comps[k], ev, m.cov_mode, p, dim);
  }
  return logsumexp(lp) + jac;
}

double log_density(const MixtureDensity& m, const std::vector<double>& z) {
  return log_density(m, z.data(), z.size());
}

std::vector<std::size_t> hard_assign(const MixtureDensity& m, const FeatureRows& samples) {
  const std::size_t n = samples.rows(), d = samples.cols;
  const FeatureRows* rows = &samples;
  FeatureRows transformed;
  if (m.family == Family::Lognormal) {
    transformed = log_transform(samples, m.lognormal_offset);
    rows = &transformed;
  }
  std::vector<CompEval> evals(m.comps.size());
  for (std::size_t k = 0; k < m.comps.size(); ++k) evals[k] = prepare(m.comps[k], m.cov_mode, d);
  std::vector<std::size_t> out(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m.comps.size(); ++k) {
      const double lp = std::log(std::max(m.comps[k].weight, 1e-300)) +
                        comp_log_pdf(m.comps[k], evals[k], m.cov_mode, rows->row(i), d);
      if (lp > best) {
        best = lp;
        out[i] = k;
      }
    }
  }
  return out;
}

}  // namespace advlab::density
