#include "advlab/bddefense.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "advlab/ada.hpp"
#include "advlab/density.hpp"
#include "advlab/kernels.hpp"
#include "advlab/poisoning.hpp"
#include "advlab/rng.hpp"

namespace advlab::bddef {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Matrix to_eigen(const FeatureRows& rows) {
  Matrix m(rows.rows(), rows.cols);
  for (std::size_t i = 0; i < rows.rows(); ++i)
    for (std::size_t j = 0; j < rows.cols; ++j) m(i, j) = rows.row(i)[j];
  return m;
}

}  // namespace

FeatureMatrix extract_class_features(const nn::Network& net, const data::Dataset& ds,
                                     int cls) {
  FeatureMatrix fm;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] != cls) continue;
    std::vector<double> z = nn::penultimate_features(net, ds.samples[i]);
    if (fm.rows.cols == 0) fm.rows.cols = z.size();
    fm.rows.push_row(z);
    fm.indices.push_back(i);
  }
  return fm;
}

std::vector<double> spectral_projections(const FeatureMatrix& features) {
  const std::size_t n = features.rows.rows();
  if (n < 2) throw std::invalid_argument("spectral_signature: need at least 2 samples");
  Matrix X = to_eigen(features.rows);
  Vector mean = X.colwise().mean();
  X.rowwise() -= mean.transpose();
  Matrix cov = (X.transpose() * X) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  Vector top = es.eigenvectors().col(cov.cols() - 1);  // largest eigenvalue last
  std::vector<double> proj(n);
  for (std::size_t i = 0; i < n; ++i) proj[i] = std::fabs(X.row(i).dot(top));
  return proj;
}

std::vector<std::size_t> spectral_signature(const FeatureMatrix& features,
                                            double removal_fraction) {
  if (removal_fraction < 0.0 || removal_fraction > 1.0)
    throw std::invalid_argument("spectral_signature: removal_fraction must be in [0,1]");
  const std::size_t n = features.rows.rows();
  if (removal_fraction == 0.0) return {};
  std::vector<double> proj = spectral_projections(features);
  const std::size_t flag_count =
      static_cast<std::size_t>(std::ceil(removal_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return proj[a] > proj[b]; });
  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < flag_count && i < n; ++i)
    flagged.push_back(features.indices[order[i]]);
  return flagged;
}

namespace {

// Symmetric FastICA with a tanh nonlinearity on whitened data.
// Returns false if the rotation did not converge.
bool fast_ica(const Matrix& white, std::size_t comps, std::uint64_t seed, Matrix& components) {
  const std::size_t n = static_cast<std::size_t>(white.rows());
  const std::size_t d = static_cast<std::size_t>(white.cols());
  Rng rng(seed);
  Matrix W(comps, d);
  for (std::size_t i = 0; i < comps; ++i)
    for (std::size_t j = 0; j < d; ++j) W(static_cast<long>(i), static_cast<long>(j)) = rng.normal();

  auto sym_decorrelate = [](Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(M * M.transpose());
    Vector ev = es.eigenvalues().cwiseMax(1e-12);
    Matrix isq = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                 es.eigenvectors().transpose();
    M = isq * M;
  };
  sym_decorrelate(W);

  for (int it = 0; it < 200; ++it) {
    Matrix WX = W * white.transpose();               // comps x n
    Matrix G = WX.array().tanh().matrix();           // g(wx)
    Matrix Gp = 1.0 - G.array().square();            // g'(wx)
    Matrix Wnew = (G * white) / static_cast<double>(n) -
                  Gp.rowwise().mean().asDiagonal() * W;
    sym_decorrelate(Wnew);
    const double delta = 1.0 - (Wnew * W.transpose()).diagonal().cwiseAbs().minCoeff();
    W = Wnew;
    if (delta < 1e-6) {
      components = W;
      return true;
    }
  }
  components = W;
  return false;
}

double lloyd2(const Matrix& Y, Vector c0, Vector c1, std::vector<std::size_t>& assignment) {
  const std::size_t n = static_cast<std::size_t>(Y.rows());
  assignment.assign(n, 0);
  for (int it = 0; it < 100; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double d0 = (Y.row(static_cast<long>(i)).transpose() - c0).squaredNorm();
      const double d1 = (Y.row(static_cast<long>(i)).transpose() - c1).squaredNorm();
      const std::size_t a = d1 < d0 ? 1 : 0;
      if (a != assignment[i]) {
        assignment[i] = a;
        changed = true;
      }
    }
    Vector s0 = Vector::Zero(Y.cols()), s1 = Vector::Zero(Y.cols());
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (assignment[i] == 0) {
        s0 += Y.row(static_cast<long>(i)).transpose();
        ++n0;
      } else {
        s1 += Y.row(static_cast<long>(i)).transpose();
        ++n1;
      }
    }
    if (n0 > 0) c0 = s0 / static_cast<double>(n0);
    if (n1 > 0) c1 = s1 / static_cast<double>(n1);
    if (!changed) break;
  }
  double cost = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    cost += (Y.row(static_cast<long>(i)).transpose() - (assignment[i] ? c1 : c0)).squaredNorm();
  return cost;
}

// 2-means with a farthest-pair start plus seeded restarts; keeps the
// lowest-cost split (whitened spaces have shallow local optima).
void kmeans2(const Matrix& Y, std::uint64_t seed, std::vector<std::size_t>& assignment) {
  const std::size_t n = static_cast<std::size_t>(Y.rows());
  Rng rng(seed);
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> trial;

  for (int restart = 0; restart < 6; ++restart) {
    std::size_t i0 = rng.below(n), i1 = 0;
    if (restart == 0) {
      // farthest point from a random anchor
      double far = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d =
            (Y.row(static_cast<long>(i)) - Y.row(static_cast<long>(i0))).squaredNorm();
        if (d > far) {
          far = d;
          i1 = i;
        }
      }
    } else {
      i1 = rng.below(n);
      if (i1 == i0) i1 = (i0 + 1) % n;
    }
    const double cost = lloyd2(Y, Y.row(static_cast<long>(i0)), Y.row(static_cast<long>(i1)), trial);
    if (cost < best_cost) {
      best_cost = cost;
      assignment = trial;
    }
  }
}

}  // namespace

AcResult activation_clustering(const FeatureMatrix& features, std::size_t n_components,
                               std::uint64_t seed,
                               const std::vector<std::size_t>* known_poisons) {
  const std::size_t n = features.rows.rows();
  if (n < 2) throw std::invalid_argument("activation_clustering: need at least 2 samples");
  const std::size_t d = features.rows.cols;
  const std::size_t comps = std::min(n_components, d);

  Matrix X = to_eigen(features.rows);
  Vector mean = X.colwise().mean();
  X.rowwise() -= mean.transpose();

  // whiten via PCA
  Matrix cov = (X.transpose() * X) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  Vector ev = es.eigenvalues();
  Matrix U = es.eigenvectors();
  // top `comps` eigenpairs (eigenvalues ascending in Eigen)
  Matrix proj(d, comps);
  for (std::size_t k = 0; k < comps; ++k) {
    const long col = static_cast<long>(d - 1 - k);
    const double lambda = std::max(ev(col), 1e-12);
    proj.col(static_cast<long>(k)) = U.col(col) / std::sqrt(lambda);
  }
  Matrix white = X * proj;  // n x comps

  AcResult res;
  Matrix ica;
  res.used_ica = fast_ica(white, comps, seed, ica);
  Matrix Y = res.used_ica ? Matrix(white * ica.transpose()) : white;

  std::vector<std::size_t> assignment;
  kmeans2(Y, seed + 1, assignment);

  for (std::size_t i = 0; i < n; ++i)
    (assignment[i] == 0 ? res.cluster_a : res.cluster_b).push_back(features.indices[i]);

  if (known_poisons) {
    std::set<std::size_t> poisons(known_poisons->begin(), known_poisons->end());
    std::size_t hits_a = 0, hits_b = 0;
    for (std::size_t idx : res.cluster_a) hits_a += poisons.count(idx);
    for (std::size_t idx : res.cluster_b) hits_b += poisons.count(idx);
    res.removal = hits_a >= hits_b ? res.cluster_a : res.cluster_b;
  } else {
    res.removal = res.cluster_a.size() <= res.cluster_b.size() ? res.cluster_a : res.cluster_b;
  }
  return res;
}

CiResult cluster_impurity(const nn::Network& net, const data::Dataset& trainset,
                          const CiConfig& cfg) {
  CiResult out;
  for (std::size_t c = 0; c < trainset.class_count; ++c) {
    FeatureMatrix fm = extract_class_features(net, trainset, static_cast<int>(c));
    if (fm.indices.empty()) continue;
    const auto [K, model] = density::bic_select(
        fm.rows, density::Family::Gaussian, cfg.bic_kmax, cfg.seed + c,
        density::default_cov_mode(fm.rows.cols));
    std::vector<std::size_t> assign = density::hard_assign(model, fm.rows);

    for (std::size_t k = 0; k < K; ++k) {
      ClusterReport rep;
      rep.cls = static_cast<int>(c);
      rep.cluster = k;
      std::size_t disagree = 0;
      for (std::size_t i = 0; i < assign.size(); ++i) {
        if (assign[i] != k) continue;
        rep.member_indices.push_back(fm.indices[i]);
        if (ada::blur_disagree(net, trainset.samples[fm.indices[i]]).disagree) ++disagree;
      }
      if (rep.member_indices.empty()) continue;
      rep.impurity =
          static_cast<double>(disagree) / static_cast<double>(rep.member_indices.size());
      rep.flagged = rep.impurity > cfg.impurity_threshold;
      if (rep.flagged)
        out.flagged_indices.insert(out.flagged_indices.end(), rep.member_indices.begin(),
                                   rep.member_indices.end());
      out.clusters.push_back(std::move(rep));
    }
  }
  std::sort(out.flagged_indices.begin(), out.flagged_indices.end());
  return out;
}

RetrainOutcome retrain_after_removal(const data::Dataset& trainset,
                                     const std::vector<std::size_t>& flagged,
                                     const nn::Network& arch_template,
                                     const nn::TrainConfig& train_cfg,
                                     const data::Dataset& clean_test,
                                     const data::Dataset& backdoor_test, int target_class) {
  std::set<std::size_t> drop(flagged.begin(), flagged.end());
  data::Dataset kept;
  kept.class_count = trainset.class_count;
  kept.provenance = trainset.provenance;
  for (std::size_t i = 0; i < trainset.size(); ++i)
    if (!drop.count(i)) kept.push(trainset.samples[i], trainset.labels[i]);
  if (kept.size() == 0)
    throw std::invalid_argument("retrain_after_removal: removal emptied the dataset");

  RetrainOutcome res;
  res.net = arch_template;
  nn::init_params(res.net, train_cfg.seed);
  nn::train(res.net, kept, train_cfg);
  res.clean_accuracy = nn::accuracy(res.net, clean_test);
  res.residual_attack_success = poison::attack_success_rate(res.net, backdoor_test, target_class);
  return res;
}

PairPerturbation estimate_pair_perturbation(const nn::Network& net,
                                            const data::Dataset& clean, int s, int t,
                                            const PerturbConfig& cfg) {
  PairPerturbation res;
  res.source = s;
  res.target = t;
  res.perturbation = Tensor(net.input_shape);
  if (s == t) {
    res.fraction = 1.0;
    res.feasible = true;
    return res;
  }

  std::vector<const Tensor*> xs;
  for (std::size_t i = 0; i < clean.size(); ++i)
    if (clean.labels[i] == s) xs.push_back(&clean.samples[i]);
  if (xs.empty()) throw std::invalid_argument("estimate_pair_perturbation: empty source class");

  const std::size_t n = shape_numel(net.input_shape);
  Tensor v(net.input_shape);
  double lambda = cfg.lambda_init;

  Tensor best_v(net.input_shape);
  double best_norm2 = std::numeric_limits<double>::infinity();
  double best_fraction = 0.0;

  auto fraction_at = [&](const Tensor& vv) {
    std::size_t hit = 0;
    for (const Tensor* x : xs) {
      Tensor xa = *x;
      kernels::active().axpy(1.0, vv.data.data(), xa.data.data(), n);
      kernels::active().clamp01(xa.data.data(), n);
      if (nn::forward(net, xa).decision == t) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(xs.size());
  };

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    // mean gradient of the targeted hinge over source samples
    std::vector<double> grad(n, 0.0);
    for (const Tensor* x : xs) {
      Tensor xa = *x;
      kernels::active().axpy(1.0, v.data.data(), xa.data.data(), n);
      // keep pre-clip copy to mask clipped coordinates
      Tensor pre = xa;
      kernels::active().clamp01(xa.data.data(), n);
      nn::ActivationTrace tr = nn::forward(net, xa);
      const std::vector<double>& logits = tr.outputs.back().data;
      double best_other = -std::numeric_limits<double>::infinity();
      std::size_t jmax = 0;
      for (std::size_t j = 0; j < logits.size(); ++j) {
        if (static_cast<int>(j) == t) continue;
        if (logits[j] > best_other) {
          best_other = logits[j];
          jmax = j;
        }
      }
      if (best_other - logits[static_cast<std::size_t>(t)] <= -0.2) continue;  // margin met
      std::vector<double> dlogits(net.class_count, 0.0);
      dlogits[jmax] = 1.0;
      dlogits[static_cast<std::size_t>(t)] = -1.0;
      nn::GradientBundle gb = nn::backward_from_logits(net, xa, tr, dlogits);
      for (std::size_t i = 0; i < n; ++i) {
        // zero gradient where the clip saturated
        if (pre.data[i] < 0.0 || pre.data[i] > 1.0) continue;
        grad[i] += gb.input_grad.data[i];
      }
    }
    const double inv = 1.0 / static_cast<double>(xs.size());
    for (std::size_t i = 0; i < n; ++i)
      grad[i] = grad[i] * inv + 2.0 * lambda * v.data[i];
    kernels::active().axpy(-cfg.step, grad.data(), v.data.data(), n);

    if ((it + 1) % cfg.check_every == 0 || it + 1 == cfg.max_iters) {
      const double frac = fraction_at(v);
      const double norm2 = kernels::active().dot(v.data.data(), v.data.data(), n);
      best_fraction = std::max(best_fraction, frac);
      if (frac >= cfg.target_fraction) {
        if (norm2 < best_norm2) {
          best_norm2 = norm2;
          best_v = v;
          res.feasible = true;
        }
        lambda *= 1.6;  // feasible: push the norm down
      } else {
        lambda *= 0.6;  // infeasible: relax the norm penalty
      }
    }
  }

  if (res.feasible) {
    res.perturbation = best_v;
    res.norm = std::sqrt(best_norm2);
    res.fraction = fraction_at(best_v);
  } else {
    res.perturbation = v;
    res.norm = std::sqrt(kernels::active().dot(v.data.data(), v.data.data(), n));
    res.fraction = best_fraction;
  }
  return res;
}

// Series / continued fraction evaluation (Numerical Recipes style).
double regularized_gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0)
    throw std::invalid_argument("regularized_gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // continued fraction for Q(a,x)
  double b = x + 1.0 - a, c = 1e308, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

ScanVerdict scan_imperceptible(const nn::Network& net, const data::Dataset& clean,
                               const ImperceptibleScanConfig& cfg,
                               std::vector<PairPerturbation>* pairs_out) {
  ScanVerdict verdict;
  const std::size_t K = net.class_count;
  if (K < 3) {
    verdict.note = "insufficient pairs";
    verdict.p_value = 1.0;
    return verdict;
  }

  std::vector<PairPerturbation> pairs;
  for (std::size_t s = 0; s < K; ++s)
    for (std::size_t t = 0; t < K; ++t) {
      if (s == t) continue;
      pairs.push_back(estimate_pair_perturbation(net, clean, static_cast<int>(s),
                                                 static_cast<int>(t), cfg.perturb));
    }

  std::vector<double> recip(pairs.size());
  std::size_t arg = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    recip[i] = 1.0 / std::max(pairs[i].norm, 1e-12);
    if (recip[i] > recip[arg]) arg = i;
  }
  const double r_max = recip[arg];
  const std::size_t m = pairs.size();

  std::vector<double> others;
  for (std::size_t i = 0; i < recip.size(); ++i)
    if (i != arg) others.push_back(recip[i]);

  double p = 1.0;
  if (cfg.null_mode == NullMode::GammaOrderStat) {
    // Gamma null matched to robust moments (median and MAD) of the
    // non-maximal reciprocals. Robust location/scale keeps the null from
    // being dragged by the suspect maximum, while the MAD floor below
    // stops near-identical reciprocals from collapsing the null width.
    std::vector<double> sorted = others;
    std::sort(sorted.begin(), sorted.end());
    const double med = sorted[sorted.size() / 2];
    std::vector<double> dev;
    dev.reserve(sorted.size());
    for (double r : sorted) dev.push_back(std::fabs(r - med));
    std::sort(dev.begin(), dev.end());
    const double mad = dev[dev.size() / 2];
    const double sigma = std::max(1.4826 * mad, 0.2 * med);
    if (med <= 0.0) {
      std::size_t ge = 0;
      for (double r : others)
        if (r >= r_max) ++ge;
      p = static_cast<double>(ge + 1) / static_cast<double>(others.size() + 1);
    } else {
      const double shape = (med / sigma) * (med / sigma);
      const double scale = sigma * sigma / med;
      const double cdf = regularized_gamma_p(shape, r_max / scale);
      p = 1.0 - std::pow(cdf, static_cast<double>(m));
    }
  } else {
    std::size_t ge = 0;
    for (double r : others)
      if (r >= r_max) ++ge;
    p = static_cast<double>(ge + 1) / static_cast<double>(others.size() + 1);
  }
  p = std::min(1.0, std::max(0.0, p));

  verdict.attacked = p < cfg.alpha;
  verdict.p_value = p;
  verdict.statistic = r_max;
  verdict.source = pairs[arg].source;
  verdict.target = pairs[arg].target;
  verdict.pattern = pairs[arg].perturbation;
  verdict.has_pattern = true;
  if (pairs_out) *pairs_out = std::move(pairs);
  return verdict;
}

namespace {

double optimize_patch_at(const nn::Network& net, const std::vector<const Tensor*>& xs, int t,
                         std::size_t y0, std::size_t x0, std::size_t w,
                         const PerceptibleScanConfig& cfg) {
  const std::size_t C = net.input_shape[0];
  const std::size_t H = net.input_shape[1];
  const std::size_t W = net.input_shape[2];
  Tensor patch({C, H, W});
  Tensor mask({C, H, W});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = y0; y < y0 + w; ++y)
      for (std::size_t x = x0; x < x0 + w; ++x) {
        mask.at3(c, y, x) = 1.0;
        patch.at3(c, y, x) = 0.5;
      }

  auto apply = [&](const Tensor& src) {
    Tensor out = src;
    for (std::size_t i = 0; i < out.numel(); ++i)
      out.data[i] = out.data[i] * (1.0 - mask.data[i]) + patch.data[i] * mask.data[i];
    return out;
  };

  for (std::size_t it = 0; it < cfg.patch_iters; ++it) {
    std::vector<double> grad(patch.numel(), 0.0);
    for (const Tensor* x : xs) {
      Tensor xa = apply(*x);
      nn::ActivationTrace tr = nn::forward(net, xa);
      nn::GradientBundle gb =
          nn::backward_from_logits(net, xa, tr, nn::ce_logit_grad(tr.posterior, t));
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += gb.input_grad.data[i] * mask.data[i];
    }
    const double inv = 1.0 / static_cast<double>(xs.size());
    for (std::size_t i = 0; i < grad.size(); ++i)
      patch.data[i] -= cfg.patch_step * grad[i] * inv;
    kernels::active().clamp01(patch.data.data(), patch.numel());
  }

  std::size_t hit = 0;
  for (const Tensor* x : xs)
    if (nn::forward(net, apply(*x)).decision == t) ++hit;
  return static_cast<double>(hit) / static_cast<double>(xs.size());
}

}  // namespace

ScanVerdict scan_perceptible(const nn::Network& net, const data::Dataset& clean,
                             const PerceptibleScanConfig& cfg,
                             std::vector<MamfEntry>* curves_out) {
  if (net.input_shape.size() != 3)
    throw std::invalid_argument("scan_perceptible: image input required");
  const std::size_t H = net.input_shape[1], W = net.input_shape[2];
  const std::size_t K = net.class_count;

  std::vector<MamfEntry> entries;
  ScanVerdict verdict;
  double best_avg = -1.0;

  for (std::size_t s = 0; s < K; ++s) {
    std::vector<const Tensor*> xs;
    for (std::size_t i = 0; i < clean.size(); ++i)
      if (clean.labels[i] == static_cast<int>(s)) xs.push_back(&clean.samples[i]);
    if (xs.empty()) continue;
    for (std::size_t t = 0; t < K; ++t) {
      if (s == t) continue;
      MamfEntry e;
      e.source = static_cast<int>(s);
      e.target = static_cast<int>(t);
      for (std::size_t w : cfg.widths) {
        if (w > H || w > W)
          throw std::invalid_argument("scan_perceptible: support width exceeds image");
        double mamf = 0.0;
        for (std::size_t y0 = 0; y0 + w <= H; y0 += cfg.position_stride)
          for (std::size_t x0 = 0; x0 + w <= W; x0 += cfg.position_stride)
            mamf = std::max(mamf, optimize_patch_at(net, xs, static_cast<int>(t), y0, x0, w, cfg));
        e.per_width.push_back(mamf);
      }
      double avg = 0.0;
      for (double v : e.per_width) avg += v;
      e.average = avg / static_cast<double>(e.per_width.size());
      if (e.average > best_avg) {
        best_avg = e.average;
        verdict.source = e.source;
        verdict.target = e.target;
      }
      entries.push_back(std::move(e));
    }
  }
  verdict.statistic = best_avg;
  verdict.attacked = best_avg > cfg.detect_threshold;
  verdict.p_value = verdict.attacked ? 0.0 : 1.0;
  if (curves_out) *curves_out = std::move(entries);
  return verdict;
}

}  // namespace advlab::bddef
