#include "advlab/ada.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace advlab::ada {

namespace {

constexpr double kDensityFloor = 1e-300;

std::vector<double> layer_features(const nn::ActivationTrace& tr, std::size_t layer_id) {
  return tr.outputs[layer_id].data;
}

}  // namespace

NullModelBank fit_null(const nn::Network& net, const data::Dataset& clean,
                       const std::vector<std::size_t>& layer_ids, const FitNullConfig& cfg) {
  if (layer_ids.empty()) throw std::invalid_argument("fit_null: no layers given");
  for (std::size_t id : layer_ids)
    if (id >= net.layers.size())
      throw std::invalid_argument("fit_null: layer id out of range");

  const std::size_t min_needed = 10 * std::max<std::size_t>(
                                          1, cfg.components ? cfg.components : cfg.bic_kmax);
  NullModelBank bank;
  bank.layer_ids = layer_ids;
  bank.class_count = clean.class_count;
  bank.family = cfg.family;
  bank.models.resize(clean.class_count * layer_ids.size());

  // one forward pass per sample, reused across layers
  std::vector<FeatureRows> rows(clean.class_count * layer_ids.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const nn::ActivationTrace tr = nn::forward(net, clean.samples[i]);
    const std::size_t c = static_cast<std::size_t>(clean.labels[i]);
    for (std::size_t l = 0; l < layer_ids.size(); ++l) {
      FeatureRows& r = rows[c * layer_ids.size() + l];
      const std::vector<double> z = layer_features(tr, layer_ids[l]);
      if (r.cols == 0) r.cols = z.size();
      r.push_row(z);
    }
  }
  for (std::size_t c = 0; c < clean.class_count; ++c) {
    if (rows[c * layer_ids.size()].rows() < min_needed)
      throw std::invalid_argument("fit_null: class " + std::to_string(c) + " has only " +
                                  std::to_string(rows[c * layer_ids.size()].rows()) +
                                  " samples, needs " + std::to_string(min_needed));
    for (std::size_t l = 0; l < layer_ids.size(); ++l) {
      FeatureRows& r = rows[c * layer_ids.size() + l];
      const density::CovMode mode = density::default_cov_mode(r.cols);
      const std::uint64_t seed = cfg.seed + 1000 * c + l;
      if (cfg.components > 0) {
        bank.models[c * layer_ids.size() + l] =
            density::em_fit(r, cfg.components, cfg.family, mode, seed).model;
      } else {
        bank.models[c * layer_ids.size() + l] =
            density::bic_select(r, cfg.family, cfg.bic_kmax, seed, mode).second;
      }
    }
  }
  return bank;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    kl += p[i] * std::log(p[i] / std::max(q[i], kDensityFloor));
  }
  return std::max(kl, 0.0);
}

int source_estimate(const NullModelBank& bank, std::size_t layer_pos,
                    const std::vector<double>& z, int c_star) {
  int best = -1;
  double best_ld = 0.0;
  for (std::size_t c = 0; c < bank.class_count; ++c) {
    if (static_cast<int>(c) == c_star) continue;
    const double ld = density::log_density(bank.model(c, layer_pos), z);
    if (best < 0 || ld > best_ld) {
      best = static_cast<int>(c);
      best_ld = ld;
    }
  }
  return best;
}

namespace {

// KL between the density posterior P and the DNN posterior Q restricted to
// {c_star, cs}.
double restricted_kl(double logf_star, double logf_src, double post_star, double post_src) {
  // normalize the two log-densities stably
  const double m = std::max(logf_star, logf_src);
  double fp_star = std::exp(logf_star - m);
  double fp_src = std::exp(logf_src - m);
  fp_star = std::max(fp_star, kDensityFloor);
  fp_src = std::max(fp_src, kDensityFloor);
  const double p0 = 1.0 / (fp_star + fp_src);
  double q_star = std::max(post_star, kDensityFloor);
  double q_src = std::max(post_src, kDensityFloor);
  const double q0 = 1.0 / (q_star + q_src);
  return kl_divergence({fp_star * p0, fp_src * p0}, {q_star * q0, q_src * q0});
}

}  // namespace

AdaScore ada_statistic(const nn::Network& net, const NullModelBank& bank, const Tensor& x,
                       const AdaOptions& opts) {
  const nn::ActivationTrace tr = nn::forward(net, x);
  AdaScore score;
  score.c_star = tr.decision;
  score.max_kl = 0.0;
  bool first = true;
  for (std::size_t l = 0; l < bank.layer_ids.size(); ++l) {
    const std::vector<double> z = layer_features(tr, bank.layer_ids[l]);
    std::vector<double> logf(bank.class_count);
    for (std::size_t c = 0; c < bank.class_count; ++c)
      logf[c] = density::log_density(bank.model(c, l), z);

    const double post_star = tr.posterior.data[static_cast<std::size_t>(score.c_star)];
    double layer_kl = 0.0;
    int cs = -1;
    if (!opts.expected_mode) {
      double best_ld = 0.0;
      for (std::size_t c = 0; c < bank.class_count; ++c) {
        if (static_cast<int>(c) == score.c_star) continue;
        if (cs < 0 || logf[c] > best_ld) {
          cs = static_cast<int>(c);
          best_ld = logf[c];
        }
      }
      layer_kl = restricted_kl(logf[static_cast<std::size_t>(score.c_star)], best_ld,
                               post_star, tr.posterior.data[static_cast<std::size_t>(cs)]);
    } else {
      // weights proportional to each candidate's null density
      const double m = *std::max_element(logf.begin(), logf.end());
      double wsum = 0.0;
      std::vector<double> w(bank.class_count, 0.0);
      for (std::size_t c = 0; c < bank.class_count; ++c) {
        if (static_cast<int>(c) == score.c_star) continue;
        w[c] = std::exp(logf[c] - m);
        wsum += w[c];
      }
      double best_w = -1.0;
      for (std::size_t c = 0; c < bank.class_count; ++c) {
        if (static_cast<int>(c) == score.c_star) continue;
        const double kl_c =
            restricted_kl(logf[static_cast<std::size_t>(score.c_star)], logf[c], post_star,
                          tr.posterior.data[c]);
        layer_kl += (w[c] / wsum) * kl_c;
        if (w[c] > best_w) {
          best_w = w[c];
          cs = static_cast<int>(c);
        }
      }
    }
    score.per_layer_kl.push_back(layer_kl);
    score.per_layer_source.push_back(cs);
    if (first || layer_kl > score.max_kl) {
      score.max_kl = layer_kl;
      first = false;
    }
  }
  return score;
}

bool detect(const AdaScore& score, double threshold) { return score.max_kl > threshold; }

double threshold_for_fpr(std::vector<double> clean_scores, double alpha) {
  if (clean_scores.empty()) throw std::invalid_argument("threshold_for_fpr: no scores");
  std::sort(clean_scores.begin(), clean_scores.end());
  const std::size_t n = clean_scores.size();
  std::size_t k = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
  if (k >= n) k = n - 1;
  return clean_scores[n - 1 - k];
}

double confidence_score(const nn::Network& net, const Tensor& x) {
  const nn::ActivationTrace tr = nn::forward(net, x);
  double mx = 0.0;
  for (double v : tr.posterior.data) mx = std::max(mx, v);
  return 1.0 - mx;
}

std::size_t region_count(const Tensor& image, double on_threshold) {
  std::size_t h = 0, w = 0;
  const double* px = image.data.data();
  if (image.rank() == 2) {
    h = image.shape[0];
    w = image.shape[1];
  } else if (image.rank() == 3 && image.shape[0] == 1) {
    h = image.shape[1];
    w = image.shape[2];
  } else {
    throw std::invalid_argument("region_count: expects [H,W] or [1,H,W]");
  }
  std::vector<char> on(h * w), seen(h * w, 0);
  for (std::size_t i = 0; i < h * w; ++i) on[i] = px[i] >= on_threshold;
  std::size_t regions = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < h * w; ++start) {
    if (!on[start] || seen[start]) continue;
    ++regions;
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const long cy = static_cast<long>(cur / w), cx = static_cast<long>(cur % w);
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const long ny = cy + dy, nx = cx + dx;
          if (ny < 0 || nx < 0 || ny >= static_cast<long>(h) || nx >= static_cast<long>(w))
            continue;
          const std::size_t ni = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
          if (on[ni] && !seen[ni]) {
            seen[ni] = 1;
            stack.push_back(ni);
          }
        }
    }
  }
  return regions;
}

Tensor blur2x2(const Tensor& image) {
  if (image.rank() != 3) throw std::invalid_argument("blur2x2: expects [C,H,W]");
  const std::size_t C = image.shape[0], H = image.shape[1], W = image.shape[2];
  Tensor out(image.shape);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        const std::size_t y1 = std::min(y + 1, H - 1);
        const std::size_t x1 = std::min(x + 1, W - 1);
        out.at3(c, y, x) = 0.25 * (image.at3(c, y, x) + image.at3(c, y, x1) +
                                   image.at3(c, y1, x) + image.at3(c, y1, x1));
      }
  return out;
}

BlurDisagreement blur_disagree(const nn::Network& net, const Tensor& x) {
  BlurDisagreement r;
  const int d0 = nn::forward(net, x).decision;
  r.blurred_decision = nn::forward(net, blur2x2(x)).decision;
  r.disagree = d0 != r.blurred_decision;
  return r;
}

double re_batch_statistic(const std::vector<double>& scores, std::size_t minibatch_size) {
  if (scores.empty()) throw std::invalid_argument("re_batch_statistic: no scores");
  if (minibatch_size == 0) throw std::invalid_argument("re_batch_statistic: zero batch size");
  double overall = -std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start < scores.size(); start += minibatch_size) {
    const std::size_t end = std::min(scores.size(), start + minibatch_size);
    double mb = scores[start];
    for (std::size_t i = start + 1; i < end; ++i) mb = std::max(mb, scores[i]);
    overall = std::max(overall, mb);
  }
  return overall;
}

std::vector<double> ada_scores(const nn::Network& net, const NullModelBank& bank,
                               const std::vector<Tensor>& xs, const AdaOptions& opts) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const Tensor& x : xs) out.push_back(ada_statistic(net, bank, x, opts).max_kl);
  return out;
}

}  // namespace advlab::ada
