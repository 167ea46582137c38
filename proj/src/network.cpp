#include "advlab/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advlab/dataset.hpp"
#include "advlab/kernels.hpp"
#include "advlab/rng.hpp"

namespace advlab::nn {

Layer dense(std::size_t in, std::size_t out) {
  Layer l;
  l.kind = LayerKind::Dense;
  l.in = in;
  l.out = out;
  l.weights = Tensor({out, in});
  l.bias = Tensor({out});
  return l;
}

Layer conv2d(std::size_t in_c, std::size_t out_c, std::size_t kh, std::size_t kw,
             std::size_t pad) {
  Layer l;
  l.kind = LayerKind::Conv2D;
  l.in_c = in_c;
  l.out_c = out_c;
  l.kh = kh;
  l.kw = kw;
  l.pad = pad;
  l.weights = Tensor({out_c, in_c, kh, kw});
  l.bias = Tensor({out_c});
  return l;
}

Layer relu() {
  Layer l;
  l.kind = LayerKind::ReLU;
  return l;
}

Layer maxpool2x2() {
  Layer l;
  l.kind = LayerKind::MaxPool2x2;
  return l;
}

namespace {

std::vector<std::size_t> layer_output_shape(const Layer& l,
                                            const std::vector<std::size_t>& in_shape) {
  switch (l.kind) {
    case LayerKind::Dense: {
      if (shape_numel(in_shape) != l.in)
        throw ShapeError("dense layer expects " + std::to_string(l.in) +
                         " inputs, got shape " + shape_to_string(in_shape));
      return {l.out};
    }
    case LayerKind::Conv2D: {
      if (in_shape.size() != 3 || in_shape[0] != l.in_c)
        throw ShapeError("conv layer expects [" + std::to_string(l.in_c) +
                         ",H,W] input, got " + shape_to_string(in_shape));
      const std::size_t h = in_shape[1] + 2 * l.pad;
      const std::size_t w = in_shape[2] + 2 * l.pad;
      if (h < l.kh || w < l.kw)
        throw ShapeError("conv kernel larger than padded input " + shape_to_string(in_shape));
      return {l.out_c, h - l.kh + 1, w - l.kw + 1};
    }
    case LayerKind::ReLU:
      return in_shape;
    case LayerKind::MaxPool2x2: {
      if (in_shape.size() != 3)
        throw ShapeError("maxpool expects [C,H,W] input, got " + shape_to_string(in_shape));
      if (in_shape[1] < 2 || in_shape[2] < 2)
        throw ShapeError("maxpool input too small: " + shape_to_string(in_shape));
      return {in_shape[0], in_shape[1] / 2, in_shape[2] / 2};
    }
  }
  throw ShapeError("unknown layer kind");
}

}  // namespace

Network make_network(std::vector<std::size_t> input_shape, std::vector<Layer> layers,
                     std::size_t class_count) {
  if (class_count < 2) throw ShapeError("class_count must be >= 2");
  Network net;
  net.input_shape = std::move(input_shape);
  net.layers = std::move(layers);
  net.class_count = class_count;
  std::vector<std::size_t> cur = net.input_shape;
  for (const Layer& l : net.layers) {
    cur = layer_output_shape(l, cur);
    net.layer_shapes.push_back(cur);
  }
  if (net.layers.empty() || shape_numel(cur) != class_count)
    throw ShapeError("final layer must emit " + std::to_string(class_count) +
                     " scores, got " + shape_to_string(cur));
  return net;
}

void init_params(Network& net, std::uint64_t seed) {
  Rng rng(seed);
  for (Layer& l : net.layers) {
    if (!l.has_params()) continue;
    std::size_t fan_in = 0, fan_out = 0;
    if (l.kind == LayerKind::Dense) {
      fan_in = l.in;
      fan_out = l.out;
    } else {
      fan_in = l.in_c * l.kh * l.kw;
      fan_out = l.out_c * l.kh * l.kw;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : l.weights.data) w = rng.uniform(-bound, bound);
    for (double& b : l.bias.data) b = 0.0;
  }
}

Network make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                 std::size_t class_count, std::uint64_t seed) {
  std::vector<Layer> layers;
  std::size_t prev = input_dim;
  for (std::size_t h : hidden) {
    layers.push_back(dense(prev, h));
    layers.push_back(relu());
    prev = h;
  }
  layers.push_back(dense(prev, class_count));
  Network net = make_network({input_dim}, std::move(layers), class_count);
  init_params(net, seed);
  return net;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

namespace {

Tensor dense_forward(const Layer& l, const Tensor& x) {
  Tensor out({l.out});
  kernels::matvec(l.weights.data.data(), l.out, l.in, x.data.data(), l.bias.data.data(),
                  out.data.data());
  return out;
}

Tensor conv_forward(const Layer& l, const Tensor& x,
                    const std::vector<std::size_t>& out_shape) {
  Tensor out(out_shape);
  const std::size_t ih = x.shape[1], iw = x.shape[2];
  const std::size_t oh = out_shape[1], ow = out_shape[2];
  const long pad = static_cast<long>(l.pad);
  for (std::size_t o = 0; o < l.out_c; ++o) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        double acc = l.bias[o];
        for (std::size_t c = 0; c < l.in_c; ++c) {
          for (std::size_t ky = 0; ky < l.kh; ++ky) {
            const long sy = static_cast<long>(y + ky) - pad;
            if (sy < 0 || sy >= static_cast<long>(ih)) continue;
            for (std::size_t kx = 0; kx < l.kw; ++kx) {
              const long sx = static_cast<long>(xx + kx) - pad;
              if (sx < 0 || sx >= static_cast<long>(iw)) continue;
              acc += l.weights.data[((o * l.in_c + c) * l.kh + ky) * l.kw + kx] *
                     x.at3(c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
            }
          }
        }
        out.at3(o, y, xx) = acc;
      }
    }
  }
  return out;
}

Tensor maxpool_forward(const Layer&, const Tensor& x,
                       const std::vector<std::size_t>& out_shape) {
  Tensor out(out_shape);
  const std::size_t oh = out_shape[1], ow = out_shape[2];
  for (std::size_t c = 0; c < out_shape[0]; ++c)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        // first (row-major) index wins ties
        double best = x.at3(c, 2 * y, 2 * xx);
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const double v = x.at3(c, 2 * y + dy, 2 * xx + dx);
            if (v > best) best = v;
          }
        out.at3(c, y, xx) = best;
      }
  return out;
}

}  // namespace

ActivationTrace forward(const Network& net, const Tensor& x) {
  if (x.shape != net.input_shape)
    throw ShapeError("input shape " + shape_to_string(x.shape) + " does not match network input " +
                     shape_to_string(net.input_shape));
  ActivationTrace tr;
  tr.outputs.reserve(net.layers.size());
  const Tensor* cur = &x;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    switch (l.kind) {
      case LayerKind::Dense: {
        // dense flattens implicitly (row-major)
        Tensor out = dense_forward(l, *cur);
        tr.outputs.push_back(std::move(out));
        break;
      }
      case LayerKind::Conv2D:
        tr.outputs.push_back(conv_forward(l, *cur, net.layer_shapes[i]));
        break;
      case LayerKind::ReLU: {
        Tensor out(cur->shape);
        kernels::active().relu(cur->data.data(), out.data.data(), cur->numel());
        tr.outputs.push_back(std::move(out));
        break;
      }
      case LayerKind::MaxPool2x2:
        tr.outputs.push_back(maxpool_forward(l, *cur, net.layer_shapes[i]));
        break;
    }
    cur = &tr.outputs.back();
  }
  const std::vector<double>& logits = tr.outputs.back().data;
  tr.posterior = Tensor({net.class_count}, softmax(logits));
  tr.decision = static_cast<int>(
      std::max_element(logits.begin(), logits.end()) - logits.begin());
  return tr;
}

GradientBundle backward_from_logits(const Network& net, const Tensor& x,
                                    const ActivationTrace& trace,
                                    const std::vector<double>& dlogits) {
  if (dlogits.size() != net.class_count)
    throw ShapeError("dlogits size must equal class_count");
  GradientBundle gb;
  gb.weight_grads.resize(net.layers.size());
  gb.bias_grads.resize(net.layers.size());

  std::vector<double> grad = dlogits;  // gradient w.r.t. current layer output
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& l = net.layers[li];
    const Tensor& in = (li == 0) ? x : trace.outputs[li - 1];
    switch (l.kind) {
      case LayerKind::Dense: {
        gb.weight_grads[li] = Tensor({l.out, l.in});
        gb.bias_grads[li] = Tensor({l.out});
        for (std::size_t r = 0; r < l.out; ++r) {
          kernels::active().axpy(grad[r], in.data.data(),
                                 gb.weight_grads[li].data.data() + r * l.in, l.in);
          gb.bias_grads[li].data[r] = grad[r];
        }
        std::vector<double> gin(l.in, 0.0);
        kernels::matvec_t_acc(l.weights.data.data(), l.out, l.in, grad.data(), gin.data());
        grad = std::move(gin);
        break;
      }
      case LayerKind::Conv2D: {
        gb.weight_grads[li] = Tensor({l.out_c, l.in_c, l.kh, l.kw});
        gb.bias_grads[li] = Tensor({l.out_c});
        const std::size_t oh = net.layer_shapes[li][1], ow = net.layer_shapes[li][2];
        const std::size_t ih = in.shape[1], iw = in.shape[2];
        const long pad = static_cast<long>(l.pad);
        std::vector<double> gin(in.numel(), 0.0);
        for (std::size_t o = 0; o < l.out_c; ++o) {
          for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t xx = 0; xx < ow; ++xx) {
              const double g = grad[(o * oh + y) * ow + xx];
              if (g == 0.0) continue;
              gb.bias_grads[li].data[o] += g;
              for (std::size_t c = 0; c < l.in_c; ++c) {
                for (std::size_t ky = 0; ky < l.kh; ++ky) {
                  const long sy = static_cast<long>(y + ky) - pad;
                  if (sy < 0 || sy >= static_cast<long>(ih)) continue;
                  for (std::size_t kx = 0; kx < l.kw; ++kx) {
                    const long sx = static_cast<long>(xx + kx) - pad;
                    if (sx < 0 || sx >= static_cast<long>(iw)) continue;
                    const std::size_t widx = ((o * l.in_c + c) * l.kh + ky) * l.kw + kx;
                    const std::size_t iidx =
                        (c * ih + static_cast<std::size_t>(sy)) * iw + static_cast<std::size_t>(sx);
                    gb.weight_grads[li].data[widx] += g * in.data[iidx];
                    gin[iidx] += g * l.weights.data[widx];
                  }
                }
              }
            }
          }
        }
        grad = std::move(gin);
        break;
      }
      case LayerKind::ReLU: {
        std::vector<double> gin(in.numel());
        kernels::active().relu_mask(in.data.data(), grad.data(), gin.data(), in.numel());
        grad = std::move(gin);
        break;
      }
      case LayerKind::MaxPool2x2: {
        const std::size_t oh = net.layer_shapes[li][1], ow = net.layer_shapes[li][2];
        std::vector<double> gin(in.numel(), 0.0);
        const std::size_t ih = in.shape[1], iw = in.shape[2];
        for (std::size_t c = 0; c < in.shape[0]; ++c)
          for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t xx = 0; xx < ow; ++xx) {
              // route gradient to the first (row-major) maximum
              std::size_t by = 2 * y, bx = 2 * xx;
              double best = in.at3(c, by, bx);
              for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                  const double v = in.at3(c, 2 * y + dy, 2 * xx + dx);
                  if (v > best) {
                    best = v;
                    by = 2 * y + dy;
                    bx = 2 * xx + dx;
                  }
                }
              gin[(c * ih + by) * iw + bx] += grad[(c * oh + y) * ow + xx];
            }
        grad = std::move(gin);
        break;
      }
    }
  }
  gb.input_grad = Tensor(x.shape, std::move(grad));
  return gb;
}

std::vector<double> ce_logit_grad(const Tensor& posterior, int label) {
  std::vector<double> g = posterior.data;
  g[static_cast<std::size_t>(label)] -= 1.0;
  return g;
}

GradientBundle backward_ce(const Network& net, const Tensor& x, int label) {
  ActivationTrace tr = forward(net, x);
  return backward_from_logits(net, x, tr, ce_logit_grad(tr.posterior, label));
}

double cross_entropy(const Tensor& posterior, int label) {
  const double p = std::max(posterior.data[static_cast<std::size_t>(label)], 1e-300);
  return -std::log(p);
}

TrainReport train(Network& net, const data::Dataset& ds, const TrainConfig& cfg) {
  if (ds.samples.empty()) throw std::invalid_argument("train: empty dataset");
  for (int y : ds.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= net.class_count)
      throw std::invalid_argument("train: label out of range");

  Rng rng(cfg.seed);
  TrainReport report;
  const std::size_t n = ds.samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      std::vector<Tensor> wacc(net.layers.size()), bacc(net.layers.size());
      for (std::size_t li = 0; li < net.layers.size(); ++li)
        if (net.layers[li].has_params()) {
          wacc[li] = Tensor(net.layers[li].weights.shape);
          bacc[li] = Tensor(net.layers[li].bias.shape);
        }
      for (std::size_t bi = start; bi < end; ++bi) {
        const Tensor& x = ds.samples[order[bi]];
        const int y = ds.labels[order[bi]];
        ActivationTrace tr = forward(net, x);
        loss_sum += cross_entropy(tr.posterior, y);
        GradientBundle gb = backward_from_logits(net, x, tr, ce_logit_grad(tr.posterior, y));
        for (std::size_t li = 0; li < net.layers.size(); ++li)
          if (net.layers[li].has_params()) {
            kernels::active().axpy(1.0, gb.weight_grads[li].data.data(),
                                   wacc[li].data.data(), wacc[li].numel());
            kernels::active().axpy(1.0, gb.bias_grads[li].data.data(),
                                   bacc[li].data.data(), bacc[li].numel());
          }
      }
      const double scale = -cfg.lr / static_cast<double>(end - start);
      for (std::size_t li = 0; li < net.layers.size(); ++li)
        if (net.layers[li].has_params()) {
          kernels::active().axpy(scale, wacc[li].data.data(),
                                 net.layers[li].weights.data.data(),
                                 net.layers[li].weights.numel());
          kernels::active().axpy(scale, bacc[li].data.data(),
                                 net.layers[li].bias.data.data(), net.layers[li].bias.numel());
        }
    }
    report.epoch_loss.push_back(loss_sum / static_cast<double>(n));
  }
  return report;
}

double accuracy(const Network& net, const data::Dataset& ds) {
  if (ds.samples.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    if (forward(net, ds.samples[i]).decision == ds.labels[i]) ++ok;
  return static_cast<double>(ok) / static_cast<double>(ds.samples.size());
}

namespace {

double loss_at(const Network& net, const Tensor& x, int label) {
  ActivationTrace tr = forward(net, x);
  return cross_entropy(tr.posterior, label);
}

double rel_err(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-3});
  return std::fabs(a - b) / denom;
}

}  // namespace

double grad_check(const Network& net, const Tensor& x, int label) {
  const double h = 1e-4;
  GradientBundle gb = backward_ce(net, x, label);
  Network probe = net;
  double worst = 0.0;

  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    if (!net.layers[li].has_params()) continue;
    for (int which = 0; which < 2; ++which) {
      Tensor& param = which == 0 ? probe.layers[li].weights : probe.layers[li].bias;
      const Tensor& analytic = which == 0 ? gb.weight_grads[li] : gb.bias_grads[li];
      for (std::size_t i = 0; i < param.numel(); ++i) {
        const double keep = param.data[i];
        param.data[i] = keep + h;
        const double up = loss_at(probe, x, label);
        param.data[i] = keep - h;
        const double dn = loss_at(probe, x, label);
        param.data[i] = keep;
        worst = std::max(worst, rel_err((up - dn) / (2 * h), analytic.data[i]));
      }
    }
  }
  Tensor xp = x;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double keep = xp.data[i];
    xp.data[i] = keep + h;
    const double up = loss_at(net, xp, label);
    xp.data[i] = keep - h;
    const double dn = loss_at(net, xp, label);
    xp.data[i] = keep;
    worst = std::max(worst, rel_err((up - dn) / (2 * h), gb.input_grad.data[i]));
  }
  return worst;
}

std::vector<double> penultimate_features(const ActivationTrace& trace, const Network& net) {
  if (net.layers.size() < 2) return trace.outputs.back().data;
  return trace.outputs[net.layers.size() - 2].data;
}

std::vector<double> penultimate_features(const Network& net, const Tensor& x) {
  ActivationTrace tr = forward(net, x);
  return penultimate_features(tr, net);
}

std::vector<std::size_t> default_detector_layers(const Network& net) {
  // activation layers (ReLU / pooling outputs), not raw pre-activations
  std::vector<std::size_t> taps;
  for (std::size_t i = 0; i + 1 < net.layers.size(); ++i)
    if (net.layers[i].kind == LayerKind::ReLU || net.layers[i].kind == LayerKind::MaxPool2x2)
      taps.push_back(i);
  if (taps.empty()) {
    for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) taps.push_back(i);
  }
  if (taps.size() <= 2) return taps;
  return {taps[taps.size() - 2], taps[taps.size() - 1]};
}

}  // namespace advlab::nn
