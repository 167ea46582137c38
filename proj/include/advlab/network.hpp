#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "advlab/tensor.hpp"

namespace advlab::nn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class LayerKind : std::uint32_t { Dense = 0, Conv2D = 1, ReLU = 2, MaxPool2x2 = 3 };

struct Layer {
  LayerKind kind = LayerKind::ReLU;
  // Dense
  std::size_t in = 0, out = 0;
  // Conv2D (stride 1, zero padding `pad`)
  std::size_t in_c = 0, out_c = 0, kh = 0, kw = 0, pad = 0;
  Tensor weights;  // Dense: [out,in]; Conv2D: [out_c,in_c,kh,kw]
  Tensor bias;     // Dense: [out]; Conv2D: [out_c]

  bool has_params() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2D; }
};

Layer dense(std::size_t in, std::size_t out);
Layer conv2d(std::size_t in_c, std::size_t out_c, std::size_t kh, std::size_t kw,
             std::size_t pad = 0);
Layer relu();
Layer maxpool2x2();

// Feedforward classifier: ordered layers, final layer emits class_count
// logits; the winner-take-all decision is argmax over them.
struct Network {
  std::vector<std::size_t> input_shape;
  std::vector<Layer> layers;
  std::size_t class_count = 0;

  // output shape of every layer, computed at construction
  std::vector<std::vector<std::size_t>> layer_shapes;
};

// Validates layer composition and fills layer_shapes.
// Throws ShapeError if adjacent layers do not compose or the final layer
// does not emit class_count values.
Network make_network(std::vector<std::size_t> input_shape, std::vector<Layer> layers,
                     std::size_t class_count);

// Uniform init in +-sqrt(6/(fan_in+fan_out)); biases zero.
void init_params(Network& net, std::uint64_t seed);

// Convenience: dense [in -> hidden... -> K] with a ReLU after each hidden.
Network make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                 std::size_t class_count, std::uint64_t seed);

struct ActivationTrace {
  std::vector<Tensor> outputs;  // one per layer; outputs.back() = logits
  Tensor posterior;             // softmax of the logits
  int decision = -1;            // argmax
};

ActivationTrace forward(const Network& net, const Tensor& x);

std::vector<double> softmax(const std::vector<double>& logits);

struct GradientBundle {
  std::vector<Tensor> weight_grads;  // one per layer (empty for param-free layers)
  std::vector<Tensor> bias_grads;
  Tensor input_grad;
};

// Backpropagates an arbitrary loss gradient at the logits through the
// network; returns exact parameter gradients and the input gradient.
GradientBundle backward_from_logits(const Network& net, const Tensor& x,
                                    const ActivationTrace& trace,
                                    const std::vector<double>& dlogits);

// dCE/dlogits for cross-entropy on softmax: p - onehot(label)
std::vector<double> ce_logit_grad(const Tensor& posterior, int label);

GradientBundle backward_ce(const Network& net, const Tensor& x, int label);

double cross_entropy(const Tensor& posterior, int label);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr = 0.1;
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

}  // namespace advlab::nn

namespace advlab::data {
struct Dataset;
}

namespace advlab::nn {

// Mini-batch SGD with cross-entropy loss. Deterministic given the seed.
// Throws std::invalid_argument on an empty dataset.
TrainReport train(Network& net, const data::Dataset& ds, const TrainConfig& cfg);

double accuracy(const Network& net, const data::Dataset& ds);

// Max relative error between backprop and central finite differences
// (h = 1e-4) over every parameter and every input coordinate.
double grad_check(const Network& net, const Tensor& x, int label);

// Flattened output of the layer feeding the final Dense layer.
std::vector<double> penultimate_features(const Network& net, const Tensor& x);
std::vector<double> penultimate_features(const ActivationTrace& trace,
                                         const Network& net);

// Indices of the last two hidden layers (default detector tap points).
std::vector<std::size_t> default_detector_layers(const Network& net);

}  // namespace advlab::nn
