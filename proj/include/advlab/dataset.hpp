#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "advlab/tensor.hpp"

namespace advlab::data {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Provenance { Clean, Poisoned, Attacked };

struct Dataset {
  std::vector<Tensor> samples;
  std::vector<int> labels;
  std::size_t class_count = 0;
  Provenance provenance = Provenance::Clean;

  std::size_t size() const { return samples.size(); }
  void push(Tensor x, int y) {
    samples.push_back(std::move(x));
    labels.push_back(y);
  }
  std::vector<std::size_t> indices_of_class(int c) const;
};

// IDX (MNIST container) ingestion. Pixel bytes are rescaled to [0,1] by
// dividing by 255. Throws FormatError with the failing byte offset on bad
// magic or truncation.
Dataset load_idx(const std::string& image_path, const std::string& label_path);

// CSV: one row per sample, features then label in the last column.
void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path,
                 const std::vector<std::size_t>& sample_shape = {});

// K isotropic unit-variance Gaussian blobs. Class means sit at seeded
// random orthonormal directions scaled by mean_separation/sqrt(2), so
// every pair of means is mean_separation apart. Deterministic given seed.
Dataset synth_gaussians(std::size_t K, std::size_t dim, std::size_t n_per_class,
                        double mean_separation, std::uint64_t seed);

// Synthetic image task: per-class bright blob location on a noisy
// background plus global brightness jitter. Values clipped to [0,1].
// center_radius_frac places the class centers on a circle of that radius
// (fraction of the side); center_jitter blurs each sample's blob
// location, which controls how much the classes genuinely confuse.
Dataset synth_blob_images(std::size_t K, std::size_t side, std::size_t n_per_class,
                          std::uint64_t seed, double noise_sigma = 0.05,
                          double brightness_jitter = 0.15, double center_radius_frac = 0.28,
                          double center_jitter = 0.5, double blob_sigma2 = 3.0);

// Affine map into the pixel box: clamp01(0.5 + scale * x). Pixel-domain
// attacks and embeddings assume [0,1] inputs; this turns synthetic
// gaussian features into such data.
Dataset to_unit_box(const Dataset& ds, double scale = 0.07);

// Class blobs in a latent space, embedded into a higher-dimensional
// ambient space through a seeded orthonormal map, plus small off-manifold
// noise. Gradient attacks can then cross decision boundaries along
// directions the data never varies in, as they do for image models.
Dataset synth_manifold_gaussians(std::size_t K, std::size_t latent_dim,
                                 std::size_t ambient_dim, std::size_t n_per_class,
                                 double mean_separation, double off_manifold_sigma,
                                 std::uint64_t seed);

// Stratified split: first part receives `fraction` of each class.
// Parts are disjoint and together restore the input multiset.
std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed);

}  // namespace advlab::data
