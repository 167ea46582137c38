#include "advlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "advlab/rng.hpp"

namespace advlab::data {

std::vector<std::size_t> Dataset::indices_of_class(int c) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == c) idx.push_back(i);
  return idx;
}

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& path, std::size_t& offset) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f)
    throw FormatError(path + ": truncated at byte offset " + std::to_string(offset));
  offset += 4;
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& image_path, const std::string& label_path) {
  std::ifstream imgf(image_path, std::ios::binary);
  if (!imgf) throw FormatError(image_path + ": cannot open");
  std::ifstream lblf(label_path, std::ios::binary);
  if (!lblf) throw FormatError(label_path + ": cannot open");

  std::size_t ioff = 0, loff = 0;
  const std::uint32_t imagic = read_be32(imgf, image_path, ioff);
  if (imagic != 0x00000803u)
    throw FormatError(image_path + ": bad magic at byte offset 0 (expected 0x00000803)");
  const std::uint32_t n = read_be32(imgf, image_path, ioff);
  const std::uint32_t rows = read_be32(imgf, image_path, ioff);
  const std::uint32_t cols = read_be32(imgf, image_path, ioff);

  const std::uint32_t lmagic = read_be32(lblf, label_path, loff);
  if (lmagic != 0x00000801u)
    throw FormatError(label_path + ": bad magic at byte offset 0 (expected 0x00000801)");
  const std::uint32_t ln = read_be32(lblf, label_path, loff);
  if (ln != n)
    throw FormatError(label_path + ": label count " + std::to_string(ln) +
                      " != image count " + std::to_string(n));

  Dataset ds;
  ds.provenance = Provenance::Clean;
  const std::size_t px = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> buf(px);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    imgf.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(px));
    if (!imgf)
      throw FormatError(image_path + ": truncated at byte offset " +
                        std::to_string(ioff + imgf.gcount()));
    ioff += px;
    Tensor t({1, rows, cols});
    for (std::size_t j = 0; j < px; ++j) t.data[j] = static_cast<double>(buf[j]) / 255.0;
    unsigned char lab = 0;
    lblf.read(reinterpret_cast<char*>(&lab), 1);
    if (!lblf)
      throw FormatError(label_path + ": truncated at byte offset " + std::to_string(loff));
    loff += 1;
    ds.push(std::move(t), static_cast<int>(lab));
    max_label = std::max(max_label, static_cast<int>(lab));
  }
  ds.class_count = static_cast<std::size_t>(max_label) + 1;
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw FormatError(path + ": cannot open for writing");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.samples[i].data) std::fprintf(f, "%.17g,", v);
    std::fprintf(f, "%d\n", ds.labels[i]);
  }
  std::fclose(f);
}

Dataset load_csv(const std::string& path, const std::vector<std::size_t>& sample_shape) {
  std::ifstream f(path);
  if (!f) throw FormatError(path + ": cannot open");
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  int max_label = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell.empty()) continue;
      vals.push_back(std::stod(cell));
    }
    if (vals.size() < 2)
      throw FormatError(path + ": line " + std::to_string(lineno) + " has too few columns");
    const int label = static_cast<int>(vals.back());
    vals.pop_back();
    std::vector<std::size_t> shape =
        sample_shape.empty() ? std::vector<std::size_t>{vals.size()} : sample_shape;
    if (shape_numel(shape) != vals.size())
      throw FormatError(path + ": line " + std::to_string(lineno) + " has " +
                        std::to_string(vals.size()) + " features, shape wants " +
                        std::to_string(shape_numel(shape)));
    ds.push(Tensor(shape, std::move(vals)), label);
    max_label = std::max(max_label, label);
  }
  ds.class_count = static_cast<std::size_t>(max_label) + 1;
  return ds;
}

Dataset synth_gaussians(std::size_t K, std::size_t dim, std::size_t n_per_class,
                        double mean_separation, std::uint64_t seed) {
  if (K < 1 || dim < 1) throw std::invalid_argument("synth_gaussians: K and dim must be >= 1");
  Rng rng(seed);

  // Random directions, Gram-Schmidt orthonormalized when dim allows, so
  // pairwise mean distances are all mean_separation.
  std::vector<std::vector<double>> dirs;
  for (std::size_t c = 0; c < K; ++c) {
    std::vector<double> v(dim);
    for (;;) {
      for (double& x : v) x = rng.normal();
      if (dim >= K) {
        for (const auto& u : dirs) {
          double d = 0.0;
          for (std::size_t i = 0; i < dim; ++i) d += v[i] * u[i];
          for (std::size_t i = 0; i < dim; ++i) v[i] -= d * u[i];
        }
      }
      double n2 = 0.0;
      for (double x : v) n2 += x * x;
      if (n2 > 1e-12) {
        const double inv = 1.0 / std::sqrt(n2);
        for (double& x : v) x *= inv;
        break;
      }
    }
    dirs.push_back(std::move(v));
  }
  const double radius = mean_separation / std::sqrt(2.0);

  Dataset ds;
  ds.class_count = K;
  for (std::size_t c = 0; c < K; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      Tensor t({dim});
      for (std::size_t j = 0; j < dim; ++j) t.data[j] = radius * dirs[c][j] + rng.normal();
      ds.push(std::move(t), static_cast<int>(c));
    }
  }
  return ds;
}

Dataset synth_blob_images(std::size_t K, std::size_t side, std::size_t n_per_class,
                          std::uint64_t seed, double noise_sigma, double brightness_jitter,
                          double center_radius_frac, double center_jitter, double blob_sigma2) {
  Rng rng(seed);
  // one blob center per class, spread on a circle
  std::vector<std::pair<double, double>> centers;
  for (std::size_t c = 0; c < K; ++c) {
    const double a = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(K);
    const double r = static_cast<double>(side) * center_radius_frac;
    centers.emplace_back(side / 2.0 + r * std::cos(a), side / 2.0 + r * std::sin(a));
  }
  Dataset ds;
  ds.class_count = K;
  for (std::size_t c = 0; c < K; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      Tensor t({1, side, side});
      const double bright = rng.uniform(-brightness_jitter, brightness_jitter);
      const double cy = centers[c].second + rng.normal() * center_jitter;
      const double cx = centers[c].first + rng.normal() * center_jitter;
      for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < side; ++x) {
          const double d2 = (static_cast<double>(y) - cy) * (static_cast<double>(y) - cy) +
                            (static_cast<double>(x) - cx) * (static_cast<double>(x) - cx);
          double v = 0.15 + bright + 0.7 * std::exp(-d2 / blob_sigma2) + rng.normal() * noise_sigma;
          t.at3(0, y, x) = std::min(1.0, std::max(0.0, v));
        }
      ds.push(std::move(t), static_cast<int>(c));
    }
  }
  return ds;
}

Dataset synth_manifold_gaussians(std::size_t K, std::size_t latent_dim,
                                 std::size_t ambient_dim, std::size_t n_per_class,
                                 double mean_separation, double off_manifold_sigma,
                                 std::uint64_t seed) {
  if (ambient_dim < latent_dim)
    throw std::invalid_argument("synth_manifold_gaussians: ambient_dim < latent_dim");
  Dataset latent = synth_gaussians(K, latent_dim, n_per_class, mean_separation, seed);

  // seeded orthonormal ambient embedding (Gram-Schmidt on random columns)
  Rng rng(seed ^ 0x5eedbeefULL);
  std::vector<std::vector<double>> basis;
  for (std::size_t j = 0; j < latent_dim; ++j) {
    std::vector<double> v(ambient_dim);
    for (;;) {
      for (double& x : v) x = rng.normal();
      for (const auto& u : basis) {
        double d = 0.0;
        for (std::size_t i = 0; i < ambient_dim; ++i) d += v[i] * u[i];
        for (std::size_t i = 0; i < ambient_dim; ++i) v[i] -= d * u[i];
      }
      double n2 = 0.0;
      for (double x : v) n2 += x * x;
      if (n2 > 1e-12) {
        const double inv = 1.0 / std::sqrt(n2);
        for (double& x : v) x *= inv;
        break;
      }
    }
    basis.push_back(std::move(v));
  }

  Dataset ds;
  ds.class_count = K;
  for (std::size_t i = 0; i < latent.size(); ++i) {
    Tensor t({ambient_dim});
    for (std::size_t a = 0; a < ambient_dim; ++a) {
      double v = off_manifold_sigma * rng.normal();
      for (std::size_t j = 0; j < latent_dim; ++j) v += basis[j][a] * latent.samples[i].data[j];
      t.data[a] = v;
    }
    ds.push(std::move(t), latent.labels[i]);
  }
  return ds;
}

Dataset to_unit_box(const Dataset& ds, double scale) {
  Dataset out = ds;
  for (Tensor& s : out.samples)
    for (double& v : s.data) {
      v = 0.5 + scale * v;
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
    }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0)
    throw std::invalid_argument("split: fraction must be in [0,1]");
  Rng rng(seed);
  Dataset a, b;
  a.class_count = b.class_count = ds.class_count;
  a.provenance = b.provenance = ds.provenance;
  for (std::size_t c = 0; c < ds.class_count; ++c) {
    std::vector<std::size_t> idx = ds.indices_of_class(static_cast<int>(c));
    rng.shuffle(idx);
    const std::size_t take =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      Dataset& dst = (i < take) ? a : b;
      dst.push(ds.samples[idx[i]], ds.labels[idx[i]]);
    }
  }
  return {std::move(a), std::move(b)};
}

}  // namespace advlab::data
