#include "advlab/model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace advlab::io {

namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'L', 'A', 'B', '0', '1'};

enum class Kind : std::uint32_t { Network = 1, Tensor = 2, Mixture = 3, Bank = 4 };

class Writer {
 public:
  explicit Writer(const std::string& path) : f_(path, std::ios::binary) {
    if (!f_) throw std::runtime_error(path + ": cannot open for writing");
  }
  void magic(Kind kind) {
    f_.write(kMagic, 8);
    u32(static_cast<std::uint32_t>(kind));
  }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    f_.write(reinterpret_cast<char*>(b), 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    f_.write(reinterpret_cast<char*>(b), 8);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void f64v(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void shape(const std::vector<std::size_t>& s) {
    u64(s.size());
    for (std::size_t x : s) u64(x);
  }
  void tensor(const Tensor& t) {
    shape(t.shape);
    for (double x : t.data) f64(x);
  }
  void check(const std::string& path) {
    if (!f_) throw std::runtime_error(path + ": write failed");
  }

 private:
  std::ofstream f_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), f_(path, std::ios::binary) {
    if (!f_) throw std::runtime_error(path + ": cannot open");
  }
  void magic(Kind kind) {
    char m[8];
    f_.read(m, 8);
    if (!f_ || std::memcmp(m, kMagic, 8) != 0)
      throw std::runtime_error(path_ + ": bad magic (not an ADVLAB01 file)");
    const std::uint32_t k = u32();
    if (k != static_cast<std::uint32_t>(kind))
      throw std::runtime_error(path_ + ": wrong payload kind " + std::to_string(k));
  }
  std::uint32_t u32() {
    unsigned char b[4];
    f_.read(reinterpret_cast<char*>(b), 4);
    if (!f_) throw std::runtime_error(path_ + ": truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    f_.read(reinterpret_cast<char*>(b), 8);
    if (!f_) throw std::runtime_error(path_ + ": truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::vector<double> f64v() {
    const std::uint64_t n = u64();
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  std::vector<std::size_t> shape() {
    const std::uint64_t n = u64();
    std::vector<std::size_t> s(n);
    for (auto& x : s) x = static_cast<std::size_t>(u64());
    return s;
  }
  Tensor tensor() {
    std::vector<std::size_t> s = shape();
    std::vector<double> d(shape_numel(s));
    for (auto& x : d) x = f64();
    return Tensor(std::move(s), std::move(d));
  }

 private:
  std::string path_;
  std::ifstream f_;
};

void write_layer(Writer& w, const nn::Layer& l) {
  w.u32(static_cast<std::uint32_t>(l.kind));
  w.u64(l.in);
  w.u64(l.out);
  w.u64(l.in_c);
  w.u64(l.out_c);
  w.u64(l.kh);
  w.u64(l.kw);
  w.u64(l.pad);
  if (l.has_params()) {
    w.tensor(l.weights);
    w.tensor(l.bias);
  }
}

nn::Layer read_layer(Reader& r) {
  nn::Layer l;
  l.kind = static_cast<nn::LayerKind>(r.u32());
  l.in = r.u64();
  l.out = r.u64();
  l.in_c = r.u64();
  l.out_c = r.u64();
  l.kh = r.u64();
  l.kw = r.u64();
  l.pad = r.u64();
  if (l.has_params()) {
    l.weights = r.tensor();
    l.bias = r.tensor();
  }
  return l;
}

void write_mixture(Writer& w, const density::MixtureDensity& m) {
  w.u32(static_cast<std::uint32_t>(m.family));
  w.u32(static_cast<std::uint32_t>(m.cov_mode));
  w.u64(m.dim);
  w.f64(m.lognormal_offset);
  w.u64(m.comps.size());
  for (const auto& c : m.comps) {
    w.f64(c.weight);
    w.f64v(c.mean);
    w.f64v(c.cov);
  }
}

density::MixtureDensity read_mixture(Reader& r) {
  density::MixtureDensity m;
  m.family = static_cast<density::Family>(r.u32());
  m.cov_mode = static_cast<density::CovMode>(r.u32());
  m.dim = r.u64();
  m.lognormal_offset = r.f64();
  const std::uint64_t K = r.u64();
  m.comps.resize(K);
  for (auto& c : m.comps) {
    c.weight = r.f64();
    c.mean = r.f64v();
    c.cov = r.f64v();
  }
  return m;
}

}  // namespace

void save_network(const nn::Network& net, const std::string& path) {
  Writer w(path);
  w.magic(Kind::Network);
  w.shape(net.input_shape);
  w.u64(net.class_count);
  w.u64(net.layers.size());
  for (const auto& l : net.layers) write_layer(w, l);
  w.check(path);
}

nn::Network load_network(const std::string& path) {
  Reader r(path);
  r.magic(Kind::Network);
  std::vector<std::size_t> input_shape = r.shape();
  const std::uint64_t class_count = r.u64();
  const std::uint64_t n = r.u64();
  std::vector<nn::Layer> layers;
  layers.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) layers.push_back(read_layer(r));
  return nn::make_network(std::move(input_shape), std::move(layers),
                          static_cast<std::size_t>(class_count));
}

void save_tensor(const Tensor& t, const std::string& path) {
  Writer w(path);
  w.magic(Kind::Tensor);
  w.tensor(t);
  w.check(path);
}

Tensor load_tensor(const std::string& path) {
  Reader r(path);
  r.magic(Kind::Tensor);
  return r.tensor();
}

void save_mixture(const density::MixtureDensity& m, const std::string& path) {
  Writer w(path);
  w.magic(Kind::Mixture);
  write_mixture(w, m);
  w.check(path);
}

density::MixtureDensity load_mixture(const std::string& path) {
  Reader r(path);
  r.magic(Kind::Mixture);
  return read_mixture(r);
}

void save_bank(const ada::NullModelBank& bank, const std::string& path) {
  Writer w(path);
  w.magic(Kind::Bank);
  w.shape(bank.layer_ids);
  w.u64(bank.class_count);
  w.u32(static_cast<std::uint32_t>(bank.family));
  w.u64(bank.models.size());
  for (const auto& m : bank.models) write_mixture(w, m);
  w.check(path);
}

ada::NullModelBank load_bank(const std::string& path) {
  Reader r(path);
  r.magic(Kind::Bank);
  ada::NullModelBank bank;
  bank.layer_ids = r.shape();
  bank.class_count = r.u64();
  bank.family = static_cast<density::Family>(r.u32());
  const std::uint64_t n = r.u64();
  bank.models.resize(n);
  for (auto& m : bank.models) m = read_mixture(r);
  return bank;
}

}  // namespace advlab::io
