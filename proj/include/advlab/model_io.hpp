#pragma once

#include <string>

#include "advlab/ada.hpp"
#include "advlab/density.hpp"
#include "advlab/network.hpp"
#include "advlab/tensor.hpp"

namespace advlab::io {

// Versioned binary container: magic "ADVLAB01", a kind tag, then the
// payload with little-endian 64-bit sizes and IEEE-754 doubles.
// Round-trips are bit-exact.

void save_network(const nn::Network& net, const std::string& path);
nn::Network load_network(const std::string& path);

void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);

void save_mixture(const density::MixtureDensity& m, const std::string& path);
density::MixtureDensity load_mixture(const std::string& path);

void save_bank(const ada::NullModelBank& bank, const std::string& path);
ada::NullModelBank load_bank(const std::string& path);

}  // namespace advlab::io
