#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "jfd/io.hpp"
#include "jfd/transform.hpp"

namespace jfd::test {

inline std::string data_path(const std::string& name) { return std::string(JFD_DATA_DIR) + "/" + name; }

inline const GrayImage& camera() {
  static const GrayImage img = read_pgm(data_path("camera.pgm"));
  return img;
}

inline const GrayImage& astronaut() {
  static const GrayImage img = read_pgm(data_path("astronaut.pgm"));
  return img;
}

inline GrayImage flat_image(std::uint32_t w, std::uint32_t h, std::uint8_t v) {
  return GrayImage(w, h, v);
}

// Smooth random surface plus noise: enough texture for nonzero AC content
// without being white noise.
inline GrayImage random_image(std::mt19937_64& rng, std::uint32_t w, std::uint32_t h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fx = 0.02 + 0.3 * u(rng), fy = 0.02 + 0.3 * u(rng), phase = 6.28 * u(rng);
  const double amp = 20 + 100 * u(rng), base = 60 + 130 * u(rng), noise = 25 * u(rng);
  std::normal_distribution<double> n(0.0, 1.0);
  GrayImage img = flat_image(w, h, 0);
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      const double v = base + amp * std::sin(fx * x + phase) * std::cos(fy * y) + noise * n(rng);
      img.samples[std::size_t(y) * w + x] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return img;
}

inline GrayImage random_image(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> dim(1, 72);
  const auto w = dim(rng), h = dim(rng);
  return random_image(rng, w, h);
}

}  // namespace jfd::test
