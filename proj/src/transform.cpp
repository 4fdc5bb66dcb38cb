#include "jfd/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "jfd/error.hpp"

namespace jfd {

namespace {

// Row-major position -> zigzag index.
constexpr std::array<std::uint8_t, kBlockArea> kZigzagOf = {
    0,  1,  5,  6,  14, 15, 27, 28,  //
    2,  4,  7,  13, 16, 26, 29, 42,  //
    3,  8,  12, 17, 25, 30, 41, 43,  //
    9,  11, 18, 24, 31, 40, 44, 53,  //
    10, 19, 23, 32, 39, 45, 52, 54,  //
    20, 22, 33, 38, 46, 51, 55, 60,  //
    21, 34, 37, 47, 50, 56, 59, 61,  //
    35, 36, 48, 49, 57, 58, 62, 63,
};

constexpr std::array<std::uint8_t, kBlockArea> make_natural_of() {
  std::array<std::uint8_t, kBlockArea> out{};
  for (int i = 0; i < kBlockArea; ++i) out[kZigzagOf[i]] = static_cast<std::uint8_t>(i);
  return out;
}

constexpr std::array<std::uint8_t, kBlockArea> kNaturalOf = make_natural_of();

// basis[u][x] = c(u) * cos((2x + 1) u pi / 16), c(0) = sqrt(1/8), c(u) = sqrt(2/8).
struct DctBasis {
  double m[kBlockSide][kBlockSide];
  DctBasis() {
    for (int u = 0; u < kBlockSide; ++u) {
      const double c = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < kBlockSide; ++x) {
        m[u][x] = c * std::cos((2.0 * x + 1.0) * u * std::numbers::pi / 16.0);
      }
    }
  }
};

const DctBasis& basis() {
  static const DctBasis b;
  return b;
}

std::uint8_t clamp_pixel(double v) {
  return static_cast<std::uint8_t>(std::clamp(round_half_away(v), 0.0, 255.0));
}

}  // namespace

const std::array<std::uint16_t, kBlockArea> QuantizationConfig::kJpegLuminance = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

void GrayImage::validate() const {
  if (width == 0 || height == 0) throw Error(Errc::invalid_input, "image has a zero dimension");
  if (samples.size() != std::size_t(width) * height) {
    throw Error(Errc::invalid_input, "sample count does not match width x height");
  }
}

QuantizationConfig::QuantizationConfig() : QuantizationConfig(1000, kJpegLuminance) {}

QuantizationConfig::QuantizationConfig(std::uint32_t q_milli, const std::array<std::uint16_t, kBlockArea>& base)
    : q_milli_(q_milli), base_(base) {
  for (int k = 0; k < kBlockArea; ++k) {
    const std::uint64_t scaled = std::uint64_t(base_[kNaturalOf[k]]) * q_milli_;
    steps_[k] = std::max<int>(1, static_cast<int>((scaled + 500) / 1000));
  }
}

QuantizationConfig QuantizationConfig::from_milli(std::uint32_t q_milli) {
  if (q_milli == 0) throw Error(Errc::invalid_input, "quantization factor must be positive");
  return QuantizationConfig(q_milli, kJpegLuminance);
}

QuantizationConfig QuantizationConfig::from_factor(double q) {
  if (!(q > 0.0) || !std::isfinite(q) || q > 4.0e6) {
    throw Error(Errc::invalid_input, "quantization factor must be positive and finite");
  }
  const auto milli = static_cast<std::uint32_t>(std::llround(q * 1000.0));
  if (milli == 0) throw Error(Errc::invalid_input, "quantization factor below 0.001");
  return from_milli(milli);
}

double round_half_away(double v) { return std::round(v); }

int zigzag_index(int row, int col) {
  if (row < 0 || row >= kBlockSide || col < 0 || col >= kBlockSide) {
    throw Error(Errc::invalid_input, "block coordinate out of range");
  }
  return kZigzagOf[row * kBlockSide + col];
}

BlockPosition zigzag_position(int index) {
  if (index < 0 || index >= kBlockArea) throw Error(Errc::invalid_input, "zigzag index out of range");
  const int natural = kNaturalOf[index];
  return {natural / kBlockSide, natural % kBlockSide};
}

RealBlock forward_dct(const RealBlock& spatial) {
  const auto& b = basis().m;
  RealBlock tmp{};
  // rows: tmp[y][u] = sum_x b[u][x] s[y][x]
  for (int y = 0; y < kBlockSide; ++y) {
    for (int u = 0; u < kBlockSide; ++u) {
      double acc = 0.0;
      for (int x = 0; x < kBlockSide; ++x) acc += b[u][x] * spatial[y * kBlockSide + x];
      tmp[y * kBlockSide + u] = acc;
    }
  }
  RealBlock out{};
  for (int v = 0; v < kBlockSide; ++v) {
    for (int u = 0; u < kBlockSide; ++u) {
      double acc = 0.0;
      for (int y = 0; y < kBlockSide; ++y) acc += b[v][y] * tmp[y * kBlockSide + u];
      out[v * kBlockSide + u] = acc;
    }
  }
  return out;
}

RealBlock inverse_dct(const RealBlock& frequency) {
  const auto& b = basis().m;
  RealBlock tmp{};
  for (int v = 0; v < kBlockSide; ++v) {
    for (int x = 0; x < kBlockSide; ++x) {
      double acc = 0.0;
      for (int u = 0; u < kBlockSide; ++u) acc += b[u][x] * frequency[v * kBlockSide + u];
      tmp[v * kBlockSide + x] = acc;
    }
  }
  RealBlock out{};
  for (int y = 0; y < kBlockSide; ++y) {
    for (int x = 0; x < kBlockSide; ++x) {
      double acc = 0.0;
      for (int v = 0; v < kBlockSide; ++v) acc += b[v][y] * tmp[v * kBlockSide + x];
      out[y * kBlockSide + x] = acc;
    }
  }
  return out;
}

QuantizedBlock quantize(const RealBlock& frequency, const QuantizationConfig& quant) {
  QuantizedBlock block;
  for (int k = 0; k < kBlockArea; ++k) {
    double v = round_half_away(frequency[kNaturalOf[k]] / quant.step(k));
    // Symmetric ranges so that a sign flip never leaves the representable set.
    v = k == 0 ? std::clamp(v, double(-kDcMax), double(kDcMax)) : std::clamp(v, -32767.0, 32767.0);
    block[k] = static_cast<std::int16_t>(v);
  }
  return block;
}

RealBlock dequantize(const QuantizedBlock& block, const QuantizationConfig& quant) {
  RealBlock out{};
  for (int k = 0; k < kBlockArea; ++k) out[kNaturalOf[k]] = double(block[k]) * quant.step(k);
  return out;
}

CoefficientStream forward_transform(const GrayImage& image, const QuantizationConfig& quant) {
  image.validate();
  CoefficientStream stream;
  stream.width = image.width;
  stream.height = image.height;
  stream.quant = quant;
  stream.blocks.resize(stream.expected_block_count());

  const std::uint32_t across = stream.blocks_across();
  for (std::uint32_t by = 0; by < stream.blocks_down(); ++by) {
    for (std::uint32_t bx = 0; bx < across; ++bx) {
      RealBlock spatial{};
      for (int y = 0; y < kBlockSide; ++y) {
        // Edge replication: coordinates past the border repeat the last row/column.
        const std::uint32_t sy = std::min(by * 8 + y, image.height - 1);
        for (int x = 0; x < kBlockSide; ++x) {
          const std::uint32_t sx = std::min(bx * 8 + x, image.width - 1);
          spatial[y * kBlockSide + x] = double(image.at(sx, sy)) - 128.0;
        }
      }
      stream.blocks[std::size_t(by) * across + bx] = quantize(forward_dct(spatial), quant);
    }
  }
  return stream;
}

GrayImage inverse_transform(const CoefficientStream& stream) {
  if (stream.width == 0 || stream.height == 0) throw Error(Errc::invalid_input, "stream has a zero dimension");
  if (stream.blocks.size() != stream.expected_block_count()) {
    throw Error(Errc::invalid_input, "block count does not match dimensions");
  }
  GrayImage image(stream.width, stream.height);
  const std::uint32_t across = stream.blocks_across();
  for (std::uint32_t by = 0; by < stream.blocks_down(); ++by) {
    for (std::uint32_t bx = 0; bx < across; ++bx) {
      const RealBlock spatial = inverse_dct(dequantize(stream.blocks[std::size_t(by) * across + bx], stream.quant));
      for (int y = 0; y < kBlockSide; ++y) {
        const std::uint32_t iy = by * 8 + y;
        if (iy >= image.height) break;
        for (int x = 0; x < kBlockSide; ++x) {
          const std::uint32_t ix = bx * 8 + x;
          if (ix >= image.width) break;
          image.at(ix, iy) = clamp_pixel(spatial[y * kBlockSide + x] + 128.0);
        }
      }
    }
  }
  return image;
}

int count_nonzero(const QuantizedBlock& block) {
  return static_cast<int>(std::count_if(block.coeffs.begin(), block.coeffs.end(), [](std::int16_t c) { return c != 0; }));
}

double mean_nonzero(const CoefficientStream& stream) {
  if (stream.blocks.empty()) return 0.0;
  std::uint64_t total = 0;
  for (const auto& b : stream.blocks) total += count_nonzero(b);
  return double(total) / double(stream.blocks.size());
}

}  // namespace jfd
