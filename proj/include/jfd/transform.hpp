#pragma once

// 8x8 block DCT pipeline: level shift, orthonormal DCT-II, JPEG luminance
// quantization scaled by a factor q, zigzag ordering.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace jfd {

inline constexpr int kBlockSide = 8;
inline constexpr int kBlockArea = 64;

inline constexpr int kDcMin = -1024;
inline constexpr int kDcMax = 1023;

struct GrayImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> samples;  // row-major

  GrayImage() = default;
  GrayImage(std::uint32_t w, std::uint32_t h, std::uint8_t fill = 0)
      : width(w), height(h), samples(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(std::uint32_t x, std::uint32_t y) const { return samples[std::size_t(y) * width + x]; }
  std::uint8_t& at(std::uint32_t x, std::uint32_t y) { return samples[std::size_t(y) * width + x]; }

  bool empty() const { return width == 0 || height == 0; }

  // Throws invalid_input on zero dimensions or a sample count mismatch.
  void validate() const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

// Quantization factor held as fixed point with three decimal digits so that
// effective steps (and therefore every coefficient) are bit-reproducible.
class QuantizationConfig {
 public:
  // Standard JPEG luminance table, row-major (natural) order.
  static const std::array<std::uint16_t, kBlockArea> kJpegLuminance;

  QuantizationConfig();
  static QuantizationConfig from_factor(double q);
  static QuantizationConfig from_milli(std::uint32_t q_milli);

  std::uint32_t q_milli() const { return q_milli_; }
  double factor() const { return q_milli_ / 1000.0; }
  const std::array<std::uint16_t, kBlockArea>& base_table() const { return base_; }

  // max(1, round(base * q)) for zigzag slot k.
  int step(int zigzag) const { return steps_[zigzag]; }
  const std::array<int, kBlockArea>& steps() const { return steps_; }

  friend bool operator==(const QuantizationConfig& a, const QuantizationConfig& b) {
    return a.q_milli_ == b.q_milli_ && a.base_ == b.base_;
  }

 private:
  QuantizationConfig(std::uint32_t q_milli, const std::array<std::uint16_t, kBlockArea>& base);

  std::uint32_t q_milli_;
  std::array<std::uint16_t, kBlockArea> base_;
  std::array<int, kBlockArea> steps_;
};

struct QuantizedBlock {
  std::array<std::int16_t, kBlockArea> coeffs{};  // zigzag order, index 0 = DC

  std::int16_t& operator[](int k) { return coeffs[k]; }
  std::int16_t operator[](int k) const { return coeffs[k]; }

  friend bool operator==(const QuantizedBlock&, const QuantizedBlock&) = default;
};

struct CoefficientStream {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  QuantizationConfig quant;
  std::vector<QuantizedBlock> blocks;  // raster order

  std::uint32_t blocks_across() const { return (width + 7) / 8; }
  std::uint32_t blocks_down() const { return (height + 7) / 8; }
  std::size_t expected_block_count() const { return std::size_t(blocks_across()) * blocks_down(); }

  friend bool operator==(const CoefficientStream&, const CoefficientStream&) = default;
};

struct BlockPosition {
  int row;
  int col;
  friend bool operator==(const BlockPosition&, const BlockPosition&) = default;
};

int zigzag_index(int row, int col);
BlockPosition zigzag_position(int index);

CoefficientStream forward_transform(const GrayImage& image, const QuantizationConfig& quant);
GrayImage inverse_transform(const CoefficientStream& stream);

int count_nonzero(const QuantizedBlock& block);
double mean_nonzero(const CoefficientStream& stream);

// Lower-level pieces, exposed for analysis code and tests. Arrays are 8x8
// row-major in the spatial/frequency domain unless noted.
using RealBlock = std::array<double, kBlockArea>;

RealBlock forward_dct(const RealBlock& spatial);
RealBlock inverse_dct(const RealBlock& frequency);
// Multiplies by the effective steps and undoes the zigzag scan.
RealBlock dequantize(const QuantizedBlock& block, const QuantizationConfig& quant);
// Quantizes one already-transformed block (round half away from zero,
// DC clamped to [-1023, 1023], AC to [-32767, 32767]).
QuantizedBlock quantize(const RealBlock& frequency, const QuantizationConfig& quant);

double round_half_away(double v);

}  // namespace jfd
