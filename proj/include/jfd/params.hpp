#pragma once

#include <cstdint>

#include "jfd/transform.hpp"

namespace jfd {

struct SchemeParams {
  QuantizationConfig quant = QuantizationConfig::from_milli(500);
  int threshold = 8;                   // N_T: zigzag slots below this are always decrypted
  std::uint32_t stripes = 1;           // H: contiguous raster stripes, one subkey each
  bool dc_encrypt = false;
  double trace_threshold = 0.2;        // tau, normalized distance
  double intelligibility_psnr = 25.0;  // dB
  std::uint32_t compact_key_bits = 128;

  // Throws invalid_input when a field is outside its documented range.
  void validate() const;

  friend bool operator==(const SchemeParams&, const SchemeParams&) = default;
};

}  // namespace jfd
