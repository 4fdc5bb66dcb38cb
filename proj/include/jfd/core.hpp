#pragma once

// Sign encryption at the server, joint decryption and fingerprinting at the
// client, fingerprint extraction and traitor tracing.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "jfd/keying.hpp"
#include "jfd/params.hpp"
#include "jfd/transform.hpp"

namespace jfd {

using BigInt = boost::multiprecision::cpp_int;

struct EncryptedStream {
  CoefficientStream coeffs;
  SchemeParams params;
  KeyId key_id{};

  friend bool operator==(const EncryptedStream&, const EncryptedStream&) = default;
};

using FingerprintPositions = std::vector<CoefficientRef>;

// Nonzero coefficients at zigzag index >= N_T, raster block order then
// ascending zigzag. Stripes are contiguous raster ranges, so per-stripe
// enumeration concatenated gives the same list.
FingerprintPositions enumerate_fingerprint_positions(const CoefficientStream& plain, const SchemeParams& params);

struct CapacityReport {
  std::uint64_t bits = 0;                  // |fingerprint positions|
  std::vector<std::uint64_t> stripe_bits;  // per stripe, sums to `bits`
  std::uint64_t blocks = 0;

  double bits_per_block() const { return blocks == 0 ? 0.0 : double(bits) / double(blocks); }
  // Customers supportable without repetition: 2^bits.
  BigInt max_customers() const;
};

CapacityReport capacity(const CoefficientStream& plain, const SchemeParams& params);

// 2^(sum of part capacities): independent parts multiply their customer bounds.
BigInt combined_customer_bound(std::span<const std::uint64_t> part_bits);

EncryptedStream encrypt(const CoefficientStream& plain, const MasterKey& master, const SchemeParams& params);

// Restores every encrypted sign except the grant's withheld positions; those
// keep the encrypted sign, which is the embedded fingerprint.
CoefficientStream joint_decrypt(const EncryptedStream& enc, const DecryptionGrant& grant, const SchemeParams& params,
                                const CompactDirectory* directory = nullptr);

struct BitTally {
  std::uint32_t votes0 = 0;
  std::uint32_t votes1 = 0;
  std::uint32_t erasures = 0;
};

enum class DecodedBit : std::uint8_t { zero = 0, one = 1, unknown = 2 };

struct ExtractionResult {
  std::vector<BitTally> tallies;
  std::vector<DecodedBit> decoded;
  std::vector<double> confidence;  // |votes1 - votes0| / (votes0 + votes1), 0 when unknown

  std::size_t unknown_count() const;
  // Decoded value when every bit is known.
  std::optional<std::uint64_t> value() const;
};

// Non-blind detector: the server's plain stream and master key tell which
// positions could have been flipped for each codeword bit.
ExtractionResult extract_fingerprint(const GrayImage& suspect, const CoefficientStream& plain,
                                     const MasterKey& master, const SchemeParams& params, std::uint32_t code_length);

struct TraceVerdict {
  std::optional<std::uint32_t> customer;  // empty = no match
  double distance = 1.0;                  // best normalized distance found
  std::optional<std::uint32_t> nearest;   // argmin, even when rejected
};

// Normalized distance: known bits count 0/1, unknown bits 0.5.
double codeword_distance(const ExtractionResult& result, const FingerprintCode& code);

TraceVerdict trace(const ExtractionResult& result, const CustomerDatabase& db, double tau);

}  // namespace jfd
