#include "jfd/core.hpp"

#include <algorithm>
#include <cmath>

#include "jfd/error.hpp"

namespace jfd {

namespace {

constexpr int kDcModulus = 2048;
constexpr int kDcBias = 1024;

int wrap_dc(int value) {
  int v = (value + kDcBias) % kDcModulus;
  if (v < 0) v += kDcModulus;
  return v - kDcBias;
}

void check_stream(const CoefficientStream& s) {
  if (s.width == 0 || s.height == 0) throw Error(Errc::invalid_input, "stream has a zero dimension");
  if (s.blocks.size() != s.expected_block_count()) {
    throw Error(Errc::invalid_input, "block count does not match dimensions");
  }
}

}  // namespace

void SchemeParams::validate() const {
  if (threshold < 1 || threshold > kBlockArea) throw Error(Errc::invalid_input, "N_T must be in [1, 64]");
  if (stripes < 1 || stripes > 255) throw Error(Errc::invalid_input, "stripe count must be in [1, 255]");
  if (!(trace_threshold >= 0.0 && trace_threshold < 0.5)) {
    throw Error(Errc::invalid_input, "trace threshold must be in [0, 0.5)");
  }
  if (compact_key_bits < 1 || compact_key_bits > 256) {
    throw Error(Errc::invalid_input, "compact key size must be 1..256 bits");
  }
}

FingerprintPositions enumerate_fingerprint_positions(const CoefficientStream& plain, const SchemeParams& params) {
  params.validate();
  FingerprintPositions positions;
  for (std::uint32_t b = 0; b < plain.blocks.size(); ++b) {
    const auto& block = plain.blocks[b];
    for (int k = params.threshold; k < kBlockArea; ++k) {
      if (block[k] != 0) positions.push_back({b, static_cast<std::uint8_t>(k)});
    }
  }
  return positions;
}

BigInt CapacityReport::max_customers() const { return BigInt(1) << bits; }

CapacityReport capacity(const CoefficientStream& plain, const SchemeParams& params) {
  const auto positions = enumerate_fingerprint_positions(plain, params);
  CapacityReport report;
  report.bits = positions.size();
  report.blocks = plain.blocks.size();
  report.stripe_bits.assign(params.stripes, 0);
  for (const auto& p : positions) ++report.stripe_bits[stripe_of(p.block, report.blocks, params.stripes)];
  return report;
}

BigInt combined_customer_bound(std::span<const std::uint64_t> part_bits) {
  std::uint64_t total = 0;
  for (auto b : part_bits) total += b;
  return BigInt(1) << total;
}

EncryptedStream encrypt(const CoefficientStream& plain, const MasterKey& master, const SchemeParams& params) {
  params.validate();
  check_stream(plain);
  if (!(plain.quant == params.quant)) {
    throw Error(Errc::parameter_mismatch, "stream was quantized with a different q than the scheme parameters");
  }

  EncryptedStream enc;
  enc.coeffs = plain;
  enc.params = params;
  enc.key_id = master.key_id();

  const Prf prf(master);
  const std::uint64_t n = plain.blocks.size();
  for (std::uint64_t b = 0; b < n; ++b) {
    const BlockMaterial m = prf.block(stripe_of(b, n, params.stripes), b);
    auto& block = enc.coeffs.blocks[b];
    if (params.dc_encrypt) block[0] = static_cast<std::int16_t>(std::clamp<int>(block[0], -kDcMax, kDcMax));
    for (int k = 0; k < kBlockArea; ++k) {
      if (block[k] != 0 && ((m.sign_mask >> k) & 1u)) block[k] = static_cast<std::int16_t>(-block[k]);
    }
    if (params.dc_encrypt) block[0] = static_cast<std::int16_t>(wrap_dc(block[0] + m.dc_offset));
  }
  return enc;
}

CoefficientStream joint_decrypt(const EncryptedStream& enc, const DecryptionGrant& grant, const SchemeParams& params,
                                const CompactDirectory* directory) {
  params.validate();
  check_stream(enc.coeffs);
  if (grant.key_id != enc.key_id) throw Error(Errc::wrong_grant, "grant was issued for a different key");
  if (!(params.quant == enc.params.quant) || params.dc_encrypt != enc.params.dc_encrypt ||
      params.stripes != enc.params.stripes) {
    throw Error(Errc::parameter_mismatch, "scheme parameters differ from the encrypted stream's");
  }
  if (grant.mode == GrantMode::tape && grant.dc_offsets_included != params.dc_encrypt) {
    throw Error(Errc::corrupted_grant, "grant DC-offset flag does not match the stream");
  }

  const Tape tape = expand_grant(grant, enc.coeffs, params.dc_encrypt, directory);
  const auto slots = tape_slots(enc.coeffs, params.dc_encrypt);

  CoefficientStream out = enc.coeffs;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto& block = out.blocks[slots[i].block];
    const int k = slots[i].zigzag;
    if (k == 0 && params.dc_encrypt) {
      block[0] = static_cast<std::int16_t>(wrap_dc(block[0] - tape.dc_offsets[slots[i].block]));
    }
    if (tape.decrypt_bits[i]) block[k] = static_cast<std::int16_t>(-block[k]);
  }
  return out;
}

std::size_t ExtractionResult::unknown_count() const {
  return static_cast<std::size_t>(std::count(decoded.begin(), decoded.end(), DecodedBit::unknown));
}

std::optional<std::uint64_t> ExtractionResult::value() const {
  std::uint64_t v = 0;
  for (auto bit : decoded) {
    if (bit == DecodedBit::unknown) return std::nullopt;
    v = (v << 1) | (bit == DecodedBit::one ? 1u : 0u);
  }
  return v;
}

ExtractionResult extract_fingerprint(const GrayImage& suspect, const CoefficientStream& plain,
                                     const MasterKey& master, const SchemeParams& params, std::uint32_t code_length) {
  params.validate();
  suspect.validate();
  if (code_length < 1 || code_length > 64) throw Error(Errc::invalid_input, "codeword length must be 1..64");
  if (suspect.width != plain.width || suspect.height != plain.height) {
    throw Error(Errc::invalid_input, "suspect dimensions differ from the original");
  }
  const CoefficientStream observed = forward_transform(suspect, params.quant);
  const auto positions = enumerate_fingerprint_positions(plain, params);
  const Prf prf(master);
  const std::uint64_t n = plain.blocks.size();

  ExtractionResult result;
  result.tallies.assign(code_length, {});
  std::uint32_t cached_block = UINT32_MAX;
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto& p = positions[i];
    if (p.block != cached_block) {
      cached_block = p.block;
      mask = prf.block(stripe_of(p.block, n, params.stripes), p.block).sign_mask;
    }
    BitTally& tally = result.tallies[i % code_length];
    const int original = plain.blocks[p.block][p.zigzag];
    const int seen = observed.blocks[p.block][p.zigzag];
    const bool can_flip = (mask >> p.zigzag) & 1u;
    if (seen == 0 || !can_flip) {
      // Zeroed by an attack, or a position whose sign the key never flips:
      // neither says anything about the codeword bit.
      ++tally.erasures;
    } else if ((seen > 0) == (original > 0)) {
      ++tally.votes0;
    } else {
      ++tally.votes1;
    }
  }

  result.decoded.resize(code_length);
  result.confidence.resize(code_length);
  for (std::uint32_t i = 0; i < code_length; ++i) {
    const auto& t = result.tallies[i];
    if (t.votes0 == t.votes1) {
      result.decoded[i] = DecodedBit::unknown;
      result.confidence[i] = 0.0;
    } else {
      result.decoded[i] = t.votes1 > t.votes0 ? DecodedBit::one : DecodedBit::zero;
      result.confidence[i] = std::abs(double(t.votes1) - double(t.votes0)) / double(t.votes0 + t.votes1);
    }
  }
  return result;
}

double codeword_distance(const ExtractionResult& result, const FingerprintCode& code) {
  if (code.length != result.decoded.size()) {
    throw Error(Errc::invalid_input, "codeword length differs from the extracted length");
  }
  double d = 0.0;
  for (std::uint32_t i = 0; i < code.length; ++i) {
    switch (result.decoded[i]) {
      case DecodedBit::unknown: d += 0.5; break;
      case DecodedBit::zero: d += code.bit(i) == 0 ? 0.0 : 1.0; break;
      case DecodedBit::one: d += code.bit(i) == 1 ? 0.0 : 1.0; break;
    }
  }
  return d / double(code.length);
}

TraceVerdict trace(const ExtractionResult& result, const CustomerDatabase& db, double tau) {
  TraceVerdict verdict;
  for (const auto& record : db.records()) {
    const double d = codeword_distance(result, record.code);
    const std::uint32_t idx = record.code.customer_index;
    if (!verdict.nearest || d < verdict.distance || (d == verdict.distance && idx < *verdict.nearest)) {
      verdict.nearest = idx;
      verdict.distance = d;
    }
  }
  if (verdict.nearest && verdict.distance <= tau) verdict.customer = verdict.nearest;
  return verdict;
}

}  // namespace jfd
