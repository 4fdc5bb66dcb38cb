#pragma once

// On-disk formats: binary PGM images, the JFD1 coefficient container, grant
// files, compact-key directories and raw key files. All multi-byte integers
// are little-endian.

#include <array>
#include <cstdint>
#include <string>

#include "jfd/core.hpp"
#include "jfd/keying.hpp"
#include "jfd/transform.hpp"

namespace jfd {

GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& image, const std::string& path);

GrayImage parse_pgm(std::span<const std::uint8_t> data);
Bytes encode_pgm(const GrayImage& image);

// Container layout (40-byte header, then block_count x 64 int16 in zigzag
// order):
//   0  "JFD1"     4  version (1)   5  width u32    9  height u32
//   13 q x 1000   17 N_T u8        18 H u8         19 flags u8 (bit 0 = DC encryption)
//   20 key_id[16] 36 block count u32
// A plain (unencrypted) stream is stored with N_T = 0 and an all-zero key id.
struct ContainerHeader {
  static constexpr std::array<std::uint8_t, 4> kMagic = {'J', 'F', 'D', '1'};
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kSize = 40;

  std::uint8_t version = kVersion;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t q_milli = 0;
  std::uint8_t threshold = 0;
  std::uint8_t stripes = 1;
  std::uint8_t flags = 0;
  KeyId key_id{};
  std::uint32_t block_count = 0;

  bool encrypted() const { return threshold != 0; }
  friend bool operator==(const ContainerHeader&, const ContainerHeader&) = default;
};

struct Container {
  ContainerHeader header;
  CoefficientStream stream;

  // Scheme parameters recorded in the header (defaults for the fields the
  // header does not carry). Throws invalid_input for a plain container.
  SchemeParams params() const;
  EncryptedStream encrypted_stream() const;
};

Bytes encode_container(const EncryptedStream& enc);
Bytes encode_container(const CoefficientStream& plain);
Container decode_container(std::span<const std::uint8_t> data);

void write_container(const EncryptedStream& enc, const std::string& path);
void write_container(const CoefficientStream& plain, const std::string& path);
Container read_container(const std::string& path);

// Grant file: "JFG1", version, mode, flags (bit 0 = DC offsets), key id,
// customer index u32, codeword length u8, codeword value u64, then either
// slot count u32 + DC block count u32 + tape payload (tape mode) or key
// length u8 + key bytes (compact mode).
Bytes encode_grant(const DecryptionGrant& grant);
DecryptionGrant decode_grant(std::span<const std::uint8_t> data);
void write_grant(const DecryptionGrant& grant, const std::string& path);
DecryptionGrant read_grant(const std::string& path);

// Directory file: "JFDD", version, key id, entry count u32, then per entry
// tag[8], customer index u32, payload length u32, payload.
Bytes encode_directory(const CompactDirectory& dir);
CompactDirectory decode_directory(std::span<const std::uint8_t> data);
void write_directory(const CompactDirectory& dir, const std::string& path);
CompactDirectory read_directory(const std::string& path);

// Key files hold the raw secret bytes.
MasterKey read_key_file(const std::string& path);
void write_key_file(const MasterKey& key, const std::string& path);

}  // namespace jfd
