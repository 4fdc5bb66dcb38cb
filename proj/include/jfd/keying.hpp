#pragma once

// Keyed derivations, customer codewords, decryption grants and the customer
// registry.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jfd/params.hpp"
#include "jfd/transform.hpp"

namespace jfd {

using KeyId = std::array<std::uint8_t, 16>;
using Bytes = std::vector<std::uint8_t>;

std::string to_hex(std::span<const std::uint8_t> bytes);

class MasterKey {
 public:
  static constexpr std::size_t kDefaultBytes = 16;
  static constexpr std::size_t kMaxBytes = 32;

  // Secret length must be in [1, 32].
  static MasterKey from_secret(Bytes secret);
  // Deterministic key for experiments and tests.
  static MasterKey from_seed(std::uint64_t seed, std::size_t bytes = kDefaultBytes);
  // Fresh key from the system CSPRNG.
  static MasterKey generate(std::size_t bytes = kDefaultBytes);

  const KeyId& key_id() const { return key_id_; }
  std::span<const std::uint8_t> secret() const { return secret_; }

  friend bool operator==(const MasterKey&, const MasterKey&) = default;

 private:
  explicit MasterKey(Bytes secret);

  Bytes secret_;
  KeyId key_id_{};
};

// First 16 bytes of a keyed digest of the secret. Public; identifies a key
// without revealing it.
KeyId derive_key_id(std::span<const std::uint8_t> secret);

struct BlockMaterial {
  std::uint64_t sign_mask = 0;  // bit k = flip decision for zigzag slot k
  std::uint16_t dc_offset = 0;  // in [0, 2047]
};

// Keyed pseudorandom function over (secret, stripe, block, slot). The secret
// may be a master key or a compact grant key; both are first compressed into
// a 256-bit root key.
class Prf {
 public:
  explicit Prf(std::span<const std::uint8_t> secret);
  explicit Prf(const MasterKey& key) : Prf(key.secret()) {}

  BlockMaterial block(std::uint32_t stripe, std::uint64_t block_index) const;

  // Fills `out` with the keystream labelled `label`.
  void keystream(std::string_view label, std::span<std::uint8_t> out) const;
  std::array<std::uint8_t, 32> derive(std::string_view label, std::uint64_t a, std::uint64_t b = 0) const;

 private:
  std::array<std::uint8_t, 32> root_{};
};

bool derive_sign_bit(const Prf& key, std::uint32_t stripe, std::uint64_t block_index, int zigzag);
std::uint16_t derive_dc_offset(const Prf& key, std::uint32_t stripe, std::uint64_t block_index);

// Stripe h covers blocks [h*n/H, (h+1)*n/H) in raster order.
std::uint32_t stripe_of(std::uint64_t block_index, std::uint64_t block_count, std::uint32_t stripes);

// ---------------------------------------------------------------------------
// Codewords

struct FingerprintCode {
  std::uint32_t customer_index = 0;
  std::uint32_t length = 1;  // L_code in bits, 1..32
  std::uint64_t value = 0;   // codeword as an integer; bit 0 of the vector is its MSB

  int bit(std::uint32_t i) const { return static_cast<int>((value >> (length - 1 - i)) & 1u); }
  std::string bits() const;  // e.g. "00000101"
  std::string hex() const;   // zero-padded to ceil(length / 4) digits

  friend bool operator==(const FingerprintCode&, const FingerprintCode&) = default;
};

std::uint32_t codeword_length(std::uint64_t total_customers);
FingerprintCode assign_codeword(std::uint64_t customer_index, std::uint64_t total_customers);

// ---------------------------------------------------------------------------
// Grants

struct CoefficientRef {
  std::uint32_t block = 0;
  std::uint8_t zigzag = 0;
  friend bool operator==(const CoefficientRef&, const CoefficientRef&) = default;
  friend auto operator<=>(const CoefficientRef&, const CoefficientRef&) = default;
};

// Encrypted positions of a stream, in raster block order then ascending
// zigzag: the DC slot of every block when DC encryption is on (otherwise only
// nonzero DCs), plus every nonzero AC. Sign flips and DC offsets never change
// which AC slots are nonzero, so the plain and encrypted stream give the same
// layout.
std::vector<CoefficientRef> tape_slots(const CoefficientStream& stream, bool dc_encrypt);

struct Tape {
  std::vector<std::uint8_t> decrypt_bits;  // one 0/1 per slot; 0 where withheld
  std::vector<std::uint8_t> withheld;      // one 0/1 per slot
  std::vector<std::uint16_t> dc_offsets;   // one per block when DC encryption is on

  std::size_t slot_count() const { return decrypt_bits.size(); }
  friend bool operator==(const Tape&, const Tape&) = default;
};

enum class GrantMode : std::uint8_t { tape = 0, compact = 1 };

struct DecryptionGrant {
  GrantMode mode = GrantMode::tape;
  FingerprintCode customer;
  KeyId key_id{};
  bool dc_offsets_included = false;
  Tape tape;          // tape mode
  Bytes compact_key;  // compact mode

  friend bool operator==(const DecryptionGrant&, const DecryptionGrant&) = default;
};

// Published alongside compact grants: each issued tape wrapped under its
// compact key and indexed by a tag derived from that key.
struct CompactDirectory {
  struct Entry {
    std::array<std::uint8_t, 8> tag{};
    std::uint32_t customer_index = 0;
    Bytes wrapped;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  KeyId key_id{};
  std::vector<Entry> entries;

  const Entry* find(const std::array<std::uint8_t, 8>& tag) const;
  friend bool operator==(const CompactDirectory&, const CompactDirectory&) = default;
};

std::array<std::uint8_t, 8> compact_tag(std::span<const std::uint8_t> compact_key);

// Tape grant for `code`. `positions` must be the fingerprint positions of
// `stream` under `params`; codeword bit (i mod L) rides on positions[i].
DecryptionGrant build_grant(const MasterKey& master, const FingerprintCode& code,
                            std::span<const CoefficientRef> positions, const CoefficientStream& stream,
                            const SchemeParams& params);

// Compact grant: a params.compact_key_bits-bit key derived from (master,
// customer). The corresponding tape is wrapped into `directory`.
DecryptionGrant issue_compact_grant(const MasterKey& master, const FingerprintCode& code,
                                    std::span<const CoefficientRef> positions, const CoefficientStream& stream,
                                    const SchemeParams& params, CompactDirectory& directory);

DecryptionGrant build_grant(const MasterKey& master, const FingerprintCode& code,
                            std::span<const CoefficientRef> positions, const CoefficientStream& stream,
                            GrantMode mode, const SchemeParams& params, CompactDirectory* directory);

// Recovers the tape a grant authorizes for `stream`. A compact key with no
// directory entry expands to its own raw keystream (a wrong-key decryption).
Tape expand_grant(const DecryptionGrant& grant, const CoefficientStream& stream, bool dc_encrypt,
                  const CompactDirectory* directory);

Bytes serialize_tape(const Tape& tape);
Tape deserialize_tape(std::span<const std::uint8_t> payload, std::size_t slots, std::size_t dc_blocks);

// ---------------------------------------------------------------------------
// Customer registry

struct CustomerRecord {
  FingerprintCode code;
  std::string grant_file;
  std::string issued_at;  // ISO-8601 UTC

  friend bool operator==(const CustomerRecord&, const CustomerRecord&) = default;
};

class CustomerDatabase {
 public:
  // Throws duplicate_record on a repeated index or codeword, malformed_record
  // when the grant file name cannot be stored.
  void add(CustomerRecord record);
  const CustomerRecord* find(std::uint32_t customer_index) const;
  const std::vector<CustomerRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }

  friend bool operator==(const CustomerDatabase&, const CustomerDatabase&) = default;

 private:
  std::vector<CustomerRecord> records_;
};

// One record per line: index,codeword-hex,grant-file,timestamp
void save_database(const CustomerDatabase& db, const std::string& path);
// When `code_bits` is empty the codeword length is 4 x hex digits.
CustomerDatabase load_database(const std::string& path, std::optional<std::uint32_t> code_bits = std::nullopt);

std::string utc_timestamp();

}  // namespace jfd
