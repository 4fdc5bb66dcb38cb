#include "jfd/keying.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "jfd/error.hpp"

namespace jfd {

namespace {

void ensure_sodium() {
  static const int ready = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium failed to initialise");
    return 0;
  }();
  (void)ready;
}

void put_le64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t get_le64(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | in[i];
  return v;
}

// BLAKE2b keyed with a 32-byte key over label || le64(a) || le64(b).
void keyed_hash(std::span<std::uint8_t> out, const std::array<std::uint8_t, 32>& key, std::string_view label,
                std::uint64_t a, std::uint64_t b) {
  crypto_generichash_state st;
  crypto_generichash_init(&st, key.data(), key.size(), out.size());
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(label.data()), label.size());
  std::uint8_t words[16];
  put_le64(words, a);
  put_le64(words + 8, b);
  crypto_generichash_update(&st, words, sizeof words);
  crypto_generichash_final(&st, out.data(), out.size());
}

constexpr char kKeyIdLabel[] = "jfd.key-identifier.v1...........";  // 32 bytes of key
static_assert(sizeof(kKeyIdLabel) - 1 == 32);

void check_bit(std::uint8_t v) {
  if (v > 1) throw Error(Errc::corrupted_grant, "tape bit out of range");
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

// ---------------------------------------------------------------------------

KeyId derive_key_id(std::span<const std::uint8_t> secret) {
  ensure_sodium();
  KeyId id{};
  crypto_generichash(id.data(), id.size(), secret.data(), secret.size(),
                     reinterpret_cast<const unsigned char*>(kKeyIdLabel), 32);
  return id;
}

MasterKey::MasterKey(Bytes secret) : secret_(std::move(secret)), key_id_(derive_key_id(secret_)) {}

MasterKey MasterKey::from_secret(Bytes secret) {
  if (secret.empty() || secret.size() > kMaxBytes) {
    throw Error(Errc::invalid_input, "master secret must be 1 to 32 bytes");
  }
  return MasterKey(std::move(secret));
}

MasterKey MasterKey::from_seed(std::uint64_t seed, std::size_t bytes) {
  if (bytes == 0 || bytes > kMaxBytes) throw Error(Errc::invalid_input, "master secret must be 1 to 32 bytes");
  std::uint8_t seed_bytes[8];
  put_le64(seed_bytes, seed);
  const Prf prf(std::span<const std::uint8_t>(seed_bytes, 8));
  Bytes secret(bytes);
  prf.keystream("master-from-seed", secret);
  return MasterKey(std::move(secret));
}

MasterKey MasterKey::generate(std::size_t bytes) {
  if (bytes == 0 || bytes > kMaxBytes) throw Error(Errc::invalid_input, "master secret must be 1 to 32 bytes");
  ensure_sodium();
  Bytes secret(bytes);
  randombytes_buf(secret.data(), secret.size());
  return MasterKey(std::move(secret));
}

Prf::Prf(std::span<const std::uint8_t> secret) {
  ensure_sodium();
  static constexpr std::string_view kLabel = "jfd.prf.root.v1";
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, root_.size());
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(kLabel.data()), kLabel.size());
  std::uint8_t len[8];
  put_le64(len, secret.size());
  crypto_generichash_update(&st, len, sizeof len);
  crypto_generichash_update(&st, secret.data(), secret.size());
  crypto_generichash_final(&st, root_.data(), root_.size());
}

std::array<std::uint8_t, 32> Prf::derive(std::string_view label, std::uint64_t a, std::uint64_t b) const {
  std::array<std::uint8_t, 32> out{};
  keyed_hash(out, root_, label, a, b);
  return out;
}

BlockMaterial Prf::block(std::uint32_t stripe, std::uint64_t block_index) const {
  const auto subkey = derive("stripe", stripe);
  std::array<std::uint8_t, 16> out{};
  keyed_hash(out, subkey, "block", block_index, 0);
  BlockMaterial m;
  m.sign_mask = get_le64(out.data());
  m.dc_offset = static_cast<std::uint16_t>((out[8] | (out[9] << 8)) & 0x7FF);
  return m;
}

void Prf::keystream(std::string_view label, std::span<std::uint8_t> out) const {
  std::array<std::uint8_t, 64> chunk{};
  std::size_t done = 0;
  for (std::uint64_t counter = 0; done < out.size(); ++counter) {
    keyed_hash(chunk, root_, label, counter, 0);
    const std::size_t n = std::min(chunk.size(), out.size() - done);
    std::memcpy(out.data() + done, chunk.data(), n);
    done += n;
  }
}

bool derive_sign_bit(const Prf& key, std::uint32_t stripe, std::uint64_t block_index, int zigzag) {
  if (zigzag < 0 || zigzag >= kBlockArea) throw Error(Errc::invalid_input, "zigzag index out of range");
  return (key.block(stripe, block_index).sign_mask >> zigzag) & 1u;
}

std::uint16_t derive_dc_offset(const Prf& key, std::uint32_t stripe, std::uint64_t block_index) {
  return key.block(stripe, block_index).dc_offset;
}

std::uint32_t stripe_of(std::uint64_t block_index, std::uint64_t block_count, std::uint32_t stripes) {
  if (block_count == 0 || stripes <= 1) return 0;
  return static_cast<std::uint32_t>((block_index * stripes) / block_count);
}

// ---------------------------------------------------------------------------

std::string FingerprintCode::bits() const {
  std::string out(length, '0');
  for (std::uint32_t i = 0; i < length; ++i) out[i] = bit(i) ? '1' : '0';
  return out;
}

std::string FingerprintCode::hex() const {
  const std::uint32_t digits = (length + 3) / 4;
  std::string out(digits, '0');
  static constexpr char kDigits[] = "0123456789abcdef";
  for (std::uint32_t i = 0; i < digits; ++i) out[digits - 1 - i] = kDigits[(value >> (4 * i)) & 15];
  return out;
}

std::uint32_t codeword_length(std::uint64_t total_customers) {
  std::uint32_t bits = 0;
  while (bits < 64 && (std::uint64_t{1} << bits) < total_customers) ++bits;
  return std::max<std::uint32_t>(1, bits);
}

FingerprintCode assign_codeword(std::uint64_t customer_index, std::uint64_t total_customers) {
  if (total_customers == 0 || customer_index >= total_customers) {
    throw Error(Errc::invalid_input, "customer index out of range");
  }
  if (total_customers > (std::uint64_t{1} << 32)) throw Error(Errc::invalid_input, "at most 2^32 customers");
  FingerprintCode code;
  code.customer_index = static_cast<std::uint32_t>(customer_index);
  code.length = codeword_length(total_customers);
  code.value = customer_index;
  return code;
}

// ---------------------------------------------------------------------------

std::vector<CoefficientRef> tape_slots(const CoefficientStream& stream, bool dc_encrypt) {
  std::vector<CoefficientRef> slots;
  for (std::uint32_t b = 0; b < stream.blocks.size(); ++b) {
    const auto& block = stream.blocks[b];
    for (int k = 0; k < kBlockArea; ++k) {
      if (block[k] != 0 || (k == 0 && dc_encrypt)) slots.push_back({b, static_cast<std::uint8_t>(k)});
    }
  }
  return slots;
}

const CompactDirectory::Entry* CompactDirectory::find(const std::array<std::uint8_t, 8>& tag) const {
  for (const auto& e : entries) {
    if (e.tag == tag) return &e;
  }
  return nullptr;
}

std::array<std::uint8_t, 8> compact_tag(std::span<const std::uint8_t> compact_key) {
  const auto digest = Prf(compact_key).derive("compact-tag", 0);
  std::array<std::uint8_t, 8> tag{};
  std::copy_n(digest.begin(), tag.size(), tag.begin());
  return tag;
}

DecryptionGrant build_grant(const MasterKey& master, const FingerprintCode& code,
                            std::span<const CoefficientRef> positions, const CoefficientStream& stream,
                            const SchemeParams& params) {
  params.validate();
  if (positions.size() < code.length) {
    throw Error(Errc::capacity, "codeword of " + std::to_string(code.length) + " bits exceeds capacity of " +
                                    std::to_string(positions.size()) + " positions");
  }
  const auto slots = tape_slots(stream, params.dc_encrypt);
  const std::uint64_t block_count = stream.blocks.size();
  const Prf prf(master);

  DecryptionGrant grant;
  grant.mode = GrantMode::tape;
  grant.customer = code;
  grant.key_id = master.key_id();
  grant.dc_offsets_included = params.dc_encrypt;
  grant.tape.decrypt_bits.resize(slots.size());
  grant.tape.withheld.assign(slots.size(), 0);

  // Both lists are in (block, zigzag) order, so a merge walk marks withheld slots.
  std::size_t s = 0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    while (s < slots.size() && slots[s] < positions[i]) ++s;
    if (s == slots.size() || slots[s] != positions[i]) {
      throw Error(Errc::invalid_input, "fingerprint position is not an encrypted coefficient");
    }
    if (code.bit(static_cast<std::uint32_t>(i % code.length))) grant.tape.withheld[s] = 1;
  }

  std::uint32_t cached_block = UINT32_MAX;
  BlockMaterial material;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].block != cached_block) {
      cached_block = slots[i].block;
      material = prf.block(stripe_of(cached_block, block_count, params.stripes), cached_block);
    }
    const auto bit = static_cast<std::uint8_t>((material.sign_mask >> slots[i].zigzag) & 1u);
    grant.tape.decrypt_bits[i] = grant.tape.withheld[i] ? 0 : bit;
  }

  if (params.dc_encrypt) {
    grant.tape.dc_offsets.resize(block_count);
    for (std::uint64_t b = 0; b < block_count; ++b) {
      grant.tape.dc_offsets[b] = prf.block(stripe_of(b, block_count, params.stripes), b).dc_offset;
    }
  }
  return grant;
}

namespace {

Bytes derive_compact_key(const MasterKey& master, std::uint32_t customer, std::uint64_t attempt, std::uint32_t bits) {
  const std::size_t n = (bits + 7) / 8;
  Bytes key(n);
  Prf(master).keystream("compact-key/" + std::to_string(customer) + "/" + std::to_string(attempt), key);
  if (bits % 8 != 0) key.back() &= static_cast<std::uint8_t>((1u << (bits % 8)) - 1);
  return key;
}

void xor_keystream(std::span<const std::uint8_t> compact_key, std::span<std::uint8_t> data) {
  Bytes pad(data.size());
  Prf(compact_key).keystream("compact-wrap", pad);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] ^= pad[i];
}

}  // namespace

DecryptionGrant issue_compact_grant(const MasterKey& master, const FingerprintCode& code,
                                    std::span<const CoefficientRef> positions, const CoefficientStream& stream,
                                    const SchemeParams& params, CompactDirectory& directory) {
  DecryptionGrant grant = build_grant(master, code, positions, stream, params);
  if (directory.entries.empty()) {
    directory.key_id = master.key_id();
  } else if (directory.key_id != master.key_id()) {
    throw Error(Errc::wrong_grant, "directory belongs to a different master key");
  }
  for (const auto& e : directory.entries) {
    if (e.customer_index == code.customer_index) throw Error(Errc::duplicate_record, "customer already issued");
  }
  if (params.compact_key_bits < 32 &&
      directory.entries.size() >= (std::uint64_t{1} << params.compact_key_bits)) {
    throw Error(Errc::infeasible_parameters, "compact key space exhausted");
  }

  // Distinct customers must hold distinct keys; re-derive on a collision.
  Bytes key;
  std::array<std::uint8_t, 8> tag{};
  for (std::uint64_t attempt = 0;; ++attempt) {
    key = derive_compact_key(master, code.customer_index, attempt, params.compact_key_bits);
    tag = compact_tag(key);
    if (directory.find(tag) == nullptr) break;
  }

  CompactDirectory::Entry entry;
  entry.tag = tag;
  entry.customer_index = code.customer_index;
  entry.wrapped = serialize_tape(grant.tape);
  xor_keystream(key, entry.wrapped);
  directory.entries.push_back(std::move(entry));

  grant.mode = GrantMode::compact;
  grant.tape = Tape{};
  grant.compact_key = std::move(key);
  return grant;
}

DecryptionGrant build_grant(const MasterKey& master, const FingerprintCode& code,
                            std::span<const CoefficientRef> positions, const CoefficientStream& stream,
                            GrantMode mode, const SchemeParams& params, CompactDirectory* directory) {
  if (mode == GrantMode::tape) return build_grant(master, code, positions, stream, params);
  if (directory == nullptr) throw Error(Errc::invalid_input, "compact grants need a directory");
  return issue_compact_grant(master, code, positions, stream, params, *directory);
}

Tape expand_grant(const DecryptionGrant& grant, const CoefficientStream& stream, bool dc_encrypt,
                  const CompactDirectory* directory) {
  const std::size_t slots = tape_slots(stream, dc_encrypt).size();
  const std::size_t dc_blocks = dc_encrypt ? stream.blocks.size() : 0;

  if (grant.mode == GrantMode::tape) {
    if (grant.tape.slot_count() != slots || grant.tape.withheld.size() != slots ||
        grant.tape.dc_offsets.size() != dc_blocks) {
      throw Error(Errc::corrupted_grant, "tape length does not match the stream");
    }
    return grant.tape;
  }

  if (grant.compact_key.empty()) throw Error(Errc::corrupted_grant, "compact grant without key");
  const CompactDirectory::Entry* entry = nullptr;
  if (directory != nullptr) {
    if (directory->key_id != grant.key_id) throw Error(Errc::wrong_grant, "directory key id mismatch");
    entry = directory->find(compact_tag(grant.compact_key));
  }
  if (entry != nullptr) {
    Bytes payload = entry->wrapped;
    xor_keystream(grant.compact_key, payload);
    return deserialize_tape(payload, slots, dc_blocks);
  }

  // Unknown key: its keystream is used as if it were the tape.
  Tape tape;
  Bytes raw((slots + 7) / 8 + 2 * dc_blocks);
  Prf(grant.compact_key).keystream("compact-raw", raw);
  tape.decrypt_bits.resize(slots);
  tape.withheld.assign(slots, 0);
  for (std::size_t i = 0; i < slots; ++i) tape.decrypt_bits[i] = (raw[i / 8] >> (i % 8)) & 1u;
  tape.dc_offsets.resize(dc_blocks);
  const std::size_t base = (slots + 7) / 8;
  for (std::size_t b = 0; b < dc_blocks; ++b) {
    tape.dc_offsets[b] = static_cast<std::uint16_t>((raw[base + 2 * b] | (raw[base + 2 * b + 1] << 8)) & 0x7FF);
  }
  return tape;
}

Bytes serialize_tape(const Tape& tape) {
  const std::size_t n = tape.slot_count();
  const std::size_t bitmap = (n + 7) / 8;
  Bytes out(2 * bitmap + 2 * tape.dc_offsets.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    out[i / 8] |= static_cast<std::uint8_t>(tape.decrypt_bits[i] << (i % 8));
    out[bitmap + i / 8] |= static_cast<std::uint8_t>(tape.withheld[i] << (i % 8));
  }
  for (std::size_t b = 0; b < tape.dc_offsets.size(); ++b) {
    out[2 * bitmap + 2 * b] = static_cast<std::uint8_t>(tape.dc_offsets[b]);
    out[2 * bitmap + 2 * b + 1] = static_cast<std::uint8_t>(tape.dc_offsets[b] >> 8);
  }
  return out;
}

Tape deserialize_tape(std::span<const std::uint8_t> payload, std::size_t slots, std::size_t dc_blocks) {
  const std::size_t bitmap = (slots + 7) / 8;
  if (payload.size() != 2 * bitmap + 2 * dc_blocks) {
    throw Error(Errc::corrupted_grant, "tape payload size does not match the stream");
  }
  Tape tape;
  tape.decrypt_bits.resize(slots);
  tape.withheld.resize(slots);
  for (std::size_t i = 0; i < slots; ++i) {
    tape.decrypt_bits[i] = (payload[i / 8] >> (i % 8)) & 1u;
    tape.withheld[i] = (payload[bitmap + i / 8] >> (i % 8)) & 1u;
    if (tape.withheld[i] && tape.decrypt_bits[i]) throw Error(Errc::corrupted_grant, "withheld slot carries a bit");
  }
  tape.dc_offsets.resize(dc_blocks);
  for (std::size_t b = 0; b < dc_blocks; ++b) {
    const std::uint16_t v = payload[2 * bitmap + 2 * b] | (payload[2 * bitmap + 2 * b + 1] << 8);
    if (v > 2047) throw Error(Errc::corrupted_grant, "DC offset out of range");
    tape.dc_offsets[b] = v;
  }
  for (auto v : tape.decrypt_bits) check_bit(v);
  return tape;
}

// ---------------------------------------------------------------------------

void CustomerDatabase::add(CustomerRecord record) {
  if (record.grant_file.find_first_of(",\n\r") != std::string::npos ||
      record.issued_at.find_first_of(",\n\r") != std::string::npos) {
    throw Error(Errc::malformed_record, "fields may not contain commas or line breaks");
  }
  for (const auto& r : records_) {
    if (r.code.customer_index == record.code.customer_index) {
      throw Error(Errc::duplicate_record, "customer " + std::to_string(r.code.customer_index) + " already present");
    }
    if (r.code.value == record.code.value && r.code.length == record.code.length) {
      throw Error(Errc::duplicate_record, "codeword " + r.code.hex() + " already issued");
    }
  }
  records_.push_back(std::move(record));
}

const CustomerRecord* CustomerDatabase::find(std::uint32_t customer_index) const {
  for (const auto& r : records_) {
    if (r.code.customer_index == customer_index) return &r;
  }
  return nullptr;
}

void save_database(const CustomerDatabase& db, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + tmp);
    for (const auto& r : db.records()) {
      out << r.code.customer_index << ',' << r.code.hex() << ',' << r.grant_file << ',' << r.issued_at << '\n';
    }
    if (!out) throw Error(Errc::io, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io, "cannot replace " + path + ": " + ec.message());
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool parse_decimal_u32(const std::string& s, std::uint32_t& out) {
  if (s.empty() || s.size() > 10) return false;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + std::uint64_t(c - '0');
  }
  if (v > UINT32_MAX) return false;
  out = static_cast<std::uint32_t>(v);
  return true;
}

bool parse_hex_u64(const std::string& s, std::uint64_t& out) {
  if (s.empty() || s.size() > 16) return false;
  std::uint64_t v = 0;
  for (char c : s) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else return false;
    v = (v << 4) | std::uint64_t(d);
  }
  out = v;
  return true;
}

}  // namespace

CustomerDatabase load_database(const std::string& path, std::optional<std::uint32_t> code_bits) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open " + path);
  CustomerDatabase db;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto fields = split_fields(line);
    if (fields.size() != 4) throw Error(Errc::malformed_record, where + ": expected 4 fields");
    CustomerRecord r;
    if (!parse_decimal_u32(fields[0], r.code.customer_index)) {
      throw Error(Errc::malformed_record, where + ": bad customer index");
    }
    if (!parse_hex_u64(fields[1], r.code.value)) throw Error(Errc::malformed_record, where + ": bad codeword");
    r.code.length = code_bits.value_or(static_cast<std::uint32_t>(4 * fields[1].size()));
    if (r.code.length == 0 || r.code.length > 64 || (r.code.length + 3) / 4 != fields[1].size() ||
        (r.code.length < 64 && (r.code.value >> r.code.length) != 0)) {
      throw Error(Errc::malformed_record, where + ": codeword does not fit its length");
    }
    r.grant_file = fields[2];
    r.issued_at = fields[3];
    if (r.issued_at.empty()) throw Error(Errc::malformed_record, where + ": missing timestamp");
    db.add(std::move(r));
  }
  return db;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace jfd
