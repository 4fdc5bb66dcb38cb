#include "jfd/io.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "byte_io.hpp"
#include "jfd/error.hpp"

namespace jfd {

namespace detail {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(Errc::io, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io, "cannot replace " + path + ": " + ec.message());
}

}  // namespace detail

using detail::ByteReader;
using detail::ByteWriter;

// ---------------------------------------------------------------------------
// PGM

namespace {

class PgmHeaderParser {
 public:
  explicit PgmHeaderParser(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint64_t number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= data_.size()) throw Error(Errc::truncated, std::string("PGM header ends before ") + what);
    if (!std::isdigit(data_[pos_])) throw Error(Errc::unsupported_format, std::string("bad PGM ") + what);
    std::uint64_t v = 0;
    while (pos_ < data_.size() && std::isdigit(data_[pos_])) {
      v = v * 10 + (data_[pos_++] - '0');
      if (v > 0xFFFFFFFFull) throw Error(Errc::unsupported_format, std::string("PGM ") + what + " too large");
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= data_.size()) throw Error(Errc::truncated, "PGM header ends before raster");
    if (!std::isspace(data_[pos_])) throw Error(Errc::unsupported_format, "PGM maxval not followed by whitespace");
    return pos_ + 1;
  }

  std::size_t pos_ = 2;

 private:
  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      if (std::isspace(data_[pos_])) {
        ++pos_;
      } else if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> data_;
};

}  // namespace

GrayImage parse_pgm(std::span<const std::uint8_t> data) {
  if (data.size() < 2 || data[0] != 'P') throw Error(Errc::bad_magic, "not a PNM file");
  if (data[1] != '5') {
    if (data[1] >= '1' && data[1] <= '7') {
      throw Error(Errc::unsupported_format, std::string("only binary P5 PGM is supported, got P") + char(data[1]));
    }
    throw Error(Errc::bad_magic, "not a PNM file");
  }
  PgmHeaderParser p(data);
  const auto width = p.number("width");
  const auto height = p.number("height");
  const auto maxval = p.number("maxval");
  if (width == 0 || height == 0) throw Error(Errc::invalid_input, "PGM has a zero dimension");
  if (maxval != 255) throw Error(Errc::unsupported_depth, "maxval " + std::to_string(maxval) + " (need 255)");
  const std::size_t start = p.raster_start();
  const std::size_t n = std::size_t(width) * height;
  if (data.size() - start < n) throw Error(Errc::truncated, "PGM raster is shorter than width x height");

  GrayImage image(static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height));
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(start), n, image.samples.begin());
  return image;
}

Bytes encode_pgm(const GrayImage& image) {
  image.validate();
  ByteWriter w;
  w.text("P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n");
  w.bytes(image.samples);
  return w.data();
}

GrayImage read_pgm(const std::string& path) { return parse_pgm(detail::read_file(path)); }

void write_pgm(const GrayImage& image, const std::string& path) { detail::write_file(path, encode_pgm(image)); }

// ---------------------------------------------------------------------------
// Container

namespace {

Bytes encode_container(const ContainerHeader& h, const CoefficientStream& s) {
  ByteWriter w;
  w.bytes(ContainerHeader::kMagic);
  w.u8(h.version);
  w.u32(h.width);
  w.u32(h.height);
  w.u32(h.q_milli);
  w.u8(h.threshold);
  w.u8(h.stripes);
  w.u8(h.flags);
  w.bytes(h.key_id);
  w.u32(h.block_count);
  for (const auto& block : s.blocks) {
    for (auto c : block.coeffs) w.i16(c);
  }
  return w.data();
}

ContainerHeader header_for(const CoefficientStream& s) {
  if (s.width == 0 || s.height == 0 || s.blocks.size() != s.expected_block_count()) {
    throw Error(Errc::invalid_input, "stream is not well formed");
  }
  ContainerHeader h;
  h.width = s.width;
  h.height = s.height;
  h.q_milli = s.quant.q_milli();
  h.block_count = static_cast<std::uint32_t>(s.blocks.size());
  return h;
}

}  // namespace

SchemeParams Container::params() const {
  if (!header.encrypted()) throw Error(Errc::invalid_input, "container holds a plain stream");
  SchemeParams p;
  p.quant = stream.quant;
  p.threshold = header.threshold;
  p.stripes = header.stripes;
  p.dc_encrypt = (header.flags & 1u) != 0;
  return p;
}

EncryptedStream Container::encrypted_stream() const {
  EncryptedStream enc;
  enc.coeffs = stream;
  enc.params = params();
  enc.key_id = header.key_id;
  return enc;
}

Bytes encode_container(const EncryptedStream& enc) {
  enc.params.validate();
  ContainerHeader h = header_for(enc.coeffs);
  h.threshold = static_cast<std::uint8_t>(enc.params.threshold);
  h.stripes = static_cast<std::uint8_t>(enc.params.stripes);
  h.flags = enc.params.dc_encrypt ? 1 : 0;
  h.key_id = enc.key_id;
  return encode_container(h, enc.coeffs);
}

Bytes encode_container(const CoefficientStream& plain) { return encode_container(header_for(plain), plain); }

Container decode_container(std::span<const std::uint8_t> data) {
  ByteReader r(data, Errc::truncated);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), ContainerHeader::kMagic.begin())) {
    throw Error(Errc::bad_magic, "not a JFD1 container");
  }
  Container c;
  auto& h = c.header;
  h.version = r.u8();
  if (h.version != ContainerHeader::kVersion) {
    throw Error(Errc::version_mismatch, "container version " + std::to_string(h.version));
  }
  h.width = r.u32();
  h.height = r.u32();
  h.q_milli = r.u32();
  h.threshold = r.u8();
  h.stripes = r.u8();
  h.flags = r.u8();
  const auto id = r.bytes(h.key_id.size());
  std::copy(id.begin(), id.end(), h.key_id.begin());
  h.block_count = r.u32();

  if (h.width == 0 || h.height == 0 || h.q_milli == 0) throw Error(Errc::corrupt_container, "zero dimension or q");
  const std::uint64_t expected = std::uint64_t((h.width + 7) / 8) * ((h.height + 7) / 8);
  if (h.block_count != expected) {
    throw Error(Errc::corrupt_container, "block count " + std::to_string(h.block_count) +
                                             " inconsistent with " + std::to_string(h.width) + "x" +
                                             std::to_string(h.height));
  }
  if (h.threshold > kBlockArea || h.stripes == 0 || (h.flags & ~1u) != 0) {
    throw Error(Errc::corrupt_container, "header field out of range");
  }
  const std::uint64_t body = std::uint64_t(h.block_count) * kBlockArea * 2;
  if (r.remaining() < body) throw Error(Errc::truncated, "container body is short");
  if (r.remaining() > body) throw Error(Errc::size_mismatch, "trailing bytes after container body");

  c.stream.width = h.width;
  c.stream.height = h.height;
  c.stream.quant = QuantizationConfig::from_milli(h.q_milli);
  c.stream.blocks.resize(h.block_count);
  for (auto& block : c.stream.blocks) {
    for (auto& coeff : block.coeffs) coeff = r.i16();
  }
  return c;
}

void write_container(const EncryptedStream& enc, const std::string& path) {
  detail::write_file(path, encode_container(enc));
}

void write_container(const CoefficientStream& plain, const std::string& path) {
  detail::write_file(path, encode_container(plain));
}

Container read_container(const std::string& path) { return decode_container(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Grants

namespace {
constexpr std::array<std::uint8_t, 4> kGrantMagic = {'J', 'F', 'G', '1'};
constexpr std::array<std::uint8_t, 4> kDirectoryMagic = {'J', 'F', 'D', 'D'};
constexpr std::uint8_t kGrantVersion = 1;
}  // namespace

Bytes encode_grant(const DecryptionGrant& grant) {
  ByteWriter w;
  w.bytes(kGrantMagic);
  w.u8(kGrantVersion);
  w.u8(static_cast<std::uint8_t>(grant.mode));
  w.u8(grant.dc_offsets_included ? 1 : 0);
  w.bytes(grant.key_id);
  w.u32(grant.customer.customer_index);
  w.u8(static_cast<std::uint8_t>(grant.customer.length));
  w.u64(grant.customer.value);
  if (grant.mode == GrantMode::tape) {
    w.u32(static_cast<std::uint32_t>(grant.tape.slot_count()));
    w.u32(static_cast<std::uint32_t>(grant.tape.dc_offsets.size()));
    w.bytes(serialize_tape(grant.tape));
  } else {
    if (grant.compact_key.empty() || grant.compact_key.size() > 255) {
      throw Error(Errc::invalid_input, "compact key must be 1..255 bytes");
    }
    w.u8(static_cast<std::uint8_t>(grant.compact_key.size()));
    w.bytes(grant.compact_key);
  }
  return w.data();
}

DecryptionGrant decode_grant(std::span<const std::uint8_t> data) {
  ByteReader r(data, Errc::truncated);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kGrantMagic.begin())) throw Error(Errc::bad_magic, "not a grant file");
  if (r.u8() != kGrantVersion) throw Error(Errc::version_mismatch, "unsupported grant version");
  DecryptionGrant g;
  const auto mode = r.u8();
  if (mode > 1) throw Error(Errc::corrupted_grant, "unknown grant mode");
  g.mode = static_cast<GrantMode>(mode);
  const auto flags = r.u8();
  if (flags > 1) throw Error(Errc::corrupted_grant, "unknown grant flags");
  g.dc_offsets_included = flags & 1u;
  const auto id = r.bytes(g.key_id.size());
  std::copy(id.begin(), id.end(), g.key_id.begin());
  g.customer.customer_index = r.u32();
  g.customer.length = r.u8();
  g.customer.value = r.u64();
  if (g.customer.length == 0 || g.customer.length > 64 ||
      (g.customer.length < 64 && (g.customer.value >> g.customer.length) != 0)) {
    throw Error(Errc::corrupted_grant, "codeword does not fit its length");
  }
  if (g.mode == GrantMode::tape) {
    const std::size_t slots = r.u32();
    const std::size_t dc_blocks = r.u32();
    if (!g.dc_offsets_included && dc_blocks != 0) throw Error(Errc::corrupted_grant, "unexpected DC offsets");
    const std::size_t payload = 2 * ((slots + 7) / 8) + 2 * dc_blocks;
    if (r.remaining() < payload) throw Error(Errc::truncated, "tape payload is short");
    g.tape = deserialize_tape(r.bytes(payload), slots, dc_blocks);
  } else {
    const std::size_t n = r.u8();
    if (n == 0) throw Error(Errc::corrupted_grant, "empty compact key");
    const auto key = r.bytes(n);
    g.compact_key.assign(key.begin(), key.end());
  }
  if (r.remaining() != 0) throw Error(Errc::size_mismatch, "trailing bytes after grant");
  return g;
}

void write_grant(const DecryptionGrant& grant, const std::string& path) {
  detail::write_file(path, encode_grant(grant));
}

DecryptionGrant read_grant(const std::string& path) { return decode_grant(detail::read_file(path)); }

Bytes encode_directory(const CompactDirectory& dir) {
  ByteWriter w;
  w.bytes(kDirectoryMagic);
  w.u8(kGrantVersion);
  w.bytes(dir.key_id);
  w.u32(static_cast<std::uint32_t>(dir.entries.size()));
  for (const auto& e : dir.entries) {
    w.bytes(e.tag);
    w.u32(e.customer_index);
    w.u32(static_cast<std::uint32_t>(e.wrapped.size()));
    w.bytes(e.wrapped);
  }
  return w.data();
}

CompactDirectory decode_directory(std::span<const std::uint8_t> data) {
  ByteReader r(data, Errc::truncated);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kDirectoryMagic.begin())) {
    throw Error(Errc::bad_magic, "not a directory file");
  }
  if (r.u8() != kGrantVersion) throw Error(Errc::version_mismatch, "unsupported directory version");
  CompactDirectory dir;
  const auto id = r.bytes(dir.key_id.size());
  std::copy(id.begin(), id.end(), dir.key_id.begin());
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    CompactDirectory::Entry e;
    const auto tag = r.bytes(e.tag.size());
    std::copy(tag.begin(), tag.end(), e.tag.begin());
    e.customer_index = r.u32();
    const auto payload = r.bytes(r.u32());
    e.wrapped.assign(payload.begin(), payload.end());
    dir.entries.push_back(std::move(e));
  }
  if (r.remaining() != 0) throw Error(Errc::size_mismatch, "trailing bytes after directory");
  return dir;
}

void write_directory(const CompactDirectory& dir, const std::string& path) {
  detail::write_file(path, encode_directory(dir));
}

CompactDirectory read_directory(const std::string& path) { return decode_directory(detail::read_file(path)); }

MasterKey read_key_file(const std::string& path) { return MasterKey::from_secret(detail::read_file(path)); }

void write_key_file(const MasterKey& key, const std::string& path) { detail::write_file(path, key.secret()); }

}  // namespace jfd
