#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "jfd/core.hpp"
#include "jfd/error.hpp"
#include "jfd/io.hpp"
#include "support.hpp"

using namespace jfd;

namespace {

Bytes text(const std::string& s) { return Bytes(s.begin(), s.end()); }

Errc error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::io;
}

// Byte layout written out by hand, independent of the library's writer.
Bytes container_oracle(const EncryptedStream& enc) {
  Bytes out = text("JFD1");
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  out.push_back(1);
  u32(enc.coeffs.width);
  u32(enc.coeffs.height);
  u32(enc.params.quant.q_milli());
  out.push_back(static_cast<std::uint8_t>(enc.params.threshold));
  out.push_back(static_cast<std::uint8_t>(enc.params.stripes));
  out.push_back(enc.params.dc_encrypt ? 1 : 0);
  out.insert(out.end(), enc.key_id.begin(), enc.key_id.end());
  u32(static_cast<std::uint32_t>(enc.coeffs.blocks.size()));
  for (const auto& b : enc.coeffs.blocks) {
    for (int k = 0; k < 64; ++k) {
      const auto v = static_cast<std::uint16_t>(b[k]);
      out.push_back(static_cast<std::uint8_t>(v));
      out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
  }
  return out;
}

EncryptedStream sample_stream(bool dc = true) {
  SchemeParams p;
  p.dc_encrypt = dc;
  p.stripes = 3;
  p.threshold = 10;
  std::mt19937_64 rng(61);
  const auto plain = forward_transform(test::random_image(rng, 37, 21), p.quant);
  return encrypt(plain, MasterKey::from_seed(62), p);
}

class TempDir : public ::testing::Test {
 protected:
  std::filesystem::path dir = std::filesystem::temp_directory_path() / ("jfd_io_" + std::to_string(::getpid()));
  void SetUp() override { std::filesystem::create_directories(dir); }
  void TearDown() override { std::filesystem::remove_all(dir); }
  std::string path(const std::string& n) const { return (dir / n).string(); }
};

}  // namespace

TEST(Pgm, EncodeLayout) {
  GrayImage img(3, 2);
  img.samples = {0, 1, 2, 253, 254, 255};
  Bytes want = text("P5\n3 2\n255\n");
  want.insert(want.end(), img.samples.begin(), img.samples.end());
  EXPECT_EQ(encode_pgm(img), want);
  EXPECT_EQ(parse_pgm(want), img);
}

TEST(Pgm, CommentsAndWhitespaceTolerated) {
  Bytes data = text("P5 # magic\n# a comment line\n 2\t2 # dims\n255\n");
  for (std::uint8_t v : {7, 8, 9, 10}) data.push_back(v);
  const auto img = parse_pgm(data);
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.samples, (std::vector<std::uint8_t>{7, 8, 9, 10}));
}

TEST(Pgm, DistinctErrors) {
  EXPECT_EQ(error_of([] { parse_pgm(text("P2\n2 2\n255\n1 2 3 4\n")); }), Errc::unsupported_format);
  EXPECT_EQ(error_of([] { parse_pgm(text("P6\n1 1\n255\nabc")); }), Errc::unsupported_format);
  EXPECT_EQ(error_of([] { parse_pgm(text("GIF89a")); }), Errc::bad_magic);
  EXPECT_EQ(error_of([] { parse_pgm(text("P5\n2 2\n65535\n")); }), Errc::unsupported_depth);
  EXPECT_EQ(error_of([] { parse_pgm(text("P5\n2 2\n255\nabc")); }), Errc::truncated);
  EXPECT_EQ(error_of([] { parse_pgm(text("P5\n2 2")); }), Errc::truncated);
  EXPECT_EQ(error_of([] { read_pgm("/nonexistent/file.pgm"); }), Errc::missing_file);
}

TEST_F(TempDir, PgmFileRoundTrip) {
  std::mt19937_64 rng(63);
  for (int t = 0; t < 5; ++t) {
    const auto img = test::random_image(rng);
    write_pgm(img, path("a.pgm"));
    EXPECT_EQ(read_pgm(path("a.pgm")), img);
  }
  EXPECT_EQ(read_pgm(test::data_path("camera.pgm")).width, 512u);
}

TEST(Container, MatchesHandLayout) {
  const auto enc = sample_stream();
  const auto bytes = encode_container(enc);
  EXPECT_EQ(bytes, container_oracle(enc));
  EXPECT_EQ(bytes.size(), 40u + enc.coeffs.blocks.size() * 128);
}

TEST(Container, RoundTripEncrypted) {
  for (bool dc : {false, true}) {
    const auto enc = sample_stream(dc);
    const auto c = decode_container(encode_container(enc));
    EXPECT_TRUE(c.header.encrypted());
    EXPECT_EQ(c.encrypted_stream(), enc);
    EXPECT_EQ(c.params(), enc.params);
  }
}

TEST(Container, RoundTripPlain) {
  const auto plain = forward_transform(test::camera(), QuantizationConfig::from_factor(0.7));
  const auto c = decode_container(encode_container(plain));
  EXPECT_FALSE(c.header.encrypted());
  EXPECT_EQ(c.stream, plain);
  EXPECT_THROW(c.encrypted_stream(), Error);
}

TEST_F(TempDir, ContainerFileRoundTrip512) {
  SchemeParams p;
  const auto enc = encrypt(forward_transform(test::astronaut(), p.quant), MasterKey::from_seed(64), p);
  write_container(enc, path("c.jfd"));
  const auto c = read_container(path("c.jfd"));
  EXPECT_EQ(c.encrypted_stream(), enc);
  EXPECT_EQ(c.header.block_count, 4096u);
  EXPECT_EQ(c.header.key_id, enc.key_id);
}

TEST(Container, DistinctErrors) {
  const auto good = encode_container(sample_stream());
  auto bad = good;
  bad[0] ^= 0xFF;
  EXPECT_EQ(error_of([&] { decode_container(bad); }), Errc::bad_magic);
  bad = good;
  bad[4] = 2;
  EXPECT_EQ(error_of([&] { decode_container(bad); }), Errc::version_mismatch);
  bad = good;
  bad[36] += 1;
  EXPECT_EQ(error_of([&] { decode_container(bad); }), Errc::corrupt_container);
  bad = good;
  bad.pop_back();
  EXPECT_EQ(error_of([&] { decode_container(bad); }), Errc::truncated);
  bad = good;
  bad.push_back(0);
  EXPECT_EQ(error_of([&] { decode_container(bad); }), Errc::size_mismatch);
  EXPECT_EQ(error_of([&] { decode_container(Bytes(good.begin(), good.begin() + 20)); }), Errc::truncated);
  bad = good;
  bad[17] = 65;  // N_T out of range
  EXPECT_EQ(error_of([&] { decode_container(bad); }), Errc::corrupt_container);
}

TEST(Grant, RoundTripBothModes) {
  SchemeParams p;
  p.dc_encrypt = true;
  const auto key = MasterKey::from_seed(65);
  std::mt19937_64 rng(66);
  const auto plain = forward_transform(test::random_image(rng, 64, 64), p.quant);
  const auto pos = enumerate_fingerprint_positions(plain, p);
  const auto tape = build_grant(key, assign_codeword(11, 16), pos, plain, p);
  EXPECT_EQ(decode_grant(encode_grant(tape)), tape);

  CompactDirectory dir;
  const auto compact = issue_compact_grant(key, assign_codeword(12, 16), pos, plain, p, dir);
  EXPECT_EQ(decode_grant(encode_grant(compact)), compact);
  EXPECT_EQ(decode_directory(encode_directory(dir)), dir);

  auto bytes = encode_grant(tape);
  bytes[0] = 'X';
  EXPECT_EQ(error_of([&] { decode_grant(bytes); }), Errc::bad_magic);
  bytes = encode_grant(tape);
  bytes.pop_back();
  EXPECT_EQ(error_of([&] { decode_grant(bytes); }), Errc::truncated);
  bytes = encode_grant(compact);
  bytes.push_back(1);
  EXPECT_EQ(error_of([&] { decode_grant(bytes); }), Errc::size_mismatch);
  auto dbytes = encode_directory(dir);
  dbytes[1] = 'Q';
  EXPECT_EQ(error_of([&] { decode_directory(dbytes); }), Errc::bad_magic);
}

TEST_F(TempDir, KeyAndGrantFiles) {
  const auto key = MasterKey::from_seed(67, 24);
  write_key_file(key, path("k.key"));
  EXPECT_EQ(read_key_file(path("k.key")), key);
  EXPECT_EQ(std::filesystem::file_size(path("k.key")), 24u);
  EXPECT_EQ(error_of([&] { read_key_file(path("none.key")); }), Errc::missing_file);
  std::ofstream(path("empty.key"), std::ios::binary).flush();
  EXPECT_THROW(read_key_file(path("empty.key")), Error);

  SchemeParams p;
  const auto plain = forward_transform(test::camera(), p.quant);
  const auto g = build_grant(key, assign_codeword(3, 4), enumerate_fingerprint_positions(plain, p), plain, p);
  write_grant(g, path("g.jfg"));
  EXPECT_EQ(read_grant(path("g.jfg")), g);
}
