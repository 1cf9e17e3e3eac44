#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "asms/checkpoint.hpp"

using namespace asms;

namespace {

nn::ModelParams sample_net(std::uint64_t seed, Activation act = Activation::tanh,
                           nn::Head head = nn::Head::categorical_logits) {
  RngStream rng(seed, StreamKind::misc);
  auto p = nn::init_mlp(6, 16, 5, act, head, rng);
  for (auto& v : p.mutable_values()) v += rng.normal(0, 1e-3);
  return p;
}

bool bit_equal(const nn::ModelParams& a, const nn::ModelParams& b) {
  if (!a.same_shape(b) || a.activation() != b.activation() || a.head() != b.head()) return false;
  return std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(Checkpoint, BytesRoundTripBitExact) {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto p = sample_net(s, s % 2 ? Activation::tanh : Activation::relu,
                              s % 3 ? nn::Head::categorical_logits : nn::Head::scalar);
    const auto bytes = nn::serialize(p);
    EXPECT_EQ(bytes.size(), nn::serialized_size(p.shapes()));
    EXPECT_TRUE(bit_equal(nn::deserialize(bytes), p));
  }
}

TEST(Checkpoint, SpecialValuesSurvive) {
  auto p = sample_net(2);
  auto v = p.mutable_values();
  v[0] = -0.0;
  v[1] = std::numeric_limits<double>::denorm_min();
  v[2] = 1e308;
  EXPECT_TRUE(bit_equal(nn::deserialize(nn::serialize(p)), p));
}

TEST(Checkpoint, HeaderLayout) {
  const auto bytes = nn::serialize(sample_net(3));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FMAP");
  EXPECT_EQ(bytes[4], 1);  // version, little-endian u16
  EXPECT_EQ(bytes[5], 0);
}

TEST(Checkpoint, DeviceUploadSize) {
  RngStream rng(1, StreamKind::misc);
  const auto pi = nn::init_mlp(6, 128, 5, Activation::tanh, nn::Head::categorical_logits, rng);
  const auto v = nn::init_mlp(6, 128, 1, Activation::relu, nn::Head::scalar, rng);
  EXPECT_EQ(nn::serialized_size(pi.shapes()) + nn::serialized_size(v.shapes()), 284816u);
}

TEST(Checkpoint, CorruptionDetected) {
  auto bytes = nn::serialize(sample_net(4));
  bytes[40] ^= 0x01;
  EXPECT_THROW(nn::deserialize(bytes), DataError);
  auto bad_magic = nn::serialize(sample_net(4));
  bad_magic[0] = 'X';
  EXPECT_THROW(nn::deserialize(bad_magic), DataError);
  auto truncated = nn::serialize(sample_net(4));
  truncated.resize(10);
  EXPECT_THROW(nn::deserialize(truncated), DataError);
}

TEST(Checkpoint, FileRoundTripAndMissingFile) {
  const auto path = std::filesystem::temp_directory_path() / "asms_ckpt_test.bin";
  const auto p = sample_net(5);
  nn::save_checkpoint(path, p);
  EXPECT_TRUE(bit_equal(nn::load_checkpoint(path), p));
  std::filesystem::remove(path);
  EXPECT_THROW(nn::load_checkpoint(path), DataError);
}
