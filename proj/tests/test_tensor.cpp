#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include "gradcheck.hpp"
#include "noisecam/tensor.hpp"

using namespace ncam;

TEST(Tensor, ShapeAndFill) {
  Tensor t({2, 3, 4}, 1.5f);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_FLOAT_EQ(t.at(1, 2, 3), 1.5f);
  EXPECT_EQ(numel({}), 1u);
  EXPECT_EQ(to_string({2, 3}), "[2x3]");
}

TEST(Tensor, ValueCountMustMatchShape) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>(3)), ShapeError);
  EXPECT_THROW(Tensor({2, 2}).reshaped({5}), ShapeError);
  EXPECT_EQ(Tensor({2, 3}).reshaped({6}).shape(), (Shape{6}));
}

TEST(Tensor, HwcIndexing) {
  Tensor t({2, 3, 2});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = float(i);
  EXPECT_FLOAT_EQ(t.at(1, 2, 1), 11.0f);
  EXPECT_FLOAT_EQ(t.at(0, 1, 0), 2.0f);
}

TEST(Tensor, ElementwiseOps) {
  Tensor a({3}, std::vector<float>{1, -2, 3});
  Tensor b({3}, std::vector<float>{0.5f, 0.5f, 0.5f});
  EXPECT_EQ((a + b).values(), (std::vector<float>{1.5f, -1.5f, 3.5f}));
  EXPECT_EQ((a - b).values(), (std::vector<float>{0.5f, -2.5f, 2.5f}));
  EXPECT_EQ((a * 2.0f).values(), (std::vector<float>{2, -4, 6}));
  EXPECT_EQ(clamp(a, 0.0f, 2.0f).values(), (std::vector<float>{1, 0, 2}));
  EXPECT_FLOAT_EQ(a.max_abs(), 3.0f);
  EXPECT_THROW(a + Tensor({4}), ShapeError);
}

TEST(Tensor, FiniteCheck) {
  Tensor t({2});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
}

TEST(Ntf, RoundTripIsBitExact) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> rank(0, 4), ext(1, 5);
    Shape s(std::size_t(rank(rng)));
    for (auto& e : s) e = std::size_t(ext(rng));
    Tensor t = gradcheck::random_tensor(s, rng, -1e3f, 1e3f);
    std::stringstream buf;
    write_ntf(buf, t);
    const Tensor back = read_ntf(buf);
    EXPECT_EQ(back.shape(), t.shape());
    EXPECT_EQ(std::memcmp(back.data().data(), t.data().data(), t.size() * sizeof(float)), 0);
  }
}

TEST(Ntf, LayoutIsLittleEndianF32) {
  std::stringstream buf;
  write_ntf(buf, Tensor({1}, std::vector<float>{1.0f}));
  const std::string bytes = buf.str();
  ASSERT_EQ(bytes.size(), 4u + 4u + 4u + 4u);
  EXPECT_EQ(bytes.substr(0, 4), "NTF1");
  EXPECT_EQ(bytes[4], 1);  // rank
  EXPECT_EQ(bytes[8], 1);  // extent
  EXPECT_EQ(static_cast<unsigned char>(bytes[15]), 0x3f);
  EXPECT_EQ(static_cast<unsigned char>(bytes[14]), 0x80);
}

TEST(Ntf, RejectsMalformedInput) {
  std::stringstream bad_magic("XTF1\x01\x00\x00\x00");
  EXPECT_THROW(read_ntf(bad_magic), DataError);

  std::stringstream buf;
  write_ntf(buf, Tensor({4}, 2.0f));
  std::string truncated = buf.str();
  truncated.resize(truncated.size() - 2);
  std::stringstream tin(truncated);
  EXPECT_THROW(read_ntf(tin), DataError);

  std::string big_rank = "NTF1";
  big_rank += std::string("\x09\x00\x00\x00", 4);
  std::stringstream rin(big_rank);
  EXPECT_THROW(read_ntf(rin), DataError);

  EXPECT_THROW(load_ntf("/nonexistent/file.ntf"), DataError);
}

TEST(Ntf, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "ncam_tensor_roundtrip.ntf";
  Tensor t({2, 2, 3}, 0.25f);
  save_ntf(path, t);
  EXPECT_EQ(load_ntf(path), t);
  std::filesystem::remove(path);
}

TEST(Io, StringsAndIntegers) {
  std::stringstream buf;
  io::put_u32(buf, 0xdeadbeef);
  io::put_u64(buf, 0x0123456789abcdefull);
  io::put_string(buf, "block1_conv1");
  EXPECT_EQ(io::get_u32(buf), 0xdeadbeefu);
  EXPECT_EQ(io::get_u64(buf), 0x0123456789abcdefull);
  EXPECT_EQ(io::get_string(buf), "block1_conv1");
  EXPECT_THROW(io::get_u32(buf), DataError);
}
