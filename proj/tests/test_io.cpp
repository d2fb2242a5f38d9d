// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   test_io.cpp
 * @brief  Binary formats: point clouds, labels, scores, predictions, remap.
 */
#include "amvnet/error.hpp"
#include "amvnet/io.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <limits>

using namespace amv;

namespace {

// Hand-built little-endian encoders, independent of the library's own.
void push_f32(Bytes &b, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  for (int i = 0; i < 4; ++i)
    b.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

void push_u32(Bytes &b, std::uint32_t u) {
  for (int i = 0; i < 4; ++i)
    b.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

void push_u16(Bytes &b, std::uint16_t u) {
  b.push_back(static_cast<std::uint8_t>(u));
  b.push_back(static_cast<std::uint8_t>(u >> 8));
}

Bytes score_file(std::uint16_t k, std::uint32_t n, const std::vector<float> &payload,
                 const char *magic = "AMVS", std::uint16_t version = 1) {
  Bytes b(magic, magic + 4);
  push_u16(b, version);
  push_u16(b, k);
  push_u32(b, n);
  for (float v : payload)
    push_f32(b, v);
  return b;
}

} // namespace

TEST(PointCloudFormat, DecodesHandBuiltRecords) {
  Bytes b;
  for (float v : {1.0f, 2.0f, 3.0f, 0.5f, -1.0f, 0.0f, 2.0f, 0.0f})
    push_f32(b, v);
  ASSERT_EQ(b.size(), 32u);
  PointCloud c = read_point_cloud(b);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (Point{1, 2, 3, 0.5}));
  EXPECT_EQ(c[1], (Point{-1, 0, 2, 0.0}));
}

TEST(PointCloudFormat, EmptyInputIsEmptyCloud) { EXPECT_TRUE(read_point_cloud(Bytes{}).empty()); }

TEST(PointCloudFormat, RejectsPartialRecord) {
  Bytes b(17, 0);
  try {
    read_point_cloud(b);
    FAIL() << "expected DataError";
  } catch (const DataError &e) {
    EXPECT_NE(std::string(e.what()).find("malformed record length"), std::string::npos);
  }
}

TEST(PointCloudFormat, RejectsNonFinite) {
  Bytes b;
  for (float v : {1.0f, std::numeric_limits<float>::quiet_NaN(), 3.0f, 0.5f})
    push_f32(b, v);
  EXPECT_THROW(read_point_cloud(b), DataError);
}

TEST(PointCloudFormat, RoundTripPreservesOrderAndFloat32Values) {
  test::Gen gen(11);
  PointCloud c = test::random_cloud(gen, 257);
  for (Point &p : c) { // quantize to float so the round trip is exact
    p.x = static_cast<float>(p.x);
    p.y = static_cast<float>(p.y);
    p.z = static_cast<float>(p.z);
    p.intensity = static_cast<float>(p.intensity);
  }
  const Bytes once = write_point_cloud(c);
  EXPECT_EQ(once.size(), 257u * 16u);
  EXPECT_EQ(read_point_cloud(once), c);
  EXPECT_EQ(write_point_cloud(read_point_cloud(once)), once);
}

TEST(LabelFormat, InstanceBitsAreDiscarded) {
  Bytes b;
  push_u32(b, 0x00010028u);
  RemapTable remap;
  remap.mapping[0x28] = 9;
  LabelVector l = read_labels(b, remap, 19);
  ASSERT_EQ(l.size(), 1u);
  EXPECT_EQ(l[0], 9u);
}

TEST(LabelFormat, RemapToIgnore) {
  Bytes b;
  push_u32(b, 0);
  RemapTable remap;
  remap.mapping[0] = std::nullopt;
  LabelVector l = read_labels(b, remap, 19);
  EXPECT_TRUE(l.is_ignore(0));
  EXPECT_EQ(l[0], 19u);
}

TEST(LabelFormat, UnmappedRawIdIsAnError) {
  Bytes b;
  push_u32(b, 0x7777);
  EXPECT_THROW(read_labels(b, RemapTable::identity(19), 19), DataError);
}

TEST(LabelFormat, MalformedLength) {
  EXPECT_THROW(read_labels(Bytes(6, 0), RemapTable::identity(3), 3), DataError);
}

TEST(RemapTable, ParsesTextWithCommentsAndIgnore) {
  RemapTable t = RemapTable::parse("# raw class\n0 -\n40 0\n 48 1 # trailing\n\n252 1\n");
  ASSERT_EQ(t.mapping.size(), 4u);
  EXPECT_FALSE(t.mapping.at(0).has_value());
  EXPECT_EQ(t.mapping.at(40), 0u);
  EXPECT_EQ(t.mapping.at(48), 1u);
  EXPECT_EQ(t.mapping.at(252), 1u);
  EXPECT_EQ(t.implied_num_classes(), 2u);
}

TEST(RemapTable, RejectsMalformedLines) {
  EXPECT_THROW(RemapTable::parse("12\n"), DataError);
  EXPECT_THROW(RemapTable::parse("12 3 4\n"), DataError);
  EXPECT_THROW(RemapTable::parse("70000 1\n"), DataError);
  EXPECT_THROW(RemapTable::parse("x 1\n"), DataError);
}

TEST(ScoreFormat, SingleRow) {
  ScoreMatrix s = read_scores(score_file(2, 1, {0.7f, 0.3f}));
  ASSERT_EQ(s.rows(), 1u);
  ASSERT_EQ(s.cols(), 2u);
  EXPECT_EQ(s(0, 0), 0.7f);
  EXPECT_EQ(s(0, 1), 0.3f);
}

TEST(ScoreFormat, ZeroEntryAcceptedUnchanged) {
  ScoreMatrix s = read_scores(score_file(3, 1, {0.5f, 0.5f, 0.0f}));
  EXPECT_EQ(s(0, 0), 0.5f);
  EXPECT_EQ(s(0, 1), 0.5f);
  EXPECT_EQ(s(0, 2), 0.0f);
}

TEST(ScoreFormat, UnnormalizedRowRejected) {
  try {
    read_scores(score_file(2, 1, {0.2f, 0.2f}));
    FAIL() << "expected DataError";
  } catch (const DataError &e) {
    EXPECT_NE(std::string(e.what()).find("row not normalized"), std::string::npos);
  }
}

TEST(ScoreFormat, SlightlyOffRowIsRenormalized) {
  ScoreMatrix s = read_scores(score_file(2, 1, {0.6f, 0.403f}));
  EXPECT_NEAR(static_cast<double>(s(0, 0)) + s(0, 1), 1.0, 1e-6);
  EXPECT_NEAR(s(0, 0), 0.6 / 1.003, 1e-6);
}

TEST(ScoreFormat, HeaderErrors) {
  EXPECT_THROW(read_scores(score_file(2, 1, {0.5f, 0.5f}, "AMVX")), DataError);
  EXPECT_THROW(read_scores(score_file(2, 1, {0.5f, 0.5f}, "AMVS", 2)), DataError);
  EXPECT_THROW(read_scores(score_file(2, 2, {0.5f, 0.5f})), DataError);
  EXPECT_THROW(read_scores(Bytes{'A', 'M'}), DataError);
}

TEST(ScoreFormat, NegativeEntryRejected) {
  EXPECT_THROW(read_scores(score_file(3, 1, {0.6f, 0.41f, -0.01f})), DataError);
}

TEST(ScoreFormat, RoundTripIsByteIdentical) {
  test::Gen gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = test::uniform_index(gen, 0, 300);
    const std::size_t k = test::uniform_index(gen, 2, 20);
    ScoreMatrix s = test::random_scores(gen, n, k);
    const Bytes once = write_scores(s);
    EXPECT_EQ(once.size(), 12 + n * k * 4);
    ScoreMatrix back = read_scores(once);
    EXPECT_EQ(back, s);
    EXPECT_EQ(write_scores(back), once);
  }
}

TEST(PredictionFormat, LittleEndianWords) {
  const Bytes b = write_predictions(LabelVector({3, 0, 18}, 19));
  const Bytes expected{3, 0, 0, 0, 0, 0, 0, 0, 18, 0, 0, 0};
  EXPECT_EQ(b, expected);
}

TEST(PredictionFormat, EmptyVector) { EXPECT_TRUE(write_predictions(LabelVector({}, 4)).empty()); }

TEST(PredictionFormat, IgnoreRejected) {
  EXPECT_THROW(write_predictions(LabelVector({1, 4, 2}, 4)), DataError);
}

TEST(PredictionFormat, RoundTrip) {
  test::Gen gen(9);
  LabelVector l = test::random_labels(gen, 1000, 8);
  const Bytes once = write_predictions(l);
  EXPECT_EQ(read_predictions(once, 8), l);
  EXPECT_EQ(write_predictions(read_predictions(once, 8)), once);
  EXPECT_THROW(read_predictions(once, 4), DataError); // labels >= K
  EXPECT_THROW(read_predictions(Bytes(5, 0), 8), DataError);
}

TEST(Files, WriteThenReadBack) {
  auto dir = test::scratch_dir("io_files");
  const Bytes data{1, 2, 3, 250};
  write_file(dir / "a.bin", data);
  EXPECT_EQ(read_file(dir / "a.bin"), data);
  EXPECT_THROW(read_file(dir / "missing.bin"), DataError);
}
