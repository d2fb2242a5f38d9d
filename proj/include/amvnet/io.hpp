// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   io.hpp
 * @brief  Binary formats for point clouds, labels, scores and predictions.
 *
 * All multi-byte values are little-endian regardless of host order.
 *
 *  - point cloud: N records of four float32 (x, y, z, intensity)
 *  - labels:      N uint32 words, semantic id in the low 16 bits
 *  - scores:      "AMVS" | u16 version=1 | u16 K | u32 N | N*K float32
 *  - predictions: N uint32 class ids
 *  - remap table: text lines "raw_id class_id", class_id "-" means ignore
 */
#pragma once

#include "amvnet/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace amv {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Maps raw 16-bit semantic ids to classes; nullopt marks ignore.
struct RemapTable {
  std::map<std::uint16_t, std::optional<std::uint32_t>> mapping;

  static RemapTable identity(std::uint32_t num_classes);
  /// Parses the text format. Throws DataError on malformed lines.
  static RemapTable parse(std::string_view text);
  /// Largest mapped class + 1; used as K when the caller does not know it.
  std::uint32_t implied_num_classes() const;
};

PointCloud read_point_cloud(ByteView bytes);
Bytes write_point_cloud(const PointCloud &cloud);

LabelVector read_labels(ByteView bytes, const RemapTable &remap,
                        std::uint32_t num_classes);
/// Writes class ids as raw semantic words (instance bits zero).
Bytes write_labels(const LabelVector &labels);

inline constexpr std::uint16_t kScoreFormatVersion = 1;

ScoreMatrix read_scores(ByteView bytes);
Bytes write_scores(const ScoreMatrix &scores);

Bytes write_predictions(const LabelVector &labels);
LabelVector read_predictions(ByteView bytes, std::uint32_t num_classes);

/// Checks rows against the normalization invariant, renormalizing rows whose
/// sum is within [0.99, 1.01] but further than 1e-4 from one.
void validate_and_normalize(ScoreMatrix &scores);

Bytes read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, ByteView bytes);
std::string read_text_file(const std::filesystem::path &path);

namespace le {

inline void put_u16(Bytes &out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put_u32(Bytes &out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8)
    out.push_back(static_cast<std::uint8_t>(v >> s));
}
inline void put_u64(Bytes &out, std::uint64_t v) {
  for (int s = 0; s < 64; s += 8)
    out.push_back(static_cast<std::uint8_t>(v >> s));
}
void put_f32(Bytes &out, float v);
void put_f64(Bytes &out, double v);

inline std::uint16_t get_u16(ByteView b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}
inline std::uint32_t get_u32(ByteView b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i)
    v = (v << 8) | b[at + i];
  return v;
}
inline std::uint64_t get_u64(ByteView b, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i)
    v = (v << 8) | b[at + i];
  return v;
}
float get_f32(ByteView b, std::size_t at);
double get_f64(ByteView b, std::size_t at);

} // namespace le

} // namespace amv
