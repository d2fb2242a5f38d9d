// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   io.cpp
 * @brief  Binary format readers and writers.
 */
#include "amvnet/io.hpp"

#include "amvnet/error.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace amv {

namespace le {

void put_f32(Bytes &out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(Bytes &out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
float get_f32(ByteView b, std::size_t at) { return std::bit_cast<float>(get_u32(b, at)); }
double get_f64(ByteView b, std::size_t at) { return std::bit_cast<double>(get_u64(b, at)); }

} // namespace le

LabelVector argmax_labels(const ScoreMatrix &scores) {
  LabelVector out(scores.rows(), static_cast<std::uint32_t>(scores.cols()), 0);
  for (std::size_t i = 0; i < scores.rows(); ++i)
    out[i] = static_cast<std::uint32_t>(argmax(scores.row(i)));
  return out;
}

RemapTable RemapTable::identity(std::uint32_t num_classes) {
  RemapTable t;
  for (std::uint32_t k = 0; k < num_classes; ++k)
    t.mapping[static_cast<std::uint16_t>(k)] = k;
  return t;
}

RemapTable RemapTable::parse(std::string_view text) {
  RemapTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream fields(line);
    std::string raw, cls, extra;
    if (!(fields >> raw))
      continue;
    if (!(fields >> cls) || (fields >> extra))
      throw DataError("remap line " + std::to_string(lineno) +
                      ": expected \"raw_id class_id\"");
    unsigned long raw_id = 0;
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), raw_id);
    if (ec != std::errc{} || p != raw.data() + raw.size() || raw_id > 0xFFFF)
      throw DataError("remap line " + std::to_string(lineno) + ": bad raw id");
    std::optional<std::uint32_t> target;
    if (cls != "-") {
      unsigned long c = 0;
      auto [q, ec2] = std::from_chars(cls.data(), cls.data() + cls.size(), c);
      if (ec2 != std::errc{} || q != cls.data() + cls.size() || c > 0xFFFF)
        throw DataError("remap line " + std::to_string(lineno) + ": bad class id");
      target = static_cast<std::uint32_t>(c);
    }
    t.mapping[static_cast<std::uint16_t>(raw_id)] = target;
  }
  return t;
}

std::uint32_t RemapTable::implied_num_classes() const {
  std::uint32_t k = 0;
  for (const auto &[raw, cls] : mapping)
    if (cls)
      k = std::max(k, *cls + 1);
  return k;
}

PointCloud read_point_cloud(ByteView bytes) {
  if (bytes.size() % 16 != 0)
    throw DataError("malformed record length: " + std::to_string(bytes.size()) +
                    " bytes is not a multiple of 16");
  PointCloud cloud(bytes.size() / 16);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::size_t at = i * 16;
    Point &p = cloud[i];
    p.x = le::get_f32(bytes, at);
    p.y = le::get_f32(bytes, at + 4);
    p.z = le::get_f32(bytes, at + 8);
    p.intensity = le::get_f32(bytes, at + 12);
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.intensity))
      throw DataError("non-finite value in point " + std::to_string(i));
  }
  return cloud;
}

Bytes write_point_cloud(const PointCloud &cloud) {
  Bytes out;
  out.reserve(cloud.size() * 16);
  for (const Point &p : cloud) {
    le::put_f32(out, static_cast<float>(p.x));
    le::put_f32(out, static_cast<float>(p.y));
    le::put_f32(out, static_cast<float>(p.z));
    le::put_f32(out, static_cast<float>(p.intensity));
  }
  return out;
}

LabelVector read_labels(ByteView bytes, const RemapTable &remap,
                        std::uint32_t num_classes) {
  if (bytes.size() % 4 != 0)
    throw DataError("malformed label length: " + std::to_string(bytes.size()) +
                    " bytes is not a multiple of 4");
  LabelVector out(bytes.size() / 4, num_classes, num_classes);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto raw = static_cast<std::uint16_t>(le::get_u32(bytes, i * 4) & 0xFFFFu);
    auto it = remap.mapping.find(raw);
    if (it == remap.mapping.end())
      throw DataError("raw label id " + std::to_string(raw) + " absent from remap table");
    if (it->second) {
      if (*it->second >= num_classes)
        throw DataError("remap target " + std::to_string(*it->second) +
                        " >= num_classes " + std::to_string(num_classes));
      out[i] = *it->second;
    }
  }
  return out;
}

Bytes write_labels(const LabelVector &labels) {
  Bytes out;
  out.reserve(labels.size() * 4);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.is_ignore(i))
      throw DataError("cannot write ignore label as a raw id");
    le::put_u32(out, labels[i]);
  }
  return out;
}

void validate_and_normalize(ScoreMatrix &scores) {
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    double sum = 0.0;
    for (float &v : row) {
      if (!std::isfinite(v))
        throw DataError("non-finite score in row " + std::to_string(i));
      if (v < -1e-6f)
        throw DataError("negative score in row " + std::to_string(i));
      if (v < 0.0f)
        v = 0.0f;
      sum += v;
    }
    if (sum < 0.99 || sum > 1.01)
      throw DataError("row not normalized: row " + std::to_string(i) +
                      " sums to " + std::to_string(sum));
    if (std::abs(sum - 1.0) > 1e-4)
      for (float &v : row)
        v = static_cast<float>(v / sum);
  }
}

namespace {
constexpr std::size_t kScoreHeader = 12;
}

ScoreMatrix read_scores(ByteView bytes) {
  if (bytes.size() < kScoreHeader)
    throw DataError("score file truncated header");
  if (bytes[0] != 'A' || bytes[1] != 'M' || bytes[2] != 'V' || bytes[3] != 'S')
    throw DataError("bad magic: not an AMVS score file");
  const std::uint16_t version = le::get_u16(bytes, 4);
  if (version != kScoreFormatVersion)
    throw DataError("unsupported score format version " + std::to_string(version));
  const std::uint16_t k = le::get_u16(bytes, 6);
  const std::uint32_t n = le::get_u32(bytes, 8);
  const std::uint64_t expected = std::uint64_t{n} * k * 4;
  if (bytes.size() - kScoreHeader != expected)
    throw DataError("score payload length " + std::to_string(bytes.size() - kScoreHeader) +
                    " != N*K*4 = " + std::to_string(expected));
  ScoreMatrix m(n, k);
  for (std::size_t i = 0; i < m.data().size(); ++i)
    m.data()[i] = le::get_f32(bytes, kScoreHeader + i * 4);
  validate_and_normalize(m);
  return m;
}

Bytes write_scores(const ScoreMatrix &scores) {
  if (scores.cols() > 0xFFFF || scores.rows() > 0xFFFFFFFFu)
    throw DataError("score matrix too large for AMVS header");
  Bytes out{'A', 'M', 'V', 'S'};
  out.reserve(kScoreHeader + scores.data().size() * 4);
  le::put_u16(out, kScoreFormatVersion);
  le::put_u16(out, static_cast<std::uint16_t>(scores.cols()));
  le::put_u32(out, static_cast<std::uint32_t>(scores.rows()));
  for (float v : scores.data())
    le::put_f32(out, v);
  return out;
}

Bytes write_predictions(const LabelVector &labels) {
  Bytes out;
  out.reserve(labels.size() * 4);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.is_ignore(i))
      throw DataError("prediction at point " + std::to_string(i) + " is ignore");
    le::put_u32(out, labels[i]);
  }
  return out;
}

LabelVector read_predictions(ByteView bytes, std::uint32_t num_classes) {
  if (bytes.size() % 4 != 0)
    throw DataError("malformed prediction length");
  LabelVector out(bytes.size() / 4, num_classes, 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = le::get_u32(bytes, i * 4);
    if (out[i] >= num_classes)
      throw DataError("prediction " + std::to_string(out[i]) + " out of range at point " +
                      std::to_string(i));
  }
  return out;
}

Bytes read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path &path, ByteView bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw DataError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path &path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

} // namespace amv
