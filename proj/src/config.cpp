// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   config.cpp
 * @brief  INI parsing and validation of run configurations.
 */
#include "amvnet/config.hpp"

#include "amvnet/error.hpp"
#include "amvnet/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/core.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace amv {

namespace pt = boost::property_tree;

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

/// Reads keys from one section and complains about anything left unread.
class Section {
public:
  Section(std::string name, const pt::ptree &tree) : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> raw(const std::string &key) {
    used_.insert(key);
    auto v = tree_.get_child_optional(pt::ptree::path_type(key, '\0'));
    if (!v)
      return std::nullopt;
    return trim(v->data());
  }

  std::string where(const std::string &key) const { return fmt::format("[{}] {}", name_, key); }

  double number(const std::string &key, double fallback) {
    auto v = raw(key);
    return v ? parse_double(*v, key) : fallback;
  }

  template <typename Int> Int integer(const std::string &key, Int fallback) {
    auto v = raw(key);
    return v ? parse_int<Int>(*v, key) : fallback;
  }

  bool boolean(const std::string &key, bool fallback) {
    auto v = raw(key);
    if (!v)
      return fallback;
    if (*v == "true" || *v == "1" || *v == "yes")
      return true;
    if (*v == "false" || *v == "0" || *v == "no")
      return false;
    throw ConfigError(fmt::format("{}: expected a boolean, got '{}'", where(key), *v));
  }

  std::string string(const std::string &key, const std::string &fallback) {
    auto v = raw(key);
    return v ? *v : fallback;
  }

  std::vector<double> numbers(const std::string &key, std::vector<double> fallback) {
    auto v = raw(key);
    if (!v)
      return fallback;
    std::vector<double> out;
    for (const auto &tok : split(*v, ','))
      out.push_back(parse_double(tok, key));
    return out;
  }

  double parse_double(const std::string &text, const std::string &key) const {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
      throw ConfigError(fmt::format("{}: expected a number, got '{}'", where(key), text));
    if (!std::isfinite(value))
      throw ConfigError(fmt::format("{}: value must be finite", where(key)));
    return value;
  }

  template <typename Int> Int parse_int(const std::string &text, const std::string &key) const {
    Int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
      throw ConfigError(fmt::format("{}: expected an integer, got '{}'", where(key), text));
    return value;
  }

  void finish() const {
    for (const auto &[key, _] : tree_)
      if (!used_.count(key))
        throw ConfigError(fmt::format("{}: unknown key", where(key)));
  }

private:
  std::string name_;
  const pt::ptree &tree_;
  std::set<std::string> used_;
};

ViewGrid parse_grid(Section &s) {
  auto v = s.string("grid", "none");
  if (v == "none")
    return ViewGrid::None;
  if (v == "rv")
    return ViewGrid::Rv;
  if (v == "bev")
    return ViewGrid::Bev;
  throw ConfigError(fmt::format("{}: expected none, rv or bev", s.where("grid")));
}

ScorerProfile parse_scorer(Section &s) {
  ScorerProfile p;
  p.base_accuracy = s.number("base_accuracy", p.base_accuracy);
  p.temperature = s.number("temperature", p.temperature);
  p.logit_noise = s.number("logit_noise", p.logit_noise);
  p.runner_up = s.number("runner_up", p.runner_up);
  p.error_cell = s.number("error_cell", p.error_cell);
  auto margin = s.numbers("margin", {p.margin_lo, p.margin_hi});
  auto err_margin = s.numbers("error_margin", {p.error_margin_lo, p.error_margin_hi});
  if (margin.size() != 2 || err_margin.size() != 2)
    throw ConfigError(fmt::format("{}: margins take two values 'lo, hi'", s.where("margin")));
  p.margin_lo = margin[0];
  p.margin_hi = margin[1];
  p.error_margin_lo = err_margin[0];
  p.error_margin_hi = err_margin[1];

  if (auto knots = s.raw("range_error"); knots && !knots->empty()) {
    for (const auto &tok : split(*knots, ',')) {
      auto parts = split(tok, ':');
      if (parts.size() != 2)
        throw ConfigError(
            fmt::format("{}: expected 'radius:error' pairs", s.where("range_error")));
      p.range_error.emplace_back(s.parse_double(parts[0], "range_error"),
                                 s.parse_double(parts[1], "range_error"));
    }
  }
  if (auto list = s.raw("confusions"); list && !list->empty()) {
    for (const auto &tok : split(*list, ',')) {
      auto arrow = tok.find('>');
      auto colon = tok.find(':');
      if (arrow == std::string::npos || colon == std::string::npos || colon < arrow)
        throw ConfigError(
            fmt::format("{}: expected 'from>to:probability' entries", s.where("confusions")));
      Confusion c;
      c.from = s.parse_int<std::uint32_t>(trim(tok.substr(0, arrow)), "confusions");
      c.to = s.parse_int<std::uint32_t>(trim(tok.substr(arrow + 1, colon - arrow - 1)),
                                        "confusions");
      c.probability = s.parse_double(trim(tok.substr(colon + 1)), "confusions");
      p.confusions.push_back(c);
    }
  }
  return p;
}

Primitive parse_primitive(Section &s) {
  Primitive p;
  auto kind = s.string("kind", "");
  if (kind == "annulus")
    p.kind = PrimitiveKind::Annulus;
  else if (kind == "boxes")
    p.kind = PrimitiveKind::Boxes;
  else if (kind == "poles")
    p.kind = PrimitiveKind::Poles;
  else
    throw ConfigError(fmt::format("{}: expected annulus, boxes or poles", s.where("kind")));
  auto cls = s.raw("class");
  if (!cls)
    throw ConfigError(fmt::format("{}: required", s.where("class")));
  p.class_id = s.parse_int<std::uint32_t>(*cls, "class");
  p.weight = s.number("weight", p.weight);
  p.r_lo = s.number("r_lo", p.r_lo);
  p.r_hi = s.number("r_hi", p.r_hi);
  p.theta_lo = s.number("theta_lo", 0.0) * kDegToRad;
  p.theta_hi = s.number("theta_hi", 360.0) * kDegToRad;
  p.z_lo = s.number("z_lo", p.z_lo);
  p.z_hi = s.number("z_hi", p.z_hi);
  p.count = s.integer<int>("count", p.count);
  p.size_x = s.number("size_x", p.size_x);
  p.size_y = s.number("size_y", p.size_y);
  p.size_z = s.number("size_z", p.size_z);
  p.intensity_mean = s.number("intensity_mean", p.intensity_mean);
  p.intensity_sigma = s.number("intensity_sigma", p.intensity_sigma);
  return p;
}

void parse_train(Section &s, HeadTrainConfig &t, AugmentRanges &aug) {
  t.epochs = s.integer<int>("epochs", t.epochs);
  t.batch_size = s.integer<std::size_t>("batch_size", t.batch_size);
  t.schedule.lr_max = s.number("lr_max", t.schedule.lr_max);
  t.schedule.warmup_frac = s.number("warmup_frac", t.schedule.warmup_frac);
  t.schedule.start_div = s.number("start_div", t.schedule.start_div);
  t.schedule.end_div = s.number("end_div", t.schedule.end_div);
  t.momentum = s.number("momentum", t.momentum);
  t.standardize = s.boolean("standardize", t.standardize);

  auto weighting = s.string("weighting", "sqrt_inverse");
  if (weighting == "sqrt_inverse")
    t.weighting = ClassWeighting::SqrtInverse;
  else if (weighting == "uniform")
    t.weighting = ClassWeighting::Uniform;
  else
    throw ConfigError(fmt::format("{}: expected sqrt_inverse or uniform", s.where("weighting")));

  auto phi = s.string("phi", "offset_norm");
  if (phi == "offset_norm")
    t.phi = PhiMode::OffsetAndNorm;
  else if (phi == "norm")
    t.phi = PhiMode::NormOnly;
  else
    throw ConfigError(fmt::format("{}: expected offset_norm or norm", s.where("phi")));

  auto widths = s.numbers("widths", {64, 64, 64});
  if (widths.size() != 3)
    throw ConfigError(fmt::format("{}: expected three layer widths", s.where("widths")));
  for (std::size_t i = 0; i < 3; ++i) {
    if (widths[i] < 1 || widths[i] != std::floor(widths[i]) || widths[i] > 65535)
      throw ConfigError(fmt::format("{}: widths must be positive integers", s.where("widths")));
    t.widths[i] = static_cast<int>(widths[i]);
  }

  auto scale = s.numbers("augment_scale", {aug.scale_lo, aug.scale_hi});
  if (scale.size() != 2)
    throw ConfigError(fmt::format("{}: expected 'lo, hi'", s.where("augment_scale")));
  aug.scale_lo = scale[0];
  aug.scale_hi = scale[1];
  aug.jitter_sigma = s.number("augment_jitter", aug.jitter_sigma);
  aug.flips = s.boolean("augment_flips", aug.flips);
  aug.rotate = s.boolean("augment_rotate", aug.rotate);
  if (!(aug.scale_lo > 0.0 && aug.scale_hi >= aug.scale_lo))
    throw ConfigError(fmt::format("{}: need 0 < lo <= hi", s.where("augment_scale")));
  if (!(aug.jitter_sigma >= 0.0))
    throw ConfigError(fmt::format("{}: must be non-negative", s.where("augment_jitter")));
  t.augment.reset();
}

} // namespace

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  train.seed = s;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path &base) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }

  RunConfig cfg;
  cfg.text = std::string(text);
  std::map<std::string, const pt::ptree *> sections;
  std::vector<std::pair<std::string, const pt::ptree *>> primitives;
  for (const auto &[name, child] : tree) {
    if (child.empty() && !child.data().empty())
      throw ConfigError(fmt::format("config key '{}' appears outside any section", name));
    if (name.rfind("primitive.", 0) == 0)
      primitives.emplace_back(name, &child);
    else
      sections[name] = &child;
  }
  static const std::set<std::string> known{"run",      "data", "synthetic", "scorer.f",
                                           "scorer.g", "rv",   "bev",       "train"};
  for (const auto &[name, _] : sections)
    if (!known.count(name))
      throw ConfigError(fmt::format("unknown config section [{}]", name));
  if (!sections.count("run"))
    throw ConfigError("config is missing the [run] section");

  static const pt::ptree empty;
  auto section = [&](const std::string &name) {
    auto it = sections.find(name);
    return Section(name, it == sections.end() ? empty : *it->second);
  };

  {
    auto s = section("run");
    auto seed = s.raw("seed");
    auto k = s.raw("num_classes");
    if (!seed || !k)
      throw ConfigError("[run] requires seed and num_classes");
    cfg.seed = s.parse_int<std::uint64_t>(*seed, "seed");
    cfg.num_classes = s.parse_int<std::uint32_t>(*k, "num_classes");
    cfg.tau = s.number("tau", cfg.tau);
    cfg.train.neighbors = s.integer<std::uint32_t>("neighbors", cfg.train.neighbors);
    cfg.strata = s.numbers("strata", cfg.strata);
    cfg.histogram_bins = s.integer<int>("histogram_bins", cfg.histogram_bins);
    cfg.sweep_taus = s.numbers("sweep_taus", cfg.sweep_taus);
    cfg.emit_ensemble_scores = s.boolean("emit_ensemble_scores", cfg.emit_ensemble_scores);
    s.finish();
  }
  if (cfg.num_classes < 2 || cfg.num_classes >= 0xFFFFu)
    throw ConfigError("[run] num_classes must be in [2, 65534]");
  auto check_tau = [](double tau, const char *what) {
    if (!(tau >= 0.0 && tau <= 1.0))
      throw ConfigError(fmt::format("[run] {} must lie in [0, 1]", what));
  };
  check_tau(cfg.tau, "tau");
  for (double t : cfg.sweep_taus)
    check_tau(t, "sweep_taus");
  if (cfg.strata.size() < 2 || !std::is_sorted(cfg.strata.begin(), cfg.strata.end()) ||
      std::adjacent_find(cfg.strata.begin(), cfg.strata.end()) != cfg.strata.end())
    throw ConfigError("[run] strata needs at least two strictly increasing edges");
  if (cfg.histogram_bins < 1)
    throw ConfigError("[run] histogram_bins must be positive");

  bool has_data = sections.count("data") > 0;
  bool has_synth = sections.count("synthetic") > 0;
  if (has_data == has_synth)
    throw ConfigError("config needs exactly one of [data] or [synthetic]");

  if (has_data) {
    auto s = section("data");
    DiskSource d;
    auto dir = s.raw("dir");
    if (!dir || dir->empty())
      throw ConfigError("[data] dir is required");
    d.dir = base / *dir;
    if (auto remap = s.raw("remap"); remap && !remap->empty())
      d.remap = base / *remap;
    s.finish();
    if (!std::filesystem::is_regular_file(d.dir / "manifest.txt"))
      throw ConfigError(fmt::format("[data] no manifest.txt under {}", d.dir.string()));
    if (d.remap && !std::filesystem::is_regular_file(*d.remap))
      throw ConfigError(fmt::format("[data] remap file {} not found", d.remap->string()));
    if (!primitives.empty() || sections.count("scorer.f") || sections.count("scorer.g"))
      throw ConfigError("[primitive.*] and [scorer.*] only apply to synthetic data");
    cfg.disk = std::move(d);
  } else {
    SyntheticSource src;
    {
      auto s = section("synthetic");
      src.train_scans = s.integer<std::size_t>("train_scans", src.train_scans);
      src.val_scans = s.integer<std::size_t>("val_scans", src.val_scans);
      src.points_per_scan = s.integer<std::size_t>("points_per_scan", src.points_per_scan);
      s.finish();
    }
    if (src.train_scans < 1 || src.val_scans < 1)
      throw ConfigError("[synthetic] needs at least one training and one validation scan");
    if (src.points_per_scan <= cfg.train.neighbors)
      throw ConfigError("[synthetic] points_per_scan must exceed [run] neighbors");
    if (primitives.empty())
      throw ConfigError("[synthetic] needs at least one [primitive.*] section");
    for (const auto &[name, child] : primitives) {
      Section s(name, *child);
      src.primitives.push_back(parse_primitive(s));
      s.finish();
    }
    if (!sections.count("scorer.f") || !sections.count("scorer.g"))
      throw ConfigError("[synthetic] needs [scorer.f] and [scorer.g]");
    {
      auto s = section("scorer.f");
      src.scorer_f = parse_scorer(s);
      src.grid_f = parse_grid(s);
      s.finish();
    }
    {
      auto s = section("scorer.g");
      src.scorer_g = parse_scorer(s);
      src.grid_g = parse_grid(s);
      s.finish();
    }
    SceneConfig scene{cfg.seed, src.points_per_scan, cfg.num_classes, src.primitives};
    scene.validate();
    src.scorer_f.validate(cfg.num_classes);
    src.scorer_g.validate(cfg.num_classes);
    cfg.synthetic = std::move(src);
  }

  {
    auto s = section("rv");
    cfg.rv.height = s.integer<int>("height", cfg.rv.height);
    cfg.rv.width = s.integer<int>("width", cfg.rv.width);
    auto mode = s.string("mode", "spherical");
    if (mode == "spherical")
      cfg.rv.mode = RvMode::Spherical;
    else if (mode == "cylindrical")
      cfg.rv.mode = RvMode::Cylindrical;
    else
      throw ConfigError("[rv] mode must be spherical or cylindrical");
    cfg.rv.fov_up = s.number("fov_up", 3.0) * kDegToRad;
    cfg.rv.fov_down = s.number("fov_down", -25.0) * kDegToRad;
    cfg.rv.z_min = s.number("z_min", cfg.rv.z_min);
    cfg.rv.z_max = s.number("z_max", cfg.rv.z_max);
    s.finish();
    cfg.rv.validate();
  }
  {
    auto s = section("bev");
    cfg.bev.r_bins = s.integer<int>("r_bins", cfg.bev.r_bins);
    cfg.bev.theta_bins = s.integer<int>("theta_bins", cfg.bev.theta_bins);
    cfg.bev.z_bins = s.integer<int>("z_bins", cfg.bev.z_bins);
    cfg.bev.r_max = s.number("r_max", cfg.bev.r_max);
    cfg.bev.z_min = s.number("z_min", cfg.bev.z_min);
    cfg.bev.z_max = s.number("z_max", cfg.bev.z_max);
    s.finish();
    cfg.bev.validate();
  }
  {
    auto s = section("train");
    parse_train(s, cfg.train, cfg.augment_ranges);
    s.finish();
  }
  cfg.train.tau = cfg.tau;
  cfg.train.seed = cfg.seed;
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path &path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception &e) {
    throw ConfigError(fmt::format("cannot read config {}: {}", path.string(), e.what()));
  }
  return parse_run_config(text, path.parent_path());
}

} // namespace amv
