// SPDX-License-Identifier: Apache-2.0
/**
 * Copyright (C) 2026 The AMVNet Fusion Authors
 *
 * @file   error.hpp
 * @brief  Exception types shared by all modules.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace amv {

/// Malformed or inconsistent input data (files, shapes, label ids).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration or command-line usage.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite value.
class DivergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace amv
