#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

#include "bda/error.hpp"
#include "doctest.h"

// Kind of the bda::Error thrown by f; fails the test when nothing is thrown.
inline bda::ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const bda::Error& e) {
    return e.kind();
  }
  FAIL("no bda::Error thrown");
  return bda::ErrorKind::runtime;
}

#include <random>
#include <string>
#include <vector>

#include "bda/tabular.hpp"

// Numeric dataset v1..vp whose mask[row][col] = 1 marks observed cells.
inline bda::Dataset masked_dataset(const std::vector<std::vector<int>>& mask) {
  std::vector<bda::Column> cols;
  const std::size_t p = mask.empty() ? 0 : mask[0].size();
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> v;
    std::vector<std::uint8_t> obs;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      obs.push_back(static_cast<std::uint8_t>(mask[i][j]));
      v.push_back(mask[i][j] ? static_cast<double>(i + j) : std::nan(""));
    }
    cols.emplace_back(bda::ColumnSchema::numeric("v" + std::to_string(j + 1)), std::move(v), std::move(obs));
  }
  return bda::Dataset(std::move(cols));
}

inline std::vector<std::vector<int>> random_mask(std::mt19937_64& rng, std::size_t n, std::size_t p, double miss) {
  std::bernoulli_distribution d(miss);
  std::vector<std::vector<int>> m(n, std::vector<int>(p));
  for (auto& row : m)
    for (auto& c : row) c = d(rng) ? 0 : 1;
  return m;
}
