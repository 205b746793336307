// Copyright (c) 2026 vmfmix authors
// SPDX-License-Identifier: Apache-2.0
//
// Test-only oracles and utilities.  These deliberately re-derive results
// through independent arithmetic (naive exponentials, long doubles,
// counting formulas) rather than calling the library paths under test.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "vmfmix/rng.hpp"
#include "vmfmix/unit_vector.hpp"

namespace testutil {

inline vmfmix::UnitVector random_unit(int p, vmfmix::Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(p));
  for (double& x : v) x = rng.normal();
  return vmfmix::normalize(v);
}

// Naive softmax in extended precision; the reference for all the
// "brute-force arithmetic" comparisons.
inline std::vector<double> naive_softmax(const std::vector<double>& logits) {
  long double denom = 0.0L;
  std::vector<long double> e(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = expl(static_cast<long double>(logits[i]));
    denom += e[i];
  }
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    out[i] = static_cast<double>(e[i] / denom);
  return out;
}

inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ca, cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
  }
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [k, v] : joint) sum_joint += comb2(v);
  for (const auto& [k, v] : ca) sum_a += comb2(v);
  for (const auto& [k, v] : cb) sum_b += comb2(v);
  const double n2 = comb2(static_cast<double>(a.size()));
  const double expected = sum_a * sum_b / n2;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

}  // namespace testutil
