// Copyright (c) 2026 vmfmix authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vmfmix/numerics.hpp"

namespace vmfmix {

inline constexpr double kUnitNormTol = 1e-12;

// Point on the unit hypersphere S^{p-1}, p >= 2.  Construction validates
// the norm; use normalize() to project an arbitrary vector.
class UnitVector {
 public:
  explicit UnitVector(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2) throw std::invalid_argument("UnitVector: dimension must be >= 2");
    const double n = norm2(coords_);
    if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitNormTol)
      throw std::invalid_argument("UnitVector: norm must be 1 within 1e-12");
  }

  std::size_t dim() const { return coords_.size(); }
  const std::vector<double>& coords() const { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::span<const double> span() const { return coords_; }

  friend bool operator==(const UnitVector& a, const UnitVector& b) {
    return a.coords_ == b.coords_;
  }

 private:
  std::vector<double> coords_;
};

inline UnitVector normalize(std::span<const double> v) {
  if (v.size() < 2) throw std::invalid_argument("normalize: dimension must be >= 2");
  const double n = norm2(v);
  if (!(n > 0.0) || !std::isfinite(n))
    throw std::domain_error("normalize: zero or non-finite vector");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  // One refinement pass keeps the invariant after the division rounds.
  const double n2 = norm2(out);
  for (double& x : out) x /= n2;
  return UnitVector(std::move(out));
}

inline UnitVector normalize(const std::vector<double>& v) {
  return normalize(std::span<const double>(v));
}

inline double cosine(const UnitVector& a, const UnitVector& b) {
  return dot(a.span(), b.span());
}

}  // namespace vmfmix
