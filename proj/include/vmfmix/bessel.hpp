// Copyright (c) 2026 vmfmix authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "vmfmix/numerics.hpp"

namespace vmfmix {

namespace detail {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Ascending series sum_m (x/2)^{nu+2m} / (m! Gamma(nu+m+1)), evaluated in
// log space: terms are scaled by the peak term and Kahan-summed, so the
// result stays finite for arguments far beyond exp() range.
inline double log_bessel_i_series(double nu, double x) {
  const double log_half_x = std::log(0.5 * x);
  const auto log_term = [&](double m) {
    return (nu + 2.0 * m) * log_half_x - std::lgamma(m + 1.0) - std::lgamma(nu + m + 1.0);
  };
  // The term sequence is unimodal with peak near m* solving m(nu+m) = (x/2)^2.
  const double m_star = 0.5 * (-nu + std::sqrt(nu * nu + x * x));
  const double m_peak = std::max(0.0, std::floor(m_star));
  const double log_peak = log_term(m_peak);

  KahanSum sum;
  constexpr double kLogCutoff = -60.0;  // exp(-60) ~ 9e-27, far below 1 ulp of the sum
  constexpr std::uint64_t kMaxTerms = 20'000'000;
  for (std::uint64_t m = 0;; ++m) {
    const double lt = log_term(static_cast<double>(m));
    sum.add(std::exp(lt - log_peak));
    if (static_cast<double>(m) > m_peak && lt - log_peak < kLogCutoff) break;
    if (m >= kMaxTerms)
      throw std::runtime_error("log_bessel_i: power series failed to converge");
  }
  return log_peak + std::log(sum.value());
}

// Large-argument expansion of e^{-x} I_nu(x); valid when x dominates nu^2.
// Returns nullopt if the (asymptotic, eventually divergent) series does not
// reach the tolerance while its terms still shrink.
inline std::optional<double> log_bessel_i_large_arg(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  KahanSum sum;
  sum.add(term);
  double prev_abs = 1.0;
  for (int k = 1; k <= 60; ++k) {
    const double f = 2.0 * k - 1.0;
    term *= -(mu - f * f) / (8.0 * k * x);
    const double a = std::abs(term);
    if (a >= prev_abs) return std::nullopt;  // started diverging before converging
    sum.add(term);
    if (a < 1e-18 * std::abs(sum.value())) {
      if (!(sum.value() > 0.0)) return std::nullopt;
      return x - 0.5 * std::log(2.0 * kPi * x) + std::log(sum.value());
    }
    prev_abs = a;
  }
  return std::nullopt;
}

}  // namespace detail

// log I_nu(x) for nu >= 0, x > 0, accurate to at least 10 significant
// digits over nu in [0, 200], x in (0, 2000] (and usable well beyond).
inline double log_bessel_i(double order, double argument) {
  if (!(order >= 0.0)) throw std::domain_error("log_bessel_i: order must be >= 0");
  if (!(argument > 0.0)) throw std::domain_error("log_bessel_i: argument must be > 0");
  if (!std::isfinite(order) || !std::isfinite(argument))
    throw std::domain_error("log_bessel_i: non-finite input");

  if (argument >= 100.0 && argument >= 8.0 * order * order) {
    if (auto v = detail::log_bessel_i_large_arg(order, argument)) return *v;
  }
  return detail::log_bessel_i_series(order, argument);
}

// Mean resultant length A_p(kappa) = I_{p/2}(kappa) / I_{p/2-1}(kappa).
inline double mean_resultant_length(int p, double kappa) {
  if (p < 2) throw std::domain_error("mean_resultant_length: p must be >= 2");
  if (kappa < 0.0) throw std::domain_error("mean_resultant_length: kappa must be >= 0");
  if (kappa == 0.0) return 0.0;
  const double half_p = 0.5 * static_cast<double>(p);
  return std::exp(log_bessel_i(half_p, kappa) - log_bessel_i(half_p - 1.0, kappa));
}

}  // namespace vmfmix
