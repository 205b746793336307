// Copyright (c) 2026 vmfmix authors
// SPDX-License-Identifier: Apache-2.0
//
// von Mises-Fisher primitives: exact and approximate log-normalizers, the
// analytic derivative of the approximation, log-density, and a seeded
// sampler.  All functions are pure; the sampler threads its RNG explicitly.

#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vmfmix/bessel.hpp"
#include "vmfmix/numerics.hpp"
#include "vmfmix/rng.hpp"
#include "vmfmix/unit_vector.hpp"

namespace vmfmix {

inline constexpr double kTwoPi = 6.283185307179586476925286766559005768;

// One vMF component: mean direction mu on S^{p-1} and concentration kappa.
struct VmfComponent {
  UnitVector mu;
  double kappa;

  VmfComponent(UnitVector mean, double concentration)
      : mu(std::move(mean)), kappa(concentration) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa))
      throw std::invalid_argument("VmfComponent: kappa must be finite and >= 0");
  }

  int dim() const { return static_cast<int>(mu.dim()); }
};

// log C_p(kappa) = (p/2-1) log kappa - (p/2) log 2pi - log I_{p/2-1}(kappa),
// continuous at kappa = 0 where it equals the log uniform density on S^{p-1}.
inline double log_norm_const_exact(int p, double kappa) {
  if (p < 2) throw std::domain_error("log_norm_const_exact: p must be >= 2");
  if (!(kappa >= 0.0)) throw std::domain_error("log_norm_const_exact: kappa must be >= 0");
  const double half_p = 0.5 * static_cast<double>(p);
  if (kappa == 0.0)
    return std::lgamma(half_p) - std::log(2.0) - half_p * std::log(detail::kPi);
  return (half_p - 1.0) * std::log(kappa) - half_p * std::log(kTwoPi) -
         log_bessel_i(half_p - 1.0, kappa);
}

// Uniform large-order expansion of I_nu(nu r) truncated at its leading
// term, with nu = p/2 - 1.  Valid for even p >= 4 (so nu is a positive
// integer) and kappa > 0.
inline double log_norm_const_approx(int p, double kappa) {
  if (p < 4 || p % 2 != 0)
    throw std::domain_error("log_norm_const_approx: p must be even and >= 4");
  if (!(kappa > 0.0)) throw std::domain_error("log_norm_const_approx: kappa must be > 0");
  const double nu = 0.5 * static_cast<double>(p) - 1.0;
  const double r = kappa / nu;
  const double root = std::sqrt(1.0 + r * r);
  const double eta = root + std::log(r / (1.0 + root));
  const double log_bessel = nu * eta - 0.5 * std::log(kTwoPi * nu) - 0.25 * std::log1p(r * r);
  return nu * std::log(kappa) - 0.5 * static_cast<double>(p) * std::log(kTwoPi) - log_bessel;
}

// d/dkappa of log_norm_const_approx (the closed form above differentiated
// analytically; simplifies to nu/k - sqrt(nu^2+k^2)/k + k/(2(nu^2+k^2))).
inline double grad_log_norm_const_approx(int p, double kappa) {
  if (p < 4 || p % 2 != 0)
    throw std::domain_error("grad_log_norm_const_approx: p must be even and >= 4");
  if (!(kappa > 0.0))
    throw std::domain_error("grad_log_norm_const_approx: kappa must be > 0");
  const double nu = 0.5 * static_cast<double>(p) - 1.0;
  const double h = std::hypot(nu, kappa);
  return nu / kappa - h / kappa + kappa / (2.0 * h * h);
}

enum class NormalizerMode { exact, approx };

inline double vmf_log_density(const UnitVector& y, const VmfComponent& comp,
                              NormalizerMode mode = NormalizerMode::exact) {
  if (y.dim() != comp.mu.dim())
    throw std::invalid_argument("vmf_log_density: dimension mismatch");
  const int p = comp.dim();
  const double log_c = mode == NormalizerMode::exact
                           ? log_norm_const_exact(p, comp.kappa)
                           : log_norm_const_approx(p, comp.kappa);
  return log_c + comp.kappa * dot(comp.mu.span(), y.span());
}

namespace detail {

inline UnitVector uniform_sphere(int p, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(p));
  for (;;) {
    for (double& x : v) x = rng.normal();
    if (norm2(v) > 1e-100) return normalize(v);
  }
}

// Cosine marginal of a vMF via Wood's envelope-rejection scheme.  The b
// parameter uses the algebraically equivalent but stable quotient form.
inline double sample_vmf_cosine(int p, double kappa, Rng& rng) {
  const double d = static_cast<double>(p - 1);
  const double b = d / (std::sqrt(4.0 * kappa * kappa + d * d) + 2.0 * kappa);
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + d * std::log(1.0 - x0 * x0);
  for (;;) {
    const double z = rng.beta(0.5 * d, 0.5 * d);
    const double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = rng.uniform_open01();
    if (kappa * w + d * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
  }
}

}  // namespace detail

// Draws from vMF(mu, kappa) by tangent-normal decomposition: a rejection
// sample of the cosine w, plus a uniform direction in the tangent space.
inline std::vector<UnitVector> sample_vmf(const VmfComponent& comp, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_vmf: n must be >= 1");
  const int p = comp.dim();
  std::vector<UnitVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (comp.kappa == 0.0) {
      out.push_back(detail::uniform_sphere(p, rng));
      continue;
    }
    const double w = detail::sample_vmf_cosine(p, comp.kappa, rng);
    // Tangent direction: Gaussian vector with the mu-component removed.
    std::vector<double> t(static_cast<std::size_t>(p));
    double tn = 0.0;
    do {
      for (double& x : t) x = rng.normal();
      const double proj = dot(t, comp.mu.span());
      for (int j = 0; j < p; ++j) t[static_cast<std::size_t>(j)] -= proj * comp.mu[static_cast<std::size_t>(j)];
      tn = norm2(t);
    } while (tn <= 1e-100);
    const double scale = std::sqrt(std::max(0.0, 1.0 - w * w)) / tn;
    std::vector<double> y(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j)
      y[static_cast<std::size_t>(j)] = w * comp.mu[static_cast<std::size_t>(j)] + scale * t[static_cast<std::size_t>(j)];
    out.push_back(normalize(y));
  }
  return out;
}

inline std::vector<UnitVector> sample_vmf(const VmfComponent& comp, std::size_t n,
                                          std::uint64_t seed) {
  Rng rng = Rng::for_stream(seed, "sample_vmf");
  return sample_vmf(comp, n, rng);
}

}  // namespace vmfmix
