// Copyright (c) 2026 vmfmix authors
// SPDX-License-Identifier: Apache-2.0
//
// Mixture-of-vMF fitting by EM.  The E-step responsibilities and the
// log-likelihood always use the exact normalizer path.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vmfmix/numerics.hpp"
#include "vmfmix/rng.hpp"
#include "vmfmix/unit_vector.hpp"
#include "vmfmix/vmf.hpp"

namespace vmfmix {

struct MixtureModel {
  std::vector<VmfComponent> components;
  std::vector<double> proportions;

  MixtureModel(std::vector<VmfComponent> comps, std::vector<double> props)
      : components(std::move(comps)), proportions(std::move(props)) {
    if (components.empty() || components.size() != proportions.size())
      throw std::invalid_argument("MixtureModel: components/proportions size mismatch");
    double sum = 0.0;
    for (double pi : proportions) {
      if (!(pi >= 0.0)) throw std::invalid_argument("MixtureModel: proportions must be >= 0");
      sum += pi;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("MixtureModel: proportions must sum to 1 within 1e-12");
    for (const auto& c : components)
      if (c.dim() != components.front().dim())
        throw std::invalid_argument("MixtureModel: components must share dimension");
  }

  std::size_t k() const { return components.size(); }
  int dim() const { return components.front().dim(); }
};

namespace detail {

inline std::vector<double> responsibility_logits(const UnitVector& y,
                                                 const MixtureModel& model) {
  if (static_cast<int>(y.dim()) != model.dim())
    throw std::invalid_argument("responsibilities: dimension mismatch");
  std::vector<double> logits(model.k());
  for (std::size_t k = 0; k < model.k(); ++k) {
    const auto& c = model.components[k];
    const double log_pi =
        model.proportions[k] > 0.0 ? std::log(model.proportions[k])
                                   : -std::numeric_limits<double>::infinity();
    logits[k] = log_pi + log_norm_const_exact(c.dim(), c.kappa) +
                c.kappa * dot(c.mu.span(), y.span());
  }
  return logits;
}

}  // namespace detail

// Posterior component probabilities for one observation (log-space with
// max subtraction).
inline std::vector<double> responsibilities(const UnitVector& y, const MixtureModel& model) {
  return softmax(detail::responsibility_logits(y, model));
}

inline double log_likelihood(const std::vector<UnitVector>& data, const MixtureModel& model) {
  std::vector<double> per_point(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    per_point[i] = log_sum_exp(detail::responsibility_logits(data[i], model));
  return pairwise_sum(per_point);
}

// Argmax responsibility; ties broken toward the lowest component index.
inline std::vector<int> hard_assignments(const std::vector<UnitVector>& data,
                                         const MixtureModel& model) {
  std::vector<int> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = responsibilities(data[i], model);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

// Banerjee-style closed-form concentration estimate from the mean
// resultant length, clipped to keep degenerate clusters finite.
inline double estimate_kappa(int p, double rbar) {
  const double r = std::clamp(rbar, 0.0, 1.0 - 1e-12);
  const double est = r * (static_cast<double>(p) - r * r) / (1.0 - r * r);
  return std::clamp(est, 1e-3, 1e6);
}

struct EmResult {
  MixtureModel model;
  std::vector<double> log_likelihood_trace;  // one entry per iteration
  int iterations = 0;
  bool converged = false;
  int reinit_events = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline MixtureModel m_step(const std::vector<UnitVector>& data, const Matrix& resp,
                           const MixtureModel& previous, Rng& rng, int* reinit_events,
                           std::vector<std::string>* warnings) {
  const std::size_t n = data.size();
  const std::size_t kk = resp.cols;
  const int p = static_cast<int>(data.front().dim());
  std::vector<VmfComponent> comps;
  std::vector<double> props(kk);
  comps.reserve(kk);
  for (std::size_t k = 0; k < kk; ++k) {
    double weight = 0.0;
    std::vector<double> weighted_sum(static_cast<std::size_t>(p), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = resp.at(i, k);
      weight += r;
      for (int j = 0; j < p; ++j) weighted_sum[static_cast<std::size_t>(j)] += r * data[i][static_cast<std::size_t>(j)];
    }
    if (weight < 1e-12) {
      // Empty cluster: restart it from a random data point.
      const auto& seed_point = data[rng.below(n)];
      comps.emplace_back(seed_point, 1.0);
      props[k] = 1.0 / static_cast<double>(n);
      ++*reinit_events;
      warnings->push_back("em_fit: reinitialized empty component " + std::to_string(k));
      continue;
    }
    const double resultant = norm2(weighted_sum);
    UnitVector mu = resultant > 1e-100 ? normalize(weighted_sum) : previous.components[k].mu;
    const double rbar = resultant / weight;
    comps.emplace_back(std::move(mu), estimate_kappa(p, rbar));
    props[k] = weight / static_cast<double>(n);
  }
  double total = 0.0;
  for (double pi : props) total += pi;
  for (double& pi : props) pi /= total;
  return MixtureModel(std::move(comps), std::move(props));
}

}  // namespace detail

// EM from an explicit initial model; exposed for permutation/regression
// tests.  The seed only feeds empty-cluster reinitialization.
inline EmResult em_fit_from(const std::vector<UnitVector>& data, MixtureModel init,
                            int max_iters, double tol, std::uint64_t seed = 0) {
  if (data.size() < init.k())
    throw std::invalid_argument("em_fit: need at least K data points");
  Rng rng = Rng::for_stream(seed, "em_reinit");
  EmResult result{std::move(init), {}, 0, false, 0, {}};
  double previous_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    Matrix resp(data.size(), result.model.k());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto r = responsibilities(data[i], result.model);
      std::copy(r.begin(), r.end(), resp.row(i).begin());
    }
    result.model = detail::m_step(data, resp, result.model, rng, &result.reinit_events,
                                  &result.warnings);
    const double ll = log_likelihood(data, result.model);
    result.log_likelihood_trace.push_back(ll);
    result.iterations = iter + 1;
    if (ll + 1e-9 < previous_ll)
      result.warnings.push_back("em_fit: log-likelihood decreased by " +
                                std::to_string(previous_ll - ll) + " at iteration " +
                                std::to_string(iter));
    if (iter > 0 && ll - previous_ll < tol && ll + 1e-9 >= previous_ll) {
      result.converged = true;
      previous_ll = ll;
      break;
    }
    previous_ll = ll;
  }
  return result;
}

namespace detail {

// k-means++-style seeding on cosine distance, then one hard M-step.
inline MixtureModel seed_model(const std::vector<UnitVector>& data, std::size_t kk, Rng& rng) {
  const std::size_t n = data.size();
  std::vector<std::size_t> seeds;
  seeds.push_back(rng.below(n));
  std::vector<double> min_dist(n);
  while (seeds.size() < kk) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t s : seeds)
        best = std::min(best, 1.0 - dot(data[i].span(), data[s].span()));
      min_dist[i] = best * best;
      total += min_dist[i];
    }
    if (total <= 0.0) {
      seeds.push_back(rng.below(n));  // all points coincide with a seed
      continue;
    }
    double target = rng.uniform01() * total;
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= min_dist[i];
      if (target <= 0.0) {
        chosen = i;
        break;
      }
    }
    seeds.push_back(chosen);
  }
  std::vector<VmfComponent> comps;
  comps.reserve(kk);
  for (std::size_t s : seeds) comps.emplace_back(data[s], 1.0);
  MixtureModel initial(std::move(comps),
                       std::vector<double>(kk, 1.0 / static_cast<double>(kk)));
  // One hard M-step from nearest-seed assignments.
  Matrix resp(n, kk);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_cos = -2.0;
    for (std::size_t k = 0; k < kk; ++k) {
      const double c = dot(data[i].span(), initial.components[k].mu.span());
      if (c > best_cos) {
        best_cos = c;
        best = k;
      }
    }
    resp.at(i, best) = 1.0;
  }
  int dummy_events = 0;
  std::vector<std::string> dummy_warnings;
  return m_step(data, resp, initial, rng, &dummy_events, &dummy_warnings);
}

}  // namespace detail

inline EmResult em_fit(const std::vector<UnitVector>& data, std::size_t k, std::uint64_t seed,
                       int max_iters = 200, double tol = 1e-7) {
  if (k == 0) throw std::invalid_argument("em_fit: K must be >= 1");
  if (data.size() < k) throw std::invalid_argument("em_fit: need at least K data points");
  Rng rng = Rng::for_stream(seed, "em_init");
  MixtureModel init = detail::seed_model(data, k, rng);
  return em_fit_from(data, std::move(init), max_iters, tol, seed);
}

}  // namespace vmfmix
