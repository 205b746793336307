// Copyright (c) 2026 vmfmix authors
// SPDX-License-Identifier: Apache-2.0
//
// Student/teacher assignment heads over a bank of prototypes, as pure math.
//
// Two logit modes:
//   dino:  l_k = <w_k, y> / tau
//   vmf:   l_k = <w_k, y> / tau + log C_p(|w_k| / tau)   (approx normalizer)
//
// Two centering schemes, keyed by CenterState::variant:
//   logit:        c tracks batch means of raw inner products <w_t, y> and is
//                 applied before sharpening:  (<w_t, y> - c_k) / tau_t [+ log C].
//   probability:  c tracks the log of batch-mean teacher softmax probabilities
//                 and is subtracted from the sharpened logits directly.
//
// The teacher branch never produces gradients; it enters loss_and_grads as
// plain values only.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vmfmix/numerics.hpp"
#include "vmfmix/unit_vector.hpp"
#include "vmfmix/vmf.hpp"

namespace vmfmix {

enum class HeadMode { dino, vmf };
enum class CenterVariant { logit, probability };

inline const char* to_string(HeadMode m) { return m == HeadMode::dino ? "dino" : "vmf"; }
inline const char* to_string(CenterVariant v) {
  return v == CenterVariant::logit ? "logit" : "probability";
}

// Weight-normalized prototype matrix: K unit directions v_k with positive
// magnitudes g_k, so w_k = g_k v_k.  Magnitudes live in log space, which is
// the parameterization the trainer steps in.  An l2-normalized bank freezes
// every magnitude at 1.
class PrototypeBank {
 public:
  PrototypeBank(Matrix directions, std::vector<double> log_magnitudes, bool l2_normalized)
      : directions_(std::move(directions)),
        log_magnitudes_(std::move(log_magnitudes)),
        l2_normalized_(l2_normalized) {
    if (directions_.rows == 0 || directions_.cols < 2)
      throw std::invalid_argument("PrototypeBank: need K >= 1 prototypes of dim >= 2");
    if (log_magnitudes_.size() != directions_.rows)
      throw std::invalid_argument("PrototypeBank: magnitude count mismatch");
    for (std::size_t k = 0; k < directions_.rows; ++k) {
      if (std::abs(norm2(directions_.row(k)) - 1.0) > kUnitNormTol)
        throw std::invalid_argument("PrototypeBank: directions must be unit vectors");
      if (!std::isfinite(log_magnitudes_[k]))
        throw std::invalid_argument("PrototypeBank: non-finite magnitude");
      if (l2_normalized_ && log_magnitudes_[k] != 0.0)
        throw std::invalid_argument("PrototypeBank: l2-normalized bank requires unit magnitudes");
    }
  }

  static PrototypeBank from_magnitudes(Matrix directions, const std::vector<double>& magnitudes,
                                       bool l2_normalized) {
    std::vector<double> logs(magnitudes.size());
    for (std::size_t k = 0; k < magnitudes.size(); ++k) {
      if (!(magnitudes[k] > 0.0))
        throw std::invalid_argument("PrototypeBank: magnitudes must be positive");
      logs[k] = std::log(magnitudes[k]);
    }
    return PrototypeBank(std::move(directions), std::move(logs), l2_normalized);
  }

  std::size_t k() const { return directions_.rows; }
  int dim() const { return static_cast<int>(directions_.cols); }
  bool l2_normalized() const { return l2_normalized_; }
  std::span<const double> direction(std::size_t k) const { return directions_.row(k); }
  const Matrix& directions() const { return directions_; }
  double magnitude(std::size_t k) const {
    return l2_normalized_ ? 1.0 : std::exp(log_magnitudes_[k]);
  }
  double log_magnitude(std::size_t k) const { return l2_normalized_ ? 0.0 : log_magnitudes_[k]; }
  const std::vector<double>& log_magnitudes() const { return log_magnitudes_; }

 private:
  Matrix directions_;  // K x p, unit rows
  std::vector<double> log_magnitudes_;
  bool l2_normalized_;
};

struct CenterState {
  std::vector<double> c;
  double momentum;
  CenterVariant variant;

  CenterState(std::vector<double> center, double m, CenterVariant v)
      : c(std::move(center)), momentum(m), variant(v) {
    if (!(momentum > 0.0 && momentum < 1.0))
      throw std::invalid_argument("CenterState: momentum must be in (0,1)");
    for (double x : c)
      if (!std::isfinite(x)) throw std::invalid_argument("CenterState: non-finite center");
  }

  static CenterState zeros(std::size_t k, double m, CenterVariant v) {
    return CenterState(std::vector<double>(k, 0.0), m, v);
  }
};

struct Temperatures {
  double tau_s;
  double tau_t;

  Temperatures(double student, double teacher) : tau_s(student), tau_t(teacher) {
    if (!(tau_s > 0.0) || !(tau_t > 0.0))
      throw std::invalid_argument("Temperatures: must be positive");
    if (!(tau_t < tau_s))
      throw std::invalid_argument("Temperatures: sharpening requires tau_t < tau_s");
  }
};

namespace detail {

inline void check_head_dims(const UnitVector& y, const PrototypeBank& bank, double tau) {
  if (static_cast<int>(y.dim()) != bank.dim())
    throw std::invalid_argument("assignment head: dimension mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("assignment head: non-positive temperature");
}

}  // namespace detail

inline std::vector<double> student_logits(const UnitVector& y, const PrototypeBank& bank,
                                          double tau_s, HeadMode mode) {
  detail::check_head_dims(y, bank, tau_s);
  std::vector<double> logits(bank.k());
  for (std::size_t k = 0; k < bank.k(); ++k) {
    const double g = bank.magnitude(k);
    logits[k] = g * dot(bank.direction(k), y.span()) / tau_s;
    if (mode == HeadMode::vmf) logits[k] += log_norm_const_approx(bank.dim(), g / tau_s);
  }
  return logits;
}

inline std::vector<double> teacher_logits(const UnitVector& y, const PrototypeBank& bank,
                                          const CenterState& center, double tau_t,
                                          HeadMode mode) {
  detail::check_head_dims(y, bank, tau_t);
  if (center.c.size() != bank.k())
    throw std::invalid_argument("teacher_logits: center length mismatch");
  std::vector<double> logits(bank.k());
  for (std::size_t k = 0; k < bank.k(); ++k) {
    const double g = bank.magnitude(k);
    const double raw = g * dot(bank.direction(k), y.span());
    logits[k] = center.variant == CenterVariant::logit ? (raw - center.c[k]) / tau_t
                                                       : raw / tau_t - center.c[k];
    if (mode == HeadMode::vmf) logits[k] += log_norm_const_approx(bank.dim(), g / tau_t);
  }
  return logits;
}

inline std::vector<double> teacher_probabilities(const UnitVector& y, const PrototypeBank& bank,
                                                 const CenterState& center, double tau_t,
                                                 HeadMode mode) {
  return softmax(teacher_logits(y, bank, center, tau_t, mode));
}

inline double cross_entropy(std::span<const double> p_t, std::span<const double> s_logits) {
  if (p_t.size() != s_logits.size())
    throw std::invalid_argument("cross_entropy: length mismatch");
  double mass = 0.0;
  for (double p : p_t) {
    if (!(p >= 0.0)) throw std::invalid_argument("cross_entropy: negative probability");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-9)
    throw std::invalid_argument("cross_entropy: probabilities must sum to 1");
  const auto lsm = log_softmax(s_logits);
  double loss = 0.0;
  for (std::size_t k = 0; k < p_t.size(); ++k) loss -= p_t[k] * lsm[k];
  return loss;
}

// One EMA step of the centering statistic from a batch of teacher rows.
// logit variant: rows are raw inner products <w_t, y_b>, pre-sharpening.
// probability variant: rows are the full uncentered teacher logits
// (sharpening and any log-normalizer included); the update target is
// log(mean softmax), computed row-stably.
inline CenterState update_center(const CenterState& center, const Matrix& batch_rows) {
  if (batch_rows.rows == 0) throw std::invalid_argument("update_center: empty batch");
  if (batch_rows.cols != center.c.size())
    throw std::invalid_argument("update_center: width mismatch");
  const std::size_t kk = batch_rows.cols;
  std::vector<double> target(kk, 0.0);
  if (center.variant == CenterVariant::logit) {
    for (std::size_t b = 0; b < batch_rows.rows; ++b)
      for (std::size_t k = 0; k < kk; ++k) target[k] += batch_rows.at(b, k);
    for (double& t : target) t /= static_cast<double>(batch_rows.rows);
  } else {
    for (std::size_t b = 0; b < batch_rows.rows; ++b) {
      const auto probs = softmax(batch_rows.row(b));
      for (std::size_t k = 0; k < kk; ++k) target[k] += probs[k];
    }
    for (double& t : target) t = std::log(t / static_cast<double>(batch_rows.rows));
  }
  CenterState next = center;
  for (std::size_t k = 0; k < kk; ++k)
    next.c[k] = center.momentum * center.c[k] + (1.0 - center.momentum) * target[k];
  return next;
}

// Reads the center as a cluster-prior estimate: softmax(c / tau_t) for the
// logit variant, softmax(c) for the probability variant.
inline std::vector<double> estimate_prior(const CenterState& center, double tau_t) {
  if (center.variant == CenterVariant::logit) {
    if (!(tau_t > 0.0)) throw std::invalid_argument("estimate_prior: non-positive temperature");
    std::vector<double> scaled(center.c.size());
    for (std::size_t k = 0; k < scaled.size(); ++k) scaled[k] = center.c[k] / tau_t;
    return softmax(scaled);
  }
  return softmax(center.c);
}

// lambda * teacher + (1 - lambda) * student, elementwise.
inline std::vector<double> ema_update(std::span<const double> teacher_params,
                                      std::span<const double> student_params, double lambda) {
  if (teacher_params.size() != student_params.size())
    throw std::invalid_argument("ema_update: length mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("ema_update: lambda must be in [0,1]");
  std::vector<double> out(teacher_params.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = lambda * teacher_params[i] + (1.0 - lambda) * student_params[i];
  return out;
}

struct HeadGradients {
  double loss = 0.0;
  // d loss / d u at u = y_s, where y(u) = u / |u|; i.e. the tangential
  // projection (I - y y^T) of the raw representation gradient.
  std::vector<double> grad_representation;
  // Per prototype, (I - v v^T) of the raw direction gradient (K x p).
  Matrix grad_directions;
  // d loss / d log g_k; identically zero for l2-normalized banks.
  std::vector<double> grad_log_magnitudes;
  // The teacher distribution actually used (handy for logging).
  std::vector<double> teacher_probs;
};

// Cross-entropy of the student head against a constant teacher
// distribution, with exact analytic gradients for the student branch.
inline HeadGradients loss_and_grads(const UnitVector& y_s, const UnitVector& y_t,
                                    const PrototypeBank& student_bank,
                                    const PrototypeBank& teacher_bank,
                                    const CenterState& center, const Temperatures& temps,
                                    HeadMode mode) {
  const auto p_t = teacher_probabilities(y_t, teacher_bank, center, temps.tau_t, mode);
  const auto s_logits = student_logits(y_s, student_bank, temps.tau_s, mode);

  HeadGradients out;
  out.loss = cross_entropy(p_t, s_logits);
  out.teacher_probs = p_t;

  const auto p_s = softmax(s_logits);
  const std::size_t kk = student_bank.k();
  const int p = student_bank.dim();
  std::vector<double> delta(kk);  // d loss / d s_logits = p_s - p_t
  for (std::size_t k = 0; k < kk; ++k) delta[k] = p_s[k] - p_t[k];

  // Raw gradient wrt y, then projected to the tangent space at y_s.
  std::vector<double> grad_y(static_cast<std::size_t>(p), 0.0);
  for (std::size_t k = 0; k < kk; ++k) {
    const double scale = delta[k] * student_bank.magnitude(k) / temps.tau_s;
    const auto v = student_bank.direction(k);
    for (int j = 0; j < p; ++j) grad_y[static_cast<std::size_t>(j)] += scale * v[static_cast<std::size_t>(j)];
  }
  const double y_dot_grad = dot(y_s.span(), grad_y);
  out.grad_representation.resize(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j)
    out.grad_representation[static_cast<std::size_t>(j)] =
        grad_y[static_cast<std::size_t>(j)] - y_dot_grad * y_s[static_cast<std::size_t>(j)];

  out.grad_directions = Matrix(kk, static_cast<std::size_t>(p));
  out.grad_log_magnitudes.assign(kk, 0.0);
  for (std::size_t k = 0; k < kk; ++k) {
    const double g = student_bank.magnitude(k);
    const auto v = student_bank.direction(k);
    const double vy = dot(v, y_s.span());
    // Direction: raw gradient delta_k g y / tau, projected at v_k.
    const double scale = delta[k] * g / temps.tau_s;
    auto row = out.grad_directions.row(k);
    for (int j = 0; j < p; ++j)
      row[static_cast<std::size_t>(j)] =
          scale * (y_s[static_cast<std::size_t>(j)] - vy * v[static_cast<std::size_t>(j)]);
    if (!student_bank.l2_normalized()) {
      double dlogit_dg = vy / temps.tau_s;
      if (mode == HeadMode::vmf)
        dlogit_dg += grad_log_norm_const_approx(p, g / temps.tau_s) / temps.tau_s;
      out.grad_log_magnitudes[k] = delta[k] * g * dlogit_dg;  // chain through g = exp(log g)
    }
  }
  return out;
}

}  // namespace vmfmix
