// Copyright (c) 2026 vmfmix authors
// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale self-distillation: synthetic hypersphere data with known
// cluster structure, a linear encoder with an L2-normalization bottleneck
// and a weight-normalized prototype layer, the student/teacher loop with
// centering and sharpening, collapse metrics, kNN evaluation, and the
// normalization-by-centering ablation grid.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vmfmix/analysis.hpp"
#include "vmfmix/head.hpp"
#include "vmfmix/movmf.hpp"
#include "vmfmix/numerics.hpp"
#include "vmfmix/rng.hpp"
#include "vmfmix/unit_vector.hpp"
#include "vmfmix/vmf.hpp"

namespace vmfmix {

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticDataset {
  Matrix points;             // n x d_in ambient vectors
  std::vector<int> labels;   // generating component per point
  MixtureModel generator;    // ambient-space mixture the points came from
  double noise = 0.0;
  int k_true = 0;

  std::size_t size() const { return points.rows; }
  int dim() const { return static_cast<int>(points.cols); }
};

// K_true ambient directions with pairwise cosine <= 0.3, vMF samples around
// each, plus isotropic Gaussian noise.  Labels follow the generating
// component.
inline SyntheticDataset generate_dataset(int k_true, int d_in, std::size_t n, double kappa_true,
                                         double noise, std::uint64_t seed) {
  if (k_true < 2) throw std::invalid_argument("generate_dataset: K_true must be >= 2");
  if (d_in < 2) throw std::invalid_argument("generate_dataset: d_in must be >= 2");
  if (!(kappa_true >= 0.0) || !(noise >= 0.0))
    throw std::invalid_argument("generate_dataset: negative kappa or noise");
  Rng rng = Rng::for_stream(seed, "dataset");

  std::vector<UnitVector> directions;
  constexpr int kMaxTries = 10000;
  int tries = 0;
  while (static_cast<int>(directions.size()) < k_true) {
    if (++tries > kMaxTries)
      throw std::runtime_error("generate_dataset: could not place separated directions");
    std::vector<double> v(static_cast<std::size_t>(d_in));
    for (double& x : v) x = rng.normal();
    if (norm2(v) <= 1e-100) continue;
    UnitVector candidate = normalize(v);
    bool ok = true;
    for (const auto& d : directions)
      if (dot(candidate.span(), d.span()) > 0.3) ok = false;
    if (ok) directions.push_back(std::move(candidate));
  }

  std::vector<VmfComponent> comps;
  comps.reserve(static_cast<std::size_t>(k_true));
  for (const auto& d : directions) comps.emplace_back(d, kappa_true);
  MixtureModel generator(std::move(comps),
                         std::vector<double>(static_cast<std::size_t>(k_true),
                                             1.0 / static_cast<double>(k_true)));

  SyntheticDataset data{Matrix(n, static_cast<std::size_t>(d_in)), {}, generator, noise, k_true};
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(k_true)));
    data.labels[i] = label;
    const auto sample =
        sample_vmf(generator.components[static_cast<std::size_t>(label)], 1, rng).front();
    auto row = data.points.row(i);
    for (int j = 0; j < d_in; ++j)
      row[static_cast<std::size_t>(j)] = sample[static_cast<std::size_t>(j)] + noise * rng.normal();
  }
  return data;
}

// Two independently perturbed views of one ambient point.
inline std::pair<std::vector<double>, std::vector<double>> augment(std::span<const double> x,
                                                                   double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("augment: sigma must be >= 0");
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> b(x.begin(), x.end());
  if (sigma > 0.0) {
    for (double& v : a) v += sigma * rng.normal();
    for (double& v : b) v += sigma * rng.normal();
  }
  return {std::move(a), std::move(b)};
}

inline std::pair<std::vector<double>, std::vector<double>> augment(std::span<const double> x,
                                                                   double sigma,
                                                                   std::uint64_t seed) {
  Rng rng = Rng::for_stream(seed, "augment");
  return augment(x, sigma, rng);
}

// ---------------------------------------------------------------------------
// Encoder

// Linear map d_in -> p with bias, followed by L2 normalization, followed by
// the prototype bank.  The whole student parameter vector is
// [weight, bias, directions, log magnitudes].
struct EncoderParams {
  Matrix weight;              // p x d_in
  std::vector<double> bias;   // p
  PrototypeBank bank;

  int d_in() const { return static_cast<int>(weight.cols); }
  int p() const { return static_cast<int>(weight.rows); }

  std::vector<double> pre_normalized(std::span<const double> x) const {
    if (x.size() != weight.cols) throw std::invalid_argument("encoder: input dim mismatch");
    std::vector<double> u(weight.rows);
    for (std::size_t r = 0; r < weight.rows; ++r) u[r] = bias[r] + dot(weight.row(r), x);
    return u;
  }

  UnitVector represent(std::span<const double> x) const { return normalize(pre_normalized(x)); }

  std::vector<double> flatten() const {
    std::vector<double> flat;
    flat.reserve(weight.data.size() + bias.size() + bank.directions().data.size() + bank.k());
    flat.insert(flat.end(), weight.data.begin(), weight.data.end());
    flat.insert(flat.end(), bias.begin(), bias.end());
    const auto& dirs = bank.directions().data;
    flat.insert(flat.end(), dirs.begin(), dirs.end());
    flat.insert(flat.end(), bank.log_magnitudes().begin(), bank.log_magnitudes().end());
    return flat;
  }

  // Rebuilds from a flat vector; prototype directions are renormalized so
  // the bank invariant survives EMA interpolation.
  static EncoderParams unflatten(std::span<const double> flat, int d_in, int p, std::size_t kk,
                                 bool l2_normalized) {
    const std::size_t nw = static_cast<std::size_t>(p) * static_cast<std::size_t>(d_in);
    const std::size_t nd = kk * static_cast<std::size_t>(p);
    if (flat.size() != nw + static_cast<std::size_t>(p) + nd + kk)
      throw std::invalid_argument("encoder: flat parameter size mismatch");
    Matrix w(static_cast<std::size_t>(p), static_cast<std::size_t>(d_in));
    std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(nw), w.data.begin());
    std::vector<double> b(flat.begin() + static_cast<std::ptrdiff_t>(nw),
                          flat.begin() + static_cast<std::ptrdiff_t>(nw + static_cast<std::size_t>(p)));
    Matrix dirs(kk, static_cast<std::size_t>(p));
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(nw + static_cast<std::size_t>(p)),
              flat.begin() + static_cast<std::ptrdiff_t>(nw + static_cast<std::size_t>(p) + nd),
              dirs.data.begin());
    for (std::size_t k = 0; k < kk; ++k) {
      const UnitVector u = normalize(dirs.row(k));
      std::copy(u.coords().begin(), u.coords().end(), dirs.row(k).begin());
    }
    std::vector<double> logs(flat.end() - static_cast<std::ptrdiff_t>(kk), flat.end());
    if (l2_normalized) std::fill(logs.begin(), logs.end(), 0.0);
    return EncoderParams{std::move(w), std::move(b),
                         PrototypeBank(std::move(dirs), std::move(logs), l2_normalized)};
  }
};

// ---------------------------------------------------------------------------
// Config

struct LinearSchedule {
  double start = 0.0;
  double end = 0.0;
  int warmup_steps = 0;  // value is `end` from this step on

  double at(int step) const {
    if (warmup_steps <= 0 || step >= warmup_steps) return end;
    return start + (end - start) * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
};

struct TrainConfig {
  HeadMode mode = HeadMode::vmf;
  CenterVariant centering = CenterVariant::probability;
  bool l2_normalize_prototypes = false;

  int k_prototypes = 32;
  int rep_dim = 8;  // p; even and >= 4
  int steps = 1500;
  int batch_size = 64;
  double learning_rate = 1.0;
  std::uint64_t seed = 1;

  double tau_s = 0.1;
  LinearSchedule tau_t{0.04, 0.07, 120};
  LinearSchedule ema_lambda{0.996, 0.996, 0};
  double center_momentum = 0.9;
  double augment_sigma = 0.2;

  // Dataset block (regenerated deterministically from these keys).
  int data_k_true = 4;
  int data_dim = 16;
  std::size_t data_n = 2000;
  double data_kappa = 25.0;
  double data_noise = 0.1;
  std::uint64_t data_seed = 7;

  double eval_fraction = 0.2;
  std::size_t knn_k = 10;

  void validate() const {
    if (rep_dim < 4 || rep_dim % 2 != 0)
      throw std::invalid_argument("TrainConfig: rep_dim must be even and >= 4");
    if (data_dim < rep_dim) throw std::invalid_argument("TrainConfig: data_dim must be >= rep_dim");
    if (k_prototypes < 2) throw std::invalid_argument("TrainConfig: need at least 2 prototypes");
    if (steps < 1 || batch_size < 1) throw std::invalid_argument("TrainConfig: steps/batch_size");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate");
    if (!(center_momentum > 0.0 && center_momentum < 1.0))
      throw std::invalid_argument("TrainConfig: center_momentum must be in (0,1)");
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
      throw std::invalid_argument("TrainConfig: eval_fraction must be in (0,1)");
    if (!(augment_sigma >= 0.0)) throw std::invalid_argument("TrainConfig: augment_sigma");
    Temperatures(tau_s, std::min(tau_t.start, tau_t.end));  // validates sharpening asymmetry
  }
};

// ---------------------------------------------------------------------------
// Metrics

struct MetricsRow {
  int step;
  double loss;
  double marginal_entropy;
  double conditional_entropy;
  double center_norm;
  double tau_t;
};

// H(mean row) and mean(H(row)) of a row-stochastic matrix.  One-hot
// collapse drives both low; uniform collapse drives the conditional
// entropy to log K; healthy clustering keeps the marginal high and the
// conditional low.
inline std::pair<double, double> collapse_metrics(const Matrix& teacher_probs) {
  if (teacher_probs.rows == 0) throw std::invalid_argument("collapse_metrics: empty matrix");
  std::vector<double> marginal(teacher_probs.cols, 0.0);
  double conditional = 0.0;
  for (std::size_t b = 0; b < teacher_probs.rows; ++b) {
    double row_sum = 0.0;
    for (std::size_t k = 0; k < teacher_probs.cols; ++k) {
      const double p = teacher_probs.at(b, k);
      if (!(p >= 0.0) || !std::isfinite(p))
        throw std::invalid_argument("collapse_metrics: malformed probability row");
      row_sum += p;
      marginal[k] += p / static_cast<double>(teacher_probs.rows);
    }
    if (std::abs(row_sum - 1.0) > 1e-9)
      throw std::invalid_argument("collapse_metrics: rows must sum to 1");
    conditional += entropy(teacher_probs.row(b)) / static_cast<double>(teacher_probs.rows);
  }
  return {entropy(marginal), conditional};
}

// ---------------------------------------------------------------------------
// kNN evaluation

inline double knn_eval(const std::vector<UnitVector>& train_reps,
                       const std::vector<int>& train_labels,
                       const std::vector<UnitVector>& test_reps,
                       const std::vector<int>& test_labels, std::size_t k) {
  if (train_reps.empty() || test_reps.empty()) throw std::invalid_argument("knn_eval: empty set");
  if (train_reps.size() != train_labels.size() || test_reps.size() != test_labels.size())
    throw std::invalid_argument("knn_eval: reps/labels mismatch");
  if (k < 1 || k > train_reps.size()) throw std::invalid_argument("knn_eval: bad k");
  int correct = 0;
  std::vector<std::pair<double, int>> sims(train_reps.size());
  for (std::size_t i = 0; i < test_reps.size(); ++i) {
    for (std::size_t j = 0; j < train_reps.size(); ++j)
      sims[j] = {dot(test_reps[i].span(), train_reps[j].span()), train_labels[j]};
    if (detail::knn_vote(sims, k) == test_labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_reps.size());
}

// ---------------------------------------------------------------------------
// Training

struct TrainResult {
  EncoderParams student;
  EncoderParams teacher;
  CenterState center;
  std::vector<MetricsRow> metrics;
  bool collapse_detected = false;
  double knn_accuracy = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

inline EncoderParams init_encoder(const TrainConfig& config, Rng& rng) {
  const int p = config.rep_dim;
  Matrix w(static_cast<std::size_t>(p), static_cast<std::size_t>(config.data_dim));
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.data_dim));
  for (double& x : w.data) x = scale * rng.normal();
  std::vector<double> b(static_cast<std::size_t>(p), 0.0);
  Matrix dirs(static_cast<std::size_t>(config.k_prototypes), static_cast<std::size_t>(p));
  for (int k = 0; k < config.k_prototypes; ++k) {
    std::vector<double> v(static_cast<std::size_t>(p));
    do {
      for (double& x : v) x = rng.normal();
    } while (norm2(v) <= 1e-100);
    const UnitVector u = normalize(v);
    std::copy(u.coords().begin(), u.coords().end(), dirs.row(static_cast<std::size_t>(k)).begin());
  }
  std::vector<double> logs(static_cast<std::size_t>(config.k_prototypes), 0.0);
  return EncoderParams{std::move(w), std::move(b),
                       PrototypeBank(std::move(dirs), std::move(logs),
                                     config.l2_normalize_prototypes)};
}

// Batch index stream as a pure function of (seed, step): cells of an
// ablation grid that share a seed see identical batch orders no matter
// what else they compute.
inline std::vector<std::size_t> sample_batch_indices(std::uint64_t seed, int step,
                                                     std::size_t batch_size, std::size_t n) {
  Rng rng = Rng::for_stream(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(step + 1)),
                            "batch");
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = rng.below(n);
  return idx;
}

struct StudentGradients {
  Matrix weight;
  std::vector<double> bias;
  Matrix directions;
  std::vector<double> log_magnitudes;

  explicit StudentGradients(const TrainConfig& c)
      : weight(static_cast<std::size_t>(c.rep_dim), static_cast<std::size_t>(c.data_dim)),
        bias(static_cast<std::size_t>(c.rep_dim), 0.0),
        directions(static_cast<std::size_t>(c.k_prototypes), static_cast<std::size_t>(c.rep_dim)),
        log_magnitudes(static_cast<std::size_t>(c.k_prototypes), 0.0) {}
};

// One student view: backprop the head gradient through normalization and
// the linear map, scaled by `weight_of_view`.
inline void accumulate_view(const EncoderParams& student, const HeadGradients& head,
                            std::span<const double> x, std::span<const double> pre_norm,
                            double weight_of_view, StudentGradients* grads) {
  const double norm = norm2(pre_norm);
  const int p = student.p();
  const int d_in = student.d_in();
  for (int r = 0; r < p; ++r) {
    const double gu = weight_of_view * head.grad_representation[static_cast<std::size_t>(r)] / norm;
    grads->bias[static_cast<std::size_t>(r)] += gu;
    auto wrow = grads->weight.row(static_cast<std::size_t>(r));
    for (int col = 0; col < d_in; ++col) wrow[static_cast<std::size_t>(col)] += gu * x[static_cast<std::size_t>(col)];
  }
  for (std::size_t k = 0; k < grads->directions.rows; ++k) {
    auto drow = grads->directions.row(k);
    const auto hrow = head.grad_directions.row(k);
    for (int j = 0; j < p; ++j) drow[static_cast<std::size_t>(j)] += weight_of_view * hrow[static_cast<std::size_t>(j)];
    grads->log_magnitudes[k] += weight_of_view * head.grad_log_magnitudes[k];
  }
}

}  // namespace detail

// The self-distillation loop.  Deterministic: every random draw comes from
// substreams of config.seed, and batch order depends on (seed, step) only.
inline TrainResult train(const TrainConfig& config, const SyntheticDataset& dataset) {
  config.validate();
  if (dataset.dim() != config.data_dim)
    throw std::invalid_argument("train: dataset dimension differs from config");
  const std::size_t n_train =
      dataset.size() - static_cast<std::size_t>(config.eval_fraction * static_cast<double>(dataset.size()));
  if (n_train < static_cast<std::size_t>(config.batch_size))
    throw std::invalid_argument("train: training split smaller than one batch");

  Rng rng_init = Rng::for_stream(config.seed, "init");
  Rng rng_aug = Rng::for_stream(config.seed, "augment");

  EncoderParams student = detail::init_encoder(config, rng_init);
  EncoderParams teacher = student;
  CenterState center = CenterState::zeros(static_cast<std::size_t>(config.k_prototypes),
                                          config.center_momentum, config.centering);

  TrainResult result{std::move(student), std::move(teacher), std::move(center), {}, false, 0.0};
  const double collapse_floor = 0.5 * std::log(static_cast<double>(config.k_prototypes));

  for (int step = 0; step < config.steps; ++step) {
    const double tau_t = config.tau_t.at(step);
    const double lambda = config.ema_lambda.at(step);
    const Temperatures temps(config.tau_s, tau_t);
    const auto batch = detail::sample_batch_indices(config.seed, step,
                                                    static_cast<std::size_t>(config.batch_size),
                                                    n_train);

    detail::StudentGradients grads(config);
    Matrix teacher_prob_rows(2 * batch.size(), static_cast<std::size_t>(config.k_prototypes));
    Matrix center_rows(2 * batch.size(), static_cast<std::size_t>(config.k_prototypes));
    double loss_sum = 0.0;

    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto x = dataset.points.row(batch[b]);
      auto [view_a, view_b] = augment(x, config.augment_sigma, rng_aug);

      const auto u_sa = result.student.pre_normalized(view_a);
      const auto u_sb = result.student.pre_normalized(view_b);
      const UnitVector y_sa = normalize(u_sa);
      const UnitVector y_sb = normalize(u_sb);
      const UnitVector y_ta = result.teacher.represent(view_a);
      const UnitVector y_tb = result.teacher.represent(view_b);

      // Symmetrized loss: each view plays student against the other's
      // teacher output; both directions weigh 1/2.
      const auto g1 = loss_and_grads(y_sa, y_tb, result.student.bank, result.teacher.bank,
                                     result.center, temps, config.mode);
      const auto g2 = loss_and_grads(y_sb, y_ta, result.student.bank, result.teacher.bank,
                                     result.center, temps, config.mode);
      const double w = 0.5 / static_cast<double>(batch.size());
      detail::accumulate_view(result.student, g1, view_a, u_sa, w, &grads);
      detail::accumulate_view(result.student, g2, view_b, u_sb, w, &grads);
      loss_sum += w * (g1.loss + g2.loss);

      for (int k = 0; k < config.k_prototypes; ++k) {
        teacher_prob_rows.at(2 * b, static_cast<std::size_t>(k)) = g2.teacher_probs[static_cast<std::size_t>(k)];
        teacher_prob_rows.at(2 * b + 1, static_cast<std::size_t>(k)) = g1.teacher_probs[static_cast<std::size_t>(k)];
      }
      // Center update inputs: raw inner products for logit centering,
      // uncentered sharpened (+ normalized) logits for probability
      // centering.
      for (std::size_t row = 0; row < 2; ++row) {
        const UnitVector& yt = row == 0 ? y_ta : y_tb;
        for (int k = 0; k < config.k_prototypes; ++k) {
          const double g = result.teacher.bank.magnitude(static_cast<std::size_t>(k));
          const double raw = g * dot(result.teacher.bank.direction(static_cast<std::size_t>(k)), yt.span());
          double value;
          if (config.centering == CenterVariant::logit) {
            value = raw;
          } else {
            value = raw / tau_t;
            if (config.mode == HeadMode::vmf)
              value += log_norm_const_approx(config.rep_dim, g / tau_t);
          }
          center_rows.at(2 * b + row, static_cast<std::size_t>(k)) = value;
        }
      }
    }

    if (!std::isfinite(loss_sum))
      throw TrainingDiverged("train: non-finite loss at step " + std::to_string(step));

    // SGD step on the student.
    const double lr = config.learning_rate;
    for (std::size_t i = 0; i < result.student.weight.data.size(); ++i)
      result.student.weight.data[i] -= lr * grads.weight.data[i];
    for (std::size_t r = 0; r < result.student.bias.size(); ++r)
      result.student.bias[r] -= lr * grads.bias[r];
    Matrix new_dirs = result.student.bank.directions();
    for (std::size_t k = 0; k < new_dirs.rows; ++k) {
      auto row = new_dirs.row(k);
      const auto grow = grads.directions.row(k);
      for (std::size_t j = 0; j < new_dirs.cols; ++j) row[j] -= lr * grow[j];
      const UnitVector u = normalize(row);
      std::copy(u.coords().begin(), u.coords().end(), row.begin());
    }
    std::vector<double> new_logs = result.student.bank.log_magnitudes();
    if (!config.l2_normalize_prototypes)
      for (std::size_t k = 0; k < new_logs.size(); ++k) new_logs[k] -= lr * grads.log_magnitudes[k];
    result.student.bank = PrototypeBank(std::move(new_dirs), std::move(new_logs),
                                        config.l2_normalize_prototypes);

    // EMA teacher on the flat parameter vector, then the center update.
    const auto teacher_flat =
        ema_update(result.teacher.flatten(), result.student.flatten(), lambda);
    result.teacher = EncoderParams::unflatten(teacher_flat, config.data_dim, config.rep_dim,
                                              static_cast<std::size_t>(config.k_prototypes),
                                              config.l2_normalize_prototypes);
    result.center = update_center(result.center, center_rows);

    const auto [marginal, conditional] = collapse_metrics(teacher_prob_rows);
    if (marginal < collapse_floor) result.collapse_detected = true;
    result.metrics.push_back(
        {step, loss_sum, marginal, conditional, norm2(result.center.c), tau_t});
  }

  // Held-out kNN on frozen teacher representations.
  std::vector<UnitVector> train_reps, test_reps;
  std::vector<int> train_labels, test_labels;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    UnitVector y = result.teacher.represent(dataset.points.row(i));
    if (i < n_train) {
      train_reps.push_back(std::move(y));
      train_labels.push_back(dataset.labels[i]);
    } else {
      test_reps.push_back(std::move(y));
      test_labels.push_back(dataset.labels[i]);
    }
  }
  result.knn_accuracy = knn_eval(train_reps, train_labels, test_reps, test_labels,
                                 std::min(config.knn_k, train_reps.size()));
  return result;
}

// ---------------------------------------------------------------------------
// Ablation grid

struct AblationCell {
  std::string normalization;  // "none" | "l2" | "vmf"
  std::string centering;      // "logit" | "probability"
  double knn_accuracy = 0.0;
  int unique_count = 0;
  int largest_group_size = 0;
};

struct AblationResult {
  std::vector<AblationCell> cells;
  std::vector<TrainResult> runs;  // same order as cells
};

// The six normalization-by-centering cells, run with shared seeds so the
// dataset and batch orders are identical across cells.
inline AblationResult run_ablation_grid(const TrainConfig& base_config,
                                        const SyntheticDataset& dataset,
                                        double duplicate_threshold = 0.9) {
  AblationResult result;
  const std::pair<std::string, std::string> norms[] = {
      {"none", "dino"}, {"l2", "dino"}, {"vmf", "vmf"}};
  for (const auto& [norm_name, mode_name] : norms) {
    for (auto variant : {CenterVariant::logit, CenterVariant::probability}) {
      TrainConfig config = base_config;
      config.mode = mode_name == "vmf" ? HeadMode::vmf : HeadMode::dino;
      config.l2_normalize_prototypes = norm_name == "l2";
      config.centering = variant;
      TrainResult run = train(config, dataset);
      const auto report = duplicate_sets(run.teacher.bank, duplicate_threshold);
      result.cells.push_back({norm_name, std::string(to_string(variant)), run.knn_accuracy,
                              report.unique_count, report.largest_group_size});
      result.runs.push_back(std::move(run));
    }
  }
  return result;
}

}  // namespace vmfmix
