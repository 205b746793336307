// Copyright (c) 2026 vmfmix authors
// SPDX-License-Identifier: Apache-2.0
//
// Post-hoc diagnostics of a trained prototype bank: duplicate grouping,
// void-prototype detection, threshold sweeps, and precision-percentile
// kNN bucketing.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vmfmix/head.hpp"
#include "vmfmix/numerics.hpp"
#include "vmfmix/unit_vector.hpp"

namespace vmfmix {

struct DuplicateReport {
  double threshold = 0.0;
  std::vector<std::vector<int>> groups;  // partition of [0, K), in creation order
  std::vector<int> group_of;             // prototype index -> group index
  int unique_count = 0;
  int largest_group_index = 0;
  int largest_group_size = 0;
  std::optional<UnitVector> largest_group_centroid;
};

// Greedy first-seed grouping: prototypes are visited in index order and
// join the first group whose seed member exceeds the cosine threshold,
// else they start a new group.  Deterministic by construction.
inline DuplicateReport duplicate_sets(const PrototypeBank& bank, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("duplicate_sets: threshold must be in (0,1)");
  DuplicateReport report;
  report.threshold = threshold;
  const int kk = static_cast<int>(bank.k());
  report.group_of.assign(static_cast<std::size_t>(kk), -1);
  for (int j = 0; j < kk; ++j) {
    int assigned = -1;
    for (std::size_t g = 0; g < report.groups.size(); ++g) {
      const int seed = report.groups[g].front();
      if (dot(bank.direction(static_cast<std::size_t>(seed)),
              bank.direction(static_cast<std::size_t>(j))) > threshold) {
        assigned = static_cast<int>(g);
        break;
      }
    }
    if (assigned < 0) {
      assigned = static_cast<int>(report.groups.size());
      report.groups.emplace_back();
    }
    report.groups[static_cast<std::size_t>(assigned)].push_back(j);
    report.group_of[static_cast<std::size_t>(j)] = assigned;
  }
  report.unique_count = static_cast<int>(report.groups.size());
  for (std::size_t g = 0; g < report.groups.size(); ++g) {
    if (static_cast<int>(report.groups[g].size()) > report.largest_group_size) {
      report.largest_group_size = static_cast<int>(report.groups[g].size());
      report.largest_group_index = static_cast<int>(g);
    }
  }
  const auto& members = report.groups[static_cast<std::size_t>(report.largest_group_index)];
  std::vector<double> mean(static_cast<std::size_t>(bank.dim()), 0.0);
  for (int j : members)
    for (int d = 0; d < bank.dim(); ++d)
      mean[static_cast<std::size_t>(d)] += bank.direction(static_cast<std::size_t>(j))[static_cast<std::size_t>(d)];
  if (norm2(mean) > 1e-12) report.largest_group_centroid = normalize(mean);
  return report;
}

// Index of the component with the highest assignment logit; dino mode is
// temperature-free (the argmax of <w_k, y> is invariant to sharpening),
// vmf mode needs tau to place the log-normalizer on the right scale.
inline int argmax_assignment(const PrototypeBank& bank, const UnitVector& y,
                             HeadMode mode = HeadMode::dino, double tau = 1.0) {
  std::vector<double> logits;
  if (mode == HeadMode::dino) {
    logits.resize(bank.k());
    for (std::size_t k = 0; k < bank.k(); ++k)
      logits[k] = bank.magnitude(k) * dot(bank.direction(k), y.span());
  } else {
    logits = student_logits(y, bank, tau, HeadMode::vmf);
  }
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

struct VoidReport {
  std::vector<bool> is_void;             // per duplicate group
  std::vector<double> alignment;         // cosine(group centroid, normalized data mean)
  std::vector<bool> alignment_defined;   // false when the data mean is degenerate
  std::vector<int> group_assignments;    // argmax hits per group
};

// Flags duplicate groups that receive no argmax assignments, and reports
// each group's alignment with the normalized data mean.  A data mean with
// norm below 1e-6 leaves the alignment undefined rather than fabricated.
inline VoidReport void_prototype_check(const PrototypeBank& bank,
                                       const std::vector<UnitVector>& data_reps,
                                       const DuplicateReport& report,
                                       HeadMode mode = HeadMode::dino, double tau = 1.0) {
  if (data_reps.empty()) throw std::invalid_argument("void_prototype_check: empty data");
  VoidReport out;
  const std::size_t n_groups = report.groups.size();
  out.group_assignments.assign(n_groups, 0);
  for (const auto& y : data_reps) {
    const int k = argmax_assignment(bank, y, mode, tau);
    out.group_assignments[static_cast<std::size_t>(report.group_of[static_cast<std::size_t>(k)])]++;
  }
  std::vector<double> mean(static_cast<std::size_t>(bank.dim()), 0.0);
  for (const auto& y : data_reps)
    for (int d = 0; d < bank.dim(); ++d)
      mean[static_cast<std::size_t>(d)] += y[static_cast<std::size_t>(d)] / static_cast<double>(data_reps.size());
  const bool mean_defined = norm2(mean) >= 1e-6;
  std::optional<UnitVector> mean_dir;
  if (mean_defined) mean_dir = normalize(mean);

  out.is_void.resize(n_groups);
  out.alignment.assign(n_groups, 0.0);
  out.alignment_defined.assign(n_groups, mean_defined);
  for (std::size_t g = 0; g < n_groups; ++g) {
    out.is_void[g] = out.group_assignments[g] == 0;
    if (!mean_defined) continue;
    std::vector<double> centroid(static_cast<std::size_t>(bank.dim()), 0.0);
    for (int j : report.groups[g])
      for (int d = 0; d < bank.dim(); ++d)
        centroid[static_cast<std::size_t>(d)] +=
            bank.direction(static_cast<std::size_t>(j))[static_cast<std::size_t>(d)];
    if (norm2(centroid) <= 1e-12) {
      out.alignment_defined[g] = false;
      continue;
    }
    out.alignment[g] = dot(normalize(centroid).span(), mean_dir->span());
  }
  return out;
}

struct UtilizationRow {
  double threshold;
  int unique_count;
  int largest_group_size;
};

inline std::vector<UtilizationRow> utilization_sweep(const PrototypeBank& bank,
                                                     const std::vector<double>& thresholds) {
  std::vector<UtilizationRow> rows;
  rows.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto report = duplicate_sets(bank, t);
    rows.push_back({t, report.unique_count, report.largest_group_size});
  }
  return rows;
}

struct PercentileBucket {
  double lo = 0.0;   // percentile range [lo, hi)
  double hi = 0.0;
  int count = 0;
  double accuracy = 0.0;
};

namespace detail {

// Majority vote over the k nearest neighbors by cosine similarity; ties
// broken by summed similarity, then by the lowest label.
inline int knn_vote(const std::vector<std::pair<double, int>>& sims, std::size_t k) {
  std::vector<std::pair<double, int>> order(sims);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  std::vector<int> labels;
  std::vector<int> votes;
  std::vector<double> sim_sums;
  for (std::size_t i = 0; i < k; ++i) {
    const int label = order[i].second;
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) {
      labels.push_back(label);
      votes.push_back(1);
      sim_sums.push_back(order[i].first);
    } else {
      const std::size_t idx = static_cast<std::size_t>(it - labels.begin());
      votes[idx] += 1;
      sim_sums[idx] += order[i].first;
    }
  }
  int best = -1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const std::size_t b = static_cast<std::size_t>(best);
    if (votes[i] > votes[b] ||
        (votes[i] == votes[b] && sim_sums[i] > sim_sums[b]) ||
        (votes[i] == votes[b] && sim_sums[i] == sim_sums[b] && labels[i] < labels[b]))
      best = static_cast<int>(i);
  }
  return labels[static_cast<std::size_t>(best)];
}

}  // namespace detail

// Buckets points by the magnitude percentile of their argmax component and
// reports leave-one-out kNN accuracy per bucket.  Rejects banks whose
// magnitudes carry no information.
inline std::vector<PercentileBucket> precision_percentile_report(
    const PrototypeBank& bank, const std::vector<UnitVector>& reps,
    const std::vector<int>& labels, const std::vector<double>& percentile_edges,
    HeadMode mode = HeadMode::dino, double tau = 1.0, std::size_t knn_k = 10) {
  if (bank.l2_normalized())
    throw std::invalid_argument(
        "precision_percentile_report: magnitudes of an l2-normalized bank are all 1; "
        "percentiles are degenerate");
  if (reps.size() != labels.size() || reps.empty())
    throw std::invalid_argument("precision_percentile_report: reps/labels mismatch");
  if (percentile_edges.size() < 2)
    throw std::invalid_argument("precision_percentile_report: need at least two edges");
  if (knn_k + 1 > reps.size())
    throw std::invalid_argument("precision_percentile_report: k too large for leave-one-out");

  const std::size_t kk = bank.k();
  double min_g = bank.magnitude(0), max_g = bank.magnitude(0);
  for (std::size_t k = 1; k < kk; ++k) {
    min_g = std::min(min_g, bank.magnitude(k));
    max_g = std::max(max_g, bank.magnitude(k));
  }
  if (max_g - min_g <= 1e-12 * std::max(1.0, max_g))
    throw std::invalid_argument(
        "precision_percentile_report: all magnitudes equal; percentiles are degenerate");

  // Mid-rank percentile of each component's magnitude among the K values.
  std::vector<double> percentile(kk);
  for (std::size_t k = 0; k < kk; ++k) {
    int below = 0, equal = 0;
    for (std::size_t j = 0; j < kk; ++j) {
      if (bank.magnitude(j) < bank.magnitude(k)) ++below;
      if (j != k && bank.magnitude(j) == bank.magnitude(k)) ++equal;
    }
    percentile[k] = 100.0 * (below + 0.5 * equal) / static_cast<double>(kk);
  }

  std::vector<PercentileBucket> buckets(percentile_edges.size() - 1);
  for (std::size_t b = 0; b + 1 < percentile_edges.size(); ++b) {
    buckets[b].lo = percentile_edges[b];
    buckets[b].hi = percentile_edges[b + 1];
  }
  const auto bucket_of = [&](double pct) {
    for (std::size_t b = 0; b + 1 < buckets.size(); ++b)
      if (pct >= buckets[b].lo && pct < buckets[b].hi) return b;
    return buckets.size() - 1;  // last bucket is closed on the right
  };

  std::vector<int> correct(buckets.size(), 0);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const int comp = argmax_assignment(bank, reps[i], mode, tau);
    const std::size_t b = bucket_of(percentile[static_cast<std::size_t>(comp)]);
    buckets[b].count += 1;
    std::vector<std::pair<double, int>> sims;
    sims.reserve(reps.size() - 1);
    for (std::size_t j = 0; j < reps.size(); ++j) {
      if (j == i) continue;
      sims.emplace_back(dot(reps[i].span(), reps[j].span()), labels[j]);
    }
    if (detail::knn_vote(sims, knn_k) == labels[i]) correct[b] += 1;
  }
  for (std::size_t b = 0; b < buckets.size(); ++b)
    buckets[b].accuracy =
        buckets[b].count > 0 ? static_cast<double>(correct[b]) / buckets[b].count : 0.0;
  return buckets;
}

}  // namespace vmfmix
