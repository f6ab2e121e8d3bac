#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guardian/error.hpp"

namespace guardian {

/// One scored example: gold label (1 = unsafe) and probability of risk.
struct ScoredSample {
  std::string id;
  std::string dataset;
  int gold = 0;
  double score = 0.0;
  bool predicted = false;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = std::numeric_limits<double>::infinity();
};

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

inline ClassCounts count_classes(std::span<const ScoredSample> set) {
  ClassCounts c;
  for (const auto& s : set) (s.gold ? c.positives : c.negatives)++;
  return c;
}

namespace detail {

inline ClassCounts require_both_classes(std::span<const ScoredSample> set) {
  auto c = count_classes(set);
  if (c.positives == 0 || c.negatives == 0) {
    throw Error(ErrorCode::DegenerateClasses,
                "need at least one positive and one negative (got " + std::to_string(c.positives) + "/" +
                    std::to_string(c.negatives) + ")");
  }
  return c;
}

/// Indices ordered by descending score; equal scores keep id order.
inline std::vector<std::size_t> rank_descending(std::span<const ScoredSample> set) {
  std::vector<std::size_t> idx(set.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (set[a].score != set[b].score) return set[a].score > set[b].score;
    return set[a].id < set[b].id;
  });
  return idx;
}

}  // namespace detail

/// ROC operating points from a sweep over the distinct scores, starting at
/// (0, 0) with an infinite threshold. A sample is predicted positive when
/// its score is >= the point's threshold.
inline std::vector<RocPoint> roc_curve(std::span<const ScoredSample> set) {
  const auto counts = detail::require_both_classes(set);
  const auto idx = detail::rank_descending(set);
  std::vector<RocPoint> points{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = set[idx[i]].score;
    for (; i < idx.size() && set[idx[i]].score == s; ++i) (set[idx[i]].gold ? tp : fp)++;
    points.push_back({static_cast<double>(fp) / static_cast<double>(counts.negatives),
                      static_cast<double>(tp) / static_cast<double>(counts.positives), s});
  }
  return points;
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half (Mann-Whitney U / (P*N)).
inline double compute_auc(std::span<const ScoredSample> set) {
  const auto counts = detail::require_both_classes(set);
  std::vector<std::pair<double, int>> v;
  v.reserve(set.size());
  for (const auto& s : set) v.emplace_back(s.score, s.gold);
  std::sort(v.begin(), v.end());
  // Twice U, kept integral so the result is exact up to the final division.
  unsigned long long twice_u = 0;
  std::size_t negatives_below = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i, pos = 0, neg = 0;
    for (; j < v.size() && v[j].first == v[i].first; ++j) (v[j].second ? pos : neg)++;
    twice_u += 2ULL * pos * negatives_below + 1ULL * pos * neg;
    negatives_below += neg;
    i = j;
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(counts.positives) * static_cast<double>(counts.negatives));
}

/// Number of samples that share their score with at least one other sample.
/// Rankings inside such groups fall back to id order.
inline std::size_t count_tied_samples(std::span<const ScoredSample> set) {
  std::map<double, std::size_t> freq;
  for (const auto& s : set) ++freq[s.score];
  std::size_t n = 0;
  for (const auto& [score, c] : freq) {
    if (c > 1) n += c;
  }
  return n;
}

/// Average precision: mean over positives of the precision at that
/// positive's rank. Ties are broken by id.
inline double compute_auprc(std::span<const ScoredSample> set) {
  const auto counts = count_classes(set);
  if (counts.positives == 0) throw Error(ErrorCode::DegenerateClasses, "average precision needs a positive");
  const auto idx = detail::rank_descending(set);
  double sum = 0.0;
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < idx.size(); ++rank) {
    if (set[idx[rank]].gold) {
      ++tp;
      sum += static_cast<double>(tp) / static_cast<double>(rank + 1);
    }
  }
  return sum / static_cast<double>(counts.positives);
}

struct ThresholdMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Confusion-matrix metrics with predicted = (score >= threshold).
/// Precision, recall and F1 are 0 when their denominators vanish.
inline ThresholdMetrics threshold_metrics(std::span<const ScoredSample> set, double threshold = 0.5) {
  ThresholdMetrics m;
  for (const auto& s : set) {
    const bool pred = s.score >= threshold;
    if (pred && s.gold) ++m.tp;
    else if (pred) ++m.fp;
    else if (s.gold) ++m.fn;
    else ++m.tn;
  }
  if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.precision + m.recall > 0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

/// Best recall among ROC operating points whose false-positive rate does not
/// exceed `max_fpr`.
inline double tpr_at_fpr(std::span<const ScoredSample> set, double max_fpr) {
  if (!(max_fpr >= 0.0 && max_fpr <= 1.0)) throw Error(ErrorCode::InvalidArgument, "FPr budget must lie in [0, 1]");
  double best = 0.0;
  for (const auto& p : roc_curve(set)) {
    if (p.fpr <= max_fpr) best = std::max(best, p.tpr);
  }
  return best;
}

/// ROC area over FPr in [0, max_fpr] (trapezoids, linear interpolation at
/// the cut), divided by max_fpr so that auc_at_fpr(s, 1) == compute_auc(s).
inline double auc_at_fpr(std::span<const ScoredSample> set, double max_fpr) {
  if (!(max_fpr > 0.0 && max_fpr <= 1.0)) throw Error(ErrorCode::InvalidArgument, "FPr budget must lie in (0, 1]");
  const auto roc = roc_curve(set);
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    const auto& a = roc[i - 1];
    const auto& b = roc[i];
    if (a.fpr >= max_fpr) break;
    if (b.fpr <= max_fpr) {
      area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    } else {
      const double t = (max_fpr - a.fpr) / (b.fpr - a.fpr);
      const double tpr_cut = a.tpr + t * (b.tpr - a.tpr);
      area += (max_fpr - a.fpr) * (a.tpr + tpr_cut) / 2.0;
      break;
    }
  }
  return area / max_fpr;
}

}  // namespace guardian
