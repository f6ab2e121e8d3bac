#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. They are deliberately naive and share no code with the library.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "guardian/datagen.hpp"
#include "guardian/metrics.hpp"
#include "guardian/scoring.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Probability of risk

inline std::string lower_strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out;
  for (std::size_t i = b; i < e; ++i) out += static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
  return out;
}

struct Eq1 {
  long double unsafe = 0, safe = 0;
  std::optional<double> prob;  // empty when both sums are zero
};

/// Sums exp(loglik) per class by scanning every token; a token containing
/// both words belongs to neither class.
inline Eq1 probability_of_risk(const std::vector<guardian::TokenScore>& entries) {
  Eq1 r;
  for (const auto& e : entries) {
    const std::string t = lower_strip(e.token);
    const bool y = t.find("yes") != std::string::npos;
    const bool n = t.find("no") != std::string::npos;
    if (y && !n) r.unsafe += std::exp(static_cast<long double>(e.loglik));
    if (n && !y) r.safe += std::exp(static_cast<long double>(e.loglik));
  }
  if (r.unsafe + r.safe > 0) r.prob = static_cast<double>(r.unsafe / (r.unsafe + r.safe));
  return r;
}

inline const std::vector<std::string>& token_pool() {
  static const std::vector<std::string> pool = {
      "Yes", " Yes", "yes", "YES", " yes ", "Yes.", "yess", "No", " No", "no", "NO", "No.", "Nope", "None",
      "not", "The", "I", "Sure", "Maybe", "A", "Y", "N", "Yeah", "yesno", "noyes", "\tyes", "Answer", "It"};
  return pool;
}

/// Random top-k list with distinct tokens and logliks in [-30, 0].
inline std::vector<guardian::TokenScore> random_topk(std::mt19937_64& rng, std::size_t k = 20) {
  auto pool = token_pool();
  std::shuffle(pool.begin(), pool.end(), rng);
  std::uniform_real_distribution<double> lp(-30.0, 0.0);
  std::vector<guardian::TokenScore> out;
  for (std::size_t i = 0; i < k && i < pool.size(); ++i) out.push_back({pool[i], lp(rng)});
  return out;
}

// ---------------------------------------------------------------------------
// Ranking metrics

/// Mann-Whitney over every (positive, negative) pair; ties count one half.
inline double pairwise_auc(const std::vector<guardian::ScoredSample>& set) {
  double wins = 0;
  std::size_t pairs = 0;
  for (const auto& p : set) {
    if (!p.gold) continue;
    for (const auto& n : set) {
      if (n.gold) continue;
      ++pairs;
      if (p.score > n.score) wins += 1.0;
      else if (p.score == n.score) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

/// (FPR, TPR) at threshold t, counting directly.
inline std::pair<double, double> rates_at(const std::vector<guardian::ScoredSample>& set, double t) {
  double tp = 0, fp = 0, pos = 0, neg = 0;
  for (const auto& s : set) {
    (s.gold ? pos : neg) += 1;
    if (s.score >= t) (s.gold ? tp : fp) += 1;
  }
  return {fp / neg, tp / pos};
}

/// ROC points for every candidate threshold (+inf and each distinct score),
/// ordered by increasing FPR then TPR.
inline std::vector<std::pair<double, double>> sweep_points(const std::vector<guardian::ScoredSample>& set) {
  std::vector<double> ts{std::numeric_limits<double>::infinity()};
  for (const auto& s : set) ts.push_back(s.score);
  std::sort(ts.begin(), ts.end(), std::greater<>());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<std::pair<double, double>> pts;
  for (double t : ts) pts.push_back(rates_at(set, t));
  return pts;
}

inline double sweep_tpr_at_fpr(const std::vector<guardian::ScoredSample>& set, double c) {
  double best = 0;
  for (const auto& [f, t] : sweep_points(set)) {
    if (f <= c) best = std::max(best, t);
  }
  return best;
}

/// Area under the piecewise-linear ROC on [0, c], clipping each segment,
/// divided by c.
inline double sweep_auc_at_fpr(const std::vector<guardian::ScoredSample>& set, double c) {
  const auto pts = sweep_points(set);
  double area = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto [f0, t0] = pts[i - 1];
    const auto [f1, t1] = pts[i];
    const double lo = std::min(f0, c), hi = std::min(f1, c);
    if (hi <= lo) continue;
    auto tpr = [&](double f) { return f1 == f0 ? t1 : t0 + (t1 - t0) * (f - f0) / (f1 - f0); };
    area += (hi - lo) * (tpr(lo) + tpr(hi)) / 2;
  }
  return area / c;
}

/// Midpoint-rule integral of the ROC on [0, c] over a fine grid. Only
/// accurate to the grid resolution.
inline double grid_auc_at_fpr(const std::vector<guardian::ScoredSample>& set, double c, int steps = 200000) {
  const auto pts = sweep_points(set);
  auto tpr_at = [&](double f) {
    // Upper envelope of the curve at f, interpolating within a segment.
    double best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const auto [f0, t0] = pts[i - 1];
      const auto [f1, t1] = pts[i];
      if (f < f0 || f > f1) continue;
      best = std::max(best, f1 == f0 ? t1 : t0 + (t1 - t0) * (f - f0) / (f1 - f0));
    }
    return best;
  };
  double sum = 0;
  const double h = c / steps;
  for (int i = 0; i < steps; ++i) sum += tpr_at((i + 0.5) * h);
  return sum * h / c;
}

/// Average precision: walk the list ordered by (score desc, id asc) and
/// average the precision seen at each positive.
inline double rank_walk_auprc(const std::vector<guardian::ScoredSample>& set) {
  double sum = 0;
  std::size_t positives = 0;
  for (const auto& p : set) {
    if (!p.gold) continue;
    ++positives;
    std::size_t above = 0, pos_above = 0;
    for (const auto& q : set) {
      const bool ahead = q.score > p.score || (q.score == p.score && q.id <= p.id);
      if (ahead) {
        ++above;
        if (q.gold) ++pos_above;
      }
    }
    sum += static_cast<double>(pos_above) / static_cast<double>(above);
  }
  return sum / static_cast<double>(positives);
}

/// Random scored set with both classes present. `grid` > 0 quantizes scores
/// to that many levels so ties occur.
inline std::vector<guardian::ScoredSample> random_set(std::mt19937_64& rng, std::size_t max_n = 200, int grid = 0) {
  std::uniform_int_distribution<std::size_t> size(2, max_n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = size(rng);
  const double shift = u(rng);  // class separation varies per set
  std::vector<guardian::ScoredSample> set;
  for (std::size_t i = 0; i < n; ++i) {
    guardian::ScoredSample s;
    char id[32];
    std::snprintf(id, sizeof id, "s%04zu", i);
    s.id = id;
    s.gold = u(rng) < 0.5 ? 1 : 0;
    double x = u(rng) * 0.7 + (s.gold ? 0.3 * shift : 0.0);
    if (grid > 0) x = std::round(x * grid) / grid;
    s.score = x;
    set.push_back(s);
  }
  set[0].gold = 1;
  set[1].gold = 0;
  return set;
}

// ---------------------------------------------------------------------------
// Uncertainty sampling

/// Sort by (max score, original position) and filter by class quota.
inline std::vector<std::size_t> uncertainty_pick(const std::vector<guardian::datagen::PoolItem>& pool,
                                                 std::size_t q_unsafe, std::size_t q_safe) {
  std::vector<std::pair<std::pair<double, std::size_t>, std::size_t>> keyed;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    keyed.push_back({{std::max(pool[i].score_safe, pool[i].score_unsafe), i}, i});
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> picked;
  std::size_t u = 0, s = 0;
  for (const auto& [key, i] : keyed) {
    if (pool[i].predicted_unsafe) {
      if (u < q_unsafe) ++u, picked.push_back(i);
    } else if (s < q_safe) {
      ++s, picked.push_back(i);
    }
  }
  return picked;
}

inline std::vector<guardian::datagen::PoolItem> random_pool(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<guardian::datagen::PoolItem> pool;
  for (std::size_t i = 0; i < n; ++i) {
    guardian::datagen::PoolItem p;
    p.item = "item-" + std::to_string(i);
    // Coarse grid so equal confidences occur and stability matters.
    p.score_unsafe = std::round(u(rng) * 20) / 20;
    p.score_safe = 1.0 - p.score_unsafe;
    p.predicted_unsafe = p.score_unsafe > 0.5 || (p.score_unsafe == 0.5 && u(rng) < 0.5);
    pool.push_back(p);
  }
  return pool;
}

}  // namespace oracle
