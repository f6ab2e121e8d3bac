#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guardian/error.hpp"
#include "json.hpp"

namespace guardian {

/// A candidate first token and its natural-log likelihood.
struct TokenScore {
  std::string token;
  double loglik = 0.0;

  friend bool operator==(const TokenScore&, const TokenScore&) = default;
};

inline constexpr std::size_t kDefaultTopK = 20;

/// Top-k candidates for the first generated token, ordered by descending
/// log-likelihood (ties by token text so the order is canonical).
class FirstTokenTopK {
 public:
  FirstTokenTopK() = default;

  FirstTokenTopK(std::vector<TokenScore> entries, std::size_t k = kDefaultTopK)
      : entries_(std::move(entries)), k_(k) {
    if (k_ == 0) throw Error(ErrorCode::InvalidDistribution, "k must be positive");
    if (entries_.size() > k_) {
      throw Error(ErrorCode::InvalidDistribution,
                  "distribution has " + std::to_string(entries_.size()) + " entries, more than k=" + std::to_string(k_));
    }
    for (const auto& e : entries_) {
      if (!std::isfinite(e.loglik)) {
        throw Error(ErrorCode::InvalidDistribution, "non-finite log-likelihood for token '" + e.token + "'");
      }
    }
    std::stable_sort(entries_.begin(), entries_.end(), [](const TokenScore& a, const TokenScore& b) {
      if (a.loglik != b.loglik) return a.loglik > b.loglik;
      return a.token < b.token;
    });
  }

  const std::vector<TokenScore>& entries() const noexcept { return entries_; }
  std::size_t k() const noexcept { return k_; }
  bool empty() const noexcept { return entries_.empty(); }

  /// Some backends emit unnormalized scores; those are accepted but flagged.
  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
      if (e.loglik > 0.0) out.push_back("positive log-likelihood for token '" + e.token + "'");
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries_) arr.push_back({{"token", e.token}, {"loglik", e.loglik}});
    return {{"k", k_}, {"entries", arr}};
  }

 private:
  std::vector<TokenScore> entries_;
  std::size_t k_ = kDefaultTopK;
};

/// Token matching rule. The default is plain substring containment; the
/// strict rule requires the normalized token to start with "yes"/"no".
struct MatchOptions {
  bool strict = false;
};

inline std::string normalize_token(std::string_view t) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!t.empty() && is_space(t.front())) t.remove_prefix(1);
  while (!t.empty() && is_space(t.back())) t.remove_suffix(1);
  std::string out(t);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

enum class TokenClass { Unsafe, Safe, Neither };

inline TokenClass classify_token(std::string_view token, MatchOptions options = {}) {
  const std::string norm = normalize_token(token);
  const bool yes = options.strict ? norm.starts_with("yes") : norm.find("yes") != std::string::npos;
  const bool no = options.strict ? norm.starts_with("no") : norm.find("no") != std::string::npos;
  if (yes && no) return TokenClass::Neither;  // counted in neither set
  if (yes) return TokenClass::Unsafe;
  if (no) return TokenClass::Safe;
  return TokenClass::Neither;
}

struct TopKPartition {
  std::vector<TokenScore> unsafe;  // tokens containing "yes"
  std::vector<TokenScore> safe;    // tokens containing "no"
};

inline TopKPartition partition_topk(const FirstTokenTopK& dist, MatchOptions options = {}) {
  TopKPartition p;
  for (const auto& e : dist.entries()) {
    switch (classify_token(e.token, options)) {
      case TokenClass::Unsafe: p.unsafe.push_back(e); break;
      case TokenClass::Safe: p.safe.push_back(e); break;
      case TokenClass::Neither: break;
    }
  }
  return p;
}

struct ClassScores {
  double unsafe = 0.0;
  double safe = 0.0;
};

/// Sums exp(loglik) over each token set; an empty set contributes 0.
inline ClassScores aggregate_scores(std::span<const TokenScore> unsafe, std::span<const TokenScore> safe) {
  auto total = [](std::span<const TokenScore> set) {
    double s = 0.0;
    for (const auto& e : set) s += std::exp(e.loglik);
    return s;
  };
  return {total(unsafe), total(safe)};
}

struct ClassProbabilities {
  double unsafe = 0.0;
  double safe = 0.0;
};

/// Softmax over (ln score_unsafe, ln score_safe). exp(ln x) = x, so this is
/// the scores normalized by their sum; a zero score gives probability 0.
inline ClassProbabilities risk_probability(double score_unsafe, double score_safe) {
  if (!(score_unsafe >= 0.0) || !(score_safe >= 0.0) || !std::isfinite(score_unsafe) || !std::isfinite(score_safe)) {
    throw Error(ErrorCode::InvalidArgument, "class scores must be finite and non-negative");
  }
  const double total = score_unsafe + score_safe;
  if (total <= 0.0) {
    throw Error(ErrorCode::BothScoresZero, "neither a Yes nor a No candidate carries probability mass");
  }
  const double unsafe = score_unsafe / total;
  return {unsafe, 1.0 - unsafe};
}

enum class Label { Yes, No };

constexpr std::string_view to_string(Label label) { return label == Label::Yes ? "Yes" : "No"; }

struct RiskVerdict {
  Label label = Label::No;
  double prob_unsafe = 0.0;
  double prob_safe = 1.0;
  double score_unsafe = 0.0;
  double score_safe = 0.0;
  std::vector<std::string> matched_unsafe;
  std::vector<std::string> matched_safe;

  nlohmann::json to_json() const {
    return {{"label", std::string(to_string(label))},
            {"prob_unsafe", prob_unsafe},
            {"prob_safe", prob_safe},
            {"score_unsafe", score_unsafe},
            {"score_safe", score_safe},
            {"matched_unsafe", matched_unsafe},
            {"matched_safe", matched_safe}};
  }
};

namespace detail {

inline nlohmann::json verdict_diagnostics(std::string_view first_token, const FirstTokenTopK& dist) {
  return {{"first_token", std::string(first_token)}, {"topk", dist.to_json()["entries"]}};
}

}  // namespace detail

/// The label comes from the first generated token; the probability of risk
/// from the aggregated top-k mass. The two can disagree.
inline RiskVerdict verdict(std::string_view first_token, const FirstTokenTopK& dist, MatchOptions options = {}) {
  RiskVerdict v;
  switch (classify_token(first_token, options)) {
    case TokenClass::Unsafe: v.label = Label::Yes; break;
    case TokenClass::Safe: v.label = Label::No; break;
    case TokenClass::Neither:
      throw Error(ErrorCode::UnparseableVerdict,
                  "first token '" + std::string(first_token) + "' is neither Yes nor No",
                  detail::verdict_diagnostics(first_token, dist));
  }

  const auto parts = partition_topk(dist, options);
  const auto scores = aggregate_scores(parts.unsafe, parts.safe);
  if (scores.unsafe + scores.safe <= 0.0) {
    throw Error(ErrorCode::UnparseableVerdict, "top-k distribution holds no Yes/No candidates",
                detail::verdict_diagnostics(first_token, dist));
  }
  const auto probs = risk_probability(scores.unsafe, scores.safe);
  v.prob_unsafe = probs.unsafe;
  v.prob_safe = probs.safe;
  v.score_unsafe = scores.unsafe;
  v.score_safe = scores.safe;
  for (const auto& e : parts.unsafe) v.matched_unsafe.push_back(e.token);
  for (const auto& e : parts.safe) v.matched_safe.push_back(e.token);
  return v;
}

}  // namespace guardian
