#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "guardian/error.hpp"
#include "guardian/scoring.hpp"
#include "guardian/template_engine.hpp"
#include "json.hpp"

namespace guardian {

using Logger = std::function<void(const std::string&)>;

struct BackendConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1";
  std::string model_id = "granite-guardian";
  std::size_t top_k = kDefaultTopK;
  double temperature = 0.0;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
  // Name of the environment variable holding the bearer credential.
  std::string api_key_env = "GUARDIAN_BACKEND_API_KEY";
  bool redact_content = true;

  void validate() const {
    if (top_k < 2) throw Error(ErrorCode::InvalidConfig, "top_k must be at least 2");
    if (max_retries < 0 || max_retries > 10) throw Error(ErrorCode::InvalidConfig, "max_retries must be in [0, 10]");
    if (timeout.count() <= 0) throw Error(ErrorCode::InvalidConfig, "timeout must be positive");
  }

  static BackendConfig from_json(const nlohmann::json& j) {
    BackendConfig c;
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model_id = j.value("model_id", c.model_id);
    c.top_k = j.value("top_k", c.top_k);
    c.temperature = j.value("temperature", c.temperature);
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long>(c.timeout.count())));
    c.max_retries = j.value("max_retries", c.max_retries);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.validate();
    return c;
  }
};

struct DetectorResponse {
  std::string first_token;
  FirstTokenTopK topk;
  std::chrono::microseconds latency{0};
  std::vector<std::string> warnings;
};

/// Produces the first-token distribution for a rendered safety prompt.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual DetectorResponse detect(const RenderedPrompt& prompt) = 0;
  virtual std::size_t top_k() const = 0;
};

struct GenerationParams {
  int max_tokens = 512;
  double temperature = 0.0;
  std::uint64_t seed = 0;
};

/// Free-form completion access for the data generation pipelines.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string generate(const std::string& prompt, const GenerationParams& params) = 0;
  virtual std::string model_id() const = 0;
};

/// Adapts any callable into a Generator.
class FunctionGenerator : public Generator {
 public:
  using Fn = std::function<std::string(const std::string&, const GenerationParams&)>;
  FunctionGenerator(Fn fn, std::string model = "function") : fn_(std::move(fn)), model_(std::move(model)) {}
  std::string generate(const std::string& prompt, const GenerationParams& params) override { return fn_(prompt, params); }
  std::string model_id() const override { return model_; }

 private:
  Fn fn_;
  std::string model_;
};

// ---------------------------------------------------------------------------
// Mock detector

struct MockRule {
  std::string pattern;  // case-insensitive
  double weight = 0.0;  // positive pushes toward Yes

  static MockRule make(std::string pattern, double weight) {
    if (pattern.empty()) throw Error(ErrorCode::InvalidConfig, "mock rule pattern must be non-empty");
    return MockRule{std::move(pattern), weight};
  }
};

inline std::vector<MockRule> mock_rules_from_json(const nlohmann::json& j) {
  std::vector<MockRule> rules;
  for (const auto& r : j) rules.push_back(MockRule::make(r.at("pattern").get<std::string>(), r.at("weight").get<double>()));
  return rules;
}

/// Neutral filler vocabulary; no entry contains "yes" or "no".
inline const std::vector<std::string>& mock_filler_vocabulary() {
  static const std::vector<std::string> vocab = {
      "The", "I", "It", "Sure", "Maybe", "Safe", "Unsafe", "A", "This", "Answer", "Y", "N",
      "Yep", "Certainly", "Okay", "Well", "Risk", "Label", "Based", "As", "In", "User", "Hmm", "Yeah",
  };
  return vocab;
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

/// Sum of weights of rules whose pattern occurs in `content`.
inline double mock_rule_sum(std::string_view content, const std::vector<MockRule>& rules) {
  const std::string hay = detail::lower(content);
  double sum = 0.0;
  for (const auto& rule : rules) {
    if (hay.find(detail::lower(rule.pattern)) != std::string::npos) sum += rule.weight;
  }
  return sum;
}

/// Logistic squashing of the rule sum.
inline double mock_probability(double rule_sum) { return 1.0 / (1.0 + std::exp(-rule_sum)); }

/// Deterministic synthetic detector output. The turn-block content is scored
/// against `rules`, shifted by `bias`, squashed to p and emitted as "Yes"
/// (ln p), "No" (ln(1-p)) plus seeded filler tokens ranked strictly below both.
inline DetectorResponse mock_detect(const RenderedPrompt& prompt, const std::vector<MockRule>& rules,
                                    std::uint64_t seed, std::size_t k = kDefaultTopK, double bias = 0.0) {
  if (k < 2) throw Error(ErrorCode::InvalidConfig, "mock top_k must be at least 2");
  const double sum = std::clamp(bias + mock_rule_sum(prompt.turn_content(), rules), -500.0, 500.0);
  // ln p and ln(1-p) in a form that stays finite for large |sum|.
  const double ln_yes = -std::log1p(std::exp(-sum));
  const double ln_no = -std::log1p(std::exp(sum));

  std::vector<TokenScore> entries{{"Yes", ln_yes}, {"No", ln_no}};
  auto vocab = mock_filler_vocabulary();
  std::mt19937_64 rng(seed ^ detail::fnv1a(prompt.text));
  for (std::size_t i = vocab.size(); i > 1; --i) {
    std::swap(vocab[i - 1], vocab[rng() % i]);
  }
  const double floor = std::min(ln_yes, ln_no);
  for (std::size_t i = 0; i + 2 < k && i < vocab.size(); ++i) {
    entries.push_back({vocab[i], floor - 1.0 - 0.5 * static_cast<double>(i)});
  }

  DetectorResponse response;
  response.topk = FirstTokenTopK(std::move(entries), k);
  response.first_token = response.topk.entries().front().token;
  return response;
}

class MockDetector : public Detector {
 public:
  MockDetector(std::vector<MockRule> rules, std::uint64_t seed = 0, std::size_t k = kDefaultTopK, double bias = 0.0)
      : rules_(std::move(rules)), seed_(seed), k_(k), bias_(bias) {}

  DetectorResponse detect(const RenderedPrompt& prompt) override { return mock_detect(prompt, rules_, seed_, k_, bias_); }
  std::size_t top_k() const override { return k_; }
  const std::vector<MockRule>& rules() const noexcept { return rules_; }

 private:
  std::vector<MockRule> rules_;
  std::uint64_t seed_;
  std::size_t k_;
  double bias_;
};

/// Parses an OpenAI-compatible completions reply into a DetectorResponse.
///
/// Field mapping (first choice only):
///   choices[0].logprobs.top_logprobs[0]  -> {token: logprob} object, or a
///                                           list of {token, logprob}
///   choices[0].logprobs.tokens[0]        -> first token (falls back to
///                                           choices[0].text, then to the
///                                           highest-ranked candidate)
/// The chat-completions shape choices[0].logprobs.content[0].top_logprobs is
/// accepted as well.
inline DetectorResponse parse_completion_logprobs(const nlohmann::json& body, std::size_t k) {
  auto malformed = [&](const std::string& why) {
    return Error(ErrorCode::MalformedLogprobs, why, {{"body", body.dump().substr(0, 2000)}});
  };
  if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
    throw malformed("reply has no choices");
  }
  const auto& choice = body["choices"][0];
  if (!choice.contains("logprobs") || !choice["logprobs"].is_object()) {
    throw malformed("reply carries no per-token log-probabilities");
  }
  const auto& lp = choice["logprobs"];

  nlohmann::json top;
  std::string first_token;
  bool have_first = false;
  if (lp.contains("top_logprobs") && lp["top_logprobs"].is_array() && !lp["top_logprobs"].empty()) {
    top = lp["top_logprobs"][0];
    if (lp.contains("tokens") && lp["tokens"].is_array() && !lp["tokens"].empty()) {
      first_token = lp["tokens"][0].get<std::string>();
      have_first = true;
    }
  } else if (lp.contains("content") && lp["content"].is_array() && !lp["content"].empty()) {
    const auto& first = lp["content"][0];
    if (first.contains("top_logprobs")) top = first["top_logprobs"];
    if (first.contains("token")) {
      first_token = first["token"].get<std::string>();
      have_first = true;
    }
  }
  if (top.is_null() || top.empty()) throw malformed("reply lacks top-k log-probabilities for the first token");

  std::vector<TokenScore> entries;
  if (top.is_object()) {
    for (auto it = top.begin(); it != top.end(); ++it) {
      if (!it.value().is_number()) throw malformed("log-probability for '" + it.key() + "' is not a number");
      entries.push_back({it.key(), it.value().get<double>()});
    }
  } else if (top.is_array()) {
    for (const auto& item : top) {
      if (!item.contains("token") || !item.contains("logprob") || !item["logprob"].is_number()) {
        throw malformed("top_logprobs entry lacks token/logprob");
      }
      entries.push_back({item["token"].get<std::string>(), item["logprob"].get<double>()});
    }
  } else {
    throw malformed("top_logprobs has unexpected type");
  }
  std::stable_sort(entries.begin(), entries.end(), [](const TokenScore& a, const TokenScore& b) { return a.loglik > b.loglik; });
  if (entries.size() > k) entries.resize(k);
  for (const auto& e : entries) {
    if (!std::isfinite(e.loglik)) throw malformed("non-finite log-probability for '" + e.token + "'");
  }

  DetectorResponse response;
  response.topk = FirstTokenTopK(std::move(entries), std::max(k, std::size_t{1}));
  if (!have_first && choice.contains("text") && choice["text"].is_string() && !choice["text"].get<std::string>().empty()) {
    first_token = choice["text"].get<std::string>();
    have_first = true;
  }
  if (!have_first) first_token = response.topk.entries().front().token;
  response.first_token = first_token;
  if (first_token != response.topk.entries().front().token) {
    response.warnings.push_back("first token '" + first_token + "' is not the top-ranked candidate '" +
                                response.topk.entries().front().token + "'");
  }
  for (auto& w : response.topk.warnings()) response.warnings.push_back(std::move(w));
  return response;
}

}  // namespace guardian
