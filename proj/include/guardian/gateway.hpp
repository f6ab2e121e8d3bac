#pragma once

#include <algorithm>
#include <chrono>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "guardian/backend.hpp"
#include "guardian/error.hpp"
#include "guardian/risk_catalog.hpp"
#include "guardian/scoring.hpp"
#include "guardian/template_engine.hpp"
#include "json.hpp"

namespace guardian {

inline constexpr double kDefaultThreshold = 0.5;

/// Flag on ties: a probability equal to the threshold is flagged.
constexpr bool is_flagged(double prob_unsafe, double threshold) { return prob_unsafe >= threshold; }

inline void check_threshold(double t, const std::string& what) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidArgument, what + " must lie in [0, 1]");
}

struct GuardPolicy {
  std::map<std::string, double> thresholds;
  std::vector<std::string> prompt_risks{"harm", "jailbreak"};
  std::vector<std::string> response_risks{"harm"};

  static const std::vector<std::string>& rag_risks() {
    static const std::vector<std::string> risks{"context_relevance", "groundedness", "answer_relevance"};
    return risks;
  }

  double threshold_for(const std::string& risk) const {
    auto it = thresholds.find(risk);
    return it == thresholds.end() ? kDefaultThreshold : it->second;
  }

  void validate() const {
    for (const auto& [risk, t] : thresholds) check_threshold(t, "threshold for '" + risk + "'");
  }

  static GuardPolicy from_json(const nlohmann::json& j) {
    GuardPolicy p;
    if (j.contains("thresholds")) p.thresholds = j["thresholds"].get<std::map<std::string, double>>();
    if (j.contains("prompt_risks")) p.prompt_risks = j["prompt_risks"].get<std::vector<std::string>>();
    if (j.contains("response_risks")) p.response_risks = j["response_risks"].get<std::vector<std::string>>();
    p.validate();
    return p;
  }
};

/// A custom risk supplied inline with a request rather than registered.
struct InlineRisk {
  std::string name;
  std::string definition;
  std::optional<RoleMapping> roles;
};

struct DetectionRequest {
  std::variant<std::string, InlineRisk> risk;
  Mode mode = Mode::Prompt;
  ContentBundle content;
  std::optional<double> threshold;

  static DetectionRequest from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");
    if (!j.contains("risk")) throw Error(ErrorCode::MissingField, "request lacks 'risk'");
    DetectionRequest r;
    const auto& risk = j["risk"];
    if (risk.is_string()) {
      r.risk = risk.get<std::string>();
    } else if (risk.is_object()) {
      InlineRisk inl;
      inl.name = risk.value("name", std::string{});
      inl.definition = risk.value("definition", std::string{});
      if (risk.contains("roles")) inl.roles = RoleMapping::from_json(risk["roles"]);
      if (inl.name.empty()) throw Error(ErrorCode::MissingField, "inline risk lacks 'name'");
      r.risk = std::move(inl);
    } else {
      throw Error(ErrorCode::ParseError, "'risk' must be an id string or an inline definition object");
    }
    r.mode = parse_mode(j.value("mode", std::string("prompt")));
    if (!j.contains("content") || !j["content"].is_object()) throw Error(ErrorCode::MissingField, "request lacks 'content'");
    r.content = ContentBundle::from_json(j["content"]);
    if (j.contains("threshold") && !j["threshold"].is_null()) {
      r.threshold = j["threshold"].get<double>();
      check_threshold(*r.threshold, "threshold");
    }
    return r;
  }
};

struct DetectionResult {
  RiskId risk_id;
  Mode mode = Mode::Prompt;
  RiskVerdict verdict;
  double threshold = kDefaultThreshold;
  bool flagged = false;
  std::size_t rendered_chars = 0;
  std::chrono::microseconds latency{0};
  std::vector<std::string> warnings;
  std::optional<std::string> rendered;  // kept only when requested

  nlohmann::json to_json() const {
    nlohmann::json j{{"risk_id", risk_id.str()},
                     {"mode", std::string(to_string(mode))},
                     {"verdict", verdict.to_json()},
                     {"threshold", threshold},
                     {"flagged", flagged},
                     {"rendered_chars", rendered_chars},
                     {"latency_us", latency.count()}};
    if (!warnings.empty()) j["warnings"] = warnings;
    return j;
  }
};

/// A guard-chain slot: either a result or the error that risk produced.
struct DetectionOutcome {
  std::string risk_id;
  std::optional<DetectionResult> result;
  std::optional<Error> error;

  bool ok() const { return result.has_value(); }

  nlohmann::json to_json() const {
    if (result) return result->to_json();
    nlohmann::json j = error->to_json();
    j["risk_id"] = risk_id;
    return j;
  }
};

struct RagOutcome {
  DetectionOutcome context_relevance;
  DetectionOutcome groundedness;
  DetectionOutcome answer_relevance;

  nlohmann::json to_json() const {
    return {{"context_relevance", context_relevance.to_json()},
            {"groundedness", groundedness.to_json()},
            {"answer_relevance", answer_relevance.to_json()}};
  }
};

struct GatewayOptions {
  MatchOptions match;
  bool parallel_chains = true;
  bool keep_rendered = false;
};

/// Orchestrates catalog -> template -> detector -> scoring -> threshold.
/// Catalog and policy are read-only after construction; concurrent calls are
/// safe when the detector is.
class Gateway {
 public:
  Gateway(RiskCatalog catalog, GuardPolicy policy, std::shared_ptr<Detector> detector, GatewayOptions options = {})
      : catalog_(std::move(catalog)), policy_(std::move(policy)), detector_(std::move(detector)), options_(options) {
    if (!detector_) throw Error(ErrorCode::InvalidConfig, "gateway needs a detector");
    policy_.validate();
  }

  const RiskCatalog& catalog() const noexcept { return catalog_; }
  const GuardPolicy& policy() const noexcept { return policy_; }

  DetectionResult handle_detect(const DetectionRequest& req) const { return handle_detect(req, policy_); }

  DetectionResult handle_detect(const DetectionRequest& req, const GuardPolicy& policy) const {
    RiskDefinition risk = std::visit(
        [&](const auto& r) -> RiskDefinition {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, std::string>) {
            return catalog_.resolve(r, req.mode);
          } else {
            return make_custom_entry(r.name, r.definition, r.roles).for_mode(req.mode);
          }
        },
        req.risk);
    if (req.threshold) check_threshold(*req.threshold, "threshold");
    const double threshold = req.threshold.value_or(policy.threshold_for(risk.id.str()));

    const auto start = std::chrono::steady_clock::now();
    RenderedPrompt prompt = render(risk, req.content);
    DetectorResponse response = detector_->detect(prompt);
    DetectionResult out;
    out.risk_id = risk.id;
    out.mode = req.mode;
    out.verdict = verdict(response.first_token, response.topk, options_.match);
    out.threshold = threshold;
    out.flagged = is_flagged(out.verdict.prob_unsafe, threshold);
    out.rendered_chars = prompt.text.size();
    out.warnings = std::move(response.warnings);
    out.latency = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start);
    if (options_.keep_rendered) out.rendered = std::move(prompt.text);
    return out;
  }

  /// Runs each prompt risk on the same user text. Results are ordered by
  /// risk id; per-risk failures are reported in-band.
  std::vector<DetectionOutcome> guard_prompt(const std::string& user_text) const {
    return guard_prompt(user_text, policy_);
  }

  std::vector<DetectionOutcome> guard_prompt(const std::string& user_text, const GuardPolicy& policy) const {
    if (policy.prompt_risks.empty()) throw Error(ErrorCode::InvalidArgument, "policy has no prompt risks");
    ContentBundle content;
    content.user = user_text;
    return run_chain(policy.prompt_risks, Mode::Prompt, content, policy);
  }

  std::vector<DetectionOutcome> guard_response(const std::string& user_text, const std::string& assistant_text) const {
    return guard_response(user_text, assistant_text, policy_);
  }

  std::vector<DetectionOutcome> guard_response(const std::string& user_text, const std::string& assistant_text,
                                               const GuardPolicy& policy) const {
    if (policy.response_risks.empty()) throw Error(ErrorCode::InvalidArgument, "policy has no response risks");
    ContentBundle content;
    content.user = user_text;
    content.assistant = assistant_text;
    return run_chain(policy.response_risks, Mode::Response, content, policy);
  }

  /// Evaluates the RAG triad. A missing text fails only the risks that need
  /// it; the others are still evaluated.
  RagOutcome guard_rag(const std::optional<std::string>& question, const std::optional<std::string>& context,
                       const std::optional<std::string>& answer) const {
    return guard_rag(question, context, answer, policy_);
  }

  RagOutcome guard_rag(const std::optional<std::string>& question, const std::optional<std::string>& context,
                       const std::optional<std::string>& answer, const GuardPolicy& policy) const {
    ContentBundle content{question, answer, context};
    auto outcomes = run_chain(GuardPolicy::rag_risks(), std::nullopt, content, policy);
    RagOutcome rag;
    for (auto& o : outcomes) {
      if (o.risk_id == "context_relevance") rag.context_relevance = std::move(o);
      else if (o.risk_id == "groundedness") rag.groundedness = std::move(o);
      else rag.answer_relevance = std::move(o);
    }
    return rag;
  }

 private:
  DetectionOutcome run_one(const std::string& risk_id, std::optional<Mode> mode, const ContentBundle& content,
                           const GuardPolicy& policy) const {
    DetectionOutcome outcome;
    outcome.risk_id = risk_id;
    try {
      DetectionRequest req;
      req.risk = risk_id;
      // RAG risks are defined for exactly one mode; use whichever it is.
      req.mode = mode ? *mode : (catalog_.at(risk_id).supports(Mode::Prompt) ? Mode::Prompt : Mode::Response);
      req.content = content;
      outcome.result = handle_detect(req, policy);
    } catch (const Error& e) {
      outcome.error = e;
    } catch (const std::exception& e) {
      outcome.error = Error(ErrorCode::UpstreamError, e.what());
    }
    return outcome;
  }

  std::vector<DetectionOutcome> run_chain(const std::vector<std::string>& risks, std::optional<Mode> mode,
                                          const ContentBundle& content, const GuardPolicy& policy) const {
    std::vector<std::string> ordered = risks;
    std::sort(ordered.begin(), ordered.end());
    ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

    std::vector<DetectionOutcome> out;
    out.reserve(ordered.size());
    if (options_.parallel_chains && ordered.size() > 1) {
      std::vector<std::future<DetectionOutcome>> futures;
      for (const auto& id : ordered) {
        futures.push_back(std::async(std::launch::async, [&, id] { return run_one(id, mode, content, policy); }));
      }
      for (auto& f : futures) out.push_back(f.get());
    } else {
      for (const auto& id : ordered) out.push_back(run_one(id, mode, content, policy));
    }
    return out;
  }

  RiskCatalog catalog_;
  GuardPolicy policy_;
  std::shared_ptr<Detector> detector_;
  GatewayOptions options_;
};

}  // namespace guardian
