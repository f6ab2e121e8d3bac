#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "guardian/error.hpp"
#include "guardian/gateway.hpp"
#include "guardian/metrics.hpp"
#include "json.hpp"

namespace guardian {

enum class SampleKind { Prompt, Response, RagGroundedness };

inline SampleKind parse_sample_kind(std::string_view s) {
  if (s == "prompt") return SampleKind::Prompt;
  if (s == "response") return SampleKind::Response;
  if (s == "rag_groundedness") return SampleKind::RagGroundedness;
  throw Error(ErrorCode::ParseError, "unknown sample kind '" + std::string(s) + "'");
}

constexpr std::string_view to_string(SampleKind k) {
  switch (k) {
    case SampleKind::Prompt: return "prompt";
    case SampleKind::Response: return "response";
    case SampleKind::RagGroundedness: return "rag_groundedness";
  }
  return "prompt";
}

struct EvalSample {
  std::string id;
  std::string dataset;
  SampleKind kind = SampleKind::Prompt;
  std::optional<std::string> user;
  std::optional<std::string> assistant;
  std::optional<std::string> context;
  int gold = 0;  // 1 = unsafe / inconsistent
};

namespace detail {

inline std::string format_double(double v, const char* fmt = "%.6f") {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline int parse_gold(const nlohmann::json& g, std::size_t line) {
  if (g.is_boolean()) return g.get<bool>() ? 1 : 0;
  if (g.is_number_integer() && (g.get<long>() == 0 || g.get<long>() == 1)) return static_cast<int>(g.get<long>());
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": 'gold' must be 0/1 or a boolean",
              {{"line", line}});
}

}  // namespace detail

/// Reads one EvalSample per non-blank line. An empty file gives an empty
/// list. `dataset` defaults to the file stem when a record omits it.
inline std::vector<EvalSample> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<EvalSample> samples;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + e.what(),
                  {{"line", line}});
    }
    auto missing = [&](const std::string& field) {
      return Error(ErrorCode::MissingField, path.string() + ":" + std::to_string(line) + ": missing '" + field + "'",
                   {{"line", line}, {"field", field}});
    };
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + " is not an object", {{"line", line}});
    for (const char* f : {"id", "kind", "gold"}) {
      if (!j.contains(f) || j[f].is_null()) throw missing(f);
    }
    EvalSample s;
    s.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    s.dataset = j.value("dataset", path.stem().string());
    s.kind = parse_sample_kind(j["kind"].get<std::string>());
    s.gold = detail::parse_gold(j["gold"], line);
    auto text_field = [&](const char* key, std::optional<std::string>& out) {
      if (j.contains(key) && j[key].is_string()) out = j[key].get<std::string>();
    };
    text_field("user", s.user);
    text_field("assistant", s.assistant);
    text_field("context", s.context);
    switch (s.kind) {
      case SampleKind::Prompt:
        if (!s.user) throw missing("user");
        break;
      case SampleKind::Response:
        if (!s.user) throw missing("user");
        if (!s.assistant) throw missing("assistant");
        break;
      case SampleKind::RagGroundedness:
        if (!s.context) throw missing("context");
        if (!s.assistant) throw missing("assistant");
        break;
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

/// ToxicChat-style adapter: harmful iff toxicity or jailbreaking is set.
inline int map_toxicchat_label(const nlohmann::json& record) {
  auto flag = [&](std::initializer_list<const char*> keys) -> int {
    for (const char* k : keys) {
      if (record.contains(k) && !record[k].is_null()) {
        const auto& v = record[k];
        if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
        if (v.is_number()) return v.get<double>() != 0.0 ? 1 : 0;
      }
    }
    throw Error(ErrorCode::MissingField, std::string("record lacks '") + *keys.begin() + "'", {{"field", *keys.begin()}});
  };
  const int toxicity = flag({"toxicity"});
  const int jailbreak = flag({"jailbreaking", "jailbreak"});
  return (toxicity || jailbreak) ? 1 : 0;
}

/// Converts a ToxicChat JSONL export ({conv_id, user_input, toxicity,
/// jailbreaking}) into prompt samples.
inline std::vector<EvalSample> load_toxicchat_jsonl(const std::filesystem::path& path, const std::string& dataset = "toxicchat") {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<EvalSample> samples;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + e.what(), {{"line", line}});
    }
    if (!j.contains("user_input")) {
      throw Error(ErrorCode::MissingField, "line " + std::to_string(line) + ": missing 'user_input'", {{"line", line}});
    }
    EvalSample s;
    s.id = j.contains("conv_id") ? j["conv_id"].get<std::string>() : std::to_string(line);
    s.dataset = dataset;
    s.kind = SampleKind::Prompt;
    s.user = j["user_input"].get<std::string>();
    try {
      s.gold = map_toxicchat_label(j);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line) + ": " + e.message(), {{"line", line}});
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

struct SampleFailure {
  std::string id;
  Error error;
};

struct ScoreRun {
  std::vector<ScoredSample> scored;
  std::vector<SampleFailure> failures;
  std::size_t skipped = 0;  // samples outside the requested mode
};

struct ScoreOptions {
  std::string risk = "harm";           // used for prompt/response samples
  std::optional<Mode> mode;            // restrict to one content section
  double threshold = kDefaultThreshold;
  double max_failure_fraction = 0.5;   // AbortThreshold above this
  std::size_t parallelism = 1;
};

/// One detection per sample through the gateway's guard chains, in input
/// order. Failed samples are recorded and excluded, never imputed.
inline ScoreRun score_dataset(std::span<const EvalSample> samples, const Gateway& gateway, const ScoreOptions& opt) {
  check_threshold(opt.threshold, "threshold");
  GuardPolicy policy = gateway.policy();
  policy.prompt_risks = {opt.risk};
  policy.response_risks = {opt.risk};
  policy.thresholds[opt.risk] = opt.threshold;
  policy.thresholds["groundedness"] = opt.threshold;

  auto in_scope = [&](const EvalSample& s) {
    if (!opt.mode) return true;
    return *opt.mode == Mode::Prompt ? s.kind == SampleKind::Prompt : s.kind != SampleKind::Prompt;
  };

  std::vector<std::optional<DetectionOutcome>> outcomes(samples.size());
  auto score_one = [&](std::size_t i) {
    const auto& s = samples[i];
    if (!in_scope(s)) return;
    switch (s.kind) {
      case SampleKind::Prompt: outcomes[i] = gateway.guard_prompt(*s.user, policy).front(); break;
      case SampleKind::Response: outcomes[i] = gateway.guard_response(*s.user, *s.assistant, policy).front(); break;
      case SampleKind::RagGroundedness:
        outcomes[i] = gateway.guard_rag(s.user, s.context, s.assistant, policy).groundedness;
        break;
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(opt.parallelism, samples.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) score_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < samples.size(); i = next++) score_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  ScoreRun run;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!outcomes[i]) {
      ++run.skipped;
      continue;
    }
    const auto& o = *outcomes[i];
    if (o.ok()) {
      run.scored.push_back({s.id, s.dataset, s.gold, o.result->verdict.prob_unsafe, o.result->flagged});
    } else {
      run.failures.push_back({s.id, *o.error});
    }
  }
  const std::size_t attempted = run.scored.size() + run.failures.size();
  if (attempted > 0 &&
      static_cast<double>(run.failures.size()) > opt.max_failure_fraction * static_cast<double>(attempted)) {
    throw Error(ErrorCode::AbortThreshold,
                std::to_string(run.failures.size()) + " of " + std::to_string(attempted) + " samples failed",
                {{"failures", run.failures.size()}, {"attempted", attempted}});
  }
  return run;
}

inline const std::vector<double>& default_fpr_budgets() {
  static const std::vector<double> budgets{0.1, 0.01, 0.001};
  return budgets;
}

struct MetricsReport {
  std::string dataset;
  std::size_t n = 0, n_pos = 0, n_neg = 0;
  std::size_t excluded = 0;
  std::size_t tied_samples = 0;
  double threshold = kDefaultThreshold;
  // Rank metrics are absent when the set holds a single class.
  std::optional<double> auc;
  std::optional<double> auprc;
  double f1 = 0.0, precision = 0.0, recall = 0.0;
  std::map<double, double> tpr_at_fpr;
  std::map<double, double> auc_at_fpr;
  std::vector<RocPoint> roc;

  bool complete() const { return auc && auprc && !tpr_at_fpr.empty() && !auc_at_fpr.empty() && !roc.empty(); }

  nlohmann::json to_json() const {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json tpr = nlohmann::json::object(), pauc = nlohmann::json::object();
    for (const auto& [c, v] : tpr_at_fpr) tpr[detail::format_double(c, "%g")] = v;
    for (const auto& [c, v] : auc_at_fpr) pauc[detail::format_double(c, "%g")] = v;
    nlohmann::json roc_rows = nlohmann::json::array();
    for (const auto& p : roc) roc_rows.push_back({p.fpr, p.tpr});
    return {{"dataset", dataset},   {"n", n},           {"n_pos", n_pos},       {"n_neg", n_neg},
            {"excluded", excluded}, {"tied_samples", tied_samples},             {"threshold", threshold},
            {"auc", opt(auc)},      {"auprc", opt(auprc)}, {"f1", f1},          {"precision", precision},
            {"recall", recall},     {"tpr_at_fpr", tpr},   {"auc_at_fpr", pauc}, {"roc", roc_rows}};
  }
};

inline MetricsReport compute_report(const std::string& dataset, std::span<const ScoredSample> set,
                                    double threshold = kDefaultThreshold,
                                    const std::vector<double>& fpr_budgets = default_fpr_budgets()) {
  MetricsReport r;
  r.dataset = dataset;
  r.threshold = threshold;
  const auto counts = count_classes(set);
  r.n = set.size();
  r.n_pos = counts.positives;
  r.n_neg = counts.negatives;
  r.tied_samples = count_tied_samples(set);
  const auto tm = threshold_metrics(set, threshold);
  r.f1 = tm.f1;
  r.precision = tm.precision;
  r.recall = tm.recall;
  if (counts.positives > 0) r.auprc = compute_auprc(set);
  if (counts.positives > 0 && counts.negatives > 0) {
    r.auc = compute_auc(set);
    r.roc = roc_curve(set);
    for (double c : fpr_budgets) {
      r.tpr_at_fpr[c] = tpr_at_fpr(set, c);
      r.auc_at_fpr[c] = auc_at_fpr(set, c);
    }
  }
  return r;
}

struct AggregateReport {
  MetricsReport pooled;                    // headline: all samples pooled
  std::vector<MetricsReport> per_dataset;  // sorted by dataset name
  std::optional<double> macro_auc;         // mean of per-dataset AUCs
  std::optional<double> macro_auprc;
  double macro_f1 = 0.0;
  std::size_t excluded = 0;

  nlohmann::json to_json() const {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& r : per_dataset) per.push_back(r.to_json());
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"pooled", pooled.to_json()},
            {"per_dataset", per},
            {"macro", {{"auc", opt(macro_auc)}, {"auprc", opt(macro_auprc)}, {"f1", macro_f1}}},
            {"excluded", excluded}};
  }
};

/// Pools every scored sample into one set for the headline numbers and also
/// reports each dataset separately plus a macro average for comparison.
inline AggregateReport aggregate(std::span<const ScoredSample> all, double threshold = kDefaultThreshold,
                                 const std::vector<double>& fpr_budgets = default_fpr_budgets(),
                                 std::size_t excluded = 0) {
  AggregateReport rep;
  rep.excluded = excluded;
  rep.pooled = compute_report("pooled", all, threshold, fpr_budgets);
  rep.pooled.excluded = excluded;
  std::map<std::string, std::vector<ScoredSample>> groups;
  for (const auto& s : all) groups[s.dataset].push_back(s);
  double auc_sum = 0.0, auprc_sum = 0.0, f1_sum = 0.0;
  std::size_t auc_n = 0, auprc_n = 0;
  for (const auto& [name, set] : groups) {
    auto r = compute_report(name, set, threshold, fpr_budgets);
    if (r.auc) auc_sum += *r.auc, ++auc_n;
    if (r.auprc) auprc_sum += *r.auprc, ++auprc_n;
    f1_sum += r.f1;
    rep.per_dataset.push_back(std::move(r));
  }
  if (auc_n) rep.macro_auc = auc_sum / static_cast<double>(auc_n);
  if (auprc_n) rep.macro_auprc = auprc_sum / static_cast<double>(auprc_n);
  if (!groups.empty()) rep.macro_f1 = f1_sum / static_cast<double>(groups.size());
  return rep;
}

/// Plain-text rendering of an aggregate report, stable across runs.
inline std::string format_report(const AggregateReport& rep) {
  using detail::format_double;
  std::ostringstream out;
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("n/a"); };
  auto block = [&](const MetricsReport& r) {
    out << "[" << r.dataset << "] n=" << r.n << " pos=" << r.n_pos << " neg=" << r.n_neg;
    if (r.excluded) out << " excluded=" << r.excluded;
    out << "\n  AUC=" << opt(r.auc) << " AUPRC=" << opt(r.auprc) << " F1=" << format_double(r.f1)
        << " P=" << format_double(r.precision) << " R=" << format_double(r.recall)
        << " (threshold " << format_double(r.threshold, "%g") << ")\n";
    for (const auto& [c, v] : r.tpr_at_fpr) {
      out << "  FPr<=" << format_double(c, "%g") << ": TPr=" << format_double(v)
          << " AUC@FPr=" << format_double(r.auc_at_fpr.at(c)) << "\n";
    }
    if (r.tied_samples) out << "  tied scores: " << r.tied_samples << " samples ranked by id\n";
  };
  block(rep.pooled);
  out << "macro average over " << rep.per_dataset.size() << " dataset(s): AUC=" << opt(rep.macro_auc)
      << " AUPRC=" << opt(rep.macro_auprc) << " F1=" << format_double(rep.macro_f1) << "\n";
  for (const auto& r : rep.per_dataset) block(r);
  return out.str();
}

/// Writes the ROC operating points as CSV ("fpr,tpr,threshold").
inline void roc_export(std::span<const ScoredSample> set, const std::filesystem::path& path) {
  const auto roc = roc_curve(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "fpr,tpr,threshold\n";
  for (const auto& p : roc) {
    out << detail::format_double(p.fpr, "%.10g") << ',' << detail::format_double(p.tpr, "%.10g") << ','
        << detail::format_double(p.threshold, "%.10g") << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace guardian
