// guardian: command-line front end for the guardrail gateway.
//
//   guardian serve    run the REST service
//   guardian detect   one-shot detection from flags or a JSON request on stdin
//   guardian eval     score labeled JSONL datasets and write metric reports
//   guardian datagen  synthetic data pipelines (benign, harmful, adversarial,
//                     responses, rag, select)

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "guardian/config.hpp"
#include "guardian/datagen.hpp"
#include "guardian/eval_harness.hpp"
#include "guardian/gateway.hpp"
#include "guardian/server.hpp"

namespace fs = std::filesystem;
using namespace guardian;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string backend;  // overrides the config file when set
};

GatewayConfig load_config(const CommonOptions& common) {
  GatewayConfig cfg = common.config_path.empty() ? GatewayConfig::defaults() : GatewayConfig::load(common.config_path);
  if (!common.backend.empty()) cfg.backend_kind = parse_backend_kind(common.backend);
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--config", common.config_path, "Gateway config file (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--backend", common.backend, "Detector/generator backend")->check(CLI::IsMember({"mock", "http"}));
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::vector<nlohmann::json> out;
  std::size_t n = 0;
  for (const auto& line : read_lines(path)) {
    ++n;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, path.string() + " record " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

/// Single serialized writer so record order is deterministic.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw Error(ErrorCode::IoError, "cannot write " + path);
    }
  }
  void write(const nlohmann::json& j) {
    std::ostream& os = file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout;
    os << j.dump() << '\n';
    ++count_;
  }
  std::size_t count() const { return count_; }

 private:
  std::ofstream file_;
  std::size_t count_ = 0;
};

std::vector<double> parse_fpr_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    double c = std::stod(item);
    if (!(c > 0.0 && c <= 1.0)) throw Error(ErrorCode::InvalidArgument, "FPr budget " + item + " outside (0, 1]");
    out.push_back(c);
  }
  return out;
}

httplib::Server* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guardrail gateway: safety-prompt rendering, probability-of-risk scoring, evaluation and data generation"};
  app.require_subcommand(1);

  // serve ------------------------------------------------------------------
  CommonOptions serve_common;
  std::optional<std::string> serve_host;
  std::optional<int> serve_port;
  auto* serve = app.add_subcommand("serve", "Run the REST service");
  add_common(serve, serve_common);
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--port", serve_port, "Listen port");

  // detect -----------------------------------------------------------------
  CommonOptions detect_common;
  std::string detect_risk = "harm", detect_mode = "prompt";
  std::optional<std::string> d_user, d_assistant, d_context;
  std::optional<double> detect_threshold;
  bool detect_stdin = false, detect_fail_on_flag = false;
  auto* detect = app.add_subcommand("detect", "One-shot detection");
  add_common(detect, detect_common);
  detect->add_option("--risk", detect_risk, "Risk id");
  detect->add_option("--mode", detect_mode, "Content section")->check(CLI::IsMember({"prompt", "response"}));
  detect->add_option("--user", d_user, "User message");
  detect->add_option("--assistant", d_assistant, "Assistant message");
  detect->add_option("--context", d_context, "Context message");
  detect->add_option("--threshold", detect_threshold, "Flagging threshold")->check(CLI::Range(0.0, 1.0));
  detect->add_flag("--stdin", detect_stdin, "Read a JSON detection request from stdin");
  detect->add_flag("--fail-on-flag", detect_fail_on_flag, "Exit with status 1 when the content is flagged");

  // eval -------------------------------------------------------------------
  CommonOptions eval_common;
  std::vector<std::string> eval_data;
  std::string eval_risk = "harm", eval_fpr = "0.1,0.01,0.001", eval_out = "eval_out", eval_format = "jsonl";
  std::optional<std::string> eval_mode;
  double eval_threshold = kDefaultThreshold, eval_max_fail = 0.5;
  std::size_t eval_parallel = 1;
  bool eval_invert = false, eval_quiet = false;
  auto* eval = app.add_subcommand("eval", "Score labeled datasets and report metrics");
  add_common(eval, eval_common);
  eval->add_option("--data", eval_data, "JSONL dataset file(s)")->required()->check(CLI::ExistingFile);
  eval->add_option("--risk", eval_risk, "Risk applied to prompt/response samples");
  eval->add_option("--mode", eval_mode, "Only evaluate samples of this section")->check(CLI::IsMember({"prompt", "response"}));
  eval->add_option("--threshold", eval_threshold, "Threshold for F1/precision/recall")->check(CLI::Range(0.0, 1.0));
  eval->add_option("--fpr", eval_fpr, "Comma-separated FPr budgets");
  eval->add_option("--out-dir", eval_out, "Directory for report.txt, summary.json and roc.csv");
  eval->add_option("--format", eval_format, "Input adapter")->check(CLI::IsMember({"jsonl", "toxicchat"}));
  eval->add_option("--parallelism", eval_parallel, "Concurrent detections");
  eval->add_option("--max-failure-fraction", eval_max_fail, "Abort when more samples fail")->check(CLI::Range(0.0, 1.0));
  eval->add_flag("--invert-gold", eval_invert, "Flip gold labels (refusal-polarity datasets)");
  eval->add_flag("--quiet", eval_quiet, "Do not print the report");

  // datagen ----------------------------------------------------------------
  CommonOptions gen_common;
  std::string gen_template_dir, gen_strategies, gen_taxonomy, gen_safety_types, gen_input, gen_output = "-";
  std::uint64_t gen_seed = 0;
  int gen_n = 5;
  std::optional<std::string> gen_safety_type;
  std::size_t gen_limit = 0, gen_n_unsafe = 400, gen_n_safe = 600;
  bool gen_each = false;
  auto* datagen_cmd = app.add_subcommand("datagen", "Synthetic data generation pipelines");
  datagen_cmd->require_subcommand(1);
  auto gen_shared = [&](CLI::App* cmd) {
    add_common(cmd, gen_common);
    cmd->add_option("--template-dir", gen_template_dir, "Directory overriding the shipped templates")->check(CLI::ExistingDirectory);
    cmd->add_option("--seed", gen_seed, "Seed for sampling and generation");
    cmd->add_option("--output,-o", gen_output, "Output JSONL ('-' for stdout)");
  };
  auto* g_benign = datagen_cmd->add_subcommand("benign", "Contrastive benign prompts per safety type");
  gen_shared(g_benign);
  g_benign->add_option("--n", gen_n, "Requests per safety type")->check(CLI::PositiveNumber);
  g_benign->add_option("--safety-types", gen_safety_types, "Safety type catalog")->check(CLI::ExistingFile);
  g_benign->add_option("--safety-type", gen_safety_type, "Only this safety type");
  auto* g_harmful = datagen_cmd->add_subcommand("harmful", "Typical harmful prompts per taxonomy leaf");
  gen_shared(g_harmful);
  g_harmful->add_option("--taxonomy", gen_taxonomy, "Taxonomy file")->check(CLI::ExistingFile);
  g_harmful->add_option("--limit", gen_limit, "Only the first N leaves");
  auto* g_adv = datagen_cmd->add_subcommand("adversarial", "Adversarial revisions of harmful prompts");
  gen_shared(g_adv);
  g_adv->add_option("--input", gen_input, "Plain-text prompt list")->required()->check(CLI::ExistingFile);
  g_adv->add_option("--strategies", gen_strategies, "Strategy catalog")->check(CLI::ExistingFile);
  g_adv->add_flag("--each", gen_each, "One revision per strategy instead of three sampled strategies");
  auto* g_resp = datagen_cmd->add_subcommand("responses", "Comply/refuse/bare response augmentation");
  gen_shared(g_resp);
  g_resp->add_option("--input", gen_input, "Plain-text prompt list")->required()->check(CLI::ExistingFile);
  auto* g_rag = datagen_cmd->add_subcommand("rag", "RAG negatives from {document, question, answer} seeds");
  gen_shared(g_rag);
  g_rag->add_option("--input", gen_input, "JSONL seed file")->required()->check(CLI::ExistingFile);
  auto* g_select = datagen_cmd->add_subcommand("select", "Uncertainty-informed sampling of a scored pool");
  gen_shared(g_select);
  g_select->add_option("--input", gen_input, "JSONL pool {item, score_safe, score_unsafe, predicted_label}")
      ->required()
      ->check(CLI::ExistingFile);
  g_select->add_option("--n-unsafe", gen_n_unsafe, "Quota of predicted-unsafe items");
  g_select->add_option("--n-safe", gen_n_safe, "Quota of predicted-safe items");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      GatewayConfig cfg = load_config(serve_common);
      if (serve_host) cfg.server.host = *serve_host;
      if (serve_port) cfg.server.port = *serve_port;
      Gateway gateway = cfg.make_gateway();
      httplib::Server server;
      install_routes(server, gateway, cfg.server.bearer_token);
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::fprintf(stderr, "guardian listening on %s:%d (backend=%s)\n", cfg.server.host.c_str(), cfg.server.port,
                   cfg.backend_kind == BackendKind::Mock ? "mock" : "http");
      if (!server.listen(cfg.server.host, cfg.server.port)) {
        throw Error(ErrorCode::IoError, "cannot listen on " + cfg.server.host + ":" + std::to_string(cfg.server.port));
      }
      return 0;
    }

    if (*detect) {
      GatewayConfig cfg = load_config(detect_common);
      Gateway gateway = cfg.make_gateway();
      DetectionRequest req;
      if (detect_stdin) {
        std::string body{std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
        req = DetectionRequest::from_json(nlohmann::json::parse(body));
      } else {
        req.risk = detect_risk;
        req.mode = parse_mode(detect_mode);
        req.content = ContentBundle{d_user, d_assistant, d_context};
      }
      if (detect_threshold) req.threshold = detect_threshold;
      const auto result = gateway.handle_detect(req);
      std::cout << result.to_json().dump(2) << '\n';
      return detect_fail_on_flag && result.flagged ? 1 : 0;
    }

    if (*eval) {
      GatewayConfig cfg = load_config(eval_common);
      GatewayOptions gopt;
      gopt.parallel_chains = false;
      Gateway gateway = cfg.make_gateway(gopt);

      std::vector<EvalSample> samples;
      for (const auto& path : eval_data) {
        auto part = eval_format == "toxicchat" ? load_toxicchat_jsonl(path, fs::path(path).stem().string())
                                               : load_jsonl(path);
        samples.insert(samples.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
      if (eval_invert) {
        for (auto& s : samples) s.gold = 1 - s.gold;
      }
      ScoreOptions sopt;
      sopt.risk = eval_risk;
      if (eval_mode) sopt.mode = parse_mode(*eval_mode);
      sopt.threshold = eval_threshold;
      sopt.max_failure_fraction = eval_max_fail;
      sopt.parallelism = eval_parallel;
      const auto run = score_dataset(samples, gateway, sopt);
      const auto fprs = parse_fpr_list(eval_fpr);
      const auto report = aggregate(run.scored, eval_threshold, fprs, run.failures.size());

      fs::create_directories(eval_out);
      const std::string text = format_report(report);
      {
        std::ofstream out(fs::path(eval_out) / "report.txt", std::ios::binary | std::ios::trunc);
        out << text;
      }
      nlohmann::json summary = report.to_json();
      summary["risk"] = eval_risk;
      summary["skipped"] = run.skipped;
      nlohmann::json failures = nlohmann::json::array();
      for (const auto& f : run.failures) failures.push_back({{"id", f.id}, {"error", f.error.to_json()}});
      summary["failures"] = failures;
      {
        std::ofstream out(fs::path(eval_out) / "summary.json", std::ios::binary | std::ios::trunc);
        out << summary.dump(2) << '\n';
      }
      roc_export(run.scored, fs::path(eval_out) / "roc.csv");
      if (!eval_quiet) std::cout << text;
      for (const auto& f : run.failures) std::cerr << "excluded " << f.id << ": " << f.error.what() << '\n';
      return 0;
    }

    if (*datagen_cmd) {
      GatewayConfig cfg = load_config(gen_common);
      std::unique_ptr<Generator> generator;
      if (cfg.backend_kind == BackendKind::Mock) generator = std::make_unique<datagen::MockGenerator>();
      else generator = std::make_unique<HttpBackend>(cfg.backend, cfg.make_logger());
      const datagen::TemplateSet templates =
          gen_template_dir.empty() ? datagen::TemplateSet{} : datagen::TemplateSet::from_dir(gen_template_dir);
      GenerationParams params;
      params.seed = gen_seed;
      JsonlWriter writer(gen_output);

      auto report_miss = [](const Error& e) {
        std::cerr << e.what();
        if (e.details().contains("span")) std::cerr << " near: " << e.details()["span"].get<std::string>();
        std::cerr << '\n';
      };

      if (*g_benign) {
        auto types = gen_safety_types.empty() ? datagen::builtin_safety_types()
                                              : datagen::load_safety_types(nlohmann::json::parse(read_file(gen_safety_types)));
        for (const auto& t : types) {
          if (gen_safety_type && t.name != *gen_safety_type) continue;
          try {
            auto batch = datagen::gen_benign(t, gen_n, *generator, templates, params);
            for (const auto& r : batch.records) writer.write(r.to_json());
            if (batch.duplicates_removed) std::cerr << t.name << ": removed " << batch.duplicates_removed << " duplicate(s)\n";
          } catch (const Error& e) {
            if (e.code() != ErrorCode::ParseMiss) throw;
            report_miss(e);
          }
        }
      } else if (*g_harmful) {
        auto nodes = gen_taxonomy.empty() ? datagen::builtin_taxonomy()
                                          : datagen::load_taxonomy(nlohmann::json::parse(read_file(gen_taxonomy)));
        if (gen_limit && nodes.size() > gen_limit) nodes.resize(gen_limit);
        for (const auto& node : nodes) {
          try {
            auto batch = datagen::gen_typical_harmful(node, *generator, templates, params);
            for (const auto& r : batch.records) writer.write(r.to_json());
            if (batch.duplicates_removed) std::cerr << node.leaf << ": removed " << batch.duplicates_removed << " duplicate(s)\n";
          } catch (const Error& e) {
            if (e.code() != ErrorCode::ParseMiss) throw;
            report_miss(e);
          }
        }
      } else if (*g_adv) {
        auto catalog = gen_strategies.empty() ? datagen::builtin_strategies()
                                              : datagen::load_strategies(nlohmann::json::parse(read_file(gen_strategies)));
        std::uint64_t seed = gen_seed;
        for (const auto& prompt : read_lines(gen_input)) {
          try {
            if (gen_each) {
              for (const auto& r : datagen::gen_adversarial_each(prompt, catalog, *generator, templates, params)) {
                writer.write(r.to_json());
              }
            } else {
              writer.write(datagen::gen_adversarial_sampled(prompt, catalog, seed++, *generator, templates, params).to_json());
            }
          } catch (const Error& e) {
            if (e.code() != ErrorCode::ParseMiss) throw;
            report_miss(e);
          }
        }
      } else if (*g_resp) {
        for (const auto& prompt : read_lines(gen_input)) {
          for (const auto& r : datagen::augment_benign_responses(prompt, *generator, params)) writer.write(r.to_json());
        }
      } else if (*g_rag) {
        for (const auto& seed : read_jsonl(gen_input)) {
          try {
            auto out = datagen::gen_rag_negatives(seed.at("document").get<std::string>(),
                                                  seed.at("question").get<std::string>(),
                                                  seed.at("answer").get<std::string>(), *generator, templates, params);
            for (const auto& r : out.records) writer.write(r.to_json());
          } catch (const Error& e) {
            if (e.code() != ErrorCode::ParseMiss) throw;
            report_miss(e);
          }
        }
      } else if (*g_select) {
        std::vector<datagen::PoolItem> pool;
        for (const auto& j : read_jsonl(gen_input)) {
          datagen::PoolItem p;
          p.item = j.at("item").is_string() ? j["item"].get<std::string>() : j["item"].dump();
          p.score_safe = j.at("score_safe").get<double>();
          p.score_unsafe = j.at("score_unsafe").get<double>();
          const auto& label = j.at("predicted_label");
          p.predicted_unsafe = label.is_boolean() ? label.get<bool>() : normalize_token(label.get<std::string>()) == "yes";
          pool.push_back(std::move(p));
        }
        const datagen::SampleQuota quota{gen_n_unsafe, gen_n_safe};
        const auto sel = datagen::uncertainty_sample(pool, quota);
        for (const auto& p : sel.items) {
          writer.write({{"item", p.item},
                        {"score_safe", p.score_safe},
                        {"score_unsafe", p.score_unsafe},
                        {"predicted_label", p.predicted_unsafe ? "Yes" : "No"}});
        }
        if (!sel.quota_met) {
          try {
            datagen::require_quota(sel, quota);
          } catch (const Error& e) {
            std::cerr << e.what() << '\n';
          }
        }
      }
      std::cerr << "wrote " << writer.count() << " record(s)\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << e.to_json().dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
