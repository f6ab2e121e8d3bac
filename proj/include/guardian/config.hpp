#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "guardian/backend.hpp"
#include "guardian/embedded_data.hpp"
#include "guardian/gateway.hpp"
#include "guardian/http_backend.hpp"
#include "guardian/risk_catalog.hpp"
#include "json.hpp"

namespace guardian {

enum class BackendKind { Mock, Http };

inline BackendKind parse_backend_kind(const std::string& s) {
  if (s == "mock") return BackendKind::Mock;
  if (s == "http") return BackendKind::Http;
  throw Error(ErrorCode::InvalidConfig, "backend must be 'mock' or 'http', got '" + s + "'");
}

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string bearer_token;  // empty disables auth
};

struct GatewayConfig {
  BackendKind backend_kind = BackendKind::Mock;
  BackendConfig backend;
  std::vector<MockRule> mock_rules;
  std::uint64_t mock_seed = 0;
  double mock_bias = 0.0;
  GuardPolicy policy;
  std::vector<InlineRisk> custom_risks;
  bool strict_matcher = false;
  bool logging_enabled = false;
  ServerConfig server;

  /// Defaults: mock backend with the shipped rule set.
  static GatewayConfig defaults() { return from_json(nlohmann::json::object()); }

  static GatewayConfig from_json(const nlohmann::json& j) {
    GatewayConfig c;
    try {
      const auto shipped = nlohmann::json::parse(embedded::kMockRulesJson);
      c.mock_rules = mock_rules_from_json(shipped.at("rules"));
      c.mock_seed = shipped.value("seed", std::uint64_t{0});
      c.mock_bias = shipped.value("bias", 0.0);

      if (j.contains("backend")) {
        const auto& b = j["backend"];
        c.backend = BackendConfig::from_json(b);
        c.backend_kind = parse_backend_kind(b.value("kind", std::string("mock")));
      }
      if (j.contains("mock")) {
        const auto& m = j["mock"];
        if (m.contains("rules")) c.mock_rules = mock_rules_from_json(m["rules"]);
        c.mock_seed = m.value("seed", c.mock_seed);
        c.mock_bias = m.value("bias", c.mock_bias);
      }
      if (j.contains("policy")) c.policy = GuardPolicy::from_json(j["policy"]);
      if (j.contains("custom_risks")) {
        for (const auto& r : j["custom_risks"]) {
          InlineRisk risk;
          risk.name = r.at("name").get<std::string>();
          risk.definition = r.value("definition", std::string{});
          if (r.contains("roles")) risk.roles = RoleMapping::from_json(r["roles"]);
          c.custom_risks.push_back(std::move(risk));
        }
      }
      if (j.contains("scoring")) {
        const auto& s = j["scoring"];
        c.strict_matcher = s.value("strict_matcher", false);
        if (s.contains("k")) c.backend.top_k = s["k"].get<std::size_t>();
      }
      if (j.contains("logging")) {
        c.logging_enabled = j["logging"].value("enabled", false);
        c.backend.redact_content = j["logging"].value("redact_content", true);
      }
      if (j.contains("server")) {
        const auto& s = j["server"];
        c.server.host = s.value("host", c.server.host);
        c.server.port = s.value("port", c.server.port);
        c.server.bearer_token = s.value("bearer_token", std::string{});
        if (s.contains("bearer_token_env")) {
          if (const char* v = std::getenv(s["bearer_token_env"].get<std::string>().c_str()); v && *v) {
            c.server.bearer_token = v;
          }
        }
      }
      c.backend.validate();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, e.what());
    }
    return c;
  }

  static GatewayConfig load(const std::filesystem::path& path) {
    try {
      return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
  }

  RiskCatalog make_catalog() const {
    RiskCatalog catalog = RiskCatalog::builtin();
    for (const auto& r : custom_risks) catalog.register_custom(r.name, r.definition, r.roles);
    return catalog;
  }

  Logger make_logger() const {
    if (!logging_enabled) return {};
    return [](const std::string& line) { std::fprintf(stderr, "[guardian] %s\n", line.c_str()); };
  }

  std::shared_ptr<Detector> make_detector() const {
    if (backend_kind == BackendKind::Mock) {
      return std::make_shared<MockDetector>(mock_rules, mock_seed, backend.top_k, mock_bias);
    }
    return std::make_shared<HttpBackend>(backend, make_logger());
  }

  Gateway make_gateway(GatewayOptions options = {}) const {
    options.match.strict = strict_matcher;
    return Gateway(make_catalog(), policy, make_detector(), options);
  }
};

}  // namespace guardian
