#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include "guardian/backend.hpp"
#include "httplib.h"

namespace guardian {

struct EndpointParts {
  std::string scheme_host_port;  // e.g. "http://127.0.0.1:8000"
  std::string base_path;         // e.g. "/v1" (no trailing slash)
};

inline EndpointParts split_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidConfig, "endpoint '" + url + "' lacks a scheme");
  auto path_start = url.find('/', scheme_end + 3);
  EndpointParts parts;
  parts.scheme_host_port = url.substr(0, path_start);
  parts.base_path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!parts.base_path.empty() && parts.base_path.back() == '/') parts.base_path.pop_back();
  return parts;
}

/// Client for an OpenAI-compatible `/completions` endpoint. Detection asks
/// for one token with `logprobs = top_k` at the configured temperature.
/// Every call builds its own connection, so instances are safe to share
/// between threads.
class HttpBackend : public Detector, public Generator {
 public:
  explicit HttpBackend(BackendConfig cfg, Logger log = {}) : cfg_(std::move(cfg)), log_(std::move(log)) {
    cfg_.validate();
    endpoint_ = split_endpoint(cfg_.endpoint);
  }

  DetectorResponse detect(const RenderedPrompt& prompt) override {
    nlohmann::json body{{"model", cfg_.model_id},
                        {"prompt", prompt.text},
                        {"max_tokens", 1},
                        {"temperature", cfg_.temperature},
                        {"logprobs", cfg_.top_k}};
    const auto start = std::chrono::steady_clock::now();
    auto reply = post("/completions", body, prompt.text);
    auto response = parse_completion_logprobs(reply, cfg_.top_k);
    response.latency =
        std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start);
    for (const auto& w : response.warnings) emit("warning: " + w);
    return response;
  }

  std::string generate(const std::string& prompt, const GenerationParams& params) override {
    nlohmann::json body{{"model", cfg_.model_id},
                        {"prompt", prompt},
                        {"max_tokens", params.max_tokens},
                        {"temperature", params.temperature},
                        {"seed", params.seed}};
    auto reply = post("/completions", body, prompt);
    if (!reply.contains("choices") || reply["choices"].empty() || !reply["choices"][0].contains("text")) {
      throw Error(ErrorCode::UpstreamError, "completion reply lacks choices[0].text", {{"status", 200}});
    }
    return reply["choices"][0]["text"].get<std::string>();
  }

  std::size_t top_k() const override { return cfg_.top_k; }
  std::string model_id() const override { return cfg_.model_id; }
  const BackendConfig& config() const noexcept { return cfg_; }

 private:
  static bool retryable_status(int status) { return status == 502 || status == 503 || status == 504; }

  void emit(const std::string& line) const {
    if (log_) log_(line);
  }

  nlohmann::json post(const std::string& route, const nlohmann::json& body, const std::string& content) {
    const std::string path = endpoint_.base_path + route;
    const std::string payload = body.dump();
    httplib::Headers headers;
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_transport_error;
    int last_status = 0;
    std::string last_body;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
      httplib::Client client(endpoint_.scheme_host_port);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());

      emit("POST " + endpoint_.scheme_host_port + path + " attempt=" + std::to_string(attempt + 1) +
           (cfg_.redact_content ? " content=<redacted " + std::to_string(content.size()) + " bytes>"
                                : " content=" + content));
      auto res = client.Post(path, headers, payload, "application/json");
      if (!res) {
        last_transport_error = httplib::to_string(res.error());
        continue;
      }
      last_status = res->status;
      last_body = res->body;
      if (res->status >= 200 && res->status < 300) {
        try {
          return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
          throw Error(ErrorCode::MalformedLogprobs, std::string("reply is not JSON: ") + e.what());
        }
      }
      if (!retryable_status(res->status)) break;
    }
    if (last_status == 0) {
      throw Error(ErrorCode::Timeout,
                  "no reply from " + endpoint_.scheme_host_port + " after " + std::to_string(cfg_.max_retries + 1) +
                      " attempt(s): " + last_transport_error,
                  {{"attempts", cfg_.max_retries + 1}, {"transport_error", last_transport_error}});
    }
    throw Error(ErrorCode::UpstreamError, "upstream returned HTTP " + std::to_string(last_status),
                {{"status", last_status}, {"body", last_body.substr(0, 2000)}});
  }

  BackendConfig cfg_;
  Logger log_;
  EndpointParts endpoint_;
};

}  // namespace guardian
