#pragma once

#include <optional>
#include <string>

#include "guardian/gateway.hpp"
#include "httplib.h"
#include "json.hpp"

namespace guardian {

/// HTTP status for each error code. UnparseableVerdict gets its own status
/// so clients can tell it apart from bad input and upstream failures.
inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownRisk: return 404;
    case ErrorCode::UnparseableVerdict: return 422;
    case ErrorCode::UpstreamError:
    case ErrorCode::MalformedLogprobs: return 502;
    case ErrorCode::Timeout: return 504;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidRiskId:
    case ErrorCode::InvalidMode:
    case ErrorCode::InvalidRoles:
    case ErrorCode::EmptyDefinition:
    case ErrorCode::DuplicateId:
    case ErrorCode::MissingContent:
    case ErrorCode::EmptyContent:
    case ErrorCode::ParseError:
    case ErrorCode::MissingField: return 400;
    default: return 500;
  }
}

namespace detail {

inline void reply_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

inline std::optional<std::string> optional_text(const nlohmann::json& j, const char* key) {
  if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  return std::nullopt;
}

}  // namespace detail

/// Registers the REST routes on `server`:
///   GET  /healthz
///   GET  /v1/risks
///   POST /v1/detect
///   POST /v1/guard/prompt     {"user"}
///   POST /v1/guard/response   {"user", "assistant"}
///   POST /v1/guard/rag        {"question", "context", "answer"}
/// When `bearer_token` is non-empty every /v1 route requires it.
inline void install_routes(httplib::Server& server, const Gateway& gateway, std::string bearer_token = {}) {
  using detail::reply_json;

  auto guarded = [&gateway, bearer_token](auto handler) {
    return [&gateway, bearer_token, handler](const httplib::Request& req, httplib::Response& res) {
      if (!bearer_token.empty() && req.get_header_value("Authorization") != "Bearer " + bearer_token) {
        reply_json(res, 401, {{"error", "Unauthorized"}, {"message", "missing or invalid bearer token"}});
        return;
      }
      try {
        nlohmann::json body = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
        reply_json(res, 200, handler(gateway, body));
      } catch (const Error& e) {
        reply_json(res, http_status(e.code()), e.to_json());
      } catch (const nlohmann::json::exception& e) {
        reply_json(res, 400, Error(ErrorCode::ParseError, e.what()).to_json());
      }
    };
  };

  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, {{"status", "ok"}});
  });

  server.Get("/v1/risks", guarded([](const Gateway& g, const nlohmann::json&) { return g.catalog().to_json(); }));

  server.Post("/v1/detect", guarded([](const Gateway& g, const nlohmann::json& body) {
                return g.handle_detect(DetectionRequest::from_json(body)).to_json();
              }));

  server.Post("/v1/guard/prompt", guarded([](const Gateway& g, const nlohmann::json& body) {
                auto user = detail::optional_text(body, "user").value_or("");
                nlohmann::json results = nlohmann::json::array();
                for (const auto& o : g.guard_prompt(user)) results.push_back(o.to_json());
                return nlohmann::json{{"results", results}};
              }));

  server.Post("/v1/guard/response", guarded([](const Gateway& g, const nlohmann::json& body) {
                auto user = detail::optional_text(body, "user").value_or("");
                auto assistant = detail::optional_text(body, "assistant").value_or("");
                nlohmann::json results = nlohmann::json::array();
                for (const auto& o : g.guard_response(user, assistant)) results.push_back(o.to_json());
                return nlohmann::json{{"results", results}};
              }));

  server.Post("/v1/guard/rag", guarded([](const Gateway& g, const nlohmann::json& body) {
                return g
                    .guard_rag(detail::optional_text(body, "question"), detail::optional_text(body, "context"),
                               detail::optional_text(body, "answer"))
                    .to_json();
              }));
}

}  // namespace guardian
