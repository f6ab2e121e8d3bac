#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guardian/embedded_data.hpp"
#include "guardian/error.hpp"
#include "json.hpp"

namespace guardian {

enum class Role { User, Assistant, Context };

/// Which content section a risk is evaluated on.
enum class Mode { Prompt, Response };

constexpr std::string_view to_string(Role role) {
  switch (role) {
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Context: return "context";
  }
  return "user";
}

constexpr std::string_view to_string(Mode mode) {
  return mode == Mode::Prompt ? "prompt" : "response";
}

inline Role parse_role(std::string_view text) {
  if (text == "user") return Role::User;
  if (text == "assistant") return Role::Assistant;
  if (text == "context") return Role::Context;
  throw Error(ErrorCode::InvalidRoles, "unknown role '" + std::string(text) + "'");
}

inline Mode parse_mode(std::string_view text) {
  if (text == "prompt") return Mode::Prompt;
  if (text == "response") return Mode::Response;
  throw Error(ErrorCode::InvalidMode, "unknown mode '" + std::string(text) + "'");
}

/// Short lowercase identifier matching [a-z][a-z0-9_-]*.
class RiskId {
 public:
  RiskId() = default;
  explicit RiskId(std::string value) : value_(std::move(value)) {
    if (!is_valid(value_)) {
      throw Error(ErrorCode::InvalidRiskId, "risk id '" + value_ + "' must match [a-z][a-z0-9_-]*");
    }
  }

  static bool is_valid(std::string_view v) {
    if (v.empty() || v.front() < 'a' || v.front() > 'z') return false;
    return std::all_of(v.begin(), v.end(), [](char c) {
      return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    });
  }

  const std::string& str() const noexcept { return value_; }
  friend bool operator==(const RiskId&, const RiskId&) = default;
  friend auto operator<=>(const RiskId&, const RiskId&) = default;

 private:
  std::string value_;
};

struct RoleMapping {
  Role primary = Role::User;
  std::optional<Role> secondary;

  void validate() const {
    if (secondary && *secondary == primary) {
      throw Error(ErrorCode::InvalidRoles, "primary and secondary role must differ");
    }
  }

  friend bool operator==(const RoleMapping&, const RoleMapping&) = default;

  nlohmann::json to_json() const {
    nlohmann::json j{{"primary", std::string(to_string(primary))}};
    if (secondary) j["secondary"] = std::string(to_string(*secondary));
    return j;
  }

  static RoleMapping from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("primary") || !j["primary"].is_string()) {
      throw Error(ErrorCode::InvalidRoles, "roles need a string 'primary' field");
    }
    RoleMapping roles;
    roles.primary = parse_role(j["primary"].get<std::string>());
    if (j.contains("secondary") && !j["secondary"].is_null()) {
      roles.secondary = parse_role(j["secondary"].get<std::string>());
    }
    roles.validate();
    return roles;
  }
};

/// A risk with its roles resolved for one mode.
struct RiskDefinition {
  RiskId id;
  std::string name;
  std::string definition;
  RoleMapping roles;
  bool custom = false;

  friend bool operator==(const RiskDefinition&, const RiskDefinition&) = default;
};

/// Catalog record: one risk with routing for each content section it
/// supports. A missing mode means the risk is not defined for that section.
struct RiskEntry {
  RiskId id;
  std::string name;
  std::string definition;
  std::optional<RoleMapping> prompt_roles;
  std::optional<RoleMapping> response_roles;
  bool custom = false;

  bool supports(Mode mode) const {
    return mode == Mode::Prompt ? prompt_roles.has_value() : response_roles.has_value();
  }

  RiskDefinition for_mode(Mode mode) const {
    const auto& roles = mode == Mode::Prompt ? prompt_roles : response_roles;
    if (!roles) {
      throw Error(ErrorCode::InvalidMode,
                  "risk '" + id.str() + "' is not defined for " + std::string(to_string(mode)) + " mode",
                  {{"risk", id.str()}, {"mode", std::string(to_string(mode))}});
    }
    return RiskDefinition{id, name, definition, *roles, custom};
  }

  nlohmann::json to_json() const {
    nlohmann::json modes = nlohmann::json::object();
    if (prompt_roles) modes["prompt"] = prompt_roles->to_json();
    if (response_roles) modes["response"] = response_roles->to_json();
    return {{"id", id.str()}, {"name", name}, {"definition", definition}, {"modes", modes}, {"custom", custom}};
  }
};

/// Derives a risk id from a display name: lowercase, blanks become '_'.
inline std::string risk_id_from_name(std::string_view name) {
  std::string id;
  for (char c : name) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      if (!id.empty() && id.back() != '_') id.push_back('_');
    } else {
      id.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  while (!id.empty() && id.back() == '_') id.pop_back();
  return id;
}

/// Builds an unregistered custom entry. Custom risks live in exactly one
/// mode: response when the assistant message is the focus, prompt otherwise.
inline RiskEntry make_custom_entry(std::string_view name, std::string_view definition,
                                   std::optional<RoleMapping> roles = std::nullopt) {
  auto trimmed = std::string(definition);
  if (std::all_of(trimmed.begin(), trimmed.end(), [](unsigned char c) { return std::isspace(c); })) {
    throw Error(ErrorCode::EmptyDefinition, "custom risk '" + std::string(name) + "' has an empty definition");
  }
  RoleMapping mapping = roles.value_or(RoleMapping{Role::User, std::nullopt});
  mapping.validate();
  RiskEntry entry;
  entry.id = RiskId(risk_id_from_name(name));
  entry.name = std::string(name);
  entry.definition = std::string(definition);
  entry.custom = true;
  if (mapping.primary == Role::Assistant) {
    entry.response_roles = mapping;
  } else {
    entry.prompt_roles = mapping;
  }
  return entry;
}

class RiskCatalog {
 public:
  RiskCatalog() = default;

  /// Parses the risk definitions data file ({"version", "risks": [...]}).
  static RiskCatalog from_json(const nlohmann::json& doc) {
    if (!doc.contains("risks") || !doc["risks"].is_array()) {
      throw Error(ErrorCode::InvalidConfig, "risk data file lacks a 'risks' array");
    }
    RiskCatalog catalog;
    for (const auto& r : doc["risks"]) {
      RiskEntry entry;
      entry.id = RiskId(r.at("id").get<std::string>());
      entry.name = r.value("name", entry.id.str());
      entry.definition = r.at("definition").get<std::string>();
      entry.custom = r.value("custom", false);
      if (entry.definition.empty()) {
        throw Error(ErrorCode::EmptyDefinition, "risk '" + entry.id.str() + "' has an empty definition");
      }
      const auto& modes = r.at("modes");
      if (modes.contains("prompt")) entry.prompt_roles = RoleMapping::from_json(modes["prompt"]);
      if (modes.contains("response")) entry.response_roles = RoleMapping::from_json(modes["response"]);
      if (!entry.prompt_roles && !entry.response_roles) {
        throw Error(ErrorCode::InvalidRoles, "risk '" + entry.id.str() + "' defines no mode");
      }
      catalog.insert(std::move(entry));
    }
    return catalog;
  }

  static RiskCatalog builtin() { return from_json(nlohmann::json::parse(embedded::kRisksJson)); }

  const std::vector<RiskEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  const RiskEntry* find(std::string_view id) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const RiskEntry& e) { return e.id.str() == id; });
    return it == entries_.end() ? nullptr : &*it;
  }

  const RiskEntry& at(std::string_view id) const {
    if (const auto* entry = find(id)) return *entry;
    throw Error(ErrorCode::UnknownRisk, "risk '" + std::string(id) + "' is not registered", {{"risk", std::string(id)}});
  }

  RiskDefinition resolve(std::string_view id, Mode mode) const { return at(id).for_mode(mode); }

  /// Every resolvable (risk, mode) definition, in catalog order.
  std::vector<RiskDefinition> definitions() const {
    std::vector<RiskDefinition> out;
    for (const auto& e : entries_) {
      for (Mode m : {Mode::Prompt, Mode::Response}) {
        if (e.supports(m)) out.push_back(e.for_mode(m));
      }
    }
    return out;
  }

  RiskId register_custom(std::string_view name, std::string_view definition,
                         std::optional<RoleMapping> roles = std::nullopt) {
    RiskEntry entry = make_custom_entry(name, definition, roles);
    RiskId id = entry.id;
    insert(std::move(entry));
    return id;
  }

  nlohmann::json to_json() const {
    nlohmann::json risks = nlohmann::json::array();
    for (const auto& e : entries_) risks.push_back(e.to_json());
    return {{"risks", risks}};
  }

 private:
  void insert(RiskEntry entry) {
    if (find(entry.id.str())) {
      throw Error(ErrorCode::DuplicateId, "risk '" + entry.id.str() + "' is already registered", {{"risk", entry.id.str()}});
    }
    entries_.push_back(std::move(entry));
  }

  std::vector<RiskEntry> entries_;
};

inline RiskCatalog builtin_catalog() { return RiskCatalog::builtin(); }

}  // namespace guardian
