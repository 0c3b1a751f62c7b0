#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "statefactory/errors.hpp"
#include "statefactory/log.hpp"
#include "statefactory/text.hpp"

namespace statefactory {

// One dynamic attribute: a short summative key and a full declarative
// sentence as its value.
struct AttributePair {
  std::string key;
  std::string value;

  friend bool operator==(const AttributePair&, const AttributePair&) = default;
};

struct Entity {
  std::string identity;
  std::vector<AttributePair> attributes;

  // Index of the attribute whose folded key equals `key`, or npos.
  std::size_t find_key(std::string_view key) const {
    const std::string k = text::fold(key);
    for (std::size_t i = 0; i < attributes.size(); ++i) {
      if (text::fold(attributes[i].key) == k) return i;
    }
    return npos;
  }

  friend bool operator==(const Entity&, const Entity&) = default;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// Throws SchemaError if the entity violates its invariants: non-empty
// identity, non-empty keys and values, keys unique under folding.
inline void validate_entity(const Entity& e) {
  if (text::blank(e.identity)) throw SchemaError("entity identity is empty");
  std::unordered_set<std::string> seen;
  for (const auto& a : e.attributes) {
    if (text::blank(a.key)) throw SchemaError("empty attribute key on entity '" + e.identity + "'");
    if (text::blank(a.value)) {
      throw SchemaError("empty value for key '" + a.key + "' on entity '" + e.identity + "'");
    }
    if (!seen.insert(text::fold(a.key)).second) {
      throw SchemaError("duplicate key '" + a.key + "' on entity '" + e.identity + "'");
    }
  }
}

// An ordered set of entities with identities unique under folding. Tagged so
// that world states and goal blueprints cannot be mixed up.
template <class Tag>
class EntitySet {
 public:
  EntitySet() = default;

  // Normalizes display text (NFC, trimmed, collapsed whitespace) and
  // validates. Throws SchemaError on any invariant violation.
  explicit EntitySet(std::vector<Entity> entities) : entities_(std::move(entities)) {
    std::unordered_set<std::string> seen;
    for (auto& e : entities_) {
      e.identity = text::normalize(e.identity);
      for (auto& a : e.attributes) {
        a.key = text::normalize(a.key);
        a.value = text::normalize(a.value);
      }
      validate_entity(e);
      if (!seen.insert(text::fold(e.identity)).second) {
        throw SchemaError("duplicate entity identity '" + e.identity + "'");
      }
    }
  }

  const std::vector<Entity>& entities() const noexcept { return entities_; }
  std::size_t size() const noexcept { return entities_.size(); }
  bool empty() const noexcept { return entities_.empty(); }
  auto begin() const noexcept { return entities_.begin(); }
  auto end() const noexcept { return entities_.end(); }
  const Entity& operator[](std::size_t i) const { return entities_[i]; }

  const Entity* find(std::string_view identity) const {
    const std::string k = text::fold(identity);
    for (const auto& e : entities_) {
      if (text::fold(e.identity) == k) return &e;
    }
    return nullptr;
  }

  template <class Other>
  EntitySet<Other> retag() const {
    return EntitySet<Other>(entities_);
  }

  friend bool operator==(const EntitySet&, const EntitySet&) = default;

 private:
  std::vector<Entity> entities_;
};

struct StateTag {};
struct GoalTag {};

using FactoredState = EntitySet<StateTag>;
using GoalState = EntitySet<GoalTag>;

enum class RepresentationLevel { Raw, FlatText, ObjectCentric, ObjectAttribute };

inline std::string_view to_string(RepresentationLevel l) {
  switch (l) {
    case RepresentationLevel::Raw: return "raw";
    case RepresentationLevel::FlatText: return "flat";
    case RepresentationLevel::ObjectCentric: return "object-centric";
    case RepresentationLevel::ObjectAttribute: return "object-attribute";
  }
  return "?";
}

// Soft caps on backend output. Excess entities/attributes are dropped with a
// warning rather than failing the step.
struct ParseLimits {
  std::size_t max_entities = 64;
  std::size_t max_attributes = 16;
};

struct ParseResult {
  std::vector<Entity> entities;
  std::vector<std::string> warnings;
};

namespace detail {

inline void parse_attribute_list(const nlohmann::json& list, Entity& entity, const ParseLimits& limits,
                                 std::vector<std::string>& warnings) {
  if (!list.is_array()) throw SchemaError("attributes of '" + entity.identity + "' must be an array");
  for (const auto& item : list) {
    if (!item.is_object() || item.empty()) {
      throw SchemaError("attribute of '" + entity.identity + "' must be a non-empty {key: value} object");
    }
    for (const auto& [key, value] : item.items()) {
      if (!value.is_string()) {
        throw SchemaError("value for key '" + key + "' on '" + entity.identity + "' is not text");
      }
      AttributePair attr{text::normalize(key), text::normalize(value.get<std::string>())};
      if (attr.key.empty()) throw SchemaError("empty attribute key on '" + entity.identity + "'");
      if (attr.value.empty()) throw SchemaError("empty value for key '" + key + "' on '" + entity.identity + "'");
      if (entity.find_key(attr.key) != Entity::npos) {
        throw SchemaError("duplicate key '" + attr.key + "' on entity '" + entity.identity + "'");
      }
      if (entity.attributes.size() >= limits.max_attributes) {
        warnings.push_back("attribute cap reached on '" + entity.identity + "', dropping key '" + attr.key + "'");
        continue;
      }
      entity.attributes.push_back(std::move(attr));
    }
  }
}

}  // namespace detail

// Parses the object-attribute document:
//   [ {"object": {"<identity>": [ {"<key>": "<value>"}, ... ]}}, ... ]
// Duplicate entity identities keep the first occurrence and add a warning.
inline ParseResult parse_entities(const nlohmann::json& doc, const ParseLimits& limits = {}) {
  if (!doc.is_array()) throw SchemaError("state document must be a JSON array");
  ParseResult out;
  std::unordered_set<std::string> seen;
  for (const auto& wrapper : doc) {
    if (!wrapper.is_object() || !wrapper.contains("object") || !wrapper.at("object").is_object()) {
      throw SchemaError("each element must be of the form {\"object\": {...}}");
    }
    for (const auto& [identity, attrs] : wrapper.at("object").items()) {
      Entity e{text::normalize(identity), {}};
      if (e.identity.empty()) throw SchemaError("entity identity is empty");
      detail::parse_attribute_list(attrs, e, limits, out.warnings);
      if (!seen.insert(text::fold(e.identity)).second) {
        out.warnings.push_back("duplicate entity '" + e.identity + "' ignored");
        continue;
      }
      if (out.entities.size() >= limits.max_entities) {
        out.warnings.push_back("entity cap reached, dropping '" + e.identity + "'");
        continue;
      }
      out.entities.push_back(std::move(e));
    }
  }
  return out;
}

template <class Set = FactoredState>
Set parse_state_document(const nlohmann::json& doc, const ParseLimits& limits = {}) {
  auto r = parse_entities(doc, limits);
  for (const auto& w : r.warnings) log::warn(w);
  return Set(std::move(r.entities));
}

inline FactoredState parse_factored_state(const nlohmann::json& doc, const ParseLimits& limits = {}) {
  return parse_state_document<FactoredState>(doc, limits);
}

inline FactoredState parse_factored_state(std::string_view document, const ParseLimits& limits = {}) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("state document is not valid JSON: ") + e.what());
  }
  return parse_factored_state(doc, limits);
}

// Text arguments are documents, never JSON string values.
inline FactoredState parse_factored_state(const std::string& document, const ParseLimits& limits = {}) {
  return parse_factored_state(std::string_view(document), limits);
}

inline FactoredState parse_factored_state(const char* document, const ParseLimits& limits = {}) {
  return parse_factored_state(std::string_view(document), limits);
}

inline GoalState parse_goal_state(const nlohmann::json& doc, const ParseLimits& limits = {}) {
  return parse_state_document<GoalState>(doc, limits);
}

template <class Tag>
nlohmann::json to_json(const EntitySet<Tag>& s) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : s) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : e.attributes) attrs.push_back({{a.key, a.value}});
    doc.push_back({{"object", {{e.identity, attrs}}}});
  }
  return doc;
}

template <class Tag>
std::string serialize(const EntitySet<Tag>& s) {
  return to_json(s).dump();
}

// Lower-granularity views used by the representation ablation.
using FlatText = std::vector<std::string>;

struct ObjectGroup {
  std::string identity;
  std::vector<std::string> sentences;

  friend bool operator==(const ObjectGroup&, const ObjectGroup&) = default;
};

using ObjectCentricState = std::vector<ObjectGroup>;
using DegradedState = std::variant<FlatText, ObjectCentricState>;

template <class Tag>
FlatText flatten(const EntitySet<Tag>& s) {
  FlatText out;
  for (const auto& e : s)
    for (const auto& a : e.attributes) out.push_back(a.value);
  return out;
}

template <class Tag>
ObjectCentricState group_by_object(const EntitySet<Tag>& s) {
  ObjectCentricState out;
  out.reserve(s.size());
  for (const auto& e : s) {
    ObjectGroup g{e.identity, {}};
    for (const auto& a : e.attributes) g.sentences.push_back(a.value);
    out.push_back(std::move(g));
  }
  return out;
}

// Strips structure: FlatText keeps only the attribute sentences, ObjectCentric
// groups them under their entity identity. Raw and ObjectAttribute are not
// produced here.
template <class Tag>
DegradedState degrade_representation(const EntitySet<Tag>& s, RepresentationLevel level) {
  switch (level) {
    case RepresentationLevel::FlatText: return flatten(s);
    case RepresentationLevel::ObjectCentric: return group_by_object(s);
    default: throw std::invalid_argument("degrade_representation supports only flat and object-centric levels");
  }
}

}  // namespace statefactory
