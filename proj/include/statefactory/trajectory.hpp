#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "statefactory/errors.hpp"
#include "statefactory/text.hpp"

namespace statefactory {

enum class Domain { AlfWorld, ScienceWorld, WebShop, BlocksWorld, TextWorld, Synthetic };
enum class Origin { Expert, RandomPad, RandomPolicy };
enum class Label { Positive, Negative };

inline constexpr std::array<Domain, 6> kAllDomains{Domain::AlfWorld, Domain::ScienceWorld, Domain::WebShop,
                                                   Domain::BlocksWorld, Domain::TextWorld, Domain::Synthetic};

inline std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::AlfWorld: return "alfworld";
    case Domain::ScienceWorld: return "scienceworld";
    case Domain::WebShop: return "webshop";
    case Domain::BlocksWorld: return "blocksworld";
    case Domain::TextWorld: return "textworld";
    case Domain::Synthetic: return "synthetic";
  }
  return "?";
}

inline std::string_view display_name(Domain d) {
  switch (d) {
    case Domain::AlfWorld: return "AlfWorld";
    case Domain::ScienceWorld: return "ScienceWorld";
    case Domain::WebShop: return "WebShop";
    case Domain::BlocksWorld: return "BlocksWorld";
    case Domain::TextWorld: return "TextWorld";
    case Domain::Synthetic: return "Synthetic";
  }
  return "?";
}

inline std::optional<Domain> domain_from_string(std::string_view s) {
  const std::string f = text::fold(s);
  for (Domain d : kAllDomains)
    if (f == to_string(d)) return d;
  return std::nullopt;
}

inline std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::Expert: return "expert";
    case Origin::RandomPad: return "random_pad";
    case Origin::RandomPolicy: return "random_policy";
  }
  return "?";
}

inline std::optional<Origin> origin_from_string(std::string_view s) {
  for (Origin o : {Origin::Expert, Origin::RandomPad, Origin::RandomPolicy})
    if (s == to_string(o)) return o;
  return std::nullopt;
}

inline std::string_view to_string(Label l) { return l == Label::Positive ? "positive" : "negative"; }

inline std::optional<Label> label_from_string(std::string_view s) {
  if (s == "positive") return Label::Positive;
  if (s == "negative") return Label::Negative;
  return std::nullopt;
}

struct Step {
  std::string action;
  std::string observation;
  double reward = 0.0;
  Origin origin = Origin::Expert;

  friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
  std::string id;
  Domain domain = Domain::Synthetic;
  std::string goal;
  std::vector<Step> steps;
  Label label = Label::Positive;
  nlohmann::json meta = nlohmann::json::object();

  std::vector<double> rewards() const {
    std::vector<double> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.reward);
    return out;
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct PairedInstance {
  Trajectory positive;
  Trajectory negative;

  friend bool operator==(const PairedInstance&, const PairedInstance&) = default;
};

// Throws InvariantError naming the trajectory.
inline void validate(const Trajectory& t) {
  if (t.id.empty()) throw InvariantError("<unnamed>", "trajectory id is empty");
  if (t.steps.empty()) throw InvariantError(t.id, "trajectory has no steps");
  bool reached = false;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const double r = t.steps[i].reward;
    if (!std::isfinite(r) || r < 0.0 || r > 1.0) {
      throw InvariantError(t.id, "step " + std::to_string(i) + " reward " + std::to_string(r) + " is outside [0, 1]");
    }
    if (r == 1.0) reached = true;
  }
  if (t.label == Label::Positive && !reached) throw InvariantError(t.id, "positive trajectory never reaches reward 1");
  if (t.label == Label::Negative && reached) throw InvariantError(t.id, "negative trajectory reaches reward 1");
}

inline void validate(const PairedInstance& p) {
  validate(p.positive);
  validate(p.negative);
  if (p.positive.label != Label::Positive) throw InvariantError(p.positive.id, "positive member is labeled negative");
  if (p.negative.label != Label::Negative) throw InvariantError(p.negative.id, "negative member is labeled positive");
  if (p.positive.goal != p.negative.goal) throw InvariantError(p.negative.id, "pair members have different goals");
  if (p.positive.domain != p.negative.domain) throw InvariantError(p.negative.id, "pair members have different domains");
}

inline nlohmann::json to_json(const Step& s) {
  return {{"action", s.action}, {"observation", s.observation}, {"reward", s.reward}, {"origin", to_string(s.origin)}};
}

inline nlohmann::json to_json(const Trajectory& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) steps.push_back(to_json(s));
  return {{"id", t.id},       {"domain", to_string(t.domain)}, {"goal", t.goal},
          {"label", to_string(t.label)}, {"steps", steps},           {"meta", t.meta}};
}

// Throws SchemaError on missing fields or unknown enum values.
inline Trajectory trajectory_from_json(const nlohmann::json& j) {
  try {
    Trajectory t;
    t.id = j.at("id").get<std::string>();
    const auto domain = domain_from_string(j.at("domain").get<std::string>());
    if (!domain) throw SchemaError("unknown domain '" + j.at("domain").get<std::string>() + "'");
    t.domain = *domain;
    t.goal = j.at("goal").get<std::string>();
    const auto label = label_from_string(j.at("label").get<std::string>());
    if (!label) throw SchemaError("unknown label '" + j.at("label").get<std::string>() + "'");
    t.label = *label;
    for (const auto& sj : j.at("steps")) {
      Step s;
      s.action = sj.at("action").get<std::string>();
      s.observation = sj.at("observation").get<std::string>();
      s.reward = sj.at("reward").get<double>();
      const auto origin = origin_from_string(sj.value("origin", std::string("expert")));
      if (!origin) throw SchemaError("unknown step origin '" + sj.value("origin", std::string()) + "'");
      s.origin = *origin;
      t.steps.push_back(std::move(s));
    }
    if (j.contains("meta")) t.meta = j.at("meta");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed trajectory: ") + e.what());
  }
}

}  // namespace statefactory
