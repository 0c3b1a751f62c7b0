#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "statefactory/embedding.hpp"
#include "statefactory/errors.hpp"
#include "statefactory/state_model.hpp"

namespace statefactory {

struct KeyAlignment {
  std::size_t index = 0;
  std::string key;
  double similarity = 0.0;
};

// Hard-max alignment of a goal key against candidate keys. Ties go to the
// lowest index.
inline KeyAlignment align_key(std::string_view goal_key, std::span<const std::string> candidates,
                              const SimilarityProvider& provider) {
  if (candidates.empty()) throw EmptyCandidatesError();
  KeyAlignment best{0, candidates[0], provider.similarity(goal_key, candidates[0])};
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double s = provider.similarity(goal_key, candidates[i]);
    if (s > best.similarity) best = {i, candidates[i], s};
  }
  return best;
}

// Per goal attribute: which state key it aligned to and how well the values
// agree.
struct AttributeMatch {
  std::string goal_key;
  std::string state_key;  // empty when the state entity has no attributes
  double key_similarity = 0.0;
  double value_similarity = 0.0;
};

struct Satisfaction {
  double score = 0.0;
  std::vector<AttributeMatch> attributes;
};

inline Satisfaction attribute_satisfaction_detail(const Entity& goal, const Entity& state,
                                                  const SimilarityProvider& provider) {
  Satisfaction out;
  if (goal.attributes.empty()) {
    out.score = 1.0;
    return out;
  }
  if (state.attributes.empty()) {
    for (const auto& ga : goal.attributes) out.attributes.push_back({ga.key, "", 0.0, 0.0});
    return out;
  }
  std::vector<std::string> keys;
  keys.reserve(state.attributes.size());
  for (const auto& a : state.attributes) keys.push_back(a.key);
  double sum = 0.0;
  for (const auto& ga : goal.attributes) {
    const KeyAlignment k = align_key(ga.key, keys, provider);
    const double v = provider.similarity(ga.value, state.attributes[k.index].value);
    out.attributes.push_back({ga.key, k.key, k.similarity, v});
    sum += v;
  }
  out.score = sum / static_cast<double>(goal.attributes.size());
  return out;
}

// Mean value similarity over goal attributes under hard key alignment.
inline double attribute_satisfaction(const Entity& goal, const Entity& state, const SimilarityProvider& provider) {
  return attribute_satisfaction_detail(goal, state, provider).score;
}

struct EntityMatch {
  std::string goal_identity;
  std::optional<std::size_t> state_index;
  std::string state_identity;
  double identity_similarity = 0.0;
  double attribute_satisfaction = 0.0;
  double composite = 0.0;  // identity_similarity * attribute_satisfaction
  double reward = 0.0;     // equals composite of the chosen entity
  std::vector<AttributeMatch> attributes;
};

// Best state entity for one goal entity: argmax of sim(identity) * psi.
// Lowest index wins ties; an empty state yields no match and reward 0.
template <class Tag>
EntityMatch match_object_detail(const Entity& goal, const EntitySet<Tag>& state, const SimilarityProvider& provider) {
  EntityMatch best;
  best.goal_identity = goal.identity;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const Entity& cand = state[i];
    const double id_sim = provider.similarity(goal.identity, cand.identity);
    Satisfaction sat = attribute_satisfaction_detail(goal, cand, provider);
    const double phi = id_sim * sat.score;
    if (!best.state_index || phi > best.composite) {
      best.state_index = i;
      best.state_identity = cand.identity;
      best.identity_similarity = id_sim;
      best.attribute_satisfaction = sat.score;
      best.composite = phi;
      best.reward = phi;
      best.attributes = std::move(sat.attributes);
    }
  }
  return best;
}

struct ObjectMatch {
  std::optional<std::size_t> index;
  double reward = 0.0;
};

template <class Tag>
ObjectMatch match_object(const Entity& goal, const EntitySet<Tag>& state, const SimilarityProvider& provider) {
  const EntityMatch m = match_object_detail(goal, state, provider);
  return {m.state_index, m.reward};
}

struct MatchReport {
  std::vector<EntityMatch> entities;
  double reward = 0.0;
};

// Mean over goal entities of their best object score. An empty goal scores 0.
inline MatchReport predict_reward(const GoalState& goal, const FactoredState& state,
                                  const SimilarityProvider& provider) {
  MatchReport report;
  if (goal.empty()) return report;
  double sum = 0.0;
  for (const auto& g : goal) {
    report.entities.push_back(match_object_detail(g, state, provider));
    sum += report.entities.back().reward;
  }
  report.reward = std::clamp(sum / static_cast<double>(goal.size()), 0.0, 1.0);
  return report;
}

// Flat ablation: mean over goal sentences of the best match among state
// sentences.
inline double predict_reward_flat(std::span<const std::string> goal_sentences,
                                  std::span<const std::string> state_sentences, const SimilarityProvider& provider) {
  if (goal_sentences.empty()) throw EmptyGoalError();
  if (state_sentences.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& g : goal_sentences) {
    double best = 0.0;
    for (const auto& s : state_sentences) best = std::max(best, provider.similarity(g, s));
    sum += best;
  }
  return sum / static_cast<double>(goal_sentences.size());
}

// Object-centric ablation: each goal group takes the best state group by
// sim(identity) times the flat score of its sentences; groups are averaged.
// A goal group without sentences needs only its identity.
inline double predict_reward_object_centric(const ObjectCentricState& goal, const ObjectCentricState& state,
                                            const SimilarityProvider& provider) {
  if (goal.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& g : goal) {
    double best = 0.0;
    for (const auto& s : state) {
      const double id_sim = provider.similarity(g.identity, s.identity);
      const double content = g.sentences.empty() ? 1.0 : predict_reward_flat(g.sentences, s.sentences, provider);
      best = std::max(best, id_sim * content);
    }
    sum += best;
  }
  return sum / static_cast<double>(goal.size());
}

inline nlohmann::json to_json(const AttributeMatch& a) {
  return {{"goal_key", a.goal_key},
          {"state_key", a.state_key},
          {"key_similarity", a.key_similarity},
          {"value_similarity", a.value_similarity}};
}

inline nlohmann::json to_json(const EntityMatch& m) {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& a : m.attributes) attrs.push_back(to_json(a));
  return {{"goal_identity", m.goal_identity},
          {"state_identity", m.state_index ? nlohmann::json(m.state_identity) : nlohmann::json(nullptr)},
          {"identity_similarity", m.identity_similarity},
          {"attribute_satisfaction", m.attribute_satisfaction},
          {"composite", m.composite},
          {"reward", m.reward},
          {"attributes", attrs}};
}

inline nlohmann::json to_json(const MatchReport& r) {
  nlohmann::json ents = nlohmann::json::array();
  for (const auto& e : r.entities) ents.push_back(to_json(e));
  return {{"reward", r.reward}, {"entities", ents}};
}

}  // namespace statefactory
