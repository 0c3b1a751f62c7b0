#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "statefactory/blocksworld.hpp"
#include "statefactory/errors.hpp"
#include "statefactory/extraction.hpp"
#include "statefactory/parallel.hpp"
#include "statefactory/random.hpp"
#include "statefactory/routing.hpp"

namespace statefactory {

struct PlannerConfig {
  std::size_t top_k = 3;
  double repetition_penalty = 0.1;
  std::size_t max_steps = 20;
  std::uint64_t tie_break_seed = 0;
  std::size_t candidate_cap = 16;
  std::size_t plateau_patience = 3;

  void validate() const {
    if (top_k == 0) throw std::invalid_argument("top_k must be at least 1");
    if (repetition_penalty < 0.0) throw std::invalid_argument("repetition penalty must be non-negative");
    if (candidate_cap == 0) throw std::invalid_argument("candidate cap must be at least 1");
  }
};

struct Candidate {
  std::string action;
  FactoredState successor;
};

struct RankedCandidate {
  std::string action;
  double score = 0.0;  // differential gain
  double successor_reward = 0.0;
  bool repeated = false;
  std::uint64_t tie_key = 0;
  MatchReport report;
};

// Seeded, order-independent tie-break key for an action at a given step.
inline std::uint64_t tie_key(std::uint64_t seed, std::size_t step, std::string_view action) {
  return rng::mix(rng::mix(seed, static_cast<std::uint64_t>(step)), action);
}

// Scores each candidate by predict_reward(goal, successor) - current_score,
// minus the penalty when the action already appears in `history`, and sorts
// descending. Exact ties fall back to the seeded key, then the action text.
inline std::vector<RankedCandidate> rank_candidates(const GoalState& goal, const FactoredState& /*current_state*/,
                                                    double current_score, std::span<const Candidate> candidates,
                                                    std::span<const std::string> history,
                                                    const SimilarityProvider& provider, const PlannerConfig& cfg,
                                                    std::size_t step = 0) {
  if (candidates.empty()) throw EmptyCandidatesError();
  std::vector<RankedCandidate> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    RankedCandidate r;
    r.action = c.action;
    r.report = predict_reward(goal, c.successor, provider);
    r.successor_reward = r.report.reward;
    r.repeated = std::any_of(history.begin(), history.end(),
                             [&](const std::string& h) { return text::equivalent(h, c.action); });
    r.score = r.successor_reward - current_score - (r.repeated ? cfg.repetition_penalty : 0.0);
    r.tie_key = tie_key(cfg.tie_break_seed, step, text::fold(c.action));
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.tie_key != b.tie_key) return a.tie_key < b.tie_key;
    return a.action < b.action;
  });
  return out;
}

enum class Policy { RewardGuided, Random };

inline std::string_view to_string(Policy p) { return p == Policy::RewardGuided ? "reward-guided" : "random"; }

inline std::optional<Policy> policy_from_string(std::string_view s) {
  if (s == "reward-guided") return Policy::RewardGuided;
  if (s == "random") return Policy::Random;
  return std::nullopt;
}

struct EpisodeStep {
  std::string action;
  std::string observation;
  double reward = 0.0;  // predicted reward of the state reached
  double gain = 0.0;    // chosen candidate's differential score
  bool escape = false;  // plateau escape took a random action
  std::vector<RankedCandidate> top;
  MatchReport report;
};

struct Episode {
  bool success = false;
  std::string goal;
  double initial_reward = 0.0;
  std::vector<EpisodeStep> steps;
};

namespace detail {

inline std::vector<blocksworld::BlockAction> candidate_actions(const blocksworld::BlocksState& s, std::size_t cap,
                                                               rng::Engine& eng) {
  auto acts = blocksworld::admissible_actions(s);
  if (acts.size() > cap) {
    rng::shuffle(eng, acts);
    acts.resize(cap);
    std::sort(acts.begin(), acts.end(), [](const auto& a, const auto& b) {
      return blocksworld::describe_action(a) < blocksworld::describe_action(b);
    });
  }
  return acts;
}

}  // namespace detail

// Greedy one-step lookahead over native transitions. Each successor is
// simulated, re-described, re-extracted and scored; the best differential
// gain is taken. After `plateau_patience` consecutive non-positive best gains
// one seeded random action is taken instead.
inline Episode run_episode(const blocksworld::Instance& inst, const ExtractorBackend& backend,
                           const SimilarityProvider& provider, const PlannerConfig& cfg,
                           Policy policy = Policy::RewardGuided, std::uint64_t seed = 0) {
  namespace bw = blocksworld;
  cfg.validate();
  Episode ep;
  ep.goal = bw::goal_text(inst.goal);
  auto eng = rng::engine(rng::mix(seed, cfg.tie_break_seed));

  bw::BlocksState s = inst.init;
  std::vector<std::string> history;
  ExtractionContext ctx0{ep.goal, {}, {}, bw::to_text(s), std::nullopt, 0, {}, nullptr};
  FactoredState fs = refine_state({}, extract_state(ctx0, backend), ctx0, backend);
  GoalState goal = interpret_goal(ctx0, fs, backend);
  double score = predict_reward(goal, fs, provider).reward;
  ep.initial_reward = score;

  auto observe = [&](const bw::BlocksState& next, const std::string& action, std::size_t t) {
    std::vector<std::string> hist = history;
    hist.push_back(action);
    ExtractionContext ctx{ep.goal, goal, fs, bw::to_text(next), action, t, std::move(hist), nullptr};
    return refine_state(fs, extract_state(ctx, backend), ctx, backend);
  };

  std::size_t plateau = 0;
  for (std::size_t t = 0; t < cfg.max_steps && !bw::goal_satisfied(s, inst.goal); ++t) {
    const auto acts = detail::candidate_actions(s, cfg.candidate_cap, eng);
    if (acts.empty()) break;
    EpisodeStep step;
    bw::BlockAction chosen;
    if (policy == Policy::Random) {
      chosen = acts[rng::uniform_index(eng, acts.size())];
    } else {
      std::vector<Candidate> cands;
      cands.reserve(acts.size());
      for (const auto& a : acts) {
        const std::string text = bw::describe_action(a);
        cands.push_back({text, observe(bw::apply(s, a), text, t + 1)});
      }
      auto ranked = rank_candidates(goal, fs, score, cands, history, provider, cfg, t);
      const double best_gain = ranked.front().score;
      std::size_t pick = 0;
      if (best_gain <= 0.0) {
        if (++plateau >= cfg.plateau_patience) {
          pick = rng::uniform_index(eng, ranked.size());
          step.escape = true;
          plateau = 0;
        }
      } else {
        plateau = 0;
      }
      chosen = *bw::parse_action(ranked[pick].action);
      step.gain = ranked[pick].score;
      ranked.resize(std::min(ranked.size(), std::max(cfg.top_k, pick + 1)));
      step.top = std::move(ranked);
    }
    const std::string text = bw::describe_action(chosen);
    s = bw::apply(s, chosen);
    fs = observe(s, text, t + 1);
    history.push_back(text);
    ExtractionContext gctx{ep.goal, goal, fs, bw::to_text(s), text, t + 1, history, nullptr};
    goal = interpret_goal(gctx, fs, backend);
    step.report = predict_reward(goal, fs, provider);
    if (policy == Policy::Random) step.gain = step.report.reward - score;
    score = step.report.reward;
    step.action = text;
    step.observation = bw::to_text(s);
    step.reward = score;
    ep.steps.push_back(std::move(step));
  }
  ep.success = bw::goal_satisfied(s, inst.goal);
  return ep;
}

inline std::vector<Episode> run_episodes(std::span<const blocksworld::Instance> instances, const ExtractorBackend& backend,
                                         const SimilarityProvider& provider, const PlannerConfig& cfg, Policy policy,
                                         std::uint64_t seed, std::size_t jobs = 1) {
  return parallel_map(instances.size(), jobs, [&](std::size_t i) {
    return run_episode(instances[i], backend, provider, cfg, policy, rng::mix(seed, static_cast<std::uint64_t>(i)));
  });
}

inline double success_rate(std::span<const Episode> episodes) {
  if (episodes.empty()) throw EmptyInputError("success_rate: no episodes");
  std::size_t ok = 0;
  for (const auto& e : episodes) ok += e.success ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(episodes.size());
}

inline double success_rate(std::span<const blocksworld::Instance> instances, Policy policy,
                           const ExtractorBackend& backend, const SimilarityProvider& provider,
                           const PlannerConfig& cfg, std::uint64_t seed = 0, std::size_t jobs = 1) {
  if (instances.empty()) throw EmptyInputError("success_rate: no instances");
  const auto eps = run_episodes(instances, backend, provider, cfg, policy, seed, jobs);
  return success_rate(std::span<const Episode>(eps));
}

inline nlohmann::json to_json(const RankedCandidate& c) {
  return {{"action", c.action},
          {"score", c.score},
          {"successor_reward", c.successor_reward},
          {"repeated", c.repeated}};
}

inline nlohmann::json to_json(const EpisodeStep& s, std::size_t index) {
  nlohmann::json top = nlohmann::json::array();
  for (const auto& c : s.top) top.push_back(to_json(c));
  return {{"step", index},     {"action", s.action}, {"observation", s.observation}, {"reward", s.reward},
          {"gain", s.gain},    {"escape", s.escape}, {"candidates", top},            {"report", to_json(s.report)}};
}

inline nlohmann::json to_json(const Episode& e) {
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t i = 0; i < e.steps.size(); ++i) steps.push_back(to_json(e.steps[i], i));
  return {{"goal", e.goal}, {"success", e.success}, {"initial_reward", e.initial_reward}, {"steps", steps}};
}

}  // namespace statefactory
