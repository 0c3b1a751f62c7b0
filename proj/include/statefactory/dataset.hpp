#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "statefactory/blocksworld.hpp"
#include "statefactory/errors.hpp"
#include "statefactory/io.hpp"
#include "statefactory/random.hpp"
#include "statefactory/trajectory.hpp"

namespace statefactory {

// An environment step before labeling. `native_reward` is what the source
// environment reported, used only for pad steps.
struct RawStep {
  std::string action;
  std::string observation;
  double native_reward = 0.0;
};

struct TrajectoryHeader {
  std::string id;
  Domain domain = Domain::Synthetic;
  std::string goal;
  nlohmann::json meta = nlohmann::json::object();
};

struct PadPlan {
  std::size_t front = 0;
  std::size_t back = 0;

  std::size_t total() const noexcept { return front + back; }
  friend bool operator==(const PadPlan&, const PadPlan&) = default;
};

// k ~ U{0..max_pad}, front ~ U{0..k}, back = k - front.
inline PadPlan draw_padding(std::uint64_t seed, std::size_t max_pad = 3) {
  auto eng = rng::engine(seed);
  const std::size_t k = rng::uniform_index(eng, max_pad + 1);
  const std::size_t front = rng::uniform_index(eng, k + 1);
  return {front, k - front};
}

// Expert step j of T (1-based) gets j/T; pads keep their native reward.
inline Trajectory assemble_positive(TrajectoryHeader hdr, std::span<const RawStep> front, std::span<const RawStep> expert,
                                    std::span<const RawStep> back) {
  if (expert.empty()) throw EmptyExpertError();
  Trajectory t{std::move(hdr.id), hdr.domain, std::move(hdr.goal), {}, Label::Positive, std::move(hdr.meta)};
  for (const auto& p : front) t.steps.push_back({p.action, p.observation, p.native_reward, Origin::RandomPad});
  const double T = static_cast<double>(expert.size());
  for (std::size_t j = 0; j < expert.size(); ++j) {
    const double r = j + 1 == expert.size() ? 1.0 : static_cast<double>(j + 1) / T;
    t.steps.push_back({expert[j].action, expert[j].observation, r, Origin::Expert});
  }
  for (const auto& p : back) t.steps.push_back({p.action, p.observation, p.native_reward, Origin::RandomPad});
  return t;
}

// Draws a pad plan and takes pads from `pads` in order: the first `front`
// precede the expert segment, the next `back` follow it. The pad count is
// capped by the pool size.
inline Trajectory build_positive(TrajectoryHeader hdr, std::span<const RawStep> expert, std::span<const RawStep> pads,
                                 std::uint64_t seed, std::size_t max_pad = 3) {
  if (expert.empty()) throw EmptyExpertError();
  PadPlan plan = draw_padding(seed, std::min(max_pad, pads.size()));
  return assemble_positive(std::move(hdr), pads.subspan(0, plan.front), expert, pads.subspan(plan.front, plan.back));
}

// True when `a` and `b` share a contiguous run of at least `min_len`
// actions (compared after normalization).
inline bool shares_contiguous_actions(std::span<const std::string> a, std::span<const std::string> b,
                                      std::size_t min_len = 2) {
  if (min_len == 0) return true;
  if (a.size() < min_len || b.size() < min_len) return false;
  auto gram = [min_len](std::span<const std::string> s, std::size_t i) {
    std::string key;
    for (std::size_t k = 0; k < min_len; ++k) {
      key += text::normalize(s[i + k]);
      key += '\x1f';
    }
    return key;
  };
  std::unordered_set<std::string> grams;
  for (std::size_t i = 0; i + min_len <= b.size(); ++i) grams.insert(gram(b, i));
  for (std::size_t i = 0; i + min_len <= a.size(); ++i)
    if (grams.contains(gram(a, i))) return true;
  return false;
}

struct Rejected {
  std::string reason;
};

using NegativeResult = std::variant<Trajectory, Rejected>;

// Strict filter: reject on any success or on a shared contiguous action run
// of length >= min_overlap with the expert; otherwise every reward is 0.
inline NegativeResult build_negative(TrajectoryHeader hdr, std::span<const RawStep> rollout,
                                     std::span<const std::string> expert_actions, const std::vector<bool>& goal_reached,
                                     std::size_t min_overlap = 2) {
  if (rollout.empty() || expert_actions.empty()) throw EmptyInputError("build_negative: empty rollout or expert");
  if (goal_reached.size() != rollout.size()) throw LengthMismatch(goal_reached.size(), rollout.size());
  for (std::size_t i = 0; i < goal_reached.size(); ++i) {
    if (goal_reached[i]) return Rejected{"rollout reaches the goal at step " + std::to_string(i)};
  }
  std::vector<std::string> actions;
  for (const auto& s : rollout) actions.push_back(s.action);
  if (shares_contiguous_actions(actions, expert_actions, min_overlap)) {
    return Rejected{"rollout shares a contiguous action run with the expert"};
  }
  Trajectory t{std::move(hdr.id), hdr.domain, std::move(hdr.goal), {}, Label::Negative, std::move(hdr.meta)};
  for (const auto& s : rollout) t.steps.push_back({s.action, s.observation, 0.0, Origin::RandomPolicy});
  return t;
}

inline constexpr std::string_view kTrajectoriesFile = "trajectories.jsonl";
inline constexpr std::string_view kPairsFile = "pairs.jsonl";
inline constexpr std::string_view kDatasetConfigFile = "config.json";

// A dataset directory holds trajectories.jsonl and pairs.jsonl (one
// {"positive_id","negative_id"} per line), plus an optional config.json.
inline void save_dataset(std::span<const PairedInstance> instances, const std::filesystem::path& dir,
                         const nlohmann::json& config = nullptr) {
  std::string trajs, pairs;
  for (const auto& p : instances) {
    trajs += to_json(p.positive).dump() + "\n";
    trajs += to_json(p.negative).dump() + "\n";
    pairs += nlohmann::json{{"positive_id", p.positive.id}, {"negative_id", p.negative.id}}.dump() + "\n";
  }
  io::write_file_atomic(dir / kTrajectoriesFile, trajs);
  io::write_file_atomic(dir / kPairsFile, pairs);
  if (!config.is_null()) io::write_file_atomic(dir / kDatasetConfigFile, config.dump(2) + "\n");
}

inline std::vector<PairedInstance> load_dataset(const std::filesystem::path& dir) {
  const auto tpath = dir / kTrajectoriesFile;
  const auto ppath = dir / kPairsFile;
  std::unordered_map<std::string, Trajectory> by_id;
  for (const auto& [line, row] : io::read_jsonl(tpath)) {
    Trajectory t;
    try {
      t = trajectory_from_json(row);
    } catch (const SchemaError& e) {
      throw ParseError(tpath.string(), line, e.what());
    }
    validate(t);
    const std::string id = t.id;
    if (!by_id.emplace(id, std::move(t)).second) throw InvariantError(id, "duplicate trajectory id");
  }
  std::vector<PairedInstance> out;
  for (const auto& [line, row] : io::read_jsonl(ppath)) {
    std::string pos, neg;
    try {
      pos = row.at("positive_id").get<std::string>();
      neg = row.at("negative_id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(ppath.string(), line, std::string("bad pair entry: ") + e.what());
    }
    auto pi = by_id.find(pos);
    if (pi == by_id.end()) throw InvariantError(pos, "pair references an unknown trajectory");
    auto ni = by_id.find(neg);
    if (ni == by_id.end()) throw InvariantError(neg, "pair references an unknown trajectory");
    PairedInstance p{pi->second, ni->second};
    validate(p);
    out.push_back(std::move(p));
  }
  return out;
}

struct DatasetStats {
  std::map<Domain, std::size_t> pairs_per_domain;
  std::size_t pairs = 0;
  std::size_t trajectories = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t total_steps = 0;
  double mean_length = 0.0;
};

inline DatasetStats dataset_stats(std::span<const PairedInstance> instances) {
  DatasetStats s;
  for (const auto& p : instances) {
    ++s.pairs;
    ++s.pairs_per_domain[p.positive.domain];
    for (const Trajectory* t : {&p.positive, &p.negative}) {
      ++s.trajectories;
      (t->label == Label::Positive ? s.positives : s.negatives)++;
      s.total_steps += t->steps.size();
    }
  }
  if (s.trajectories > 0) s.mean_length = static_cast<double>(s.total_steps) / static_cast<double>(s.trajectories);
  return s;
}

inline nlohmann::json to_json(const DatasetStats& s) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [d, n] : s.pairs_per_domain) per[std::string(to_string(d))] = n;
  return {{"pairs", s.pairs},         {"trajectories", s.trajectories}, {"positives", s.positives},
          {"negatives", s.negatives}, {"mean_length", s.mean_length},   {"pairs_per_domain", per}};
}

namespace blocksworld {

struct DatasetOptions {
  std::size_t n_blocks = 3;
  std::size_t max_pad = 3;
  std::size_t min_overlap = 2;
  std::size_t negative_attempts = 50;
  std::size_t instance_attempts = 20;
};

namespace detail {

inline RawStep raw_step(const RolloutStep& s) { return {describe_action(s.action), to_text(s.state), 0.0}; }

// Random steps from `from` that never satisfy the goal. Returns nullopt if
// the seeded draw hits the goal.
inline std::optional<std::vector<RolloutStep>> goal_avoiding_rollout(const BlocksState& from, const BlocksGoal& goal,
                                                                      std::size_t steps, std::uint64_t seed) {
  if (steps == 0) return std::vector<RolloutStep>{};
  auto r = random_rollout(from, steps, seed);
  for (const auto& s : r)
    if (goal_satisfied(s.state, goal)) return std::nullopt;
  return r;
}

}  // namespace detail

// One positive/negative pair for an instance, or nullopt if no acceptable
// negative was found within the attempt budget.
inline std::optional<PairedInstance> make_pair(const Instance& inst, const std::string& id_stem, std::uint64_t seed,
                                               const DatasetOptions& opts = {}) {
  const PadPlan plan = draw_padding(rng::mix(seed, "pads"), opts.max_pad);

  std::vector<RolloutStep> front;
  bool front_ok = plan.front == 0;
  for (std::size_t a = 0; !front_ok && a < 64; ++a) {
    if (auto r = detail::goal_avoiding_rollout(inst.init, inst.goal, plan.front, rng::mix(seed, 0x100 + a))) {
      front = std::move(*r);
      front_ok = true;
    }
  }
  if (!front_ok) return std::nullopt;

  BlocksState s = front.empty() ? inst.init : front.back().state;
  const auto plan_actions = expert_plan(s, inst.goal);
  if (plan_actions.empty()) return std::nullopt;
  std::vector<RawStep> expert;
  std::vector<std::string> expert_texts;
  for (const auto& a : plan_actions) {
    s = apply(s, a);
    expert.push_back({describe_action(a), to_text(s), 0.0});
    expert_texts.push_back(describe_action(a));
  }

  // Success is terminal, so post-success pads report the native reward 1.
  std::vector<RawStep> front_raw, back_raw;
  for (const auto& f : front) front_raw.push_back(detail::raw_step(f));
  if (plan.back > 0) {
    for (const auto& b : random_rollout(s, plan.back, rng::mix(seed, "back"))) {
      RawStep r = detail::raw_step(b);
      r.native_reward = 1.0;
      back_raw.push_back(std::move(r));
    }
  }

  const std::string goal = goal_text(inst.goal);
  nlohmann::json meta = {{"blocks", inst.blocks},
                         {"init", to_json(inst.init)},
                         {"goal", to_json(inst.goal)},
                         {"seed", seed},
                         {"pads", {{"front", plan.front}, {"back", plan.back}}},
                         {"initial_observation", to_text(inst.init)}};

  Trajectory pos = assemble_positive({id_stem + "-pos", Domain::BlocksWorld, goal, meta}, front_raw, expert, back_raw);

  const std::size_t len = pos.steps.size();
  for (std::size_t a = 0; a < opts.negative_attempts; ++a) {
    const auto roll = random_rollout(inst.init, len, rng::mix(seed, 0x10000 + a));
    std::vector<RawStep> raw;
    std::vector<bool> reached;
    for (const auto& r : roll) {
      raw.push_back(detail::raw_step(r));
      reached.push_back(goal_satisfied(r.state, inst.goal));
    }
    nlohmann::json nmeta = meta;
    nmeta["pads"] = {{"front", 0}, {"back", 0}};
    nmeta["rollout_attempt"] = a;
    auto res = build_negative({id_stem + "-neg", Domain::BlocksWorld, goal, nmeta}, raw, expert_texts, reached,
                              opts.min_overlap);
    if (auto* t = std::get_if<Trajectory>(&res)) return PairedInstance{std::move(pos), std::move(*t)};
  }
  return std::nullopt;
}

// `n` pairs with ids bw-0000-pos / bw-0000-neg, ... Instances whose negative
// cannot be drawn are replaced by fresh draws.
inline std::vector<PairedInstance> generate_dataset(std::size_t n, std::uint64_t seed, const DatasetOptions& opts = {}) {
  std::vector<PairedInstance> out;
  GeneratorOptions gen;
  gen.n_blocks = opts.n_blocks;
  for (std::size_t i = 0; i < n; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "bw-%04zu", i);
    std::optional<PairedInstance> pair;
    for (std::size_t a = 0; !pair && a < opts.instance_attempts; ++a) {
      const std::uint64_t s = rng::mix(rng::mix(seed, i), a);
      pair = make_pair(random_instance(s, gen), stem, s, opts);
    }
    if (!pair) throw std::runtime_error(std::string("could not build an acceptable pair for ") + stem);
    out.push_back(std::move(*pair));
  }
  return out;
}

}  // namespace blocksworld

}  // namespace statefactory
