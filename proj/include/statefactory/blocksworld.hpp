#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "statefactory/errors.hpp"
#include "statefactory/io.hpp"
#include "statefactory/random.hpp"
#include "statefactory/text.hpp"

namespace statefactory::blocksworld {

using Block = std::string;

// Every block rests on exactly one support: another block, the table, or
// the hand.
struct BlocksState {
  std::map<Block, Block> on;  // top -> below
  std::set<Block> on_table;
  std::optional<Block> holding;

  std::set<Block> blocks() const {
    std::set<Block> out = on_table;
    for (const auto& [x, y] : on) out.insert(x);
    if (holding) out.insert(*holding);
    return out;
  }

  bool is_clear(const Block& b) const {
    if (holding == b) return false;
    for (const auto& [x, y] : on)
      if (y == b) return false;
    return true;
  }

  std::set<Block> clear() const {
    std::set<Block> out;
    for (const auto& b : blocks())
      if (is_clear(b)) out.insert(b);
    return out;
  }

  bool hand_empty() const noexcept { return !holding.has_value(); }

  friend bool operator==(const BlocksState&, const BlocksState&) = default;
};

// Throws InvariantError if supports are inconsistent or `on` has a cycle.
inline void check_invariants(const BlocksState& s) {
  std::map<Block, int> supports;
  for (const auto& [x, y] : s.on) {
    if (x == y) throw InvariantError(x, "block is on itself");
    ++supports[x];
  }
  for (const auto& b : s.on_table) ++supports[b];
  if (s.holding) ++supports[*s.holding];
  for (const auto& [b, n] : supports) {
    if (n != 1) throw InvariantError(b, "block has " + std::to_string(n) + " supports");
  }
  std::map<Block, int> carried;
  for (const auto& [x, y] : s.on) {
    if (!supports.contains(y)) throw InvariantError(y, "support block is not part of the state");
    if (s.holding == y) throw InvariantError(y, "held block supports another block");
    if (++carried[y] > 1) throw InvariantError(y, "block supports more than one block");
  }
  for (const auto& [x, y] : s.on) {
    Block cur = x;
    std::size_t hops = 0;
    while (s.on.contains(cur)) {
      cur = s.on.at(cur);
      if (++hops > s.on.size()) throw InvariantError(x, "cycle in on-relation");
    }
  }
}

enum class ActionKind { PickUp, PutDown, Stack, Unstack };

struct BlockAction {
  ActionKind kind = ActionKind::PickUp;
  Block x;
  Block y;  // only for Stack / Unstack

  friend bool operator==(const BlockAction&, const BlockAction&) = default;
};

inline std::string describe_action(const BlockAction& a) {
  switch (a.kind) {
    case ActionKind::PickUp: return "pick up the " + a.x + " block";
    case ActionKind::PutDown: return "put down the " + a.x + " block";
    case ActionKind::Stack: return "stack the " + a.x + " block on top of the " + a.y + " block";
    case ActionKind::Unstack: return "unstack the " + a.x + " block from on top of the " + a.y + " block";
  }
  return {};
}

inline std::string upper(std::string s) {
  for (char& c : s)
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  return s;
}

// Opaque ID form used by ReAct-style prompts, e.g. UNSTACK_RED_ORANGE.
inline std::string action_id(const BlockAction& a) {
  switch (a.kind) {
    case ActionKind::PickUp: return "PICK-UP_" + upper(a.x);
    case ActionKind::PutDown: return "PUT-DOWN_" + upper(a.x);
    case ActionKind::Stack: return "STACK_" + upper(a.x) + "_" + upper(a.y);
    case ActionKind::Unstack: return "UNSTACK_" + upper(a.x) + "_" + upper(a.y);
  }
  return {};
}

// Accepts the sentence form (any casing/spacing). ID forms need the block
// roster to restore original names.
inline std::optional<BlockAction> parse_action(std::string_view text, const std::set<Block>& roster = {}) {
  const std::string t = text::fold(text);
  static const std::regex pick(R"(^pick up the (.+) block$)");
  static const std::regex put(R"(^put down the (.+) block$)");
  static const std::regex stack(R"(^stack the (.+) block on top of the (.+) block$)");
  static const std::regex unstack(R"(^unstack the (.+) block from on top of the (.+) block$)");
  std::smatch m;
  if (std::regex_match(t, m, pick)) return BlockAction{ActionKind::PickUp, m[1], ""};
  if (std::regex_match(t, m, put)) return BlockAction{ActionKind::PutDown, m[1], ""};
  if (std::regex_match(t, m, stack)) return BlockAction{ActionKind::Stack, m[1], m[2]};
  if (std::regex_match(t, m, unstack)) return BlockAction{ActionKind::Unstack, m[1], m[2]};

  const std::string id = upper(std::string(text::trim(text)));
  auto lookup = [&](const std::string& up) -> std::optional<Block> {
    for (const auto& b : roster)
      if (upper(b) == up) return b;
    return std::nullopt;
  };
  auto one = [&](std::string_view prefix, ActionKind kind) -> std::optional<BlockAction> {
    if (!text::starts_with(id, prefix)) return std::nullopt;
    auto b = lookup(id.substr(prefix.size()));
    if (!b) return std::nullopt;
    return BlockAction{kind, *b, ""};
  };
  auto two = [&](std::string_view prefix, ActionKind kind) -> std::optional<BlockAction> {
    if (!text::starts_with(id, prefix)) return std::nullopt;
    const std::string rest = id.substr(prefix.size());
    for (const auto& b : roster) {
      const std::string ub = upper(b) + "_";
      if (!text::starts_with(rest, ub)) continue;
      if (auto c = lookup(rest.substr(ub.size()))) return BlockAction{kind, b, *c};
    }
    return std::nullopt;
  };
  if (auto a = one("PICK-UP_", ActionKind::PickUp)) return a;
  if (auto a = one("PUT-DOWN_", ActionKind::PutDown)) return a;
  if (auto a = two("UNSTACK_", ActionKind::Unstack)) return a;
  if (auto a = two("STACK_", ActionKind::Stack)) return a;
  return std::nullopt;
}

// Empty when the action is legal, otherwise the violated precondition.
inline std::optional<std::string> violated_precondition(const BlocksState& s, const BlockAction& a) {
  const auto blocks = s.blocks();
  if (!blocks.contains(a.x)) return "unknown block '" + a.x + "'";
  switch (a.kind) {
    case ActionKind::PickUp:
      if (!s.hand_empty()) return std::string("hand is not empty");
      if (!s.on_table.contains(a.x)) return a.x + " is not on the table";
      if (!s.is_clear(a.x)) return a.x + " is not clear";
      return std::nullopt;
    case ActionKind::PutDown:
      if (s.holding != a.x) return "hand is not holding " + a.x;
      return std::nullopt;
    case ActionKind::Stack:
      if (!blocks.contains(a.y)) return "unknown block '" + a.y + "'";
      if (a.x == a.y) return std::string("cannot stack a block on itself");
      if (s.holding != a.x) return "hand is not holding " + a.x;
      if (!s.is_clear(a.y)) return a.y + " is not clear";
      return std::nullopt;
    case ActionKind::Unstack: {
      if (!blocks.contains(a.y)) return "unknown block '" + a.y + "'";
      if (a.x == a.y) return std::string("cannot unstack a block from itself");
      if (!s.hand_empty()) return std::string("hand is not empty");
      auto it = s.on.find(a.x);
      if (it == s.on.end() || it->second != a.y) return a.x + " is not on " + a.y;
      if (!s.is_clear(a.x)) return a.x + " is not clear";
      return std::nullopt;
    }
  }
  return std::string("unknown action kind");
}

// Legal actions, sorted by their sentence form.
inline std::vector<BlockAction> admissible_actions(const BlocksState& s) {
  std::vector<BlockAction> out;
  if (s.holding) {
    const Block& x = *s.holding;
    out.push_back({ActionKind::PutDown, x, ""});
    for (const auto& y : s.clear())
      if (y != x) out.push_back({ActionKind::Stack, x, y});
  } else {
    for (const auto& x : s.clear()) {
      if (s.on_table.contains(x)) {
        out.push_back({ActionKind::PickUp, x, ""});
      } else if (auto it = s.on.find(x); it != s.on.end()) {
        out.push_back({ActionKind::Unstack, x, it->second});
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const BlockAction& a, const BlockAction& b) { return describe_action(a) < describe_action(b); });
  return out;
}

inline BlocksState apply(const BlocksState& s, const BlockAction& a) {
  if (auto why = violated_precondition(s, a)) throw IllegalAction(describe_action(a) + ": " + *why);
  BlocksState n = s;
  switch (a.kind) {
    case ActionKind::PickUp:
      n.on_table.erase(a.x);
      n.holding = a.x;
      break;
    case ActionKind::PutDown:
      n.holding.reset();
      n.on_table.insert(a.x);
      break;
    case ActionKind::Stack:
      n.holding.reset();
      n.on[a.x] = a.y;
      break;
    case ActionKind::Unstack:
      n.on.erase(a.x);
      n.holding = a.x;
      break;
  }
  return n;
}

inline std::string on_clause(const Block& x, const Block& y) {
  return "the " + x + " block is on top of the " + y + " block";
}
inline std::string table_clause(const Block& x) { return "the " + x + " block is on the table"; }
inline std::string holding_clause(const Block& x) { return "the hand is currently holding " + x + " block"; }
inline constexpr std::string_view kHandEmpty = "the hand is empty";

// Canonical description: hand clause, on-relations by top block, table
// placements, joined with ", ".
inline std::string to_text(const BlocksState& s) {
  std::vector<std::string> clauses;
  clauses.push_back(s.holding ? holding_clause(*s.holding) : std::string(kHandEmpty));
  for (const auto& [x, y] : s.on) clauses.push_back(on_clause(x, y));
  for (const auto& b : s.on_table) clauses.push_back(table_clause(b));
  return text::join(clauses, ", ");
}

struct BlocksGoal {
  std::map<Block, Block> required_on;
  std::set<Block> required_on_table;

  bool empty() const noexcept { return required_on.empty() && required_on_table.empty(); }

  friend bool operator==(const BlocksGoal&, const BlocksGoal&) = default;
};

inline void check_consistent(const BlocksGoal& g) {
  std::map<Block, int> carried;
  for (const auto& [x, y] : g.required_on) {
    if (x == y) throw InvariantError(x, "goal puts a block on itself");
    if (g.required_on_table.contains(x)) throw InvariantError(x, "goal requires two supports");
    if (++carried[y] > 1) throw InvariantError(y, "goal puts two blocks on the same block");
  }
  for (const auto& [x, y] : g.required_on) {
    Block cur = x;
    std::size_t hops = 0;
    while (g.required_on.contains(cur)) {
      cur = g.required_on.at(cur);
      if (++hops > g.required_on.size()) throw InvariantError(x, "goal has a cycle");
    }
  }
}

inline bool goal_satisfied(const BlocksState& s, const BlocksGoal& g) {
  for (const auto& [x, y] : g.required_on) {
    auto it = s.on.find(x);
    if (it == s.on.end() || it->second != y) return false;
  }
  for (const auto& b : g.required_on_table)
    if (!s.on_table.contains(b)) return false;
  return true;
}

inline std::vector<std::string> goal_clauses(const BlocksGoal& g) {
  std::vector<std::string> out;
  for (const auto& [x, y] : g.required_on) out.push_back(on_clause(x, y));
  for (const auto& b : g.required_on_table) out.push_back(table_clause(b));
  return out;
}

inline std::string goal_text(const BlocksGoal& g) { return text::join(goal_clauses(g), " and "); }

namespace detail {

// A block is settled when it and everything below it already match the goal.
inline bool settled(const BlocksState& s, const BlocksGoal& g, const Block& b, std::size_t depth = 0) {
  if (depth > 64) return false;
  if (s.holding == b) return false;
  auto want = g.required_on.find(b);
  auto have = s.on.find(b);
  if (want == g.required_on.end()) return have == s.on.end();  // on the table
  if (have == s.on.end() || have->second != want->second) return false;
  return settled(s, g, have->second, depth + 1);
}

}  // namespace detail

// Two-phase plan: clear every unsettled block to the table, then build the
// goal stacks bottom-up. Deterministic; at most 4 actions per block.
inline std::vector<BlockAction> expert_plan(const BlocksState& init, const BlocksGoal& goal) {
  check_consistent(goal);
  std::vector<BlockAction> plan;
  BlocksState s = init;
  auto step = [&](BlockAction a) {
    s = apply(s, a);
    plan.push_back(std::move(a));
  };
  if (goal_satisfied(s, goal)) return plan;

  if (s.holding) step({ActionKind::PutDown, *s.holding, ""});
  for (bool progress = true; progress;) {
    progress = false;
    for (const auto& x : s.clear()) {
      auto it = s.on.find(x);
      if (it == s.on.end() || detail::settled(s, goal, x)) continue;
      step({ActionKind::Unstack, x, it->second});
      step({ActionKind::PutDown, x, ""});
      progress = true;
      break;
    }
  }
  for (bool progress = true; progress && !goal_satisfied(s, goal);) {
    progress = false;
    for (const auto& [x, y] : goal.required_on) {
      if (detail::settled(s, goal, x) || !detail::settled(s, goal, y)) continue;
      if (!s.is_clear(y) || !s.is_clear(x) || !s.on_table.contains(x)) continue;
      step({ActionKind::PickUp, x, ""});
      step({ActionKind::Stack, x, y});
      progress = true;
      break;
    }
  }
  return plan;
}

struct RolloutStep {
  BlockAction action;
  BlocksState state;  // after the action
};

// Uniformly random admissible actions. Deterministic per seed.
inline std::vector<RolloutStep> random_rollout(const BlocksState& init, std::size_t steps, std::uint64_t seed) {
  if (steps == 0) throw std::invalid_argument("random_rollout: steps must be at least 1");
  auto eng = rng::engine(seed);
  std::vector<RolloutStep> out;
  BlocksState s = init;
  for (std::size_t i = 0; i < steps; ++i) {
    const auto acts = admissible_actions(s);
    if (acts.empty()) break;
    const BlockAction a = acts[rng::uniform_index(eng, acts.size())];
    s = apply(s, a);
    out.push_back({a, s});
  }
  return out;
}

struct Instance {
  std::vector<Block> blocks;
  BlocksState init;
  BlocksGoal goal;

  friend bool operator==(const Instance&, const Instance&) = default;
};

inline nlohmann::json to_json(const BlocksState& s) {
  nlohmann::json j = {{"on", s.on}, {"table", s.on_table}};
  if (s.holding) j["holding"] = *s.holding;
  return j;
}

inline nlohmann::json to_json(const BlocksGoal& g) {
  nlohmann::json j = {{"on", g.required_on}};
  if (!g.required_on_table.empty()) j["table"] = g.required_on_table;
  return j;
}

inline nlohmann::json to_json(const Instance& inst) {
  return {{"blocks", inst.blocks}, {"init", to_json(inst.init)}, {"goal", to_json(inst.goal)}};
}

inline BlocksState state_from_json(const nlohmann::json& j) {
  BlocksState s;
  s.on = j.at("on").get<std::map<Block, Block>>();
  if (j.contains("table")) s.on_table = j.at("table").get<std::set<Block>>();
  if (j.contains("holding") && !j.at("holding").is_null()) s.holding = j.at("holding").get<Block>();
  return s;
}

inline BlocksGoal goal_from_json(const nlohmann::json& j) {
  BlocksGoal g;
  if (j.contains("on")) g.required_on = j.at("on").get<std::map<Block, Block>>();
  if (j.contains("table")) g.required_on_table = j.at("table").get<std::set<Block>>();
  return g;
}

inline Instance instance_from_json(const nlohmann::json& j) {
  Instance inst;
  inst.blocks = j.at("blocks").get<std::vector<Block>>();
  inst.init = state_from_json(j.at("init"));
  inst.goal = goal_from_json(j.at("goal"));
  return inst;
}

inline void validate(const Instance& inst, const std::string& id) {
  try {
    check_invariants(inst.init);
    check_consistent(inst.goal);
  } catch (const InvariantError& e) {
    throw InvariantError(id, e.what());
  }
  const std::set<Block> roster(inst.blocks.begin(), inst.blocks.end());
  if (roster != inst.init.blocks()) throw InvariantError(id, "block list does not match the initial state");
  for (const auto& [x, y] : inst.goal.required_on) {
    if (!roster.contains(x) || !roster.contains(y)) throw InvariantError(id, "goal mentions an unknown block");
  }
  for (const auto& b : inst.goal.required_on_table) {
    if (!roster.contains(b)) throw InvariantError(id, "goal mentions an unknown block");
  }
}

inline std::vector<Instance> load_instances(const std::filesystem::path& path) {
  std::vector<Instance> out;
  for (const auto& [line, row] : io::read_jsonl(path)) {
    Instance inst;
    try {
      inst = instance_from_json(row);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), line, std::string("bad instance: ") + e.what());
    }
    validate(inst, path.string() + ":" + std::to_string(line));
    out.push_back(std::move(inst));
  }
  return out;
}

inline std::string instances_to_jsonl(const std::vector<Instance>& instances) {
  std::string out;
  for (const auto& inst : instances) {
    out += to_json(inst).dump();
    out += '\n';
  }
  return out;
}

inline const std::vector<Block>& palette() {
  static const std::vector<Block> colors{"red", "orange", "yellow", "green", "blue", "purple", "white", "black"};
  return colors;
}

// Random arrangement of the given blocks into stacks (hand empty).
inline BlocksState random_state(const std::vector<Block>& blocks, rng::Engine& eng) {
  std::vector<Block> order = blocks;
  rng::shuffle(eng, order);
  BlocksState s;
  Block below;
  for (const auto& b : order) {
    if (below.empty() || rng::uniform_index(eng, 2) == 0) {
      s.on_table.insert(b);
    } else {
      s.on[b] = below;
    }
    below = b;
  }
  return s;
}

struct GeneratorOptions {
  std::size_t n_blocks = 3;
  // Drop goal clauses already true at init so that progress is strictly
  // forward along the expert plan.
  bool exclude_satisfied_clauses = true;
};

// Goal = on-relations of a random target arrangement. Redraws until the goal
// is non-empty and not already satisfied.
inline Instance random_instance(std::uint64_t seed, const GeneratorOptions& opts = {}) {
  if (opts.n_blocks < 2 || opts.n_blocks > palette().size()) {
    throw std::invalid_argument("random_instance: block count must be in [2, " + std::to_string(palette().size()) + "]");
  }
  auto eng = rng::engine(seed);
  std::vector<Block> pool = palette();
  rng::shuffle(eng, pool);
  std::vector<Block> blocks(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(opts.n_blocks));
  std::sort(blocks.begin(), blocks.end());
  Instance inst;
  inst.blocks = blocks;
  for (int attempt = 0;; ++attempt) {
    inst.init = random_state(blocks, eng);
    const BlocksState target = random_state(blocks, eng);
    inst.goal = {};
    for (const auto& [x, y] : target.on) {
      auto it = inst.init.on.find(x);
      const bool already = it != inst.init.on.end() && it->second == y;
      if (already && opts.exclude_satisfied_clauses) continue;
      inst.goal.required_on[x] = y;
    }
    if (!inst.goal.empty() && !goal_satisfied(inst.init, inst.goal)) return inst;
    if (attempt > 1000) throw std::runtime_error("random_instance: could not draw a non-trivial goal");
  }
}

inline std::vector<Instance> generate_instances(std::size_t n, std::uint64_t seed, const GeneratorOptions& opts = {}) {
  std::vector<Instance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_instance(rng::mix(seed, i), opts));
  return out;
}

}  // namespace statefactory::blocksworld
