#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "statefactory/blocksworld.hpp"
#include "statefactory/embedding.hpp"
#include "statefactory/errors.hpp"
#include "statefactory/llm.hpp"
#include "statefactory/log.hpp"
#include "statefactory/prompts.hpp"
#include "statefactory/routing.hpp"
#include "statefactory/state_model.hpp"
#include "statefactory/trajectory.hpp"

namespace statefactory {

// Request/response records kept for audit. One per backend call.
struct AuditRecord {
  std::string module;
  std::size_t step = 0;
  std::size_t attempt = 0;
  std::string prompt;
  std::string response;
  std::string reasoning;
  std::string thinking;
  std::string error;
};

inline nlohmann::json to_json(const AuditRecord& r) {
  nlohmann::json j = {{"module", r.module}, {"step", r.step}, {"attempt", r.attempt},
                      {"prompt", r.prompt}, {"response", r.response}};
  if (!r.reasoning.empty()) j["reasoning"] = r.reasoning;
  if (!r.thinking.empty()) j["thinking"] = r.thinking;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

using AuditLog = std::vector<AuditRecord>;

struct ExtractionContext {
  std::string goal_text;
  GoalState prev_goal;
  FactoredState prev_state;
  std::string observation;
  std::optional<std::string> last_action;
  std::size_t step_index = 0;
  std::vector<std::string> action_history;
  AuditLog* audit = nullptr;
};

class ExtractorBackend {
 public:
  virtual ~ExtractorBackend() = default;
  virtual std::string name() const = 0;
  virtual bool deterministic() const = 0;

  // Raw state for the current observation; carry-over is applied by
  // extract_state().
  virtual FactoredState extract(const ExtractionContext& ctx) const = 0;
  virtual FactoredState refine(const FactoredState& prev, const FactoredState& current, const ExtractionContext& ctx) const = 0;
  virtual GoalState interpret(const ExtractionContext& ctx, const FactoredState& current) const = 0;
};

namespace detail {

// Entities of `prev` missing from `current` (by folded identity) are
// appended unchanged.
template <class Tag>
std::vector<Entity> carry_over(const EntitySet<Tag>& prev, std::vector<Entity> current) {
  EntitySet<Tag> seen(current);
  for (const auto& e : prev)
    if (!seen.find(e.identity)) current.push_back(e);
  return current;
}

}  // namespace detail

// Entities present in both take the current version, entities only in prev
// are kept in place, new entities follow.
inline FactoredState merge_states(const FactoredState& prev, const FactoredState& current) {
  std::vector<Entity> out;
  for (const auto& e : prev) {
    const Entity* c = current.find(e.identity);
    out.push_back(c ? *c : e);
  }
  for (const auto& e : current)
    if (!prev.find(e.identity)) out.push_back(e);
  return FactoredState(std::move(out));
}

inline FactoredState extract_state(const ExtractionContext& ctx, const ExtractorBackend& backend) {
  if (text::blank(ctx.observation)) throw SchemaError("observation is empty");
  FactoredState raw = backend.extract(ctx);
  return FactoredState(detail::carry_over(ctx.prev_state, raw.entities()));
}

inline FactoredState refine_state(const FactoredState& prev, const FactoredState& current,
                                  const ExtractionContext& ctx, const ExtractorBackend& backend) {
  return backend.refine(prev, current, ctx);
}

inline GoalState interpret_goal(const ExtractionContext& ctx, const FactoredState& current,
                                const ExtractorBackend& backend) {
  if (text::blank(ctx.goal_text)) throw SchemaError("goal text is empty");
  return backend.interpret(ctx, current);
}

// Deterministic BlocksWorld backend. Observations and goals are clause lists
// in the canonical phrasing produced by blocksworld::to_text.
class BlocksWorldRules : public ExtractorBackend {
 public:
  std::string name() const override { return "blocksworld-rules"; }
  bool deterministic() const override { return true; }

  FactoredState extract(const ExtractionContext& ctx) const override {
    return FactoredState(parse_observation(ctx.observation));
  }

  FactoredState refine(const FactoredState& prev, const FactoredState& current, const ExtractionContext&) const override {
    return merge_states(prev, current);
  }

  // Parsed once from the goal text at step 0 (or while no goal exists yet),
  // then static.
  GoalState interpret(const ExtractionContext& ctx, const FactoredState&) const override {
    if (ctx.step_index > 0 && !ctx.prev_goal.empty()) return ctx.prev_goal;
    return GoalState(parse_goal(ctx.goal_text));
  }

  static std::vector<std::string> clauses(std::string_view text) {
    std::string t = text::normalize(text);
    while (text::starts_with(t, ".")) t.erase(0, 1);
    while (!t.empty() && (t.back() == '.' || t.back() == ' ')) t.pop_back();
    std::vector<std::string> out;
    for (auto& part : text::split(t, ", ")) {
      for (auto& sub : text::split(part, " and ")) {
        std::string c = text::normalize(sub);
        while (!c.empty() && (c.back() == '.' || c.back() == ',')) c.pop_back();
        while (text::starts_with(c, ".")) c.erase(0, 1);
        c = text::normalize(c);
        if (!c.empty()) out.push_back(std::move(c));
      }
    }
    return out;
  }

  static std::vector<Entity> parse_observation(std::string_view observation) {
    static const std::regex hand_empty(R"(^the hand is empty$)", std::regex::icase);
    static const std::regex holding(R"(^the hand is (?:currently )?holding (?:the )?(.+?) block$)", std::regex::icase);
    static const std::regex on_top(R"(^the (.+?) block is on top of the (.+?) block$)", std::regex::icase);
    static const std::regex on_table(R"(^the (.+?) block is on the table$)", std::regex::icase);
    static const std::regex clear(R"(^the (.+?) block is clear$)", std::regex::icase);
    std::vector<Entity> out;
    auto add = [&](const std::string& identity, const std::string& key, const std::string& value) {
      for (auto& e : out) {
        if (text::equivalent(e.identity, identity)) {
          if (e.find_key(key) == Entity::npos) e.attributes.push_back({key, value});
          return;
        }
      }
      out.push_back({identity, {{key, value}}});
    };
    for (const auto& c : clauses(observation)) {
      std::smatch m;
      if (std::regex_match(c, m, hand_empty)) {
        add("hand", "content", c);
      } else if (std::regex_match(c, m, holding)) {
        add(m[1].str() + " block", "position", c);
        add("hand", "content", c);
      } else if (std::regex_match(c, m, on_top) || std::regex_match(c, m, on_table)) {
        add(m[1].str() + " block", "position", c);
      } else if (std::regex_match(c, m, clear)) {
        add(m[1].str() + " block", "clear", c);
      } else {
        throw SchemaError("unrecognized BlocksWorld clause: '" + c + "'");
      }
    }
    return out;
  }

  // Accepts canonical clauses and the short "x on y" / "x on table" forms,
  // which are rewritten to the canonical sentence.
  static std::vector<Entity> parse_goal(std::string_view goal) {
    static const std::regex on_top(R"(^the (.+?) block is on top of the (.+?) block$)", std::regex::icase);
    static const std::regex on_table(R"(^the (.+?) block is on the table$)", std::regex::icase);
    static const std::regex short_table(R"(^(?:the )?(\w+)(?: block)? on (?:the )?table$)", std::regex::icase);
    static const std::regex short_on(R"(^(?:the )?(\w+)(?: block)? on (?:top of )?(?:the )?(\w+)(?: block)?$)",
                                     std::regex::icase);
    std::vector<Entity> out;
    for (const auto& c : clauses(goal)) {
      std::smatch m;
      std::string block, sentence;
      if (std::regex_match(c, m, on_top) || std::regex_match(c, m, on_table)) {
        block = m[1].str();
        sentence = c;
      } else if (std::regex_match(c, m, short_table)) {
        block = m[1].str();
        sentence = blocksworld::table_clause(block);
      } else if (std::regex_match(c, m, short_on)) {
        block = m[1].str();
        sentence = blocksworld::on_clause(block, m[2].str());
      } else {
        throw SchemaError("unrecognized BlocksWorld goal clause: '" + c + "'");
      }
      const std::string identity = block + " block";
      bool dup = false;
      for (const auto& e : out) dup = dup || text::equivalent(e.identity, identity);
      if (dup) throw SchemaError("goal places '" + identity + "' twice");
      out.push_back({identity, {{"position", sentence}}});
    }
    return out;
  }
};

struct GenerativeOptions {
  std::size_t schema_retries = 2;
  ParseLimits limits;
  std::size_t reserved_output_tokens = 1024;
};

// Drives the three-prompt pipeline (state extraction, refinement, goal
// interpretation) against a chat model.
class GenerativeExtractor : public ExtractorBackend {
 public:
  GenerativeExtractor(std::shared_ptr<const ChatClient> client, LlmConfig cfg,
                      prompts::TemplateSet templates = {}, GenerativeOptions opts = {})
      : client_(std::move(client)), cfg_(std::move(cfg)), templates_(std::move(templates)), opts_(opts) {}

  std::string name() const override { return "generative/" + cfg_.model; }
  bool deterministic() const override { return false; }

  FactoredState extract(const ExtractionContext& ctx) const override {
    auto vars = base_vars(ctx);
    vars["prev_goal_state"] = render_state(ctx.prev_goal);
    vars["last_action"] = ctx.last_action.value_or("None");
    vars["observation"] = ctx.observation;
    vars["prev_states"] = render_state(ctx.prev_state);
    const std::string prompt = prompts::render(templates_.get("module_a"), vars);
    FactoredState s = call<FactoredState>("module_a", prompt, ctx, [&](const nlohmann::json& j, std::string& thinking) {
      if (!j.is_object() || !j.contains("current_state")) throw SchemaError("missing \"current_state\"");
      thinking = j.value("thinking", std::string());
      return parse_state_document<FactoredState>(j.at("current_state"), opts_.limits);
    });
    warn_unobserved(s, ctx);
    return s;
  }

  FactoredState refine(const FactoredState& prev, const FactoredState& current, const ExtractionContext& ctx) const override {
    auto vars = base_vars(ctx);
    vars["prev_states"] = render_state(prev);
    vars["current_state"] = render_state(current);
    const std::string prompt = fit_history(templates_.get("module_b"), vars, ctx.action_history);
    return call<FactoredState>("module_b", prompt, ctx, [&](const nlohmann::json& j, std::string& thinking) {
      if (j.is_array()) return parse_state_document<FactoredState>(j, opts_.limits);
      if (j.is_object()) {
        thinking = j.value("thinking", std::string());
        for (const char* k : {"current_state", "state", "states"})
          if (j.contains(k)) return parse_state_document<FactoredState>(j.at(k), opts_.limits);
      }
      throw SchemaError("expected a state array");
    });
  }

  GoalState interpret(const ExtractionContext& ctx, const FactoredState& current) const override {
    auto vars = base_vars(ctx);
    vars["current_state"] = render_state(current);
    vars["observation"] = ctx.observation;
    vars["prev_goal_state"] = render_state(ctx.prev_goal);
    const std::string prompt = fit_history(templates_.get("module_c"), vars, ctx.action_history);
    return call<GoalState>("module_c", prompt, ctx, [&](const nlohmann::json& j, std::string& thinking) {
      if (!j.is_object() || !j.contains("goal_state")) throw SchemaError("missing \"goal_state\"");
      thinking = j.value("thinking", std::string());
      return parse_state_document<GoalState>(j.at("goal_state"), opts_.limits);
    });
  }

  // Numbered action lines, oldest first, starting at `first_index`.
  static std::string render_history(const std::vector<std::string>& history, std::size_t first_index = 0) {
    if (first_index >= history.size()) return "None";
    std::string out;
    for (std::size_t i = first_index; i < history.size(); ++i) {
      if (!out.empty()) out += '\n';
      out += std::to_string(i + 1) + ". " + history[i];
    }
    return out;
  }

  // Renders `tmpl`, dropping the oldest history lines until the estimated
  // prompt fits the context budget.
  std::string fit_history(std::string_view tmpl, std::map<std::string, std::string> vars,
                          const std::vector<std::string>& history) const {
    const std::size_t budget =
        cfg_.max_context > opts_.reserved_output_tokens ? cfg_.max_context - opts_.reserved_output_tokens : 0;
    for (std::size_t first = 0;; ++first) {
      vars["action_history"] = render_history(history, first);
      std::string prompt = prompts::render(tmpl, vars);
      if (estimate_tokens(prompt) <= budget || first >= history.size()) {
        if (estimate_tokens(prompt) > budget) log::warn("prompt exceeds the context budget even without history");
        return prompt;
      }
    }
  }

 private:
  std::map<std::string, std::string> base_vars(const ExtractionContext& ctx) const {
    return {{"system_instruction", templates_.get("system_instruction")},
            {"output_format", templates_.get("output_format")},
            {"output_format_des", templates_.get("output_format_des")},
            {"task_description", ctx.goal_text}};
  }

  template <class Tag>
  static std::string render_state(const EntitySet<Tag>& s) {
    return s.empty() ? std::string("None") : serialize(s);
  }

  template <class Result, class Parse>
  Result call(const std::string& module, const std::string& prompt, const ExtractionContext& ctx, Parse parse) const {
    std::vector<ChatMessage> messages{{"user", prompt}};
    for (std::size_t attempt = 0;; ++attempt) {
      const ChatReply reply = client_->complete(messages);
      AuditRecord rec{module, ctx.step_index, attempt, attempt == 0 ? prompt : messages.back().content,
                      reply.content, reply.reasoning, "", ""};
      try {
        const auto doc = find_json(reply.content, [](const nlohmann::json&) { return true; });
        if (!doc) throw SchemaError("response contains no JSON value");
        Result r = parse(*doc, rec.thinking);
        if (ctx.audit) ctx.audit->push_back(std::move(rec));
        return r;
      } catch (const SchemaError& e) {
        rec.error = e.what();
        if (ctx.audit) ctx.audit->push_back(rec);
        if (attempt >= opts_.schema_retries) throw;
        messages.push_back({"assistant", reply.content});
        messages.push_back({"user", std::string("The previous output was invalid (") + e.what() +
                                        "). Output only the JSON object in the required format."});
      }
    }
  }

  static void warn_unobserved(const FactoredState& s, const ExtractionContext& ctx) {
    const std::string obs = text::fold(ctx.observation);
    for (const auto& e : s) {
      if (ctx.prev_state.find(e.identity)) continue;
      if (obs.find(text::fold(e.identity)) == std::string::npos) {
        log::warn("step " + std::to_string(ctx.step_index) + ": extracted entity '" + e.identity +
                  "' is not mentioned in the observation");
      }
    }
  }

  std::shared_ptr<const ChatClient> client_;
  LlmConfig cfg_;
  prompts::TemplateSet templates_;
  GenerativeOptions opts_;
};

enum class ViolationKind { EntityRemoved, AttributeRemoved };

struct Violation {
  ViolationKind kind;
  std::string identity;
  std::string key;  // AttributeRemoved only
};

inline nlohmann::json to_json(const Violation& v) {
  nlohmann::json j = {{"kind", v.kind == ViolationKind::EntityRemoved ? "entity_removed" : "attribute_removed"},
                      {"identity", v.identity}};
  if (!v.key.empty()) j["key"] = v.key;
  return j;
}

// Checks persistence between consecutive goals. A vanished entity is excused
// when a newly introduced entity is similar enough to count as an anchoring
// rename (similarity strictly above `threshold`).
inline std::vector<Violation> validate_goal_evolution(const GoalState& prev, const GoalState& next,
                                                      const SimilarityProvider& provider, double threshold = 0.6) {
  std::vector<Violation> out;
  auto check_attrs = [&](const Entity& before, const Entity& after) {
    for (const auto& a : before.attributes)
      if (after.find_key(a.key) == Entity::npos) out.push_back({ViolationKind::AttributeRemoved, before.identity, a.key});
  };
  for (const auto& e : prev) {
    if (const Entity* same = next.find(e.identity)) {
      check_attrs(e, *same);
      continue;
    }
    const Entity* renamed = nullptr;
    double best = threshold;
    for (const auto& n : next) {
      if (prev.find(n.identity)) continue;
      const double s = provider.similarity(e.identity, n.identity);
      if (s > best) {
        best = s;
        renamed = &n;
      }
    }
    if (renamed) check_attrs(e, *renamed);
    else out.push_back({ViolationKind::EntityRemoved, e.identity, ""});
  }
  return out;
}

struct StepRecord {
  FactoredState state;
  GoalState goal;
  MatchReport report;
  bool degraded = false;
  std::string error;
  std::vector<Violation> goal_violations;
};

struct TrajectoryRun {
  std::vector<double> rewards;
  std::vector<StepRecord> steps;
  AuditLog audit;
};

// Recurrent pass over a trajectory: extract, refine, interpret the goal
// against the refined state, score. A malformed backend response at one step
// carries the previous state and goal forward.
inline TrajectoryRun run_trajectory(const Trajectory& traj, const ExtractorBackend& backend,
                                    const SimilarityProvider& provider) {
  if (traj.steps.empty()) throw EmptyInputError("trajectory '" + traj.id + "' has no steps");
  TrajectoryRun run;
  FactoredState state;
  GoalState goal;
  std::vector<std::string> history;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const Step& step = traj.steps[t];
    history.push_back(step.action);
    ExtractionContext ctx{traj.goal, goal, state, step.observation, step.action, t, history, &run.audit};
    StepRecord rec;
    try {
      FactoredState current = extract_state(ctx, backend);
      FactoredState refined = refine_state(state, current, ctx, backend);
      GoalState next_goal = interpret_goal(ctx, refined, backend);
      if (t > 0) rec.goal_violations = validate_goal_evolution(goal, next_goal, provider);
      state = std::move(refined);
      goal = std::move(next_goal);
    } catch (const SchemaError& e) {
      rec.degraded = true;
      rec.error = e.what();
      log::warn("trajectory " + traj.id + " step " + std::to_string(t) + ": " + e.what() +
                "; carrying the previous state forward");
    }
    rec.state = state;
    rec.goal = goal;
    rec.report = predict_reward(goal, state, provider);
    run.rewards.push_back(rec.report.reward);
    run.steps.push_back(std::move(rec));
  }
  return run;
}

}  // namespace statefactory
