#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "statefactory/errors.hpp"
#include "statefactory/extraction.hpp"
#include "statefactory/llm.hpp"
#include "statefactory/parallel.hpp"
#include "statefactory/prompts.hpp"
#include "statefactory/trajectory.hpp"

namespace statefactory {

// r_j = j / T for j = 1..T, ignoring content and label.
inline std::vector<double> monotonic_predict(const Trajectory& traj) {
  if (traj.steps.empty()) throw EmptyInputError("trajectory '" + traj.id + "' has no steps");
  const std::size_t T = traj.steps.size();
  std::vector<double> out(T);
  for (std::size_t j = 0; j < T; ++j) out[j] = j + 1 == T ? 1.0 : static_cast<double>(j + 1) / static_cast<double>(T);
  return out;
}

enum class JudgeMode { Intuitive, Analytical };

inline std::string_view to_string(JudgeMode m) { return m == JudgeMode::Intuitive ? "intuitive" : "analytical"; }

inline std::optional<JudgeMode> judge_mode_from_string(std::string_view s) {
  if (s == "intuitive") return JudgeMode::Intuitive;
  if (s == "analytical") return JudgeMode::Analytical;
  return std::nullopt;
}

struct JudgeConfig {
  LlmConfig llm;
  JudgeMode mode = JudgeMode::Intuitive;
  std::size_t parse_retries = 2;
};

// "Step t: Action: ... | Observation: ..." lines for steps 0..upto.
inline std::string render_judge_history(const Trajectory& traj, std::size_t upto) {
  std::string out;
  for (std::size_t t = 0; t <= upto && t < traj.steps.size(); ++t) {
    if (!out.empty()) out += '\n';
    out += "Step " + std::to_string(t) + ": Action: " + traj.steps[t].action +
           " | Observation: " + traj.steps[t].observation;
  }
  return out;
}

inline std::vector<ChatMessage> render_judge_prompt(const Trajectory& traj, std::size_t upto, JudgeMode mode,
                                                    const prompts::TemplateSet& templates = {}) {
  const bool intuitive = mode == JudgeMode::Intuitive;
  const std::map<std::string, std::string> vars{{"task_description", traj.goal},
                                                {"history_log", render_judge_history(traj, upto)}};
  return {{"system", templates.get(intuitive ? "judge_intuitive_system" : "judge_analytical_system")},
          {"user", prompts::render(templates.get(intuitive ? "judge_intuitive_user" : "judge_analytical_user"), vars)}};
}

struct JudgeParse {
  double score = 0.0;  // in [0, 1]
  bool clamped = false;
};

// First well-formed JSON object carrying a numeric "reward". The 0-100 value
// is clamped and scaled to [0, 1].
inline std::optional<JudgeParse> parse_judge_response(std::string_view response) {
  auto numeric = [](const nlohmann::json& v) -> std::optional<double> {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      char* end = nullptr;
      const double d = std::strtod(s.c_str(), &end);
      if (end != s.c_str() && *end == '\0') return d;
    }
    return std::nullopt;
  };
  const auto doc = find_json(
      response,
      [&](const nlohmann::json& j) { return j.is_object() && j.contains("reward") && numeric(j.at("reward")); },
      true);
  if (!doc) return std::nullopt;
  const double raw = *numeric(doc->at("reward"));
  if (!std::isfinite(raw)) return std::nullopt;
  const double c = std::clamp(raw, 0.0, 100.0);
  return JudgeParse{c / 100.0, c != raw};
}

struct JudgeResult {
  double score = 0.0;
  bool clamped = false;
  bool parse_failed = false;
  std::size_t attempts = 0;
  std::vector<AuditRecord> transcript;
};

// Stateless: every call renders the full history through `upto`. After the
// retry budget an unparseable reply scores 0 and is flagged.
inline JudgeResult judge_predict(const Trajectory& traj, std::size_t upto, const JudgeConfig& cfg,
                                 const ChatClient& client, const prompts::TemplateSet& templates = {}) {
  if (upto >= traj.steps.size()) throw std::out_of_range("judge_predict: step index out of range");
  const auto messages = render_judge_prompt(traj, upto, cfg.mode, templates);
  JudgeResult out;
  for (std::size_t attempt = 0; attempt <= cfg.parse_retries; ++attempt) {
    const ChatReply reply = client.complete(messages);
    ++out.attempts;
    AuditRecord rec{"judge", upto, attempt, attempt == 0 ? messages.back().content : "", reply.content,
                    reply.reasoning, "", ""};
    if (auto p = parse_judge_response(reply.content)) {
      out.score = p->score;
      out.clamped = p->clamped;
      out.transcript.push_back(std::move(rec));
      return out;
    }
    rec.error = "no well-formed reward object";
    out.transcript.push_back(std::move(rec));
  }
  out.parse_failed = true;
  log::warn("judge: unparseable reply for " + traj.id + " step " + std::to_string(upto) + ", scoring 0");
  return out;
}

struct JudgeRun {
  std::vector<double> rewards;
  std::vector<JudgeResult> steps;
  std::size_t parse_failures = 0;
  std::size_t clamped = 0;
};

inline JudgeRun judge_trajectory(const Trajectory& traj, const JudgeConfig& cfg, const ChatClient& client,
                                 std::size_t jobs = 1, const prompts::TemplateSet& templates = {}) {
  JudgeRun run;
  run.steps = parallel_map(traj.steps.size(), jobs,
                           [&](std::size_t t) { return judge_predict(traj, t, cfg, client, templates); });
  for (const auto& s : run.steps) {
    run.rewards.push_back(s.score);
    run.parse_failures += s.parse_failed ? 1 : 0;
    run.clamped += s.clamped ? 1 : 0;
  }
  return run;
}

}  // namespace statefactory
