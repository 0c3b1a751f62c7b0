#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "statefactory/errors.hpp"
#include "statefactory/io.hpp"

namespace statefactory::prompts {

// Templates use {name} placeholders. The stock text below is the
// reference wording; any of them can be replaced by a file of the same name
// (plus ".txt") in an override directory.

inline constexpr std::string_view kModuleA = R"(System Instruction: {system_instruction}
Role: You are a state extraction assistant. Your goal is to extract the current state of the agent based on the provided information, following the rules below:
Rules:
1. Output Format: Output a SINGLE JSON object. It must contain two keys: "thinking" and "current_state".
- "thinking": "For each object, cite the exact phrase from 'Observation' that justifies its state. Verify that the object actually exists in 'Observation' or 'Previous States'. EXPLICITLY REJECT any information that appears ONLY in 'Previous Goal State'."
- "current_state": {output_format_des}
2. Relevance: Only extract objects that are present in the Observation, or Previous States, and that are directly relevant to the Task Description. Include only those objects that actively contribute to task progress or are essential for understanding the current task state. Do not extract from Task Description or Previous Goal State.
3. Previous Goal State: This is provided ONLY for context verification. IT IS A FORBIDDEN SOURCE. You must NOT copy, infer, or hallucinate any object or state from 'Previous Goal State' into 'current_state'. If an object is in the goal but hasn't been observed yet, ignore it.
4. Action Observation: The immediate feedback observed by the agent after performing an action. This may be None if no observable outcome occurs.
5. Previous States: Represents the accumulated task-relevant states from previous steps. Use it to maintain continuity in the agent's world model:
- If an object from Previous States appears in the current Observation, update its state with the most recent information.
- If an object from Previous States does not appear in the current Observation, retain its previous state in Current State, assuming it remains unchanged.
- Only include objects in Current State if they are either (a) newly observed and task-relevant, or (b) carried over from Previous States.
- Do not include objects that are neither present in the current Observation nor in Previous States.
Input: Task Description: {task_description}, Previous Goal State: {prev_goal_state}, Action: {last_action}, Observation: {observation}, Previous States: {prev_states}
Output Example: {output_format} {output_format_des}
)";

inline constexpr std::string_view kModuleB = R"(System Instruction: {system_instruction}
Role: You are a task-relevant state extraction assistant. Given the historical task-related states (Previous States), the current step's new states (Current State), the actions taken (Action History), and the Task Description, extract and update the relevant world states according to the following rules:
Rules:
1. Extract task-relevant states from the Current State. Exclude non-factual statements. Do not extract from Task Description. A state is considered strongly relevant only if it directly or clearly indirectly affects whether the task can be completed. If uncertain about a state's relevance, exclude it.
2. Combine the results from Rule 1 with the previous historical states (Previous States) to form an updated set of task-relevant historical states. Note that Previous States may be None, in which case the output should be based exclusively on the results from Rule 1.
3. Refine the combined state set by preserving all states that are relevant to the current task, even if they are intermediate or partially superseded. Only remove or update a state if it represents an outdated or incorrect version of the same information about a specific object. In such cases, retain the most accurate and up-to-date state while discarding its obsolete counterparts. Avoid eliminating states merely because more specific or complete information has emerged, as long as the original states contribute to the task context or support traceability of reasoning.
4. Output Format: Only output the JSON content—no additional text, explanation, or formatting. Follow the specified JSON format below exactly: {output_format} {output_format_des}
Input: Task Description: {task_description}, Previous States: {prev_states}, Current State: {current_state}, Action History: {action_history}
)";

inline constexpr std::string_view kModuleC = R"(System Instruction: {system_instruction}
Role: You are an expert in task goal state extraction. Your mission is to generate an Evolving Goal State: a minimal, accurate JSON specification that defines only the FINAL, STATIC BLUEPRINT FOR TASK SUCCESS, derived exclusively from the Task Description.
Core Principle: Goal vs. Plan (CRITICAL)
• Goal (Legal): A concrete, factual state that must be objectively true at the moment of success AND is explicitly or implicitly required by the Task Description. This includes all explicit milestones in a multi-step task (e.g., "First do A, then do B").
• Plan / Blocker (Illegal): An intermediate step, prerequisite, enabling action, or blocker that YOU (the LLM) deduce is necessary, but is NOT one of the final goals listed in the Task Description.
• Constraint: Your Goal State MUST ONLY contain Goals. It MUST NEVER contain Plans or Blockers.
Rules & Instructions:
1. Output Format: You must output only the JSON content. Do not include any additional text, explanations, comments, or markdown formatting. Adhere strictly to this JSON structure:
- Output a SINGLE JSON object containing two keys:
- "thinking": A step-by-step analysis string. First, analyze the 'Task Description' to identify the ultimate success conditions. Second, verify that every goal attribute comes from the Task, NOT just because it exists in 'Current State'. REJECT any state that appears solely because it is currently true in 'Current State'.
- "goal_state": {output_format_des}
- Example of desired output structure: {output_format} {output_format_des}
2. Core Logic: Blueprint Creation (Step 0)
a. Step 0: Complete Task Translation:
- At Step 0, you MUST translate ALL final goal verbs and required milestones from the Task Description into their final physical states.
- If a task has multiple required parts (e.g., "First do A, then do B"), ALL parts must be translated into final states and included in the blueprint from the beginning.
- This blueprint is the COMPLETE and FINAL definition of success.
b. State-Change Filter: Use this only at Step 0 to exclude "trivial truths".
3. Core Logic: Blueprint Evolution (Step ≥ 1)
a. GOAL PERSISTENCE:
- The Goal State created at Step 0 is the static blueprint for success.
- Once a goal is added at Step 0, it MUST REMAIN for the entire episode.
- DO NOT remove goals just because they are achieved in the Current State.
b. STRICT IMMUTABILITY:
- You are STRICTLY FORBIDDEN from adding new goals after Step 0.
- The blueprint from Step 0 is considered complete. Do not add goals for plans, prerequisites, or blockers that you deduce.
c. LEGAL EVOLUTION: The ONLY two legal modifications to the Goal State after Step 0 are:
1. Task Milestone Addition:
· Condition: The Task Description contains a multi-step requirement (e.g., "First do A, then do B"), and the Observation confirms that step A is now complete.
· Action: You are now allowed to add the goal for step B to the Goal State. This is legal because the goal for B originates from the task description.
2. Refinement / Anchoring:
· Condition: A goal in the Goal State is generic, and the Observation first identifies its specific instance.
· Action: You MUST update the Goal State to "anchor" the generic goal to the specific, observed object. WARNING: Do not copy irrelevant attributes from Current State unless the Task specifically requires them.
4. Sources of Truth (Inputs)
· Task Description: Sole source of ultimate intent.
· Observation: Used only to ground generics or reveal implicit preconditions.
· Previous Goal State: The baseline to refine—never discard or contradict it without task-level justification.
· Current State & Action History: REFERENCE ONLY. Provide contextual world facts and recent action history that may inform phrasing, object references, or state granularity, but they must not introduce new goal requirements.
Input: Task Description: {task_description}, Current State: {current_state}, Observation: {observation}, Action History: {action_history}, Previous Goal State: {prev_goal_state}
Command: Now generate the updated GoalState based on the above rules.
)";

inline constexpr std::string_view kJudgeAnalyticalSystem =
    "You are a helpful assistant. Please output the final answer in JSON format.";

inline constexpr std::string_view kJudgeAnalyticalUser = R"(You are an expert in task progress evaluation. Please judge the agent's progress (0-100) based on the full interaction history.
[Task Description]
{task_description}
[Interaction History]
The following is the chronological log of the agent's past actions and observations:
{history_log}
[Evaluation Requirements]
1. Analysis: Review the History to evaluate the progress strictly.
2. Scoring: Provide an integer score (0-100).
Output strictly in JSON:
{"reward": 50}
)";

inline constexpr std::string_view kJudgeIntuitiveSystem =
    "You are a helpful assistant. Please output the final answer in JSON format.\n[Without Thinking]";

inline constexpr std::string_view kJudgeIntuitiveUser = R"(You are an expert in task progress evaluation. Judge the agent's progress (0-100) based on the full interaction history provided below.
[Task Description]
{task_description}
[Full Interaction History (From Start to Present)]
The following is the chronological log of all agent actions and observations up to the current moment:
{history_log}
[Evaluation Requirements]
• Determine the progress score (0-100) based on the final state in the history.
• Do NOT analyze, reason, or explain.
• Rely on your intuition to give a score immediately.
[Output Format]
Output strictly in JSON format:
{"reward": 50}
)";

// Object-attribute output schema and its description constraint, filled into
// {output_format} and {output_format_des}.
inline constexpr std::string_view kObjectAttributeFormat =
    R"([{"object": {"<obj_desc>": [{"<state_key>": "<world_state_desc>"}, {"<state_key>": "<world_state_desc>"}]}}])";

inline constexpr std::string_view kObjectAttributeDescription =
    R"(Object Definition: Refers to specific or abstract entities identified in the observations. Only entities that are explicitly present or clearly implied should be included. Description Constraint: Use key-value pairs to describe object attributes. The "value" (<world_state_desc>) must NOT assume the key is part of the sentence. It must be a complete sentence with subject and verb. The "key" (<state_name>) must be short and summative.)";

inline constexpr std::string_view kDefaultSystemInstruction = "You are a helpful assistant.";

// Stock template names, also the override file stems.
inline const std::map<std::string, std::string_view>& stock() {
  static const std::map<std::string, std::string_view> t{
      {"module_a", kModuleA},
      {"module_b", kModuleB},
      {"module_c", kModuleC},
      {"judge_analytical_system", kJudgeAnalyticalSystem},
      {"judge_analytical_user", kJudgeAnalyticalUser},
      {"judge_intuitive_system", kJudgeIntuitiveSystem},
      {"judge_intuitive_user", kJudgeIntuitiveUser},
      {"output_format", kObjectAttributeFormat},
      {"output_format_des", kObjectAttributeDescription},
      {"system_instruction", kDefaultSystemInstruction},
  };
  return t;
}

class TemplateSet {
 public:
  TemplateSet() {
    for (const auto& [k, v] : stock()) templates_[k] = std::string(v);
  }

  // Replaces any stock template that has a <name>.txt in `dir`.
  static TemplateSet with_overrides(const std::filesystem::path& dir) {
    TemplateSet t;
    if (dir.empty()) return t;
    if (!std::filesystem::is_directory(dir)) throw io::IoError("prompt directory not found: " + dir.string());
    for (const auto& [name, _] : stock()) {
      const auto file = dir / (name + ".txt");
      if (std::filesystem::exists(file)) t.templates_[name] = io::read_file(file);
    }
    return t;
  }

  const std::string& get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw std::out_of_range("unknown prompt template '" + name + "'");
    return it->second;
  }

  void set(const std::string& name, std::string body) { templates_[name] = std::move(body); }

  // Writes every template as <name>.txt.
  void export_to(const std::filesystem::path& dir) const {
    for (const auto& [name, body] : templates_) io::write_file_atomic(dir / (name + ".txt"), body);
  }

 private:
  std::map<std::string, std::string> templates_;
};

// Substitutes {name} placeholders in one pass; substituted text is never
// re-scanned. Unknown placeholders are left as written.
inline std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string name(tmpl.substr(i + 1, close - i - 1));
        auto it = vars.find(name);
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace statefactory::prompts
