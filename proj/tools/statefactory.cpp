// Command-line front end. Settings resolve as flags > environment > config
// file > defaults.

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "statefactory/commands.hpp"

namespace sf = statefactory;
namespace cli = statefactory::cli;

namespace {

struct EnvFlag {
  const char* env;
  const char* flag;
};

constexpr EnvFlag kEnvFlags[] = {
    {"LLM_ENDPOINT", "--llm-endpoint"},     {"LLM_MODEL", "--llm-model"},     {"LLM_API_KEY", "--llm-api-key"},
    {"EMBED_ENDPOINT", "--embed-endpoint"}, {"EMBED_MODEL", "--embed-model"}, {"EMBED_API_KEY", "--embed-api-key"},
};

void add_provider_flags(CLI::App* sub, cli::ProviderOptions& p) {
  sub->add_option("--provider", p.kind, "Similarity provider")
      ->check(CLI::IsMember({"exact", "hash", "remote"}))
      ->capture_default_str();
  sub->add_option("--hash-dim", p.hash_dimension, "Hash mock embedding dimension")->capture_default_str();
  sub->add_option("--hash-seed", p.hash_seed, "Hash mock token seed")->capture_default_str();
  sub->add_option("--embed-endpoint", p.remote.endpoint, "Embedding endpoint base URL (env EMBED_ENDPOINT)");
  sub->add_option("--embed-model", p.remote.model, "Embedding model name (env EMBED_MODEL)");
  sub->add_option("--embed-api-key", p.remote.api_key, "Embedding API key (env EMBED_API_KEY)");
  sub->add_option("--embed-dim", p.remote.dimension, "Expected embedding dimension")->capture_default_str();
}

void add_llm_flags(CLI::App* sub, sf::LlmConfig& c, std::string& effort) {
  sub->add_option("--llm-endpoint", c.endpoint, "Chat completions base URL (env LLM_ENDPOINT)");
  sub->add_option("--llm-model", c.model, "Chat model name (env LLM_MODEL)");
  sub->add_option("--llm-api-key", c.api_key, "Chat API key (env LLM_API_KEY)");
  sub->add_option("--temperature", c.temperature, "Sampling temperature")->capture_default_str();
  sub->add_option("--max-context", c.max_context, "Context budget in estimated tokens")->capture_default_str();
  sub->add_option("--reasoning-effort", effort, "Reasoning effort hint")->check(CLI::IsMember({"low", "medium", "high"}));
  sub->add_option("--max-in-flight", c.max_in_flight, "Concurrent requests per client")->capture_default_str();
}

// Environment values become flags placed right after the subcommand name, so
// explicit flags (parsed later, last one wins) override them and both
// override the config file.
std::vector<std::string> with_env_flags(CLI::App& app, std::vector<std::string> args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    CLI::App* sub = nullptr;
    for (auto* s : app.get_subcommands({})) {
      if (s->get_name() == args[i]) sub = s;
    }
    if (!sub) continue;
    std::vector<std::string> extra;
    for (const auto& ef : kEnvFlags) {
      const char* v = std::getenv(ef.env);
      if (v && *v && sub->get_option_no_throw(ef.flag)) {
        extra.push_back(std::string(ef.flag) + "=" + v);
      }
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(i) + 1, extra.begin(), extra.end());
    break;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-conditioned reward prediction over factored text states"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_config("--config", "", "TOML or INI file; sections are named after subcommands");
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "info, warn or error")
      ->check(CLI::IsMember({"info", "warn", "error"}))
      ->capture_default_str();

  cli::GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a paired BlocksWorld trajectory dataset");
  gen_cmd->add_option("--domain", gen.domain, "Source domain")->capture_default_str();
  gen_cmd->add_option("--n-pairs", gen.n_pairs, "Number of positive/negative pairs")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Generation seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output dataset directory")->required();
  gen_cmd->add_option("--blocks", gen.dataset.n_blocks, "Blocks per instance")->capture_default_str();
  gen_cmd->add_option("--max-pad", gen.dataset.max_pad, "Maximum random padding steps")->capture_default_str();
  gen_cmd->add_option("--min-overlap", gen.dataset.min_overlap, "Shortest rejected shared action run")
      ->capture_default_str();

  cli::GenInstancesOptions inst;
  auto* inst_cmd = app.add_subcommand("gen-instances", "Generate BlocksWorld planning instances as JSONL");
  inst_cmd->add_option("--n", inst.n, "Number of instances")->capture_default_str();
  inst_cmd->add_option("--seed", inst.seed, "Generation seed")->capture_default_str();
  inst_cmd->add_option("--blocks", inst.blocks, "Blocks per instance")->capture_default_str();
  inst_cmd->add_option("--out", inst.out, "Output JSONL file")->required();

  cli::PredictOptions pred;
  std::string pred_effort;
  auto* pred_cmd = app.add_subcommand("predict", "Predict per-step rewards for every trajectory in a dataset");
  pred_cmd->add_option("--data", pred.data, "Dataset directory")->required();
  pred_cmd->add_option("--method", pred.method, "Reward method")
      ->check(CLI::IsMember({"statefactory", "monotonic", "judge", "flat", "object-centric"}))
      ->capture_default_str();
  pred_cmd->add_option("--backend", pred.backend, "Extraction backend")
      ->check(CLI::IsMember({"rules", "generative"}))
      ->capture_default_str();
  pred_cmd->add_option("--judge-mode", pred.judge_mode, "Judge prompt variant")
      ->check(CLI::IsMember({"intuitive", "analytical"}))
      ->capture_default_str();
  pred_cmd->add_option("--prompts", pred.prompts_dir, "Directory of <template>.txt overrides");
  pred_cmd->add_option("--jobs", pred.jobs, "Parallel workers")->capture_default_str();
  pred_cmd->add_option("--seed", pred.seed, "Seed recorded with the predictions")->capture_default_str();
  pred_cmd->add_option("--out", pred.out, "Output predictions JSON")->required();
  add_provider_flags(pred_cmd, pred.provider);
  add_llm_flags(pred_cmd, pred.llm, pred_effort);

  cli::EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions with the EPIC distance and print the table");
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--pred", ev.predictions, "Predictions JSON (repeat for more table rows)")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  eval_cmd->add_option("--mode", ev.mode, "Comparison unit")
      ->check(CLI::IsMember({"per-pair", "per-traj"}))
      ->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "Output report JSON");

  cli::ProbeOptions pr;
  auto* probe_cmd = app.add_subcommand("probe", "Triplet accuracy of a similarity provider");
  probe_cmd->add_option("--triplets", pr.triplets, "Triplet JSONL file")->required();
  add_provider_flags(probe_cmd, pr.provider);

  cli::PlanOptions pl;
  auto* plan_cmd = app.add_subcommand("plan", "Run reward-guided or random episodes on BlocksWorld instances");
  plan_cmd->add_option("--instances", pl.instances, "Instance JSONL file")->required();
  plan_cmd->add_option("--policy", pl.policy, "Action policy")
      ->check(CLI::IsMember({"reward-guided", "random"}))
      ->capture_default_str();
  plan_cmd->add_option("--seed", pl.seed, "Episode seed")->capture_default_str();
  plan_cmd->add_option("--max-steps", pl.planner.max_steps, "Step budget per episode")->capture_default_str();
  plan_cmd->add_option("--top-k", pl.planner.top_k, "Candidates kept in the log")->capture_default_str();
  plan_cmd->add_option("--lambda", pl.planner.repetition_penalty, "Repetition penalty")->capture_default_str();
  plan_cmd->add_option("--tie-seed", pl.planner.tie_break_seed, "Tie-break seed")->capture_default_str();
  plan_cmd->add_option("--jobs", pl.jobs, "Parallel workers")->capture_default_str();
  plan_cmd->add_option("--out", pl.out, "Episode log JSONL");
  add_provider_flags(plan_cmd, pl.provider);

  std::string export_dir, export_overrides;
  auto* export_cmd = app.add_subcommand("export-prompts", "Write the prompt templates as editable text files");
  export_cmd->add_option("--out", export_dir, "Output directory")->required();
  export_cmd->add_option("--prompts", export_overrides, "Directory of overrides to merge first");

  std::vector<std::string> args(argv + 1, argv + argc);
  args = with_env_flags(app, std::move(args));
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kIoFailure;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  sf::log::set_threshold(log_level == "info"   ? sf::log::Level::Info
                         : log_level == "warn" ? sf::log::Level::Warn
                                               : sf::log::Level::Error);
  if (!pred_effort.empty()) pred.llm.reasoning_effort = sf::reasoning_effort_from_string(pred_effort);

  try {
    if (*gen_cmd) return cli::gen_data(gen, std::cout);
    if (*inst_cmd) return cli::gen_instances(inst, std::cout);
    if (*pred_cmd) return cli::predict(pred, std::cout);
    if (*eval_cmd) return cli::eval(ev, std::cout);
    if (*probe_cmd) return cli::probe(pr, std::cout);
    if (*plan_cmd) return cli::plan(pl, std::cout);
    if (*export_cmd) return cli::export_prompts(export_dir, export_overrides, std::cout);
  } catch (...) {
    return cli::report_error(std::cerr);
  }
  return cli::kFailure;
}
