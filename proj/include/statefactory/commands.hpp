#pragma once

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "statefactory/baselines.hpp"
#include "statefactory/blocksworld.hpp"
#include "statefactory/dataset.hpp"
#include "statefactory/embedding.hpp"
#include "statefactory/extraction.hpp"
#include "statefactory/io.hpp"
#include "statefactory/llm.hpp"
#include "statefactory/metrics.hpp"
#include "statefactory/planner.hpp"
#include "statefactory/prompts.hpp"
#include "statefactory/remote_embedding.hpp"

namespace statefactory::cli {

// Process exit codes. Stable; documented in the README.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIoFailure = 3,
  kBackendConfig = 4,
  kMisaligned = 5,
};

// Bad flag values that the argument parser cannot check on its own.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct ProviderOptions {
  std::string kind = "exact";  // exact | hash | remote
  std::size_t hash_dimension = 256;
  std::uint64_t hash_seed = 0;
  RemoteEmbeddingConfig remote;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"kind", kind}};
    if (kind == "hash") {
      j["dimension"] = hash_dimension;
      j["seed"] = hash_seed;
    } else if (kind == "remote") {
      j["endpoint"] = remote.endpoint;
      j["model"] = remote.model;
      j["dimension"] = remote.dimension;
    }
    return j;
  }
};

inline std::shared_ptr<SimilarityProvider> make_provider(const ProviderOptions& o) {
  std::shared_ptr<SimilarityProvider> p;
  if (o.kind == "exact") p = std::make_shared<ExactMatchProvider>();
  else if (o.kind == "hash") p = std::make_shared<HashMockProvider>(o.hash_dimension, o.hash_seed);
  else if (o.kind == "remote") p = std::make_shared<RemoteEmbeddingProvider>(o.remote);
  else throw UsageError("unknown provider '" + o.kind + "' (expected exact, hash or remote)");
  p->set_cache(std::make_shared<EmbeddingCache>());
  return p;
}

// LLM settings echoed into outputs; the API key never is.
inline nlohmann::json llm_to_json(const LlmConfig& c) {
  nlohmann::json j = {{"endpoint", c.endpoint}, {"model", c.model}, {"temperature", c.temperature},
                      {"max_context", c.max_context}};
  if (c.reasoning_effort) j["reasoning_effort"] = to_string(*c.reasoning_effort);
  return j;
}

// gen-data --------------------------------------------------------------

struct GenDataOptions {
  std::string domain = "blocksworld";
  std::size_t n_pairs = 10;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  blocksworld::DatasetOptions dataset;
};

inline int gen_data(const GenDataOptions& o, std::ostream& os) {
  if (o.domain != "blocksworld") {
    throw UsageError("gen-data supports only --domain blocksworld; other domains are ingested from files");
  }
  const auto pairs = blocksworld::generate_dataset(o.n_pairs, o.seed, o.dataset);
  const nlohmann::json config = {{"command", "gen-data"},
                                 {"domain", o.domain},
                                 {"n_pairs", o.n_pairs},
                                 {"seed", o.seed},
                                 {"blocks", o.dataset.n_blocks},
                                 {"max_pad", o.dataset.max_pad},
                                 {"min_overlap", o.dataset.min_overlap}};
  std::filesystem::create_directories(o.out);
  save_dataset(pairs, o.out, config);
  os << "wrote " << pairs.size() << " pairs to " << o.out.string() << "\n";
  return kOk;
}

// gen-instances ---------------------------------------------------------

struct GenInstancesOptions {
  std::size_t n = 20;
  std::uint64_t seed = 0;
  std::size_t blocks = 3;
  std::filesystem::path out;
};

inline int gen_instances(const GenInstancesOptions& o, std::ostream& os) {
  blocksworld::GeneratorOptions g;
  g.n_blocks = o.blocks;
  const auto insts = blocksworld::generate_instances(o.n, o.seed, g);
  io::write_file_atomic(o.out, blocksworld::instances_to_jsonl(insts));
  os << "wrote " << insts.size() << " instances to " << o.out.string() << "\n";
  return kOk;
}

// predict ---------------------------------------------------------------

struct PredictOptions {
  std::filesystem::path data;
  std::string method = "statefactory";  // statefactory | monotonic | judge | flat | object-centric
  std::string backend = "rules";        // rules | generative
  ProviderOptions provider;
  LlmConfig llm;
  std::string judge_mode = "intuitive";
  std::filesystem::path prompts_dir;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

namespace detail {

inline nlohmann::json step_audit(const StepRecord& r) {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : r.goal_violations) v.push_back(to_json(x));
  return {{"state", to_json(r.state)}, {"goal", to_json(r.goal)},  {"report", to_json(r.report)},
          {"degraded", r.degraded},    {"error", r.error},         {"goal_violations", v}};
}

// Score of a recorded step under a lower-granularity representation.
inline double degraded_score(const std::string& method, const StepRecord& r, const SimilarityProvider& provider) {
  if (r.goal.empty()) return 0.0;
  if (method == "flat") {
    const FlatText g = flatten(r.goal);
    if (g.empty()) return 0.0;
    return predict_reward_flat(g, flatten(r.state), provider);
  }
  return predict_reward_object_centric(group_by_object(r.goal), group_by_object(r.state), provider);
}

struct PredictedTrajectory {
  std::vector<double> rewards;
  nlohmann::json audit;  // null when the method keeps no audit trail
};

}  // namespace detail

inline int predict(const PredictOptions& o, std::ostream& os) {
  static const std::vector<std::string> methods{"statefactory", "monotonic", "judge", "flat", "object-centric"};
  if (std::find(methods.begin(), methods.end(), o.method) == methods.end()) {
    throw UsageError("unknown method '" + o.method + "'");
  }
  if (o.backend != "rules" && o.backend != "generative") throw UsageError("unknown backend '" + o.backend + "'");
  const auto dataset = load_dataset(o.data);
  const auto templates = prompts::TemplateSet::with_overrides(o.prompts_dir);

  const bool extracts = o.method == "statefactory" || o.method == "flat" || o.method == "object-centric";
  std::shared_ptr<SimilarityProvider> provider;
  std::unique_ptr<ExtractorBackend> backend;
  std::shared_ptr<const ChatClient> chat;
  JudgeConfig judge;
  if (extracts) {
    provider = make_provider(o.provider);
    if (o.backend == "rules") {
      backend = std::make_unique<BlocksWorldRules>();
    } else {
      chat = std::make_shared<OpenAiChatClient>(o.llm);
      backend = std::make_unique<GenerativeExtractor>(chat, o.llm, templates);
    }
  } else if (o.method == "judge") {
    const auto mode = judge_mode_from_string(o.judge_mode);
    if (!mode) throw UsageError("unknown judge mode '" + o.judge_mode + "'");
    judge = JudgeConfig{o.llm, *mode, 2};
    chat = std::make_shared<OpenAiChatClient>(o.llm);
  }

  std::vector<const Trajectory*> trajs;
  for (const auto& p : dataset) {
    trajs.push_back(&p.positive);
    trajs.push_back(&p.negative);
  }

  // Trajectories run in parallel when the judge is the bottleneck; the
  // judge itself parallelizes over steps.
  const auto results = parallel_map(trajs.size(), o.method == "judge" ? 1 : o.jobs, [&](std::size_t i) {
    const Trajectory& t = *trajs[i];
    detail::PredictedTrajectory out;
    if (o.method == "monotonic") {
      out.rewards = monotonic_predict(t);
    } else if (o.method == "judge") {
      const JudgeRun run = judge_trajectory(t, judge, *chat, o.jobs, templates);
      out.rewards = run.rewards;
      nlohmann::json steps = nlohmann::json::array();
      for (const auto& s : run.steps) {
        nlohmann::json tr = nlohmann::json::array();
        for (const auto& r : s.transcript) tr.push_back(to_json(r));
        steps.push_back({{"score", s.score}, {"clamped", s.clamped}, {"parse_failed", s.parse_failed}, {"transcript", tr}});
      }
      out.audit = {{"id", t.id}, {"steps", steps}};
    } else {
      const TrajectoryRun run = run_trajectory(t, *backend, *provider);
      nlohmann::json steps = nlohmann::json::array();
      for (const auto& r : run.steps) {
        steps.push_back(detail::step_audit(r));
        out.rewards.push_back(o.method == "statefactory" ? r.report.reward
                                                          : detail::degraded_score(o.method, r, *provider));
      }
      nlohmann::json audit = nlohmann::json::array();
      for (const auto& r : run.audit) audit.push_back(to_json(r));
      out.audit = {{"id", t.id}, {"steps", steps}, {"llm_calls", audit}};
    }
    return out;
  });

  nlohmann::json config = {{"command", "predict"}, {"method", o.method}, {"seed", o.seed}};
  if (extracts) {
    config["backend"] = o.backend;
    config["provider"] = o.provider.to_json();
  }
  if (o.backend == "generative" || o.method == "judge") config["llm"] = llm_to_json(o.llm);
  if (o.method == "judge") config["judge_mode"] = o.judge_mode;

  nlohmann::json preds = nlohmann::json::array();
  std::string audit;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    preds.push_back({{"id", trajs[i]->id}, {"rewards", results[i].rewards}});
    if (!results[i].audit.is_null()) audit += results[i].audit.dump() + "\n";
  }
  const nlohmann::json doc = {{"config", config}, {"method", o.method}, {"predictions", preds}};
  io::write_file_atomic(o.out, doc.dump() + "\n");
  if (o.method != "monotonic") io::write_file_atomic(o.out.string() + ".audit.jsonl", audit);
  os << "wrote predictions for " << trajs.size() << " trajectories to " << o.out.string() << "\n";
  return kOk;
}

struct PredictionFile {
  std::string method;
  PredictionMap predictions;
};

inline PredictionFile load_predictions(const std::filesystem::path& path) {
  const std::string body = io::read_file(path);
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ParseError(path.string(), 1, "prediction file is not a JSON object");
  PredictionFile f;
  try {
    f.method = doc.value("method", path.stem().string());
    for (const auto& p : doc.at("predictions")) {
      const auto id = p.at("id").get<std::string>();
      if (!f.predictions.emplace(id, p.at("rewards").get<std::vector<double>>()).second) {
        throw ParseError(path.string(), 1, "duplicate prediction id '" + id + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 1, std::string("bad prediction file: ") + e.what());
  }
  return f;
}

// eval ------------------------------------------------------------------

struct EvalOptions {
  std::filesystem::path data;
  std::vector<std::filesystem::path> predictions;
  std::string mode = "per-pair";
  std::filesystem::path out;
};

inline int eval(const EvalOptions& o, std::ostream& os) {
  const auto mode = eval_mode_from_string(o.mode);
  if (!mode) throw UsageError("unknown mode '" + o.mode + "' (expected per-pair or per-traj)");
  if (o.predictions.empty()) throw UsageError("eval needs at least one --pred file");
  const auto dataset = load_dataset(o.data);
  std::vector<std::pair<std::string, EvaluationReport>> rows;
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& path : o.predictions) {
    const PredictionFile f = load_predictions(path);
    rows.emplace_back(f.method, evaluate(dataset, f.predictions, *mode));
    reports.push_back({{"method", f.method}, {"report", to_json(rows.back().second)}});
  }
  os << format_table(rows);
  if (!o.out.empty()) {
    const nlohmann::json doc = {{"config", {{"command", "eval"}, {"mode", o.mode}}}, {"reports", reports}};
    io::write_file_atomic(o.out, doc.dump(2) + "\n");
  }
  return kOk;
}

// probe -----------------------------------------------------------------

struct ProbeOptions {
  std::filesystem::path triplets;
  ProviderOptions provider;
};

inline int probe(const ProbeOptions& o, std::ostream& os) {
  const auto triplets = load_triplets(o.triplets);
  const auto provider = make_provider(o.provider);
  const double acc = triplet_accuracy(*provider, triplets);
  os << "accuracy " << acc << " (" << triplets.size() << " triplets, provider " << provider->name() << ")\n";
  return kOk;
}

// plan ------------------------------------------------------------------

struct PlanOptions {
  std::filesystem::path instances;
  std::string policy = "reward-guided";
  std::uint64_t seed = 0;
  PlannerConfig planner;
  ProviderOptions provider;
  std::size_t jobs = 1;
  std::filesystem::path out;
};

inline int plan(const PlanOptions& o, std::ostream& os) {
  const auto policy = policy_from_string(o.policy);
  if (!policy) throw UsageError("unknown policy '" + o.policy + "' (expected reward-guided or random)");
  try {
    o.planner.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto insts = blocksworld::load_instances(o.instances);
  if (insts.empty()) throw UsageError("instance file is empty: " + o.instances.string());
  const auto provider = make_provider(o.provider);
  const BlocksWorldRules rules;
  const auto episodes = run_episodes(insts, rules, *provider, o.planner, *policy, o.seed, o.jobs);

  const nlohmann::json config = {{"command", "plan"},
                                 {"policy", o.policy},
                                 {"seed", o.seed},
                                 {"max_steps", o.planner.max_steps},
                                 {"top_k", o.planner.top_k},
                                 {"lambda", o.planner.repetition_penalty},
                                 {"tie_break_seed", o.planner.tie_break_seed},
                                 {"candidate_cap", o.planner.candidate_cap},
                                 {"plateau_patience", o.planner.plateau_patience},
                                 {"provider", o.provider.to_json()}};
  std::size_t solved = 0;
  std::string log = nlohmann::json{{"config", config}}.dump() + "\n";
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    solved += episodes[i].success ? 1 : 0;
    nlohmann::json line = to_json(episodes[i]);
    line["instance"] = i;
    line["seed"] = rng::mix(o.seed, static_cast<std::uint64_t>(i));
    log += line.dump() + "\n";
  }
  if (!o.out.empty()) io::write_file_atomic(o.out, log);
  const double rate = success_rate(std::span<const Episode>(episodes));
  char buf[96];
  std::snprintf(buf, sizeof buf, "success rate %.3f (%zu/%zu, %s)\n", rate, solved, episodes.size(), o.policy.c_str());
  os << buf;
  return kOk;
}

// export-prompts --------------------------------------------------------

inline int export_prompts(const std::filesystem::path& dir, const std::filesystem::path& overrides, std::ostream& os) {
  std::filesystem::create_directories(dir);
  prompts::TemplateSet::with_overrides(overrides).export_to(dir);
  os << "wrote " << prompts::stock().size() << " templates to " << dir.string() << "\n";
  return kOk;
}

// Maps a library exception to its exit code and prints it to `err`.
inline int report_error(std::ostream& err) {
  try {
    throw;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const BackendConfigError& e) {
    err << "error: backend configuration: " << e.what() << "\n";
    return kBackendConfig;
  } catch (const MisalignmentError& e) {
    err << "error: predictions do not align with the dataset at trajectory '" << e.id() << "': " << e.what() << "\n";
    return kMisaligned;
  } catch (const io::IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const InvariantError& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace statefactory::cli
