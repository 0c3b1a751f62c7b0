#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "statefactory/commands.hpp"

using namespace statefactory;
namespace bw = statefactory::blocksworld;
namespace fs = std::filesystem;

namespace {

const std::string kCli = STATEFACTORY_CLI_PATH;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sf_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) { return io::read_file(p); }

struct Run {
  int code;
  std::string out;
};

// Runs the binary through the shell with `env` prepended; captures stdout.
Run run(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const auto out = fs::temp_directory_path() / ("sf_cli_out_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".txt");
  const std::string cmd = "env -u LLM_ENDPOINT -u LLM_MODEL -u LLM_API_KEY -u EMBED_ENDPOINT -u EMBED_MODEL -u EMBED_API_KEY " +
                          env + " '" + kCli + "' " + args + " > '" + out.string() + "' 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Run r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, fs::exists(out) ? slurp(out) : ""};
  fs::remove(out);
  return r;
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::trunc);
  f << s;
}

}  // namespace

TEST(GenData, ByteIdenticalAcrossRuns) {
  const auto d = scratch("gen");
  ASSERT_EQ(run("gen-data --domain blocksworld --n-pairs 12 --seed 7 --out " + (d / "a").string()).code, 0);
  ASSERT_EQ(run("gen-data --domain blocksworld --n-pairs 12 --seed 7 --out " + (d / "b").string()).code, 0);
  for (auto f : {kTrajectoriesFile, kPairsFile, kDatasetConfigFile})
    EXPECT_EQ(slurp(d / "a" / f), slurp(d / "b" / f)) << f;
  EXPECT_EQ(load_dataset(d / "a").size(), 12u);
  EXPECT_EQ(load_dataset(d / "a"), bw::generate_dataset(12, 7));
}

TEST(GenData, ZeroPairsGivesEmptyFiles) {
  const auto d = scratch("gen0");
  std::ostringstream os;
  cli::GenDataOptions o;
  o.n_pairs = 0;
  o.out = d;
  EXPECT_EQ(cli::gen_data(o, os), 0);
  EXPECT_EQ(slurp(d / kTrajectoriesFile), "");
  EXPECT_EQ(slurp(d / kPairsFile), "");
  EXPECT_TRUE(load_dataset(d).empty());
}

TEST(GenData, OtherDomainsAreUsageErrors) {
  const auto d = scratch("gendomain");
  EXPECT_EQ(run("gen-data --domain alfworld --out " + d.string()).code, cli::kUsage);
  EXPECT_EQ(run("gen-data --n-pairs 3").code, cli::kUsage);  // --out missing
}

TEST(Predict, StatefactoryMatchesLibraryAndIsDeterministic) {
  const auto d = scratch("predict");
  const auto ds = bw::generate_dataset(6, 11);
  save_dataset(ds, d / "data");
  const std::string base = "predict --data " + (d / "data").string() + " --method statefactory --provider hash ";
  ASSERT_EQ(run(base + "--jobs 1 --out " + (d / "p1.json").string()).code, 0);
  ASSERT_EQ(run(base + "--jobs 4 --out " + (d / "p4.json").string()).code, 0);
  EXPECT_EQ(slurp(d / "p1.json"), slurp(d / "p4.json"));
  EXPECT_EQ(slurp(d / "p1.json.audit.jsonl"), slurp(d / "p4.json.audit.jsonl"));

  const auto f = cli::load_predictions(d / "p1.json");
  EXPECT_EQ(f.method, "statefactory");
  const BlocksWorldRules rules;
  const HashMockProvider hash;
  for (const auto& p : ds) {
    EXPECT_EQ(f.predictions.at(p.positive.id), run_trajectory(p.positive, rules, hash).rewards);
    EXPECT_EQ(f.predictions.at(p.negative.id), run_trajectory(p.negative, rules, hash).rewards);
  }
  std::ifstream audit(d / "p1.json.audit.jsonl");
  std::size_t lines = 0;
  for (std::string l; std::getline(audit, l); ++lines) EXPECT_TRUE(nlohmann::json::parse(l).contains("steps"));
  EXPECT_EQ(lines, 12u);
}

TEST(Predict, DegradedRepresentationsProduceAlignedSeries) {
  const auto d = scratch("degraded");
  const auto ds = bw::generate_dataset(3, 12);
  save_dataset(ds, d);
  for (const std::string m : {"flat", "object-centric", "monotonic"}) {
    std::ostringstream os;
    cli::PredictOptions o;
    o.data = d;
    o.method = m;
    o.out = d / (m + ".json");
    ASSERT_EQ(cli::predict(o, os), 0);
    const auto f = cli::load_predictions(o.out);
    EXPECT_NO_THROW(evaluate(ds, f.predictions));
  }
  EXPECT_FALSE(fs::exists(d / "monotonic.json.audit.jsonl"));
}

TEST(Predict, ExitCodes) {
  const auto d = scratch("codes");
  save_dataset(bw::generate_dataset(2, 13), d / "data");
  const std::string data = " --data " + (d / "data").string() + " --out " + (d / "p.json").string();
  EXPECT_EQ(run("predict --method judge" + data).code, cli::kBackendConfig);
  EXPECT_EQ(run("predict --method statefactory --backend generative" + data).code, cli::kBackendConfig);
  EXPECT_EQ(run("predict --method magic" + data).code, cli::kUsage);
  EXPECT_EQ(run("predict --method monotonic --data " + (d / "nope").string() + " --out " + (d / "p.json").string()).code,
            cli::kIoFailure);
  EXPECT_EQ(run("predict --method statefactory --provider remote" + data).code, cli::kBackendConfig);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("").code, cli::kUsage);
}

TEST(Eval, ReportMatchesDirectComputation) {
  const auto d = scratch("eval");
  const auto ds = bw::generate_dataset(20, 14);
  save_dataset(ds, d / "data");
  for (const std::string m : {"monotonic", "statefactory"}) {
    ASSERT_EQ(run("predict --data " + (d / "data").string() + " --method " + m + " --out " + (d / (m + ".json")).string())
                  .code,
              0);
  }
  const auto r = run("eval --data " + (d / "data").string() + " --pred " + (d / "monotonic.json").string() + " --pred " +
                     (d / "statefactory.json").string() + " --out " + (d / "report.json").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("monotonic"), std::string::npos);
  EXPECT_NE(r.out.find("statefactory"), std::string::npos);
  EXPECT_NE(r.out.find("BlocksWorld"), std::string::npos);

  const auto doc = nlohmann::json::parse(slurp(d / "report.json"));
  ASSERT_EQ(doc.at("reports").size(), 2u);
  const auto mono = evaluate(ds, cli::load_predictions(d / "monotonic.json").predictions);
  EXPECT_EQ(doc.at("reports").at(0).at("report"), nlohmann::json::parse(to_json(mono).dump()));
  EXPECT_EQ(doc.at("reports").at(0).at("method"), "monotonic");
}

TEST(Eval, MisalignedPredictionsExitFive) {
  const auto d = scratch("misaligned");
  const auto ds = bw::generate_dataset(2, 15);
  save_dataset(ds, d / "data");
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : ds) {
    preds.push_back({{"id", p.positive.id}, {"rewards", p.positive.rewards()}});
    preds.push_back({{"id", p.negative.id}, {"rewards", std::vector<double>{0.0}}});
  }
  write(d / "bad.json", nlohmann::json{{"method", "bad"}, {"predictions", preds}}.dump());
  EXPECT_EQ(run("eval --data " + (d / "data").string() + " --pred " + (d / "bad.json").string()).code, cli::kMisaligned);
  write(d / "garbage.json", "not json");
  EXPECT_EQ(run("eval --data " + (d / "data").string() + " --pred " + (d / "garbage.json").string()).code,
            cli::kIoFailure);
  EXPECT_EQ(run("eval --data " + (d / "data").string() + " --pred " + (d / "bad.json").string() + " --mode sideways").code,
            cli::kUsage);
}

TEST(Probe, ReportsAccuracy) {
  const auto d = scratch("probe");
  write(d / "t.jsonl", R"({"anchor":"a","positive":"a","negative":"b"})"
                       "\n"
                       R"({"anchor":"c","positive":"d","negative":"c"})"
                       "\n");
  const auto r = run("probe --triplets " + (d / "t.jsonl").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("accuracy 0.5 (2 triplets"), std::string::npos) << r.out;
  EXPECT_EQ(run("probe --triplets " + (d / "missing.jsonl").string()).code, cli::kIoFailure);
}

TEST(Plan, LogReplaysAndIsDeterministic) {
  const auto d = scratch("plan");
  ASSERT_EQ(run("gen-instances --n 6 --seed 3 --out " + (d / "inst.jsonl").string()).code, 0);
  const std::string base = "plan --instances " + (d / "inst.jsonl").string() + " --seed 2 ";
  const auto a = run(base + "--out " + (d / "a.jsonl").string());
  const auto b = run(base + "--jobs 3 --out " + (d / "b.jsonl").string());
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(slurp(d / "a.jsonl"), slurp(d / "b.jsonl"));
  EXPECT_NE(a.out.find("success rate"), std::string::npos);

  const auto insts = bw::load_instances(d / "inst.jsonl");
  std::ifstream log(d / "a.jsonl");
  std::string line;
  std::getline(log, line);
  EXPECT_EQ(nlohmann::json::parse(line).at("config").at("policy"), "reward-guided");
  std::size_t solved = 0, n = 0;
  while (std::getline(log, line)) {
    const auto ep = nlohmann::json::parse(line);
    const auto& inst = insts.at(ep.at("instance").get<std::size_t>());
    auto s = inst.init;
    for (const auto& st : ep.at("steps")) s = bw::apply(s, *bw::parse_action(st.at("action").get<std::string>()));
    EXPECT_EQ(ep.at("success").get<bool>(), bw::goal_satisfied(s, inst.goal));
    solved += ep.at("success").get<bool>() ? 1 : 0;
    ++n;
  }
  EXPECT_EQ(n, 6u);
  char want[64];
  std::snprintf(want, sizeof want, "(%zu/6, reward-guided)", solved);
  EXPECT_NE(a.out.find(want), std::string::npos) << a.out;

  EXPECT_NE(run(base + "--max-steps 0").out.find("success rate 0.000"), std::string::npos);
  EXPECT_EQ(run(base + "--policy greedy").code, cli::kUsage);
}

TEST(ExportPrompts, WritesEveryTemplate) {
  const auto d = scratch("prompts");
  ASSERT_EQ(run("export-prompts --out " + d.string()).code, 0);
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(d)) n += e.path().extension() == ".txt" ? 1 : 0;
  EXPECT_EQ(n, prompts::stock().size());
  EXPECT_EQ(slurp(d / "module_a.txt"), std::string(prompts::kModuleA));
}

TEST(Config, FlagsBeatEnvBeatFile) {
  // A local embedding server lets the probe print the model it was given.
  httplib::Server srv;
  srv.Post("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
    const std::string in = nlohmann::json::parse(req.body).at("input").at(0);
    const std::vector<double> v{in == "a" ? 1.0 : 0.0, in == "a" ? 0.0 : 1.0};
    res.set_content(nlohmann::json{{"data", {{{"embedding", v}}}}}.dump(), "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  std::thread th([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  const auto d = scratch("config");
  write(d / "t.jsonl", R"({"anchor":"a","positive":"a","negative":"b"})" "\n");
  write(d / "cfg.toml", "[probe]\nembed-model = \"from-file\"\nembed-dim = 2\n");
  const std::string base = "--config " + (d / "cfg.toml").string() + " probe --provider remote --embed-endpoint http://127.0.0.1:" +
                           std::to_string(port) + "/v1 --triplets " + (d / "t.jsonl").string();
  EXPECT_NE(run(base).out.find("remote/from-file"), std::string::npos);
  EXPECT_NE(run(base, "EMBED_MODEL=from-env").out.find("remote/from-env"), std::string::npos);
  EXPECT_NE(run(base + " --embed-model from-flag", "EMBED_MODEL=from-env").out.find("remote/from-flag"), std::string::npos);
  EXPECT_EQ(run("--config " + (d / "missing.toml").string() + " probe --triplets x").code, cli::kIoFailure);

  srv.stop();
  th.join();
}

TEST(ReportError, MapsExceptionsToCodes) {
  auto code = [](auto ex) {
    std::ostringstream err;
    try {
      throw ex;
    } catch (...) {
      return cli::report_error(err);
    }
  };
  EXPECT_EQ(code(cli::UsageError("x")), cli::kUsage);
  EXPECT_EQ(code(BackendConfigError("x")), cli::kBackendConfig);
  EXPECT_EQ(code(MisalignmentError("t", "x")), cli::kMisaligned);
  EXPECT_EQ(code(io::IoError("x")), cli::kIoFailure);
  EXPECT_EQ(code(ParseError("f", 3, "x")), cli::kIoFailure);
  EXPECT_EQ(code(InvariantError("t", "x")), cli::kIoFailure);
  EXPECT_EQ(code(std::runtime_error("x")), cli::kFailure);
}
