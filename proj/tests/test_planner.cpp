#include <gtest/gtest.h>

#include "statefactory/planner.hpp"

using namespace statefactory;
namespace bw = statefactory::blocksworld;

namespace {

const ExactMatchProvider exact;
const HashMockProvider hash_mock;
const BlocksWorldRules rules;

Entity ent(std::string id, std::vector<AttributePair> attrs = {}) { return {std::move(id), std::move(attrs)}; }

bw::Instance example_instance() {
  bw::Instance inst;
  inst.blocks = {"blue", "orange", "red"};
  inst.init.on["orange"] = "red";
  inst.init.on_table = {"red", "blue"};
  inst.goal.required_on["red"] = "orange";
  return inst;
}

}  // namespace

TEST(RankCandidates, DominantGainWins) {
  const GoalState g({ent("mug", {{"location", "in microwave"}})});
  const std::vector<Candidate> c{{"wait", FactoredState({ent("mug", {{"location", "on table"}})})},
                                 {"put mug in microwave", FactoredState({ent("mug", {{"location", "in microwave"}})})}};
  const auto r = rank_candidates(g, {}, 0.0, c, {}, exact, PlannerConfig{});
  EXPECT_EQ(r[0].action, "put mug in microwave");
  EXPECT_EQ(r[0].score, 1.0);
  EXPECT_EQ(r[1].score, 0.0);
}

TEST(RankCandidates, RepeatPenaltyIsExactlyLambda) {
  const GoalState g({ent("mug", {{"location", "in microwave"}})});
  const FactoredState s({ent("mug", {{"location", "in microwave"}})});
  const std::vector<Candidate> c{{"open microwave", s}};
  const std::vector<std::string> hist{"Open  Microwave"};
  PlannerConfig cfg;
  const auto fresh = rank_candidates(g, {}, 0.25, c, {}, exact, cfg);
  const auto rep = rank_candidates(g, {}, 0.25, c, hist, exact, cfg);
  EXPECT_TRUE(rep[0].repeated);
  EXPECT_DOUBLE_EQ(fresh[0].score - rep[0].score, 0.1);
  cfg.repetition_penalty = 0.35;
  EXPECT_DOUBLE_EQ(fresh[0].score - rank_candidates(g, {}, 0.25, c, hist, exact, cfg)[0].score, 0.35);
}

TEST(RankCandidates, MatchesScoreTableUnderHashMock) {
  const GoalState g({ent("cd 1", {{"position", "The cd 1 is in safe 1."}}), ent("lamp", {{"state", "The lamp is on."}})});
  const std::vector<Candidate> c{
      {"take cd 1", FactoredState({ent("cd 1", {{"position", "The cd 1 is in hand."}})})},
      {"open safe 1", FactoredState({ent("safe 1", {{"state", "The safe 1 is open."}})})},
      {"put cd 1 in safe 1", FactoredState({ent("cd 1", {{"position", "The cd 1 is in safe 1."}})})},
      {"turn on lamp", FactoredState({ent("lamp", {{"state", "The lamp is on."}})})},
      {"look", FactoredState({ent("desk", {{"state", "The desk is tidy."}})})}};
  const std::vector<std::string> hist{"look"};
  const double current = 0.2;
  PlannerConfig cfg;
  std::map<std::string, double> want;
  for (const auto& cand : c) {
    // Per-entity best match averaged over the goal.
    double sum = 0.0;
    for (const auto& ge : g) {
      double best = 0.0;
      for (const auto& se : cand.successor) {
        const double id = hash_mock.similarity(ge.identity, se.identity);
        double psi = 0.0;
        for (const auto& ga : ge.attributes) {
          std::size_t k = 0;
          for (std::size_t j = 1; j < se.attributes.size(); ++j)
            if (hash_mock.similarity(ga.key, se.attributes[j].key) > hash_mock.similarity(ga.key, se.attributes[k].key)) k = j;
          psi += se.attributes.empty() ? 0.0 : hash_mock.similarity(ga.value, se.attributes[k].value);
        }
        psi /= static_cast<double>(ge.attributes.size());
        best = std::max(best, id * psi);
      }
      sum += best;
    }
    want[cand.action] = sum / g.size() - current - (cand.action == "look" ? 0.1 : 0.0);
  }
  // Hand-sorted table: score descending, then the seeded key, then text.
  std::vector<std::pair<double, std::string>> table;
  for (const auto& [action, score] : want) table.emplace_back(score, action);
  std::sort(table.begin(), table.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    const auto ka = tie_key(cfg.tie_break_seed, 0, text::fold(a.second)),
               kb = tie_key(cfg.tie_break_seed, 0, text::fold(b.second));
    return ka != kb ? ka < kb : a.second < b.second;
  });
  const auto r = rank_candidates(g, {}, current, c, hist, hash_mock, cfg);
  ASSERT_EQ(r.size(), 5u);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_EQ(r[i].action, table[i].second);
    EXPECT_NEAR(r[i].score, table[i].first, 1e-12) << r[i].action;
  }
  // The winner settles one goal entity.
  EXPECT_TRUE(r[0].action == "put cd 1 in safe 1" || r[0].action == "turn on lamp") << r[0].action;
}

TEST(RankCandidates, TiesBreakBySeededKey) {
  const GoalState g({ent("mug")});
  const std::vector<Candidate> c{{"a", {}}, {"b", {}}, {"c", {}}, {"d", {}}};
  PlannerConfig cfg;
  const auto r = rank_candidates(g, {}, 0.0, c, {}, exact, cfg, 4);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_LT(r[i - 1].tie_key, r[i].tie_key);
  // Candidate order does not matter.
  const std::vector<Candidate> rev(c.rbegin(), c.rend());
  const auto r2 = rank_candidates(g, {}, 0.0, rev, {}, exact, cfg, 4);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(r[i].action, r2[i].action);
  EXPECT_THROW(rank_candidates(g, {}, 0.0, std::vector<Candidate>{}, {}, exact, cfg), EmptyCandidatesError);
}

TEST(RunEpisode, AlreadyAtGoalTakesNoSteps) {
  auto inst = example_instance();
  inst.goal = {{{"orange", "red"}}, {}};
  const auto ep = run_episode(inst, rules, exact, PlannerConfig{});
  EXPECT_TRUE(ep.success);
  EXPECT_TRUE(ep.steps.empty());
  EXPECT_EQ(ep.initial_reward, 1.0);
}

TEST(RunEpisode, ExampleInstanceSolvedQuickly) {
  const auto ep = run_episode(example_instance(), rules, exact, PlannerConfig{});
  EXPECT_TRUE(ep.success);
  EXPECT_LE(ep.steps.size(), 6u);
  EXPECT_EQ(ep.steps.back().reward, 1.0);
}

TEST(RunEpisode, ZeroStepBudgetFails) {
  PlannerConfig cfg;
  cfg.max_steps = 0;
  const auto ep = run_episode(example_instance(), rules, exact, cfg);
  EXPECT_FALSE(ep.success);
  EXPECT_TRUE(ep.steps.empty());
}

TEST(RunEpisode, StepsAreLegalAndLogged) {
  for (const auto& inst : bw::generate_instances(10, 51)) {
    const auto ep = run_episode(inst, rules, hash_mock, PlannerConfig{}, Policy::RewardGuided, 3);
    auto s = inst.init;
    for (const auto& st : ep.steps) {
      s = bw::apply(s, *bw::parse_action(st.action));
      EXPECT_EQ(bw::to_text(s), st.observation);
      EXPECT_LE(st.top.size(), 16u);
      EXPECT_GE(st.reward, 0.0);
      EXPECT_LE(st.reward, 1.0);
    }
    EXPECT_EQ(ep.success, bw::goal_satisfied(s, inst.goal));
    EXPECT_LE(ep.steps.size(), 20u);
    const auto j = to_json(ep);
    EXPECT_EQ(j.at("steps").size(), ep.steps.size());
  }
}

TEST(RunEpisodes, DeterministicAndParallelSafe) {
  const auto insts = bw::generate_instances(8, 52);
  PlannerConfig cfg;
  const auto a = run_episodes(insts, rules, hash_mock, cfg, Policy::RewardGuided, 9, 1);
  const auto b = run_episodes(insts, rules, hash_mock, cfg, Policy::RewardGuided, 9, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(to_json(a[i]), to_json(b[i]));
}

TEST(SuccessRate, EdgeCases) {
  EXPECT_THROW(success_rate(std::span<const Episode>{}), EmptyInputError);
  std::vector<Episode> eps(4);
  eps[1].success = eps[3].success = true;
  EXPECT_EQ(success_rate(std::span<const Episode>(eps)), 0.5);
  PlannerConfig bad;
  bad.top_k = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(SuccessRate, RewardGuidedBeatsRandomOnPairedInstances) {
  const auto insts = bw::generate_instances(20, 53);
  PlannerConfig cfg;
  const double rg = success_rate(insts, Policy::RewardGuided, rules, exact, cfg, 1);
  const double rnd = success_rate(insts, Policy::Random, rules, exact, cfg, 1);
  EXPECT_GT(rg, rnd);
}

TEST(PolicyNames, RoundTrip) {
  EXPECT_EQ(policy_from_string("reward-guided"), Policy::RewardGuided);
  EXPECT_EQ(policy_from_string(to_string(Policy::Random)), Policy::Random);
  EXPECT_FALSE(policy_from_string("greedy"));
}
