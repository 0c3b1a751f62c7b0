#include <gtest/gtest.h>

#include <fstream>

#include "oracles.hpp"
#include "statefactory/blocksworld.hpp"

using namespace statefactory;
namespace bw = statefactory::blocksworld;

namespace {

bw::BlocksState example_state() {
  bw::BlocksState s;
  s.on["orange"] = "red";
  s.on_table = {"red", "blue"};
  return s;
}

std::set<std::string> described(const std::vector<bw::BlockAction>& acts) {
  std::set<std::string> out;
  for (const auto& a : acts) out.insert(bw::describe_action(a));
  return out;
}

bw::BlocksState random_state(rng::Engine& eng, std::size_t n) {
  std::vector<std::string> blocks(bw::palette().begin(), bw::palette().begin() + static_cast<std::ptrdiff_t>(n));
  auto s = bw::random_state(blocks, eng);
  // Half the time, pick up a clear block so held states are covered.
  if (rng::uniform_index(eng, 2) == 0) {
    const auto acts = bw::admissible_actions(s);
    s = bw::apply(s, acts[rng::uniform_index(eng, acts.size())]);
  }
  return s;
}

}  // namespace

TEST(AdmissibleActions, ExampleState) {
  const std::set<std::string> want{"pick up the blue block", "unstack the orange block from on top of the red block"};
  EXPECT_EQ(described(bw::admissible_actions(example_state())), want);
}

TEST(AdmissibleActions, HoldingState) {
  auto s = bw::apply(example_state(), {bw::ActionKind::PickUp, "blue", ""});
  const std::set<std::string> want{"put down the blue block", "stack the blue block on top of the orange block"};
  EXPECT_EQ(described(bw::admissible_actions(s)), want);
}

TEST(AdmissibleActions, MatchesGenerateAndFilterOracle) {
  auto eng = rng::engine(41);
  for (int i = 0; i < 300; ++i) {
    const auto s = random_state(eng, 4);
    const auto acts = bw::admissible_actions(s);
    EXPECT_EQ(described(acts), oracle::legal_actions(s)) << bw::to_text(s);
    EXPECT_EQ(described(acts).size(), acts.size());
    EXPECT_TRUE(std::is_sorted(acts.begin(), acts.end(), [](const auto& a, const auto& b) {
      return bw::describe_action(a) < bw::describe_action(b);
    }));
  }
}

TEST(Apply, TransitionsAndIllegalActions) {
  auto s = bw::apply(example_state(), {bw::ActionKind::Unstack, "orange", "red"});
  EXPECT_EQ(s.holding, "orange");
  EXPECT_FALSE(s.on.contains("orange"));
  EXPECT_THROW(bw::apply(s, {bw::ActionKind::PickUp, "blue", ""}), IllegalAction);
  EXPECT_THROW(bw::apply(example_state(), {bw::ActionKind::PickUp, "red", ""}), IllegalAction);
  EXPECT_THROW(bw::apply(example_state(), {bw::ActionKind::PickUp, "green", ""}), IllegalAction);
  EXPECT_THROW(bw::apply(example_state(), {bw::ActionKind::Unstack, "orange", "blue"}), IllegalAction);
  EXPECT_EQ(*bw::violated_precondition(s, {bw::ActionKind::PickUp, "blue", ""}), "hand is not empty");
}

TEST(Apply, FuzzedSequencesKeepInvariants) {
  auto eng = rng::engine(42);
  for (int run = 0; run < 100; ++run) {
    auto s = random_state(eng, 2 + rng::uniform_index(eng, 5));
    const auto blocks = s.blocks();
    for (int i = 0; i < 30; ++i) {
      // Every syntactic action either applies cleanly or throws; legal ones
      // must preserve the invariants and the roster.
      std::vector<bw::BlockAction> all;
      for (const auto& x : blocks) {
        all.push_back({bw::ActionKind::PickUp, x, ""});
        all.push_back({bw::ActionKind::PutDown, x, ""});
        for (const auto& y : blocks) {
          all.push_back({bw::ActionKind::Stack, x, y});
          all.push_back({bw::ActionKind::Unstack, x, y});
        }
      }
      const auto legal = oracle::legal_actions(s);
      for (const auto& a : all) {
        const bool ok = legal.contains(bw::describe_action(a));
        EXPECT_EQ(!bw::violated_precondition(s, a).has_value(), ok) << bw::describe_action(a);
        if (!ok) {
          EXPECT_THROW(bw::apply(s, a), IllegalAction);
        }
      }
      const auto acts = bw::admissible_actions(s);
      s = bw::apply(s, acts[rng::uniform_index(eng, acts.size())]);
      EXPECT_NO_THROW(bw::check_invariants(s));
      EXPECT_EQ(s.blocks(), blocks);
    }
  }
}

TEST(CheckInvariants, DetectsBrokenStates) {
  bw::BlocksState s;
  s.on["a"] = "b";
  s.on["b"] = "a";
  EXPECT_THROW(bw::check_invariants(s), InvariantError);
  bw::BlocksState two;
  two.on_table = {"a", "b"};
  two.on["a"] = "b";
  EXPECT_THROW(bw::check_invariants(two), InvariantError);
  bw::BlocksState crowded;
  crowded.on_table = {"c"};
  crowded.on["a"] = "c";
  crowded.on["b"] = "c";
  EXPECT_THROW(bw::check_invariants(crowded), InvariantError);
}

TEST(ToText, ExampleStates) {
  bw::BlocksState s;
  s.on["orange"] = "red";
  s.on_table = {"red"};
  EXPECT_EQ(bw::to_text(s), "the hand is empty, the orange block is on top of the red block, the red block is on the table");
  bw::BlocksState h;
  h.holding = "blue";
  h.on_table = {"red"};
  EXPECT_EQ(bw::to_text(h), "the hand is currently holding blue block, the red block is on the table");
}

TEST(ToText, InjectiveOverSmallStateSpaces) {
  for (std::size_t n = 1; n <= 4; ++n) {
    const std::vector<std::string> blocks(bw::palette().begin(), bw::palette().begin() + static_cast<std::ptrdiff_t>(n));
    const auto states = oracle::all_states(blocks);
    std::set<std::string> texts;
    for (const auto& s : states) {
      EXPECT_NO_THROW(bw::check_invariants(s));
      texts.insert(bw::to_text(s));
    }
    EXPECT_EQ(texts.size(), states.size()) << n;
  }
}

TEST(ParseAction, SentenceAndIdForms) {
  const bw::BlockAction a{bw::ActionKind::Stack, "red", "orange"};
  EXPECT_EQ(bw::parse_action(bw::describe_action(a)), a);
  EXPECT_EQ(bw::parse_action("  Stack the RED block on top of the orange block "), a);
  EXPECT_EQ(bw::action_id(a), "STACK_RED_ORANGE");
  EXPECT_EQ(bw::parse_action("STACK_RED_ORANGE", {"red", "orange"}), a);
  EXPECT_EQ(bw::parse_action("unstack_red_orange", {"red", "orange"}),
            (bw::BlockAction{bw::ActionKind::Unstack, "red", "orange"}));
  EXPECT_FALSE(bw::parse_action("fly away"));
  EXPECT_FALSE(bw::parse_action("PICK-UP_GREEN", {"red"}));
}

TEST(ExpertPlan, ExampleInstance) {
  bw::BlocksGoal g;
  g.required_on["red"] = "orange";
  const auto plan = bw::expert_plan(example_state(), g);
  std::vector<std::string> got;
  for (const auto& a : plan) got.push_back(bw::describe_action(a));
  const std::vector<std::string> want{"unstack the orange block from on top of the red block", "put down the orange block",
                                      "pick up the red block", "stack the red block on top of the orange block"};
  EXPECT_EQ(got, want);
  EXPECT_TRUE(bw::expert_plan(example_state(), bw::BlocksGoal{{{"orange", "red"}}, {}}).empty());
}

TEST(ExpertPlan, RandomInstancesReachGoal) {
  for (std::size_t n : {2u, 3u, 4u}) {
    bw::GeneratorOptions opts;
    opts.n_blocks = n;
    for (const auto& inst : bw::generate_instances(50, 43 + n, opts)) {
      auto s = inst.init;
      const auto plan = bw::expert_plan(inst.init, inst.goal);
      EXPECT_LE(plan.size(), 4 * n);
      for (std::size_t i = 0; i < plan.size(); ++i) {
        EXPECT_FALSE(oracle::satisfied(s, inst.goal)) << "goal reached before the last action";
        s = bw::apply(s, plan[i]);
      }
      EXPECT_TRUE(oracle::satisfied(s, inst.goal));
      EXPECT_EQ(bw::goal_satisfied(s, inst.goal), oracle::satisfied(s, inst.goal));
    }
  }
}

TEST(ExpertPlan, HeldBlockIsPutDownFirst) {
  auto s = bw::apply(example_state(), {bw::ActionKind::PickUp, "blue", ""});
  bw::BlocksGoal g;
  g.required_on["blue"] = "red";
  g.required_on["red"] = "orange";
  const auto plan = bw::expert_plan(s, g);
  ASSERT_FALSE(plan.empty());
  EXPECT_EQ(plan[0].kind, bw::ActionKind::PutDown);
  for (const auto& a : plan) s = bw::apply(s, a);
  EXPECT_TRUE(oracle::satisfied(s, g));
}

TEST(GoalText, RoundTripsThroughClauses) {
  bw::BlocksGoal g;
  g.required_on["red"] = "orange";
  g.required_on_table = {"blue"};
  EXPECT_EQ(bw::goal_text(g), "the red block is on top of the orange block and the blue block is on the table");
  bw::BlocksGoal bad;
  bad.required_on["a"] = "b";
  bad.required_on["b"] = "a";
  EXPECT_THROW(bw::check_consistent(bad), InvariantError);
}

TEST(RandomRollout, LegalAndDeterministic) {
  const auto inst = bw::random_instance(44);
  const auto r1 = bw::random_rollout(inst.init, 25, 7);
  const auto r2 = bw::random_rollout(inst.init, 25, 7);
  ASSERT_EQ(r1.size(), 25u);
  auto s = inst.init;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    EXPECT_TRUE(oracle::legal_actions(s).contains(bw::describe_action(r1[i].action)));
    s = bw::apply(s, r1[i].action);
    EXPECT_EQ(s, r1[i].state);
    EXPECT_EQ(r1[i].action, r2[i].action);
  }
  EXPECT_THROW(bw::random_rollout(inst.init, 0, 1), std::invalid_argument);
}

TEST(Instances, GeneratedGoalsAreNonTrivial) {
  for (const auto& inst : bw::generate_instances(100, 45)) {
    EXPECT_NO_THROW(bw::validate(inst, "x"));
    EXPECT_FALSE(inst.goal.empty());
    EXPECT_FALSE(oracle::satisfied(inst.init, inst.goal));
    for (const auto& [x, y] : inst.goal.required_on) {
      auto it = inst.init.on.find(x);
      EXPECT_FALSE(it != inst.init.on.end() && it->second == y) << "goal clause already true at init";
    }
  }
  EXPECT_THROW(bw::random_instance(0, bw::GeneratorOptions{1, true}), std::invalid_argument);
}

TEST(Instances, JsonlRoundTripAndErrors) {
  const auto insts = bw::generate_instances(8, 46);
  const auto dir = std::filesystem::temp_directory_path() / "sf_instances";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "ok.jsonl");
    f << bw::instances_to_jsonl(insts);
  }
  EXPECT_EQ(bw::load_instances(dir / "ok.jsonl"), insts);
  {
    std::ofstream f(dir / "bad.jsonl");
    f << bw::to_json(insts[0]).dump() << "\n" << R"({"blocks": ["a"]})" << "\n";
  }
  try {
    bw::load_instances(dir / "bad.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  {
    std::ofstream f(dir / "inconsistent.jsonl");
    f << R"({"blocks": ["a", "b"], "init": {"on": {"a": "b"}, "table": ["a", "b"]}, "goal": {"on": {}}})" << "\n";
  }
  EXPECT_THROW(bw::load_instances(dir / "inconsistent.jsonl"), InvariantError);
}
