#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "hybridsim/ca_engine.hpp"
#include "hybridsim/error.hpp"

using namespace hybridsim;

namespace {

struct World {
  GridEnvironment env;
  std::vector<FloorField> fields;
  std::map<std::string, GateSchedule> schedules;

  explicit World(const std::string& doc, std::map<std::string, GateSchedule> s = {})
      : env(load_environment(doc)), fields(compute_all_floor_fields(env)), schedules(std::move(s)) {}

  MicroWorld make(CaConfig config = {}) const { return MicroWorld(env, fields, schedules, config); }
};

MicroAgent agent(AgentIndex id, Cell cell, std::vector<std::size_t> route) {
  MicroAgent a;
  a.id = id;
  a.cell = cell;
  a.route = std::move(route);
  return a;
}

const char* kContest =
    "width=3\nheight=3\n"
    ".T.\n...\n...\n"
    "target T kind=final\n";

}  // namespace

TEST(CaConfig, Validation) {
  CaConfig c;
  EXPECT_NO_THROW(c.validate());
  c.timestep = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.conflict_friction = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.move_probability_waiting = -0.1;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_NEAR(CaConfig{}.timestep, 0.4 / 1.34, 1e-15);
}

TEST(CaEngine, LoneAgentAdvancesOneCellPerStep) {
  const World w("width=12\nheight=1\n...........T\ntarget T kind=final\n");
  auto world = w.make();
  world.place(agent(0, {0, 0}, {0}));
  Rng rng(1);
  const double dt = world.config().timestep;
  for (int k = 0; k < 10; ++k) {
    world.step(k * dt, rng);
    ASSERT_EQ(world.agents()[0].cell, (Cell{k + 1, 0}));
  }
  const auto events = world.step(10 * dt, rng);
  const auto reached = std::find_if(events.begin(), events.end(),
                                    [](const MicroEvent& e) { return e.kind == MicroEventKind::TargetReached; });
  ASSERT_NE(reached, events.end());
  EXPECT_NEAR(reached->time, 11 * dt, 1e-9);
  EXPECT_EQ(world.agents()[0].mode, MicroMode::Exiting);
}

TEST(CaEngine, ConflictWinnerIsFairAndFrictionBlocksBoth) {
  const World w(kContest);
  int left = 0;
  int right = 0;
  int none = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    auto world = w.make();
    world.place(agent(0, {0, 2}, {0}));
    world.place(agent(1, {2, 2}, {0}));
    Rng rng(static_cast<std::uint64_t>(i) + 1);
    world.step(0.0, rng);
    const auto* a = world.find(0);
    const auto* b = world.find(1);
    ASSERT_FALSE(a->cell == b->cell);
    const bool a_moved = a->cell == Cell{1, 1};
    const bool b_moved = b->cell == Cell{1, 1};
    ASSERT_FALSE(a_moved && b_moved);
    if (a_moved) {
      ++left;
    } else if (b_moved) {
      ++right;
    } else {
      ++none;
    }
  }
  const double share = static_cast<double>(left) / (left + right);
  EXPECT_NEAR(share, 0.5, 0.02);
  EXPECT_NEAR(static_cast<double>(none) / trials, CaConfig{}.conflict_friction, 0.01);
}

TEST(CaEngine, EqualMinimaChosenUniformly) {
  const World w(kContest);
  auto world = w.make();
  world.place(agent(0, {1, 2}, {0}));
  world.place(agent(1, {1, 1}, {0}));  // blocks the straight step
  const auto* a = world.find(0);
  Rng rng(3);
  int to_left = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto c = choose_move(*a, world, rng);
    ASSERT_TRUE(c.has_value());
    ASSERT_TRUE(*c == (Cell{0, 1}) || *c == (Cell{2, 1}));
    if (*c == Cell{0, 1}) ++to_left;
  }
  EXPECT_NEAR(static_cast<double>(to_left) / draws, 0.5, 0.02);
}

TEST(CaEngine, SurroundedAgentStays) {
  const World w(kContest);
  auto world = w.make();
  world.place(agent(0, {1, 2}, {0}));
  AgentIndex id = 1;
  for (const Cell c : {Cell{0, 1}, Cell{1, 1}, Cell{2, 1}, Cell{0, 2}, Cell{2, 2}}) world.place(agent(id++, c, {0}));
  Rng rng(1);
  EXPECT_FALSE(choose_move(*world.find(0), world, rng).has_value());
}

TEST(CaEngine, WaitingWithZeroMoveProbabilityStays) {
  const World w(kContest);
  CaConfig config;
  config.move_probability_waiting = 0.0;
  auto world = w.make(config);
  auto a = agent(0, {1, 2}, {0});
  a.mode = MicroMode::WaitingForGate;
  world.place(a);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) ASSERT_FALSE(choose_move(*world.find(0), world, rng).has_value());
}

TEST(CaEngine, WaitingAgentsWanderTowardLowerValues) {
  const World w("width=7\nheight=1\n...T...\ntarget T kind=intermediate\n");
  CaConfig config;
  config.move_probability_waiting = 1.0;
  config.waiting_wander_weight = 2.0;
  auto world = w.make(config);
  auto a = agent(0, {1, 0}, {0});
  a.mode = MicroMode::WaitingForGate;
  world.place(a);
  Rng rng(5);
  int toward = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const auto c = choose_move(*world.find(0), world, rng);
    ASSERT_TRUE(c.has_value());
    if (*c == Cell{2, 0}) ++toward;
  }
  // Weights exp(-2*0.4) and exp(-2*1.2) relative to the lowest neighbor.
  const double expected = 1.0 / (1.0 + std::exp(-2.0 * 0.8));
  EXPECT_NEAR(static_cast<double>(toward) / draws, expected, 0.01);
}

TEST(DelayingTarget, ConstantAndExponentialDelays) {
  Rng rng(11);
  EXPECT_DOUBLE_EQ(apply_delaying_target({DelaySpec::Distribution::Constant, 3.0}, 10.0, rng), 13.0);
  EXPECT_DOUBLE_EQ(apply_delaying_target({DelaySpec::Distribution::Constant, 0.0}, 10.0, rng), 10.0);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += apply_delaying_target({DelaySpec::Distribution::Exponential, 3.0}, 0.0, rng);
  EXPECT_NEAR(sum / n, 3.0, 0.05);
}

TEST(DelayingTarget, AgentWaitsThenContinues) {
  const World w("width=6\nheight=1\n.D...T\ntarget D kind=delaying delay=3\ntarget T kind=final\n");
  auto world = w.make();
  world.place(agent(0, {0, 0}, {0, 1}));
  Rng rng(1);
  const double dt = world.config().timestep;
  std::vector<MicroEvent> all;
  for (int k = 0; k < 40; ++k) {
    for (const auto& e : world.step(k * dt, rng)) all.push_back(e);
  }
  const auto delay = std::find_if(all.begin(), all.end(), [](const auto& e) { return e.kind == MicroEventKind::DelayStart; });
  ASSERT_NE(delay, all.end());
  EXPECT_NEAR(delay->value, dt + 3.0, 1e-9);
  std::vector<double> moves_after;
  for (const auto& e : all) {
    if (e.kind == MicroEventKind::Move && e.from == Cell{1, 0}) moves_after.push_back(e.time);
  }
  ASSERT_EQ(moves_after.size(), 1u);
  EXPECT_GE(moves_after[0] - dt, delay->value - 1e-9);
  EXPECT_LT(moves_after[0] - dt, delay->value + dt);
}

TEST(DelayingTarget, ZeroDelayPassesWithoutWaiting) {
  const World w("width=6\nheight=1\n.D...T\ntarget D kind=delaying delay=0\ntarget T kind=final\n");
  auto world = w.make();
  world.place(agent(0, {0, 0}, {0, 1}));
  Rng rng(1);
  const double dt = world.config().timestep;
  for (int k = 0; k < 5; ++k) {
    for (const auto& e : world.step(k * dt, rng)) ASSERT_NE(e.kind, MicroEventKind::DelayStart);
  }
  EXPECT_EQ(world.agents()[0].cell, (Cell{5, 0}));
}

TEST(ScheduledTarget, Decisions) {
  const GateSchedule s{"g", {{90.0, 200.0}, {300.0, 400.0}}};
  EXPECT_EQ(apply_scheduled_target(s, 100.0).decision, GateDecision::Pass);
  const auto wait = apply_scheduled_target(s, 50.0);
  EXPECT_EQ(wait.decision, GateDecision::Wait);
  EXPECT_DOUBLE_EQ(wait.reopens_at, 90.0);
  EXPECT_DOUBLE_EQ(apply_scheduled_target(s, 250.0).reopens_at, 300.0);
  EXPECT_EQ(apply_scheduled_target(s, 450.0).decision, GateDecision::Stranded);
  EXPECT_TRUE(s.is_open(90.0));
  EXPECT_FALSE(s.is_open(200.0));
}

TEST(ScheduledTarget, ScheduleValidation) {
  EXPECT_THROW((GateSchedule{"g", {{10.0, 5.0}}}.validate()), ValidationError);
  EXPECT_THROW((GateSchedule{"g", {{0.0, 10.0}, {5.0, 20.0}}}.validate()), ValidationError);
  EXPECT_NO_THROW((GateSchedule{"g", {{0.0, 10.0}, {10.0, 20.0}}}.validate()));
}

TEST(ScheduledTarget, AgentWaitsAndPassesAtOpening) {
  const World w("width=8\nheight=1\n.....G.T\ntarget G kind=scheduled schedule=dep\ntarget T kind=final\n",
                {{"dep", GateSchedule{"dep", {{90.0, 200.0}}}}});
  CaConfig config;
  config.move_probability_waiting = 0.0;
  auto world = w.make(config);
  world.place(agent(0, {0, 0}, {0, 1}));
  Rng rng(1);
  const double dt = config.timestep;
  std::vector<MicroEvent> all;
  for (int k = 0; k * dt < 100.0; ++k) {
    for (const auto& e : world.step(k * dt, rng)) all.push_back(e);
  }
  const auto find = [&all](MicroEventKind kind) {
    return std::find_if(all.begin(), all.end(), [kind](const auto& e) { return e.kind == kind; });
  };
  const auto wait = find(MicroEventKind::WaitStart);
  ASSERT_NE(wait, all.end());
  EXPECT_LT(wait->time, 90.0);
  EXPECT_DOUBLE_EQ(wait->value, 90.0);
  const auto pass = find(MicroEventKind::GatePass);
  ASSERT_NE(pass, all.end());
  const double first_open_step = std::ceil(90.0 / dt - 1e-9) * dt;
  EXPECT_NEAR(pass->time, first_open_step + dt, 1e-9);
  const auto reached = find(MicroEventKind::TargetReached);
  ASSERT_NE(reached, all.end());
  EXPECT_GT(reached->value, 80.0);  // gate wait carried on the leg
}

TEST(ScheduledTarget, ExhaustedScheduleStrandsAgent) {
  const World w("width=6\nheight=1\n...G.T\ntarget G kind=scheduled schedule=dep\ntarget T kind=final\n",
                {{"dep", GateSchedule{"dep", {{0.0, 0.5}}}}});
  auto world = w.make();
  world.place(agent(0, {0, 0}, {0, 1}));
  Rng rng(1);
  const double dt = world.config().timestep;
  bool stranded = false;
  for (int k = 0; k < 20 && !stranded; ++k) {
    for (const auto& e : world.step(k * dt, rng)) stranded |= e.kind == MicroEventKind::Stranded;
  }
  EXPECT_TRUE(stranded);
  EXPECT_EQ(world.agent_count(), 0u);
}

TEST(CaEngine, IntermediateTargetAdvancesRoute) {
  const World w("width=7\nheight=1\n..I...T\ntarget I kind=intermediate\ntarget T kind=final\n");
  auto world = w.make();
  world.place(agent(0, {0, 0}, {0, 1}));
  Rng rng(1);
  const double dt = world.config().timestep;
  world.step(0.0, rng);
  EXPECT_EQ(world.agents()[0].leg, 0u);
  world.step(dt, rng);
  EXPECT_EQ(world.agents()[0].cell, (Cell{2, 0}));
  EXPECT_EQ(world.agents()[0].leg, 1u);
  EXPECT_EQ(world.agents()[0].current_target(), 1u);
}

TEST(CaEngine, UnplannedTargetsAreNotEntered) {
  // X lies on the only straight line; the agent must not step onto it.
  const World w("width=5\nheight=2\n..X.T\n.....\ntarget X kind=intermediate\ntarget T kind=final\n");
  auto world = w.make();
  world.place(agent(0, {0, 0}, {1}));
  Rng rng(1);
  const double dt = world.config().timestep;
  for (int k = 0; k < 10; ++k) {
    world.step(k * dt, rng);
    if (world.agents()[0].mode == MicroMode::Exiting) break;
    ASSERT_NE(world.agents()[0].cell, (Cell{2, 0}));
  }
  EXPECT_EQ(world.agents()[0].mode, MicroMode::Exiting);
}

TEST(CaEngine, ExclusionConservationAndDeterminism) {
  const World w(
      "width=12\nheight=8\n"
      "............\n"
      "............\n"
      "......#.....\n"
      "......#.....\n"
      "............\n"
      "......#.....\n"
      "......#.....\n"
      "...........T\n"
      "target T kind=final\n");
  const auto run = [&w](std::uint64_t seed) {
    auto world = w.make();
    Rng placement(seed);
    std::vector<Cell> cells;
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 6; ++x) cells.push_back({x, y});
    }
    placement.shuffle(std::span<Cell>(cells));
    for (AgentIndex i = 0; i < 30; ++i) world.place(agent(i, cells[i], {0}));
    Rng rng(seed + 1);
    std::vector<std::tuple<double, int, AgentIndex, int, int>> trace;
    const double dt = world.config().timestep;
    for (int k = 0; k < 200; ++k) {
      for (const auto& e : world.step(k * dt, rng)) {
        trace.emplace_back(e.time, static_cast<int>(e.kind), e.agent, e.to.x, e.to.y);
      }
      std::set<Cell> occupied;
      for (const auto& a : world.agents()) EXPECT_TRUE(occupied.insert(a.cell).second);
      EXPECT_EQ(world.agent_count(), 30u);
      for (const auto& a : world.agents()) EXPECT_EQ(world.occupant(a.cell), a.id);
    }
    return trace;
  };
  const auto a = run(9);
  EXPECT_EQ(a, run(9));
  EXPECT_NE(a, run(10));
}

TEST(MicroWorld, PlacementRules) {
  const World w(kContest);
  auto world = w.make();
  world.place(agent(0, {0, 0}, {0}));
  EXPECT_THROW(world.place(agent(1, {0, 0}, {0})), ValidationError);
  const auto best = world.best_free_cell(0, 0);
  ASSERT_TRUE(best.has_value());
  EXPECT_EQ(*best, (Cell{1, 0}));
  world.place(agent(1, {1, 0}, {0}));
  EXPECT_FALSE(world.best_free_cell(0, 0).has_value());
  world.remove(0);
  EXPECT_FALSE(world.occupied({0, 0}));
  EXPECT_EQ(world.find(1)->cell, (Cell{1, 0}));
}
