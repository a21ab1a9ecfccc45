#include <filesystem>
#include <map>
#include <string>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hybridsim/error.hpp"
#include "hybridsim/multiscale.hpp"
#include "hybridsim/scenario.hpp"

using namespace hybridsim;
namespace fx = hybridsim::testing;
using hybridsim::testing::kNetworkHeader;

namespace {

constexpr const char* kSpecHeader = "group,count,origin,destination,departure,window_start_s,window_end_s\n";

std::string room(const std::string& id) {
  return "id=" + id + "\nwidth=6\nheight=3\n######\nA....B\n######\n"
         "target A kind=final node=" + id + "_A\n"
         "target B kind=final node=" + id + "_B\n";
}

ScenarioDocuments two_rooms() {
  ScenarioDocuments docs;
  docs.environments.emplace_back("P", room("P"));
  docs.environments.emplace_back("Q", room("Q"));
  docs.network = std::string(kNetworkHeader) + "bridge,P_B,Q_A,20,40,1.34,2,\n";
  docs.demand_spec = std::string(kSpecHeader) + "walkers,10,P_A,Q_B,uniform,0,60\n";
  docs.segments = "label,group,from_nodes,to_nodes,cycle,role\ncross,walkers,P_A,Q_B,,\n";
  docs.settings["sim_end"] = "600";
  docs.settings["seed"] = "11";
  return docs;
}

std::string error_of(const ScenarioDocuments& docs) {
  try {
    assemble(docs);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Scenario, MinimalTwoEnvironmentScenario) {
  const auto s = assemble(two_rooms());
  EXPECT_EQ(s.environments.size(), 2u);
  EXPECT_EQ(s.demand.size(), 10u);
  EXPECT_EQ(s.seed, 11u);
  EXPECT_EQ(s.ca.rng_seed, 11u);
  EXPECT_TRUE(s.graph.find_edge("bridge"));
  EXPECT_TRUE(s.graph.reachable(*s.graph.node_index("P_A"), *s.graph.node_index("Q_B")));
  const auto r = simulate(s);
  EXPECT_EQ(r.arrived, 10u);
}

TEST(Scenario, UnknownNodeNamesTheId) {
  auto docs = two_rooms();
  docs.demand_spec = std::string(kSpecHeader) + "walkers,1,P_A,Nowhere,at_once,0,0\n";
  const auto msg = error_of(docs);
  EXPECT_NE(msg.find("Nowhere"), std::string::npos) << msg;
}

TEST(Scenario, UnknownSegmentNodeRejected) {
  auto docs = two_rooms();
  docs.segments = "label,group,from_nodes,to_nodes,cycle,role\ncross,walkers,P_A,Q_Z,,\n";
  EXPECT_NE(error_of(docs).find("Q_Z"), std::string::npos);
}

TEST(Scenario, DisconnectedPairRejected) {
  auto docs = two_rooms();
  docs.demand_spec = std::string(kSpecHeader) + "walkers,1,Q_B,P_A,at_once,0,0\n";
  EXPECT_NE(error_of(docs).find("not connected"), std::string::npos);
}

TEST(Scenario, DanglingScheduleRejected) {
  auto docs = two_rooms();
  docs.environments[0].second =
      "id=P\nwidth=6\nheight=3\n######\nA..G.B\n######\n"
      "target A kind=final node=P_A\ntarget G kind=scheduled schedule=ghost node=P_G\ntarget B kind=final node=P_B\n";
  EXPECT_NE(error_of(docs).find("ghost"), std::string::npos);
}

TEST(Scenario, OverlappingWindowsRejected) {
  EXPECT_THROW(load_schedules("schedule_id,open_s,close_s\nx,0,100\nx,50,150\n"), ValidationError);
  EXPECT_THROW(load_schedules("schedule_id,open_s,close_s\nx,100,100\n"), ValidationError);
  const auto ok = load_schedules("schedule_id,open_s,close_s\nx,200,300\nx,0,100\n");
  ASSERT_EQ(ok.size(), 1u);
  EXPECT_DOUBLE_EQ(ok[0].windows[0].open, 0.0);
}

TEST(Scenario, UnknownSettingRejected) {
  auto docs = two_rooms();
  docs.settings["warp"] = "9";
  EXPECT_NE(error_of(docs).find("warp"), std::string::npos);
}

TEST(Scenario, DuplicateAgentRejected) {
  auto docs = two_rooms();
  docs.demand_spec.clear();
  docs.demand = "agent_id,origin,destination,departure_s,group\na,P_A,Q_B,0,g\na,P_A,Q_B,1,g\n";
  EXPECT_NE(error_of(docs).find("duplicate agent id 'a'"), std::string::npos);
}

TEST(Scenario, DepartureOutsideHorizonRejected) {
  auto docs = two_rooms();
  docs.demand_spec.clear();
  docs.demand = "agent_id,origin,destination,departure_s,group\nlate,P_A,Q_B,600,g\n";
  EXPECT_NE(error_of(docs).find("late"), std::string::npos);
}

TEST(Demand, ZeroCountYieldsNoAgents) {
  DemandSpec spec{{{"none", 0, "a", "b", DepartureProcess::AllAtOnce, 0.0, 0.0}}};
  EXPECT_TRUE(generate_demand(spec, 1).empty());
}

TEST(Demand, NegativeCountRejected) {
  DemandSpec spec{{{"bad", -1, "a", "b", DepartureProcess::AllAtOnce, 0.0, 0.0}}};
  EXPECT_THROW(generate_demand(spec, 1), ValidationError);
  DemandSpec empty_window{{{"w", 3, "a", "b", DepartureProcess::Uniform, 10.0, 10.0}}};
  EXPECT_THROW(generate_demand(empty_window, 1), ValidationError);
}

TEST(Demand, GroupsAreTaggedAndCounted) {
  const auto& s = fx::observed_peak();
  ASSERT_EQ(s.demand.size(), 2250u);
  std::map<std::string, std::size_t> by_group;
  for (const auto& d : s.demand) ++by_group[d.group];
  EXPECT_EQ(by_group["boarding"], 1400u);
  EXPECT_EQ(by_group["disembarking"], 850u);
  EXPECT_EQ(s.demand.front().agent_id, "boarding-1");
  EXPECT_EQ(s.demand.back().agent_id, "disembarking-850");
}

TEST(Demand, UniformDeparturesAreSeededAndSorted) {
  DemandSpec spec{{{"u", 200, "a", "b", DepartureProcess::Uniform, 10.0, 70.0}}};
  const auto a = generate_demand(spec, 5);
  EXPECT_EQ(a, generate_demand(spec, 5));
  EXPECT_NE(a, generate_demand(spec, 6));
  ASSERT_EQ(a.size(), 200u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_GE(a[i].departure, 10.0);
    EXPECT_LT(a[i].departure, 70.0);
    if (i > 0) EXPECT_LE(a[i - 1].departure, a[i].departure);
  }
}

TEST(Scenario, FixturesAssemble) {
  const auto& s = fx::observed_peak();
  EXPECT_EQ(s.environments.size(), 2u);
  EXPECT_EQ(s.links.size(), 2u);
  EXPECT_EQ(s.segments.size(), 3u);
  EXPECT_EQ(s.schedules.count("WH_departure"), 1u);
  EXPECT_EQ(fx::projection_2017().demand.size(), 3600u);
  EXPECT_EQ(fx::two_route().iterations, 30);
}

TEST(Scenario, WriteAndReloadRoundTrip) {
  const auto& s = fx::observed_peak();
  const auto dir = std::filesystem::temp_directory_path() / "hybridsim_roundtrip";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto manifest = write_scenario(s, dir.string());
  const auto back = load_scenario(manifest);
  EXPECT_TRUE(same_inputs(s, back));
  EXPECT_EQ(back.graph.edges().size(), s.graph.edges().size());
  EXPECT_TRUE(same_inputs(assemble(serialize(s)), s));
  std::filesystem::remove_all(dir);
}

TEST(Scenario, DemandTotalsReachTheLog) {
  const auto s = assemble(two_rooms());
  const auto r = simulate(s);
  std::size_t departs = 0;
  for (const auto& e : r.log.records()) departs += e.kind == "depart";
  EXPECT_EQ(departs, s.demand.size());
}

TEST(Scenario, MissingManifestIsError) {
  EXPECT_THROW(load_scenario("/nonexistent/none.manifest"), std::exception);
}
