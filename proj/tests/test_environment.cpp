#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hybridsim/environment.hpp"
#include "hybridsim/error.hpp"
#include "hybridsim/rng.hpp"

using namespace hybridsim;

namespace {

// Reference distance transform by exhaustive relaxation to a fixpoint.
std::vector<double> bellman_ford_field(const GridEnvironment& env, std::size_t target) {
  const int w = env.width();
  const int h = env.height();
  std::vector<double> v(static_cast<std::size_t>(w * h), kUnreachable);
  const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y * w + x); };
  const auto code = [&](int x, int y) { return env.code(Cell{x, y}); };
  const auto self = static_cast<std::int32_t>(target);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (code(x, y) == self) v[idx(x, y)] = 0.0;
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double here = v[idx(x, y)];
        if (here == kUnreachable) continue;
        const std::int32_t c = code(x, y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = x + dx;
            const int ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::int32_t n = code(nx, ny);
            if (n == GridEnvironment::kObstacleCode) continue;
            if (dx != 0 && dy != 0 &&
                (code(nx, y) == GridEnvironment::kObstacleCode || code(x, ny) == GridEnvironment::kObstacleCode)) {
              continue;
            }
            if (c >= 0 && c != self && n != c) continue;
            const double step = (dx != 0 && dy != 0) ? 0.4 * std::sqrt(2.0) : 0.4;
            if (here + step < v[idx(nx, ny)]) {
              v[idx(nx, ny)] = here + step;
              changed = true;
            }
          }
        }
      }
    }
  }
  return v;
}

GridEnvironment random_grid(Rng& rng, int w, int h) {
  std::vector<std::int32_t> cells(static_cast<std::size_t>(w * h), GridEnvironment::kWalkableCode);
  for (auto& c : cells) {
    if (rng.bernoulli(0.25)) c = GridEnvironment::kObstacleCode;
  }
  std::vector<Target> targets;
  const int count = 1 + static_cast<int>(rng.below(3));
  for (int t = 0; t < count; ++t) {
    const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(w)));
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
    auto& code = cells[static_cast<std::size_t>(y * w + x)];
    if (code >= 0) continue;
    code = static_cast<std::int32_t>(targets.size());
    Target target;
    target.label = std::string(1, static_cast<char>('A' + targets.size()));
    target.kind = TargetKind::Intermediate;
    targets.push_back(target);
  }
  if (targets.empty()) {
    cells[0] = 0;
    Target target;
    target.label = "A";
    targets.push_back(target);
  }
  return GridEnvironment::create("random", w, h, std::move(cells), std::move(targets));
}

const char* kOpen5 =
    "width=5\nheight=5\n"
    "T....\n.....\n.....\n.....\n.....\n"
    "target T kind=final\n";

}  // namespace

TEST(Environment, MinimalDocument) {
  const auto env = load_environment("width=3\nheight=3\n...\n...\n.T.\ntarget T kind=final\n");
  EXPECT_EQ(env.cell_count(), 9u);
  ASSERT_EQ(env.targets().size(), 1u);
  EXPECT_EQ(env.target(0).kind, TargetKind::Final);
  EXPECT_DOUBLE_EQ(env.cell_side(), 0.4);
  EXPECT_DOUBLE_EQ(kMaxDensity, 6.25);
  ASSERT_EQ(env.border_nodes().size(), 1u);
  EXPECT_EQ(env.border_nodes()[0].node_id, "env:T");
}

TEST(Environment, TargetOnObstacleRejected) {
  try {
    load_environment("width=3\nheight=3\n.#.\n...\n.T.\ntarget T kind=final\ntarget U kind=intermediate rect=1,0,1,0\n");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("target/obstacle overlap"), std::string::npos);
  }
}

TEST(Environment, DuplicateTargetRejected) {
  try {
    load_environment("width=3\nheight=1\nT.T\ntarget T kind=final\ntarget T kind=final\n");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate target id"), std::string::npos);
  }
}

TEST(Environment, FinalTargetMustTouchBorder) {
  EXPECT_THROW(load_environment("width=3\nheight=3\n...\n.T.\n...\ntarget T kind=final\n"), ValidationError);
}

TEST(Environment, TargetCellsMustBeFourConnected) {
  EXPECT_THROW(load_environment("width=3\nheight=3\nT..\n.T.\n...\ntarget T kind=intermediate\n"), ValidationError);
}

TEST(Environment, MalformedDocumentsRejected) {
  EXPECT_THROW(load_environment("width=3\n...\n"), ValidationError);
  EXPECT_THROW(load_environment("width=3\nheight=1\n..\ntarget T kind=final\n"), ValidationError);
  EXPECT_THROW(load_environment("width=3\nheight=1\n.x.\n"), ValidationError);
  EXPECT_THROW(load_environment("width=3\nheight=1\n.Q.\n"), ValidationError);
  EXPECT_THROW(load_environment("width=3\nheight=1\n.Q.\ntarget Q kind=magic\n"), ValidationError);
  EXPECT_THROW(load_environment("width=3\nheight=1\n.Q.\ntarget Q kind=scheduled\n"), ValidationError);
}

TEST(Environment, CenterIsGeometricMedianWithRowMajorTieBreak) {
  EXPECT_EQ(geometric_median_cell({{0, 0}, {1, 0}, {2, 0}}), (Cell{1, 0}));
  EXPECT_EQ(geometric_median_cell({{0, 0}, {1, 0}}), (Cell{0, 0}));
  EXPECT_EQ(geometric_median_cell({{3, 1}, {3, 2}}), (Cell{3, 1}));
  EXPECT_EQ(geometric_median_cell({{1, 0}, {0, 1}, {1, 1}, {2, 1}, {1, 2}}), (Cell{1, 1}));
}

TEST(FloorField, StraightAndDiagonalDistances) {
  const auto env = load_environment(kOpen5);
  const auto field = compute_floor_field(env, "T");
  EXPECT_DOUBLE_EQ(field.at({0, 0}), 0.0);
  EXPECT_NEAR(field.at({0, 4}), 1.6, 1e-12);
  EXPECT_NEAR(field.at({4, 4}), 4 * 0.4 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(field.at({4, 4}), 2.263, 1e-3);
}

TEST(FloorField, WallWithoutOpeningIsUnreachable) {
  const auto env = load_environment("width=5\nheight=3\nT.#..\n..#..\n..#..\ntarget T kind=final\n");
  const auto field = compute_floor_field(env, "T");
  EXPECT_FALSE(field.reachable({3, 1}));
  EXPECT_FALSE(field.reachable({2, 1}));
  EXPECT_TRUE(field.reachable({1, 2}));
}

TEST(FloorField, DiagonalsDoNotCutCorners) {
  const auto env = load_environment("width=3\nheight=3\nT#.\n...\n...\ntarget T kind=final\n");
  const auto field = compute_floor_field(env, "T");
  // Both diagonals next to the obstacle are blocked, so (1,1) and (2,0)
  // are reached by orthogonal detours.
  EXPECT_NEAR(field.at({1, 1}), 0.4 + 0.4, 1e-12);
  EXPECT_NEAR(field.at({2, 1}), 0.8 + 0.4, 1e-12);
  EXPECT_NEAR(field.at({2, 0}), 1.2 + 0.4, 1e-12);
}

TEST(FloorField, UnknownTargetIsLookupError) {
  const auto env = load_environment(kOpen5);
  EXPECT_THROW(compute_floor_field(env, "Z"), LookupError);
  EXPECT_THROW(compute_floor_field(env, std::size_t{7}), LookupError);
}

TEST(FloorField, OtherTargetsOnlyContinueIntoThemselves) {
  // A blocks the corridor: T's field enters A but cannot pass beyond it.
  const auto env = load_environment("width=5\nheight=1\nT.A..\ntarget T kind=final\ntarget A kind=intermediate\n");
  const auto field = compute_floor_field(env, "T");
  EXPECT_NEAR(field.at({2, 0}), 0.8, 1e-12);
  EXPECT_FALSE(field.reachable({3, 0}));
}

TEST(FloorField, MatchesBruteForceOracleOnSmallGrids) {
  Rng rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(8));
    const int h = 1 + static_cast<int>(rng.below(8));
    const auto env = random_grid(rng, w, h);
    for (std::size_t t = 0; t < env.targets().size(); ++t) {
      const auto field = compute_floor_field(env, t);
      const auto oracle = bellman_ford_field(env, t);
      ASSERT_EQ(field.values().size(), oracle.size());
      for (std::size_t i = 0; i < oracle.size(); ++i) {
        if (env.code(env.cell_at(i)) == GridEnvironment::kObstacleCode) {
          EXPECT_FALSE(field.reachable(env.cell_at(i)));
          continue;
        }
        ASSERT_EQ(field.values()[i], oracle[i]) << "trial " << trial << " cell " << i;
      }
    }
  }
}

TEST(FloorField, RecomputationAndParallelismAreBitIdentical) {
  const auto env = load_environment(
      "width=8\nheight=6\nA.......\n..###...\n..#.....\n..#..##.\n......#B\n........\n"
      "target A kind=final\ntarget B kind=final\n");
  const auto all = compute_all_floor_fields(env);
  for (std::size_t t = 0; t < env.targets().size(); ++t) {
    EXPECT_EQ(all[t], compute_floor_field(env, t));
    EXPECT_EQ(compute_floor_field(env, t), compute_floor_field(env, t));
  }
}

TEST(FloorField, OrthogonalNeighborsDifferByAtMostOneCell) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto env = random_grid(rng, 8, 8);
    const auto field = compute_floor_field(env, 0);
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        const Cell c{x, y};
        for (const Cell n : {Cell{x + 1, y}, Cell{x, y + 1}}) {
          if (!env.in_bounds(n)) continue;
          if (env.code(c) != GridEnvironment::kWalkableCode || env.code(n) != GridEnvironment::kWalkableCode) continue;
          if (!field.reachable(c) || !field.reachable(n)) continue;
          EXPECT_LE(std::abs(field.at(c) - field.at(n)), 0.4 + 1e-12);
        }
      }
    }
  }
}

TEST(Network, TwoRoomsWithOpeningTarget) {
  // Rooms left and right of a wall; the opening is itself a target.
  const auto env = load_environment(
      "width=7\nheight=3\n"
      "...#...\n"
      "L..M..R\n"
      "...#...\n"
      "target L kind=final\ntarget M kind=intermediate\ntarget R kind=final\n");
  const auto fields = compute_all_floor_fields(env);
  const auto edges = extract_network(env, fields);
  ASSERT_EQ(edges.size(), 2u);
  EXPECT_EQ(env.target(edges[0].from_target).label, "L");
  EXPECT_EQ(env.target(edges[0].to_target).label, "M");
  EXPECT_EQ(env.target(edges[1].from_target).label, "M");
  EXPECT_EQ(env.target(edges[1].to_target).label, "R");
  EXPECT_NEAR(edges[0].length, 1.2, 1e-12);
  EXPECT_NEAR(edges[1].length, 1.2, 1e-12);
}

TEST(Network, SymmetricCorridorAveragesEqualValues) {
  const auto env =
      load_environment("width=11\nheight=1\nA.........B\ntarget A kind=final\ntarget B kind=final\n");
  const auto edges = extract_network(env, compute_all_floor_fields(env));
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_NEAR(edges[0].length, 4.0, 1e-12);
}

TEST(Network, AsymmetricPassageAveragesBothFields) {
  // B spans five cells; its center is two cells beyond its nearest cell.
  const auto env =
      load_environment("width=15\nheight=1\nA.........BBBBB\ntarget A kind=final\ntarget B kind=final\n");
  const auto fields = compute_all_floor_fields(env);
  EXPECT_NEAR(fields[0].at(env.target(1).center), 4.8, 1e-12);
  EXPECT_NEAR(fields[1].at(env.target(0).center), 4.0, 1e-12);
  const auto edges = extract_network(env, fields);
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_NEAR(edges[0].length, 4.4, 1e-12);
  EXPECT_NEAR(edges[0].free_travel_time, 4.4 / 1.34, 1e-12);
  EXPECT_NEAR(edges[0].free_travel_time, 3.28, 5e-3);
}

TEST(Network, ConfiguredSpeedAndSymmetry) {
  const auto env =
      load_environment("width=12\nheight=1\nA..........B\ntarget A kind=final\ntarget B kind=final\n");
  const auto fields = compute_all_floor_fields(env);
  const auto edges = extract_network(env, fields, 2.0);
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_NEAR(edges[0].free_travel_time, edges[0].length / 2.0, 1e-12);
  EXPECT_EQ(fields[0].at(env.target(1).center), fields[1].at(env.target(0).center));
}

TEST(Network, UnreachablePairsYieldNoEdge) {
  const auto env = load_environment("width=5\nheight=1\nA.#.B\ntarget A kind=final\ntarget B kind=final\n");
  EXPECT_TRUE(extract_network(env, compute_all_floor_fields(env)).empty());
}

TEST(Environment, WriteAndReloadRoundTrip) {
  const auto env = load_environment(
      "id=X\nwidth=5\nheight=3\nA.#..\n..D.B\n.....\n"
      "target A kind=final node=street\ntarget D kind=delaying delay=exp:2.5\ntarget B kind=final\n");
  const auto again = load_environment(write_environment(env));
  EXPECT_EQ(env, again);
  EXPECT_EQ(again.target(1).delay.distribution, DelaySpec::Distribution::Exponential);
  EXPECT_EQ(again.target(0).node_id, "street");
}
