#include <array>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "freeway_oracle.hpp"
#include "rtgym/error.hpp"
#include "rtgym/freeway.hpp"

using namespace rtgym;
using namespace rtgym::freeway;
using rtgym::testing::Gen;

namespace {

FreewayState empty_road(int y = 0) {
  FreewayState s;
  s.player_y = y;
  return s;
}

Car car(int lane, int head, int span_len, CarDirection dir, int speed) { return {lane, head, span_len, dir, speed}; }

}  // namespace

TEST(FreewaySpan, RightMovingShiftsUp) {
  const Car c = car(1, -2, 11, CarDirection::Right, 3);
  EXPECT_EQ(car_span_at(c, 0), (Span{-13, -2}));
  EXPECT_EQ(car_span_at(c, 1), (Span{-10, 1}));
  EXPECT_TRUE(span_contains_zero(car_span_at(c, 1), 96));
}

TEST(FreewaySpan, LeftMovingShiftsDown) {
  const Car c = car(1, 5, 11, CarDirection::Left, 4);
  EXPECT_EQ(car_span_at(c, 0), (Span{5, 16}));
  EXPECT_EQ(car_span_at(c, 1), (Span{1, 12}));
  EXPECT_FALSE(span_contains_zero(car_span_at(c, 1), 96));
  EXPECT_TRUE(span_contains_zero(car_span_at(c, 2), 96));
}

TEST(FreewaySpan, EndpointsAreInclusive) {
  EXPECT_TRUE(span_contains_zero({0, 11}, 96));
  EXPECT_TRUE(span_contains_zero({-11, 0}, 96));
  EXPECT_FALSE(span_contains_zero({1, 12}, 96));
  EXPECT_FALSE(span_contains_zero({-12, -1}, 96));
  // Wrapped around the ring.
  EXPECT_TRUE(span_contains_zero({90, 96}, 96));
  EXPECT_FALSE(span_contains_zero({40, 60}, 96));
}

TEST(FreewaySpan, WrapRange) {
  for (int x = -300; x <= 300; ++x) {
    const int w = wrap(x, 96);
    EXPECT_GT(w, -48);
    EXPECT_LE(w, 48);
    EXPECT_EQ(((w - x) % 96 + 96) % 96, 0);
  }
}

TEST(FreewayStep, DepartureLaneOnly) {
  // Car sits on x = 0 in lane 1 at turn 0, and nowhere near lane 2.
  FreewayState s = empty_road(0);
  s.cars = {car(1, 0, 5, CarDirection::Right, 48)};
  auto tr = step(s, Action::Up);
  EXPECT_EQ(tr.state.player_y, 1);  // lane 1 was not the departure lane
  s.player_y = 1;
  tr = step(s, Action::Up);
  EXPECT_EQ(tr.state.player_y, 0);  // hit on departure
}

TEST(FreewayStep, CrossingEmptyRoadScoresLimitMinusSteps) {
  FreewayState s = empty_road();
  double reward = 0;
  for (int k = 0; k < 9; ++k) {
    const auto tr = step(s, Action::Up);
    reward += tr.reward;
    s = tr.state;
  }
  EXPECT_TRUE(s.done);
  EXPECT_EQ(reward, 100 - 9);
  EXPECT_EQ(s.total_reward, 91);
  try {
    step(s, Action::Up);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SteppedAfterDone);
  }
}

TEST(FreewayStep, StepLimitEndsEpisode) {
  FreewayState s = empty_road();
  s.step_limit = 3;
  for (int k = 0; k < 3; ++k) s = step(s, Action::Stay).state;
  EXPECT_TRUE(s.done);
  EXPECT_EQ(s.total_reward, 0);
}

TEST(FreewayStep, DefaultRepeatsLastAction) {
  FreewayState s = empty_road();
  EXPECT_EQ(default_action(s), Action::Stay);
  s = step(s, Action::Up).state;
  EXPECT_EQ(default_action(s), Action::Up);
  EXPECT_THROW(step(s, Action::Left), Error);
}

TEST(FreewayProperty, TenThousandConfigurations) {
  const auto r = rtgym::testing::freeway_semantics_suite(10000, 20260101);
  EXPECT_EQ(r.failures, 0) << r.first_failure;
  EXPECT_GT(r.checks, 100000);
}

TEST(FreewayOracle, EmptyRoadIsNineUps) {
  const auto path = shortest_path(empty_road());
  ASSERT_TRUE(path);
  EXPECT_EQ(*path, std::vector<Action>(9, Action::Up));
}

TEST(FreewayOracle, UnreachableWithinLimit) {
  FreewayState s = empty_road();
  s.step_limit = 8;
  EXPECT_FALSE(shortest_path(s));
  try {
    min_steps_oracle(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unreachable);
  }
}

TEST(FreewayOracle, WallOfCarsIsUnreachable) {
  FreewayState s = empty_road();
  for (int k = 0; k < 8; ++k) s.cars.push_back(car(4, -48 + 12 * k, 11, CarDirection::Right, 3));
  EXPECT_FALSE(shortest_path(s));
}

// BFS against the time-indexed DP, then replayed through step().
TEST(FreewayOracle, MatchesBruteForceOnRandomRoads) {
  Gen gen(5);
  int reachable = 0;
  for (int i = 0; i < 400; ++i) {
    FreewayState s = rtgym::testing::random_freeway(gen);
    s.step_limit = gen.range(10, 40);
    const auto path = shortest_path(s);
    const auto brute = rtgym::testing::brute_min_steps(s);
    ASSERT_EQ(path.has_value(), brute.has_value()) << "road " << i;
    if (!path) continue;
    ++reachable;
    ASSERT_EQ(static_cast<int>(path->size()), *brute) << "road " << i;
    const bool starts_hit = collides(s, s.player_y);
    FreewayState cur = s;
    for (std::size_t k = 0; k < path->size(); ++k) {
      const auto tr = step(cur, (*path)[k]);
      if (!(starts_hit && k == 0)) ASSERT_FALSE(collides(cur, cur.player_y)) << "road " << i << " step " << k;
      cur = tr.state;
    }
    EXPECT_EQ(cur.player_y, kGoalLane);
    EXPECT_EQ(cur.total_reward, s.step_limit - static_cast<int>(path->size()));
  }
  EXPECT_GT(reachable, 50);
}

TEST(FreewayLayout, GeneratedLayoutsUsePalette) {
  EnvConfig cfg;
  for (int attempt = 0; attempt < 50; ++attempt) {
    const auto s = generate_layout(cfg, attempt);
    std::array<int, 9> per_lane{};
    for (const Car& c : s.cars) {
      ASSERT_GE(c.lane, 1);
      ASSERT_LE(c.lane, 8);
      ++per_lane[c.lane];
      EXPECT_TRUE(c.span_len == 11 || c.span_len == 23 || c.span_len == 47);
      EXPECT_TRUE(c.speed == 3 || c.speed == 4 || c.speed == 6 || c.speed == 12 || c.speed == 24 || c.speed == 48);
    }
    for (int lane = 1; lane <= 8; ++lane) {
      EXPECT_GE(per_lane[lane], 1);
      EXPECT_LE(per_lane[lane], 3);
    }
  }
}

TEST(FreewayLayout, ResetHonoursExactLoad) {
  EnvConfig cfg;
  cfg.difficulty = Difficulty::Hard;
  cfg.cognitive_load = 18;
  cfg.seed = 3;
  const auto s = reset(cfg);
  EXPECT_EQ(s.min_steps, 18);
  EXPECT_EQ(min_steps_oracle(s), 18);
}

TEST(FreewayJson, RoundTrip) {
  EnvConfig cfg;
  cfg.seed = 9;
  FreewayState s = reset(cfg);
  s = step(s, Action::Up).state;
  EXPECT_EQ(state_from_json(state_json(s)), s);
  const auto obs = observation_json(s);
  EXPECT_EQ(obs.at("player_states"), s.player_y);
  EXPECT_EQ(obs.at("car_states").size(), s.cars.size());
}
