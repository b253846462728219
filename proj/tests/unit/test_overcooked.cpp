#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "gen.hpp"
#include "rtgym/error.hpp"
#include "rtgym/overcooked.hpp"

using namespace rtgym;
using namespace rtgym::overcooked;
using rtgym::testing::Gen;

namespace {

// L = 0 kitchen:
//   #O#P#P#
//   #     #
//   #     #
//   #     #
//   #D#S###
KitchenState kitchen(int counter_len = 0, std::uint64_t seed = 1) {
  EnvConfig cfg;
  cfg.game = GameId::Overcooked;
  cfg.seed = seed;
  return build_kitchen(cfg, counter_len);
}

// Parks the partner out of the agent's way; with a dish in hand it idles.
void park_partner(KitchenState& s) {
  s.partner = {{5, 3}, Action::Right};
  s.partner_item = Item::Dish;
}

}  // namespace

TEST(OvercookedLayout, Shape) {
  const auto s = kitchen(0);
  EXPECT_EQ(s.width(), 7);
  EXPECT_EQ(s.height(), 5);
  EXPECT_EQ(s.grid[0], "#O#P#P#");
  EXPECT_EQ(s.grid[4], "#D#S###");
  const auto hard = kitchen(4);
  EXPECT_EQ(hard.height(), 9);
  EXPECT_EQ(hard.grid[4], "##### #");
  EXPECT_EQ(hard.counter_slots.size(), 5u);
}

TEST(OvercookedStep, ScoopReadySoup) {
  KitchenState s = kitchen();
  park_partner(s);
  s.agent = {{3, 1}, Action::Up};
  s.agent_item = Item::Dish;
  s.pots[0].onions = 3;
  s.pots[0].ticks = 0;
  const auto tr = step(s, Action::Interact);
  EXPECT_EQ(tr.reward, kSoupReward);
  EXPECT_EQ(tr.state.agent_item, Item::Soup);
  EXPECT_EQ(tr.state.pots[0].onions, 0);
  EXPECT_EQ(tr.state.soup_pickups, 1);
}

TEST(OvercookedStep, UnreadySoupCannotBeScooped) {
  KitchenState s = kitchen();
  park_partner(s);
  s.agent = {{3, 1}, Action::Up};
  s.agent_item = Item::Dish;
  s.pots[0].onions = 3;
  s.pots[0].ticks = 4;
  const auto tr = step(s, Action::Interact);
  EXPECT_EQ(tr.reward, 0);
  EXPECT_EQ(tr.state.agent_item, Item::Dish);
  EXPECT_EQ(tr.state.pots[0].ticks, 3);
}

TEST(OvercookedStep, ServeSoup) {
  KitchenState s = kitchen();
  park_partner(s);
  s.agent = {{3, 3}, Action::Down};
  s.agent_item = Item::Soup;
  const auto tr = step(s, Action::Interact);
  EXPECT_EQ(tr.reward, kServeReward);
  EXPECT_EQ(tr.state.agent_item, Item::None);
  EXPECT_EQ(tr.state.serves, 1);
}

TEST(OvercookedStep, EmptyHandsAtEmptyCounterDoNothing) {
  KitchenState s = kitchen(3);
  park_partner(s);
  s.agent = {{1, 3}, Action::Down};  // faces counter cell (1, 4)
  const auto tr = step(s, Action::Interact);
  EXPECT_EQ(tr.reward, 0);
  EXPECT_EQ(tr.state.agent_item, Item::None);
  EXPECT_TRUE(tr.state.counter_items.empty());
  EXPECT_EQ(tr.state.agent, s.agent);
}

TEST(OvercookedStep, CounterHoldsOneItem) {
  KitchenState s = kitchen(3);
  park_partner(s);
  s.agent = {{1, 3}, Action::Down};
  s.agent_item = Item::Onion;
  s = step(s, Action::Interact).state;
  EXPECT_EQ(counter_item(s, {1, 4}), Item::Onion);
  EXPECT_EQ(s.agent_item, Item::None);
  s = step(s, Action::Interact).state;
  EXPECT_EQ(s.agent_item, Item::Onion);
  EXPECT_TRUE(s.counter_items.empty());
}

TEST(OvercookedStep, MovingIntoCounterOnlyTurns) {
  KitchenState s = kitchen();
  park_partner(s);
  s.agent = {{1, 1}, Action::Down};
  const auto tr = step(s, Action::Left);
  EXPECT_EQ(tr.state.agent.cell, (Cell{1, 1}));
  EXPECT_EQ(tr.state.agent.facing, Action::Left);
  EXPECT_EQ(default_action(s), Action::Idle);
}

TEST(OvercookedPartner, DeliversOnionToAdjacentGoalPot) {
  KitchenState s = kitchen();
  s.agent = {{1, 3}, Action::Up};
  s.partner = {{3, 1}, Action::Up};
  s.partner_item = Item::Onion;
  s.partner_policy.kind = GoalKind::Pot;
  s.partner_policy.target = 0;
  EXPECT_EQ(partner_tick(s), Action::Interact);
  EXPECT_EQ(partner_tick(s), partner_tick(s));
  const auto tr = step(s, Action::Idle);
  EXPECT_EQ(tr.state.pots[0].onions, 1);
  EXPECT_EQ(tr.state.partner_item, Item::None);
}

TEST(OvercookedPartner, RedrawsGoalAfterSixBlockedTurns) {
  KitchenState s = kitchen();
  // Partner needs (5, 1) to reach pot (5, 0); the agent sits there.
  s.partner = {{5, 2}, Action::Up};
  s.partner_item = Item::Onion;
  s.partner_policy.kind = GoalKind::Pot;
  s.partner_policy.target = 1;
  s.partner_policy.blocked_turns = 0;
  s.agent = {{5, 1}, Action::Up};
  const int redraws = s.partner_policy.redraws;
  for (int k = 1; k <= 5; ++k) {
    s = step(s, Action::Idle).state;
    ASSERT_EQ(s.partner_policy.blocked_turns, k);
    ASSERT_EQ(s.partner_policy.redraws, redraws);
  }
  s = step(s, Action::Idle).state;
  EXPECT_EQ(s.partner_policy.redraws, redraws + 1);
  EXPECT_EQ(s.partner_policy.blocked_turns, 0);
}

TEST(OvercookedOracle, InteractsWithReadyPot) {
  KitchenState s = kitchen();
  park_partner(s);
  s.agent = {{3, 1}, Action::Up};
  s.agent_item = Item::Dish;
  s.pots[0].onions = 3;
  EXPECT_EQ(scripted_soup_oracle(s), Action::Interact);
  s.done = true;
  EXPECT_EQ(scripted_soup_oracle(s), Action::Idle);
}

TEST(OvercookedOracle, ZeroLatencyEasyServesAtLeastOnce) {
  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    EnvConfig cfg;
    cfg.game = GameId::Overcooked;
    cfg.difficulty = Difficulty::Easy;
    cfg.seed = seed;
    KitchenState s = reset(cfg);
    while (!s.done) s = step(s, scripted_soup_oracle(s)).state;
    EXPECT_GE(s.total_reward, 28) << "seed " << seed;
    EXPECT_GE(normalize_score(GameId::Overcooked, s.total_reward), 0.5);
  }
}

// Mixed random and scripted play; reward bookkeeping and pot/item rules.
TEST(OvercookedProperty, ConservationUnderRandomPlay) {
  Gen gen(8);
  const std::vector<Action> moves{Action::Up, Action::Down, Action::Left, Action::Right, Action::Interact,
                                  Action::Idle};
  for (int episode = 0; episode < 150; ++episode) {
    EnvConfig cfg;
    cfg.game = GameId::Overcooked;
    cfg.seed = gen.u64();
    cfg.difficulty = static_cast<Difficulty>(gen.range(0, 2));
    KitchenState s = reset(cfg);
    int soups_in_hand = 0;
    while (!s.done) {
      const KitchenState before = s;
      const Action a = gen.range(0, 2) == 0 ? gen.pick(moves) : scripted_soup_oracle(s);
      s = step(s, a).state;
      for (const Pot& p : s.pots) {
        ASSERT_LE(p.onions, 3);
        ASSERT_TRUE(p.ticks == 0 || p.onions == 3);
      }
      // A soup appears only out of a pot that was ready.
      if (s.soup_pickups > before.soup_pickups) {
        bool any_ready = false;
        for (const Pot& p : before.pots) any_ready = any_ready || p.ready();
        ASSERT_TRUE(any_ready);
      }
      ASSERT_NE(s.agent.cell, s.partner.cell);
      ASSERT_EQ(s.tile(s.agent.cell), kFloor);
      ASSERT_EQ(s.tile(s.partner.cell), kFloor);
      std::set<Cell> cells;
      for (const CounterItem& ci : s.counter_items) ASSERT_TRUE(cells.insert(ci.cell).second);
      soups_in_hand = (s.agent_item == Item::Soup) + (s.partner_item == Item::Soup);
      for (const CounterItem& ci : s.counter_items) soups_in_hand += ci.item == Item::Soup;
      ASSERT_EQ(s.soup_pickups - s.serves, soups_in_hand);
    }
    EXPECT_EQ(s.total_reward, kDishReward * s.dish_pickups + kSoupReward * s.soup_pickups + kServeReward * s.serves);
  }
}

TEST(OvercookedJson, RoundTrip) {
  EnvConfig cfg;
  cfg.game = GameId::Overcooked;
  cfg.difficulty = Difficulty::Hard;
  cfg.seed = 12;
  KitchenState s = reset(cfg);
  for (int k = 0; k < 30; ++k) s = step(s, scripted_soup_oracle(s)).state;
  EXPECT_EQ(state_from_json(state_json(s)), s);
}
