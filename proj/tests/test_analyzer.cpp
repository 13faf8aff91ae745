#include "ccaudit/analyzer.hpp"
#include "ccaudit/taxi_env.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace ccaudit;
namespace fx = ccaudit::testing;

namespace {

// Q-values whose max is a hand-picked V per cell (flag ignored).
fx::ScriptedPolicy value_table(std::vector<double> v) {
  return fx::ScriptedPolicy("table", [v](const State& s) {
    return std::vector<double>{v[static_cast<std::size_t>(s[0])] - 1.0, v[static_cast<std::size_t>(s[0])]};
  });
}

TransitionLog log_of(std::vector<State> states) {
  TransitionLog log;
  for (auto& s : states) log.add({s, 0, -1.0, s, false, 0});
  return log;
}

}  // namespace

TEST(Novelty, CountsAndFormula) {
  const State a({1, 0}), b({2, 0});
  const auto log = log_of({a, b, b, b, b});
  EXPECT_EQ(novelty(State({3, 0}), log), 1.0);
  EXPECT_EQ(novelty(a, log), 1.0);
  EXPECT_EQ(novelty(b, log), 0.5);
}

TEST(Novelty, StrictlyDecreasingInCount) {
  const State s({0, 1});
  TransitionLog log;
  double prev = novelty(s, log);
  for (int n = 1; n <= 30; ++n) {
    log.add({s, 0, 0.0, s, false, 0});
    const double v = novelty(s, log);
    if (n > 1) EXPECT_LT(v, prev);
    EXPECT_NEAR(v, 1.0 / std::sqrt(double(n)), 1e-15);
    prev = v;
  }
}

TEST(TransitionLog, DistinctStatesInFirstSeenOrder) {
  const auto log = log_of({State({2, 0}), State({1, 0}), State({2, 0}), State({0, 0})});
  ASSERT_EQ(log.distinct_states().size(), 3u);
  EXPECT_EQ(log.distinct_states()[0], State({2, 0}));
  EXPECT_EQ(log.distinct_states()[2], State({0, 0}));
  EXPECT_EQ(log.count(State({2, 0})), 2);
}

TEST(Collect, ScriptedRightWalker) {
  auto env = fx::corridor(4);
  const auto right = fx::constant_policy("right", 1, 2);
  const auto log = collect_transitions(right, env, 3, 5);
  ASSERT_EQ(log.size(), 9u);
  EXPECT_EQ(log.episodes(), 3);
  EXPECT_EQ(log.transitions()[2].reward, 10.0);
  EXPECT_TRUE(log.transitions()[2].terminal);
  EXPECT_EQ(log.count(State({1, 0})), 3);
  EXPECT_THROW(collect_transitions(right, env, 0, 1), AuditError);
}

TEST(Collect, SameSeedSameLog) {
  TaxiEnv env;
  const auto pol = fx::constant_policy("north", TaxiEnv::kNorth, 6);
  const auto a = collect_transitions(pol, env, 2, 9);
  const auto b = collect_transitions(pol, env, 2, 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.transitions()[i].state, b.transitions()[i].state);
}

TEST(Critical, HandBuiltValues) {
  // Cells 0..3, cell 3 terminal. V = (5, 6, 7). Cell 2: successors are
  // cell 1 (6) and the terminal cell (0), so it is the only local maximum.
  auto env = fx::corridor(4);
  const auto pol = value_table({5, 6, 7, 0});
  const auto log = log_of({State({0, 0}), State({1, 0}), State({2, 0}), State({3, 0})});
  const auto crit = extract_critical(pol, env, log);
  ASSERT_EQ(crit.size(), 1u);
  EXPECT_EQ(crit[0].state, State({2, 0}));
  EXPECT_EQ(crit[0].value, 7.0);
  ASSERT_EQ(crit[0].successors.size(), 2u);
  EXPECT_TRUE(crit[0].successors[1].terminal);
  EXPECT_EQ(crit[0].successors[1].value, 0.0);
}

TEST(Critical, EqualityCountsAsMaximal) {
  auto env = fx::corridor(4);
  const auto pol = value_table({6, 6, 6, 0});
  const auto log = log_of({State({0, 0}), State({1, 0})});
  EXPECT_EQ(extract_critical(pol, env, log).size(), 2u);
}

TEST(Critical, ExhaustiveRecheckOnRandomTables) {
  // Property: members satisfy V(s) >= V(s') for every successor and every
  // non-member logged state has a strictly better successor.
  auto env = fx::corridor(7);
  Rng rng(12);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  TransitionLog log;
  for (int p = 0; p < 7; ++p)
    for (int f = 0; f < 2; ++f) log.add({State({p, f}), 0, 0.0, State({p, f}), false, 0});
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(7);
    for (auto& x : v) x = std::round(u(rng));
    const auto pol = value_table(v);
    const auto crit = extract_critical(pol, env, log);
    std::set<State> members;
    for (const auto& c : crit) members.insert(c.state);
    for (const State& s : log.distinct_states()) {
      if (env.is_terminal(s)) {
        EXPECT_FALSE(members.count(s));
        continue;
      }
      const double vs = state_value(pol, s);
      bool maximal = true;
      for (const auto& succ : env.successors(s)) {
        const double vn = succ.terminal ? 0.0 : state_value(pol, succ.state);
        maximal = maximal && vs >= vn;
      }
      EXPECT_EQ(maximal, members.count(s) == 1) << to_string(s);
    }
  }
}

TEST(Alternatives, NoveltyFilterAndOrder) {
  // Log holds cells 0..2 twice each (novelty 1/sqrt 2).
  auto env = fx::corridor(4);
  const auto log = log_of({State({0, 0}), State({1, 0}), State({2, 0}), State({0, 0}), State({1, 0}), State({2, 0})});
  const State sc({2, 0});
  const auto strict = generate_alternatives(env, sc, log, 0.9, 7);
  ASSERT_EQ(strict.size(), 2u);
  EXPECT_EQ(strict[0].feature, 0u);
  EXPECT_EQ(strict[0].value, 3);
  EXPECT_EQ(strict[1].feature, 1u);
  EXPECT_EQ(strict[1].start, State({2, 1}));
  EXPECT_EQ(strict[1].critical_index, 7u);
  EXPECT_EQ(generate_alternatives(env, sc, log, 0.5).size(), 4u);
  EXPECT_TRUE(generate_alternatives(env, sc, log, 1.0).empty());
  EXPECT_THROW(generate_alternatives(env, sc, log, 1.5), AuditError);
}

TEST(Alternatives, AlphaMonotone) {
  TaxiEnv env;
  const auto pol = fx::constant_policy("west", TaxiEnv::kWest, 6);
  const auto log = collect_transitions(pol, env, 30, 4);
  const std::vector<double> alphas{0.0, 0.2, 0.4, 0.5, 0.6, 0.71, 0.8, 0.9, 0.99, 1.0};
  for (const State& sc : log.distinct_states()) {
    std::size_t prev = SIZE_MAX;
    std::set<std::pair<std::size_t, int>> prev_set;
    for (double a : alphas) {
      const auto alts = generate_alternatives(env, sc, log, a);
      std::set<std::pair<std::size_t, int>> cur;
      for (const auto& alt : alts) {
        cur.insert({alt.feature, alt.value});
        EXPECT_GT(alt.novelty, a);
        EXPECT_EQ(alt.start, env.intervene(sc, alt.feature, alt.value));
        EXPECT_NE(alt.start, sc);
      }
      EXPECT_LE(alts.size(), prev);
      if (prev != SIZE_MAX) EXPECT_TRUE(std::includes(prev_set.begin(), prev_set.end(), cur.begin(), cur.end()));
      prev = alts.size();
      prev_set = std::move(cur);
    }
    EXPECT_EQ(prev, 0u);
  }
}

TEST(Json, CriticalAndAlternativesCarryFeatureNames) {
  auto env = fx::corridor(4);
  const auto pol = value_table({5, 6, 7, 0});
  const auto log = log_of({State({2, 0})});
  const auto crit = extract_critical(pol, env, log);
  const auto j = critical_to_json(env.spec(), crit);
  EXPECT_EQ(j[0]["features"]["pos"], 2);
  const auto alts = alternatives_to_json(env.spec(), generate_alternatives(env, State({2, 0}), log, 0.9));
  EXPECT_EQ(alts[0]["feature"], "pos");
  EXPECT_EQ(alts.back()["feature"], "flag");
}
