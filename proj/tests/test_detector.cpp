#include "ccaudit/detector.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace ccaudit;
namespace fx = ccaudit::testing;

namespace {

// Independent corridor dynamics for the reference rollout.
std::pair<double, bool> corridor_step(int& pos, int flag, int a, int last) {
  if (a == 1 && pos == 0 && flag == 1) return {-10.0, true};
  pos = a == 1 ? std::min(pos + 1, last) : std::max(pos - 1, 0);
  if (pos == last) return {10.0, true};
  return {-1.0, false};
}

// k-step greedy return from an intervened start with the intervened feature
// held fixed, written without the Environment machinery.
double reference_return(const std::function<int(int, int)>& act, State start, std::size_t feature, int value,
                        int k, int last) {
  int pos = start[0], flag = start[1];
  double ret = 0.0;
  for (int t = 0; t < k; ++t) {
    if (pos == last) break;
    const auto [r, done] = corridor_step(pos, flag, act(pos, flag), last);
    ret += r;
    if (done) break;
    if (feature == 0) pos = value;
    else flag = value;
  }
  return ret;
}

fx::ScriptedPolicy table_policy(std::string id, std::function<int(int, int)> act) {
  return fx::ScriptedPolicy(std::move(id), [act](const State& s) {
    std::vector<double> q{0.0, 0.0};
    q[static_cast<std::size_t>(act(s[0], s[1]))] = 1.0;
    return q;
  });
}

}  // namespace

TEST(Rollout, ClampsAndStopsAtTerminal) {
  auto env = fx::corridor(5);
  const auto right = fx::constant_policy("right", 1, 2);
  AlternativeEnvironment alt{0, State({1, 0}), 1, 1, State({1, 1}), 1.0};
  const auto r = rollout_return(env, alt, right, 10);
  EXPECT_EQ(r.ret, 8.0);
  EXPECT_EQ(r.steps, 3);
  EXPECT_TRUE(r.terminated_early);
  EXPECT_THROW(rollout_return(env, alt, right, 0), AuditError);
}

TEST(Rollout, AllStepCostsGiveMinusK) {
  auto env = fx::corridor(9);
  const auto left = fx::constant_policy("left", 0, 2);
  AlternativeEnvironment alt{0, State({3, 0}), 0, 4, State({4, 0}), 1.0};
  EXPECT_EQ(rollout_return(env, alt, left, 3).ret, -3.0);
}

TEST(Rollout, PersistentInterventionHoldsValue) {
  // pos clamped at 2: walking right never reaches the goal.
  auto env = fx::corridor(5);
  const auto right = fx::constant_policy("right", 1, 2);
  AlternativeEnvironment alt{0, State({1, 0}), 0, 2, State({2, 0}), 1.0};
  EXPECT_EQ(rollout_return(env, alt, right, 3).ret, -3.0);
}

TEST(Rollout, TerminalStartReturnsZero) {
  auto env = fx::corridor(4);
  const auto right = fx::constant_policy("right", 1, 2);
  AlternativeEnvironment alt{0, State({2, 0}), 0, 3, State({3, 0}), 1.0};
  const auto r = rollout_return(env, alt, right, 3);
  EXPECT_EQ(r.ret, 0.0);
  EXPECT_EQ(r.steps, 0);
}

TEST(Detect, TrapFindingWithHandReturns) {
  // Audited walks right regardless of the flag; the flag-aware subset
  // steps left at the trap. From (0, flag=1): audited -10, aware -3.
  auto env = fx::corridor(6);
  const auto audited = fx::constant_policy("pi", 1, 2);
  const auto aware = table_policy("aware", [](int p, int f) { return p == 0 && f == 1 ? 0 : 1; });
  const auto blind = fx::constant_policy("blind", 1, 2);
  const SubsetCatalog cat{{{1, 1}, {1, 0}}};
  AlternativeEnvironment alt{0, State({0, 0}), 1, 1, State({0, 1}), 1.0};
  const auto f = detect(env, alt, audited, {&aware, &blind}, cat, 3, 5.0);
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(f->audited_return, -10.0);
  EXPECT_EQ(f->subset_returns, (std::vector<double>{-3.0, -10.0}));
  EXPECT_EQ(f->best_subset, 0u);
  EXPECT_EQ(f->margin, 7.0);
  EXPECT_FALSE(detect(env, alt, audited, {&aware, &blind}, cat, 3, 7.5).has_value());
  EXPECT_THROW(detect(env, alt, audited, {&aware, &blind}, cat, 3, 0.0), AuditError);
}

TEST(Detect, TieBrokenByLongerHorizon) {
  // From cell 1 with the trap flag held: the pacer bounces between cells 1
  // and 2, the walker heads for cell 8. Both score -3 over k=3 and -6 over
  // 6 steps; over 12 steps the walker arrives (-6 + 10) and wins.
  auto env = fx::corridor(9);
  const auto audited = table_policy("pi", [](int p, int) { return p == 1 ? 0 : 1; });
  const auto pacer = table_policy("pacer", [](int p, int) { return p % 2 == 1 ? 1 : 0; });
  const auto walker = table_policy("walker", [](int p, int f) { return p == 0 && f == 1 ? 0 : 1; });
  const SubsetCatalog cat{{{1, 0}, {1, 1}}};
  AlternativeEnvironment alt{0, State({1, 0}), 1, 1, State({1, 1}), 1.0};
  const auto f = detect(env, alt, audited, {&pacer, &walker}, cat, 3, 5.0);
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(f->audited_return, -11.0);
  EXPECT_EQ(f->subset_returns, (std::vector<double>{-3.0, -3.0}));
  EXPECT_EQ(f->best_subset, 1u);
  EXPECT_EQ(f->tie_horizon, 12);
}

TEST(Detect, PersistentTieFallsToFewestFeatures) {
  auto env = fx::corridor(6);
  const auto audited = fx::constant_policy("pi", 1, 2);
  const auto left = fx::constant_policy("left", 0, 2);
  const SubsetCatalog cat{{{1, 1}, {1, 0}}};
  AlternativeEnvironment alt{0, State({0, 0}), 1, 1, State({0, 1}), 1.0};
  const auto f = detect(env, alt, audited, {&left, &left}, cat, 3, 5.0);
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(f->best_subset, 1u);
  EXPECT_EQ(f->tie_horizon, env.spec().max_episode_steps);
}

TEST(BestSubset, ReturnThenFewestThenIndex) {
  const SubsetCatalog cat{{{1, 1, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 0}}};
  EXPECT_EQ(best_subset_index({1, 2, 0, 0}, cat), 1u);
  EXPECT_EQ(best_subset_index({2, 1, 1, 2}, cat), 3u);
  EXPECT_EQ(best_subset_index({1, 3, 3, 0}, cat), 1u);
  EXPECT_THROW(best_subset_index({1}, cat), AuditError);
}

TEST(Detect, MatchesBruteForceReference) {
  // Every alternative of every state on a 6-cell corridor, three scripted
  // subset policies, several audited policies and thresholds.
  const int n = 6, last = n - 1;
  auto env = fx::corridor(n);
  const std::map<std::string, std::function<int(int, int)>> acts{
      {"right", [](int, int) { return 1; }},
      {"left", [](int, int) { return 0; }},
      {"aware", [](int p, int f) { return p == 0 && f == 1 ? 0 : 1; }},
      {"odd", [](int p, int f) { return (p + f) % 2; }}};
  std::map<std::string, fx::ScriptedPolicy> pols;
  for (const auto& [id, fn] : acts) pols.emplace(id, table_policy(id, fn));
  const SubsetCatalog cat{{{1, 1}, {1, 0}, {0, 1}}};
  const std::vector<std::string> subset_ids{"aware", "right", "odd"};
  std::vector<const Policy*> subset_ptrs;
  for (const auto& id : subset_ids) subset_ptrs.push_back(&pols.at(id));

  TransitionLog log;
  for (int p = 0; p < n; ++p) log.add({State({p, 0}), 0, 0.0, State({p, 0}), false, 0});

  int checked = 0, findings = 0;
  for (const auto& [aid, afn] : acts) {
    for (int k : {1, 2, 3, 5}) {
      for (double delta : {1.0, 5.0, 10.0}) {
        for (int p = 0; p < last; ++p) {
          for (int fl = 0; fl < 2; ++fl) {
            const State sc({p, fl});
            for (const auto& alt : generate_alternatives(env, sc, log, 0.0)) {
              const double ra = reference_return(afn, alt.start, alt.feature, alt.value, k, last);
              double best = -1e9;
              for (const auto& sid : subset_ids)
                best = std::max(best, reference_return(acts.at(sid), alt.start, alt.feature, alt.value, k, last));
              const auto f = detect(env, alt, pols.at(aid), subset_ptrs, cat, k, delta);
              EXPECT_EQ(f.has_value(), best - ra >= delta);
              if (f) {
                EXPECT_EQ(f->audited_return, ra);
                EXPECT_EQ(f->best_return, best);
                EXPECT_EQ(f->subset_returns[f->best_subset], best);
                ++findings;
              }
              ++checked;
            }
          }
        }
      }
    }
  }
  EXPECT_GT(checked, 1000);
  EXPECT_GT(findings, 0);
}

TEST(Audit, DeltaMonotone) {
  auto env = fx::corridor(6);
  const auto audited = fx::constant_policy("pi", 1, 2);
  auto fp = std::make_shared<FeatureParametrizedPolicy>();
  Rng rng(3);
  fp->catalog = SubsetCatalog{{{1, 1}, {1, 0}}};
  fp->net = NetworkParams::random(4, 16, 2, rng);
  std::size_t prev = SIZE_MAX;
  for (double delta : {0.5, 1.0, 2.0, 5.0, 9.0, 11.0, 20.0, 40.0}) {
    DetectorConfig cfg;
    cfg.delta = delta;
    cfg.alpha = 0.0;
    cfg.episodes = 3;
    const auto rep = audit(audited, fp, env, cfg).report;
    EXPECT_LE(rep.findings.size(), prev);
    for (const auto& f : rep.findings) EXPECT_GE(f.margin, delta);
    prev = rep.findings.size();
  }
}

TEST(Audit, NoFindingWhenAuditedMatchesEverySubset) {
  // The audited policy is the feature-parametrized view itself, so no
  // subset can beat it by a positive margin.
  auto env = fx::corridor(6);
  auto fp = std::make_shared<FeatureParametrizedPolicy>();
  Rng rng(4);
  fp->catalog = SubsetCatalog{{{1, 1}}};
  fp->net = NetworkParams::random(4, 16, 2, rng);
  SubsetPolicy self(fp, 0);
  DetectorConfig cfg;
  cfg.delta = 1e-9;
  cfg.alpha = 0.0;
  cfg.episodes = 2;
  const auto out = audit(self, fp, env, cfg);
  EXPECT_TRUE(out.report.findings.empty());
}

TEST(Audit, ReportJsonShape) {
  auto env = fx::corridor(5);
  const auto audited = fx::constant_policy("pi", 1, 2);
  auto fp = std::make_shared<FeatureParametrizedPolicy>();
  Rng rng(5);
  fp->catalog = SubsetCatalog{{{1, 1}, {1, 0}}};
  fp->net = NetworkParams::random(4, 8, 2, rng);
  DetectorConfig cfg;
  cfg.episodes = 2;
  cfg.delta = 0.5;
  cfg.alpha = 0.0;
  const auto out = audit(audited, fp, env, cfg);
  const auto j = report_to_json(env.spec(), out.report);
  EXPECT_EQ(j["summary"]["transitions"], 8);
  EXPECT_EQ(j["summary"]["critical_states"], out.report.critical.size());
  EXPECT_EQ(j["findings"].size(), out.report.findings.size());
  EXPECT_EQ(j["config"]["intervention"], "persistent");
  EXPECT_EQ(j["feature_names"][1], "flag");
}

TEST(Audit, RejectsMismatchedFeatureNetwork) {
  auto env = fx::corridor(5);
  const auto audited = fx::constant_policy("pi", 1, 2);
  auto fp = std::make_shared<FeatureParametrizedPolicy>();
  fp->catalog = SubsetCatalog{{{1, 1}}};
  fp->net = NetworkParams::zeros(6, 4, 2);
  EXPECT_THROW(audit(audited, fp, env, DetectorConfig{}), AuditError);
}
