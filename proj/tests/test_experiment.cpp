#include "ccaudit/experiment.hpp"
#include "ccaudit/taxi_env.hpp"
#include "ccaudit/traffic_env.hpp"

#include <gtest/gtest.h>

#include <map>
#include <sstream>

using namespace ccaudit;
using nlohmann::json;

TEST(Predicate, ParsesAndMatches) {
  TaxiEnv env;
  const auto& spec = env.spec();
  const State s({4, 0, 1, 4, 2});
  EXPECT_TRUE(Predicate::parse("", spec).matches(s));
  EXPECT_TRUE(Predicate::parse("passenger_loc == 4", spec).matches(s));
  EXPECT_FALSE(Predicate::parse("passenger_loc != 4", spec).matches(s));
  EXPECT_TRUE(Predicate::parse("x >= 4 && y < 1", spec).matches(s));
  EXPECT_FALSE(Predicate::parse("x > 4", spec).matches(s));
  EXPECT_TRUE(Predicate::parse("descriptor<=destination", spec).matches(s));
  EXPECT_FALSE(Predicate::parse("x == y", spec).matches(s));
}

TEST(Predicate, RejectsGarbage) {
  TaxiEnv env;
  EXPECT_THROW(Predicate::parse("colour == 1", env.spec()), AuditError);
  EXPECT_THROW(Predicate::parse("x = 1", env.spec()), AuditError);
  EXPECT_THROW(Predicate::parse("x == 1 &&", env.spec()), AuditError);
}

TEST(ObservationHook, FirstMatchingRuleWins) {
  TaxiEnv env;
  const RandomizationProtocol proto{{"passenger_loc == 4", {"descriptor"}}, {"", {"destination"}}};
  const auto hook = make_observation_hook(proto, env.spec());
  Rng rng(3);
  std::map<int, int> desc, dest;
  const State in_taxi({1, 1, 2, 4, 1});
  const State waiting({1, 1, 2, 0, 1});
  for (int i = 0; i < 4000; ++i) {
    const State a = hook(in_taxi, rng);
    EXPECT_EQ(a[TaxiEnv::kDestination], 1);
    ++desc[a[TaxiEnv::kDescriptor]];
    const State b = hook(waiting, rng);
    EXPECT_EQ(b[TaxiEnv::kDescriptor], 2);
    ++dest[b[TaxiEnv::kDestination]];
    EXPECT_EQ(a[TaxiEnv::kX], 1);
  }
  EXPECT_EQ(desc.size(), 4u);
  EXPECT_EQ(dest.size(), 4u);
  for (const auto& [v, n] : dest) EXPECT_NEAR(n / 4000.0, 0.25, 0.03);
}

TEST(ObservationHook, EmptyRuleSetLeavesStatesAlone) {
  TrafficEnv env;
  EXPECT_FALSE(make_observation_hook({}, env.spec()));
  const RandomizationProtocol keep{{"agent_pos == light_pos", {}}, {"", {"light_color"}}};
  const auto hook = make_observation_hook(keep, env.spec());
  Rng rng(1);
  State at_light = env.reset(0);
  at_light[TrafficEnv::kAgent] = at_light[TrafficEnv::kLight];
  for (int i = 0; i < 50; ++i) EXPECT_EQ(hook(at_light, rng), at_light);
}

TEST(ObservationHook, UnknownFeatureRejected) {
  TaxiEnv env;
  EXPECT_THROW(make_observation_hook({{"", {"colour"}}}, env.spec()), AuditError);
}

TEST(Config, DefaultsValidateForBothEnvs) {
  for (const std::string env : {"taxi", "minigrid"}) {
    const auto c = default_config(env);
    EXPECT_NO_THROW(validate_config(c)) << env;
    EXPECT_EQ(c.seed, 1u);
  }
  EXPECT_THROW(default_config("atari"), AuditError);
}

TEST(Config, JsonRoundTripKeepsHash) {
  auto c = default_config("minigrid");
  c.seed = 9;
  c.detector.k = 2;
  const auto back = config_from_json(json::parse(config_to_json(c).dump()));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(back.detector.k, 2);
  EXPECT_EQ(back.detector.seed, 9u);
}

TEST(Config, OverridesAndRejections) {
  const auto c = config_from_json(json::parse(R"({"env":"taxi","train":{"max_steps":1234},"detector":{"delta":4}})"));
  EXPECT_EQ(c.train.max_steps, 1234);
  EXPECT_EQ(c.detector.delta, 4.0);
  EXPECT_EQ(c.train_fp.hidden, 512);
  EXPECT_THROW(config_from_json(json::parse(R"({"env":"taxi","tarin":{}})")), AuditError);
  EXPECT_THROW(config_from_json(json::parse(R"({"train":{"optimizer":"rmsprop"}})")), AuditError);
  EXPECT_THROW(config_from_json(json::parse(R"({"detector":{"alpha":2}})")), AuditError);
  EXPECT_THROW(config_from_json(json::parse(R"({"catalog":[[1,1]]})")), AuditError);
  EXPECT_THROW(config_from_json(json::parse(R"({"protocol":"mystery"})")), AuditError);
  EXPECT_THROW(config_from_json(json::parse(R"({"env_params":{"p_couple":"high"}})")), AuditError);
}

TEST(Config, HashChangesWithContent) {
  auto a = default_config("taxi");
  auto b = a;
  b.detector.delta = 11;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(MakeEnv, ParamsApplied) {
  const auto env = make_env("taxi", {{"max_episode_steps", 17}}, 1);
  EXPECT_EQ(env->spec().max_episode_steps, 17);
  EXPECT_THROW(make_env("taxi", {{"walls", true}}, 1), AuditError);
  EXPECT_THROW(make_env("pong", json::object(), 1), AuditError);
}

TEST(Checkpoint, RoundTripIsExact) {
  Rng rng(6);
  Checkpoint c;
  c.kind = "feature_parametrized";
  c.env_id = "taxi";
  c.seed = 42;
  c.net = NetworkParams::random(10, 7, 6, rng);
  c.catalog = SubsetCatalog{{{1, 1, 1, 1, 1}, {1, 1, 0, 1, 0}}};
  c.meta = {{"note", "x"}};
  std::stringstream ss;
  write_checkpoint(ss, c);
  const auto back = read_checkpoint(ss);
  EXPECT_EQ(back.kind, c.kind);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.net.flatten(), c.net.flatten());
  ASSERT_TRUE(back.catalog.has_value());
  EXPECT_EQ(back.catalog->subsets, c.catalog->subsets);
  EXPECT_EQ(back.meta["note"], "x");
}

TEST(Checkpoint, TruncationAndTrailingBytesRejected) {
  Rng rng(7);
  Checkpoint c;
  c.env_id = "minigrid";
  c.net = NetworkParams::random(6, 4, 2, rng);
  std::stringstream ss;
  write_checkpoint(ss, c);
  const std::string full = ss.str();
  std::stringstream cut(full.substr(0, full.size() - 3));
  EXPECT_THROW(read_checkpoint(cut), AuditError);
  std::stringstream extra(full + "zz");
  EXPECT_THROW(read_checkpoint(extra), AuditError);
  std::stringstream junk("not a checkpoint\n");
  EXPECT_THROW(read_checkpoint(junk), AuditError);
}

TEST(PolicyFromCheckpoint, KindsAreChecked) {
  Rng rng(8);
  Checkpoint c;
  c.env_id = "taxi";
  c.net = NetworkParams::random(5, 4, 6, rng);
  c.meta = {{"policy_id", "pi_confused"}};
  const auto p = policy_from_checkpoint(c);
  EXPECT_EQ(p->id(), "pi_confused");
  EXPECT_THROW(fp_from_checkpoint(c), AuditError);
}

TEST(Summary, RendersOneRowPerReport) {
  json rep = {{"env", "taxi"},
              {"audited_policy", "pi_confused"},
              {"summary",
               {{"episodes", 100}, {"transitions", 920}, {"critical_states", 16}, {"average_alternatives", 8.8125},
                {"detections", 4}, {"findings", 4}}},
              {"config", {{"k", 3}, {"delta", 10.0}, {"alpha", 0.9}, {"intervention", "persistent"}}},
              {"findings", json::array()},
              {"recommendations", json::array()},
              {"warnings", json::array()}};
  const std::string md = render_summary({rep, rep});
  EXPECT_NE(md.find("| taxi | pi_confused | 100 | 920 | 16 | 8.81 | 4 |"), std::string::npos);
  EXPECT_NE(md.find("No causal confusion detected."), std::string::npos);
  EXPECT_THROW(render_summary({json{{"env", "taxi"}}}), AuditError);
}
