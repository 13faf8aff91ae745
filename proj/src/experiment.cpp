#include "ccaudit/experiment.hpp"

#include "ccaudit/taxi_env.hpp"
#include "ccaudit/traffic_env.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>

namespace ccaudit {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- predicate

Predicate Predicate::parse(const std::string& text, const EnvSpec& spec) {
  Predicate p;
  p.text_ = text;
  if (text.find_first_not_of(" \t") == std::string::npos) return p;
  static const std::regex atom_re(R"(^\s*([A-Za-z_]\w*)\s*(==|!=|<=|>=|<|>)\s*(-?\d+|[A-Za-z_]\w*)\s*$)");
  std::size_t pos = 0;
  for (;;) {
    const std::size_t amp = text.find("&&", pos);
    const std::string part = text.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
    std::smatch m;
    if (!std::regex_match(part, m, atom_re)) throw AuditError("cannot parse predicate atom '" + part + "'");
    Atom a;
    a.feature = spec.feature_index(m[1]);
    const std::string op = m[2];
    a.op = op == "==" ? Op::kEq : op == "!=" ? Op::kNe : op == "<" ? Op::kLt : op == "<=" ? Op::kLe
           : op == ">" ? Op::kGt : Op::kGe;
    const std::string rhs = m[3];
    if (std::isdigit(static_cast<unsigned char>(rhs.back()))) {
      a.rhs = std::stoi(rhs);
    } else {
      a.rhs_feature = true;
      a.rhs = static_cast<int>(spec.feature_index(rhs));
    }
    p.atoms_.push_back(a);
    if (amp == std::string::npos) break;
    pos = amp + 2;
  }
  return p;
}

bool Predicate::matches(const State& s) const {
  for (const auto& a : atoms_) {
    const int lhs = s[a.feature];
    const int rhs = a.rhs_feature ? s[static_cast<std::size_t>(a.rhs)] : a.rhs;
    bool ok = false;
    switch (a.op) {
      case Op::kEq: ok = lhs == rhs; break;
      case Op::kNe: ok = lhs != rhs; break;
      case Op::kLt: ok = lhs < rhs; break;
      case Op::kLe: ok = lhs <= rhs; break;
      case Op::kGt: ok = lhs > rhs; break;
      case Op::kGe: ok = lhs >= rhs; break;
    }
    if (!ok) return false;
  }
  return true;
}

ObservationHook make_observation_hook(const RandomizationProtocol& protocol, const EnvSpec& spec) {
  if (protocol.empty()) return {};
  struct Compiled {
    Predicate when;
    std::vector<std::size_t> features;
  };
  std::vector<Compiled> rules;
  for (const auto& r : protocol) {
    Compiled c{Predicate::parse(r.when, spec), {}};
    for (const auto& name : r.randomize) c.features.push_back(spec.feature_index(name));
    rules.push_back(std::move(c));
  }
  std::vector<int> cards;
  for (const auto& f : spec.features) cards.push_back(f.cardinality);
  return [rules, cards](const State& s, Rng& rng) {
    for (const auto& r : rules) {
      if (!r.when.matches(s)) continue;
      State out = s;
      for (std::size_t f : r.features) {
        std::uniform_int_distribution<int> pick(0, cards[f] - 1);
        out[f] = pick(rng);
      }
      return out;
    }
    return s;
  };
}

// ------------------------------------------------------------------ config

namespace {

ordered_json train_to_json(const TrainConfig& t) {
  return {{"hidden", t.hidden},
          {"learning_rate", t.learning_rate},
          {"gamma", t.gamma},
          {"memory", t.memory},
          {"epsilon_start", t.epsilon.start},
          {"epsilon_end", t.epsilon.end},
          {"epsilon_decay_steps", t.epsilon.decay_steps},
          {"batch_size", t.batch_size},
          {"target_sync", t.target_sync},
          {"optimizer", t.optimizer == OptimizerKind::kAdam ? "adam" : "sgd"},
          {"max_steps", t.max_steps},
          {"min_steps", t.min_steps},
          {"eval_interval", t.eval_interval},
          {"eval_episodes", t.eval_episodes},
          {"plateau_tolerance", t.plateau_tolerance}};
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw AuditError(where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw AuditError("unknown key '" + key + "' in " + where);
}

void train_from_json(const json& j, TrainConfig& t, const std::string& where) {
  reject_unknown(j,
                 {"hidden", "learning_rate", "gamma", "memory", "epsilon_start", "epsilon_end",
                  "epsilon_decay_steps", "batch_size", "target_sync", "optimizer", "max_steps", "min_steps",
                  "eval_interval", "eval_episodes", "plateau_tolerance"},
                 where);
  t.hidden = j.value("hidden", t.hidden);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.gamma = j.value("gamma", t.gamma);
  t.memory = j.value("memory", t.memory);
  t.epsilon.start = j.value("epsilon_start", t.epsilon.start);
  t.epsilon.end = j.value("epsilon_end", t.epsilon.end);
  t.epsilon.decay_steps = j.value("epsilon_decay_steps", t.epsilon.decay_steps);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.target_sync = j.value("target_sync", t.target_sync);
  if (j.contains("optimizer")) {
    const auto name = j["optimizer"].get<std::string>();
    if (name == "sgd") t.optimizer = OptimizerKind::kSgd;
    else if (name == "adam") t.optimizer = OptimizerKind::kAdam;
    else throw AuditError("optimizer must be 'sgd' or 'adam', got '" + name + "'");
  }
  t.max_steps = j.value("max_steps", t.max_steps);
  t.min_steps = j.value("min_steps", t.min_steps);
  t.eval_interval = j.value("eval_interval", t.eval_interval);
  t.eval_episodes = j.value("eval_episodes", t.eval_episodes);
  t.plateau_tolerance = j.value("plateau_tolerance", t.plateau_tolerance);
  if (t.hidden < 1 || t.memory < 1 || t.batch_size < 1 || t.target_sync < 1 || t.max_steps < 1 ||
      t.eval_episodes < 1)
    throw AuditError(where + ": sizes and budgets must be positive");
  if (!(t.learning_rate > 0.0) || t.gamma < 0.0 || t.gamma > 1.0) throw AuditError(where + ": bad lr or gamma");
  if (t.epsilon.start < 0.0 || t.epsilon.start > 1.0 || t.epsilon.end < 0.0 || t.epsilon.end > 1.0)
    throw AuditError(where + ": epsilon values must lie in [0, 1]");
}

RandomizationProtocol protocol_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw AuditError(where + " must be a list of rules");
  RandomizationProtocol p;
  for (const auto& r : j) {
    reject_unknown(r, {"when", "randomize"}, where);
    p.push_back({r.value("when", std::string()), r.value("randomize", std::vector<std::string>{})});
  }
  return p;
}

ordered_json protocol_to_json(const RandomizationProtocol& p) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : p) arr.push_back({{"when", r.when}, {"randomize", r.randomize}});
  return arr;
}

ordered_json merged(ordered_json base, const ordered_json& over) {
  for (const auto& [k, v] : over.items()) base[k] = v;
  return base;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace

ExperimentConfig default_config(const std::string& env) {
  ExperimentConfig c;
  c.env = env;
  c.seed = 1;
  c.train.learning_rate = 1e-3;
  c.train.gamma = 0.99;
  c.train.batch_size = 64;
  c.train.target_sync = 1000;
  c.train.optimizer = OptimizerKind::kAdam;
  c.train.eval_interval = 25000;
  c.train.eval_episodes = 100;
  if (env == "taxi") {
    c.env_params = {{"p_couple", 1.0}, {"illegal_action_reward", -10.0}, {"max_episode_steps", 200}};
    c.train.hidden = 256;
    c.train.memory = 10000;
    c.train.epsilon = {0.9, 0.01, 100000};
    c.train.max_steps = 250000;
    c.train_fp = c.train;
    c.train_fp.hidden = 512;
    c.train_fp.memory = 320000;
    c.train_fp.max_steps = 600000;
    // Rare subsets keep improving long after the mean return flattens.
    c.train_fp.min_steps = 600000;
    c.catalog.subsets = {{1, 1, 1, 1, 1}, {1, 1, 0, 1, 1}, {1, 1, 1, 1, 0}, {1, 1, 0, 1, 0}};
    c.protocols["confused"] = {{"", {"destination"}}};
    // The descriptor is spurious everywhere; before pickup it also has to be
    // noise, otherwise descriptor == image(passenger_loc) is never seen.
    c.protocols["correct"] = {{"passenger_loc == 4", {"descriptor"}}, {"", {"destination", "descriptor"}}};
    c.detector = {3, 10.0, 0.9, 100, 1};
  } else if (env == "minigrid") {
    c.env_params = {{"corridor_length", 6}, {"light_cell", 2},       {"agent_start", 0},
                    {"vehicle_start", 1},   {"rule_following", true}, {"p_violate", 0.3},
                    {"max_episode_steps", 200}};
    c.correct_env_params = {{"rule_following", false}};
    c.train.hidden = 512;
    c.train.memory = 80000;
    c.train.epsilon = {0.9, 0.1, 50000};
    c.train.max_steps = 150000;
    c.train_fp = c.train;
    c.catalog.subsets = {{1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 1, 0}, {1, 1, 0, 1, 1, 1}};
    c.protocols["confused"] = {{"", {"light_color"}}};
    c.protocols["correct"] = {{"agent_pos == light_pos && light_color == 0", {"vehicle_action"}},
                              {"agent_pos == light_pos", {}},
                              {"", {"light_color"}}};
    c.detector = {1, 9.0, 0.9, 100, 1};
  } else {
    throw AuditError("unknown environment '" + env + "' (expected taxi or minigrid)");
  }
  return c;
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"env", "seed", "env_params", "correct_env_params", "protocol", "train", "train_fp", "catalog",
                  "protocols", "detector"},
                 "config");
  ExperimentConfig c = default_config(j.value("env", std::string("taxi")));
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("env_params")) c.env_params = merged(c.env_params, j["env_params"]);
    if (j.contains("correct_env_params"))
      c.correct_env_params = merged(c.correct_env_params, j["correct_env_params"]);
    c.protocol = j.value("protocol", c.protocol);
    if (j.contains("train")) train_from_json(j["train"], c.train, "train");
    if (j.contains("train_fp")) train_from_json(j["train_fp"], c.train_fp, "train_fp");
    if (j.contains("catalog")) c.catalog.subsets = j["catalog"].get<std::vector<FeatureSubset>>();
    if (j.contains("protocols")) {
      if (!j["protocols"].is_object()) throw AuditError("protocols must be an object");
      for (const auto& [name, rules] : j["protocols"].items())
        c.protocols[name] = protocol_from_json(rules, "protocols." + name);
    }
    if (j.contains("detector")) {
      const auto& d = j["detector"];
      reject_unknown(d, {"k", "delta", "alpha", "episodes"}, "detector");
      c.detector.k = d.value("k", c.detector.k);
      c.detector.delta = d.value("delta", c.detector.delta);
      c.detector.alpha = d.value("alpha", c.detector.alpha);
      c.detector.episodes = d.value("episodes", c.detector.episodes);
    }
  } catch (const json::exception& e) {
    throw AuditError(std::string("config: ") + e.what());
  }
  c.detector.seed = c.seed;
  validate_config(c);
  return c;
}

ordered_json config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["env"] = c.env;
  j["seed"] = c.seed;
  j["env_params"] = c.env_params;
  j["correct_env_params"] = c.correct_env_params;
  j["protocol"] = c.protocol;
  j["train"] = train_to_json(c.train);
  j["train_fp"] = train_to_json(c.train_fp);
  ordered_json cat = ordered_json::array();
  for (const auto& g : c.catalog.subsets) cat.push_back(g);
  j["catalog"] = std::move(cat);
  ordered_json protos = ordered_json::object();
  for (const auto& [name, p] : c.protocols) protos[name] = protocol_to_json(p);
  j["protocols"] = std::move(protos);
  j["detector"] = {{"k", c.detector.k},
                   {"delta", c.detector.delta},
                   {"alpha", c.detector.alpha},
                   {"episodes", c.detector.episodes}};
  return j;
}

void validate_config(const ExperimentConfig& c) {
  const auto env = make_env(c.env, c.env_params, c.seed);
  make_env(c.env, merged(c.env_params, c.correct_env_params), c.seed);
  const EnvSpec& spec = env->spec();
  c.catalog.validate(spec.feature_count());
  for (const auto& [name, p] : c.protocols) {
    try {
      make_observation_hook(p, spec);
    } catch (const AuditError& e) {
      throw AuditError("protocol '" + name + "': " + e.what());
    }
  }
  if (c.protocol != "none" && !c.protocols.count(c.protocol))
    throw AuditError("protocol '" + c.protocol + "' is not configured");
  if (c.detector.k < 1) throw AuditError("detector.k must be at least 1");
  if (!(c.detector.delta > 0.0)) throw AuditError("detector.delta must be positive");
  if (c.detector.alpha < 0.0 || c.detector.alpha > 1.0) throw AuditError("detector.alpha must lie in [0, 1]");
  if (c.detector.episodes < 1) throw AuditError("detector.episodes must be at least 1");
}

std::string config_hash(const ExperimentConfig& c) { return fnv1a_hex(config_to_json(c).dump()); }

std::unique_ptr<Environment> make_env(const std::string& id, const ordered_json& params, std::uint64_t seed) {
  try {
    if (id == "taxi") {
      reject_unknown(params, {"p_couple", "illegal_action_reward", "max_episode_steps"}, "taxi env_params");
      TaxiConfig t;
      t.p_couple = params.value("p_couple", t.p_couple);
      t.illegal_action_reward = params.value("illegal_action_reward", t.illegal_action_reward);
      t.max_episode_steps = params.value("max_episode_steps", t.max_episode_steps);
      return std::make_unique<TaxiEnv>(t, seed);
    }
    if (id == "minigrid") {
      reject_unknown(params,
                     {"corridor_length", "light_cell", "agent_start", "vehicle_start", "rule_following", "p_violate",
                      "max_episode_steps"},
                     "minigrid env_params");
      TrafficConfig t;
      t.corridor_length = params.value("corridor_length", t.corridor_length);
      t.light_cell = params.value("light_cell", t.light_cell);
      t.agent_start = params.value("agent_start", t.agent_start);
      t.vehicle_start = params.value("vehicle_start", t.vehicle_start);
      t.rule_following = params.value("rule_following", t.rule_following);
      t.p_violate = params.value("p_violate", t.p_violate);
      t.max_episode_steps = params.value("max_episode_steps", t.max_episode_steps);
      return std::make_unique<TrafficEnv>(t, seed);
    }
  } catch (const json::exception& e) {
    throw AuditError(std::string("env_params: ") + e.what());
  }
  throw AuditError("unknown environment '" + id + "' (expected taxi or minigrid)");
}

// ---------------------------------------------------------------- training

namespace {

ordered_json history_json(const TrainResult& r) {
  ordered_json h = ordered_json::array();
  for (const auto& p : r.history) h.push_back({{"step", p.step}, {"mean_return", p.mean_return}});
  return h;
}

}  // namespace

Checkpoint train_audited_policy(const ExperimentConfig& cfg, const std::string& protocol, TrainResult* result) {
  RandomizationProtocol rules;
  if (protocol != "none") {
    const auto it = cfg.protocols.find(protocol);
    if (it == cfg.protocols.end()) throw AuditError("protocol '" + protocol + "' is not configured");
    rules = it->second;
  }
  const auto params = protocol == "correct" ? merged(cfg.env_params, cfg.correct_env_params) : cfg.env_params;
  auto env = make_env(cfg.env, params, cfg.seed);
  const ObservationHook hook = make_observation_hook(rules, env->spec());
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  TrainResult r = train_policy(*env, tc, hook);

  Checkpoint c;
  c.kind = "policy";
  c.env_id = cfg.env;
  c.seed = cfg.seed;
  c.meta = {{"policy_id", "pi_" + protocol},
            {"protocol", protocol},
            {"rules", protocol_to_json(rules)},
            {"env_params", params},
            {"train", train_to_json(tc)},
            {"config_hash", config_hash(cfg)},
            {"steps", r.steps},
            {"episodes", r.episodes},
            {"stopped_early", r.stopped_early},
            {"history", history_json(r)}};
  c.net = r.net;
  if (result) *result = std::move(r);
  return c;
}

Checkpoint train_fp_policy(const ExperimentConfig& cfg, TrainResult* result) {
  auto env = make_env(cfg.env, cfg.env_params, cfg.seed);
  TrainConfig tc = cfg.train_fp;
  tc.seed = cfg.seed + 1;
  FeatureTrainResult r = train_feature_parametrized(*env, cfg.catalog, tc);
  Checkpoint c;
  c.kind = "feature_parametrized";
  c.env_id = cfg.env;
  c.seed = tc.seed;
  c.meta = {{"policy_id", "pi_G"},
            {"env_params", cfg.env_params},
            {"train", train_to_json(tc)},
            {"config_hash", config_hash(cfg)},
            {"steps", r.train.steps},
            {"episodes", r.train.episodes},
            {"stopped_early", r.train.stopped_early},
            {"history", history_json(r.train)}};
  c.net = r.policy->net;
  c.catalog = cfg.catalog;
  if (result) *result = std::move(r.train);
  return c;
}

std::unique_ptr<Policy> policy_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "policy") throw AuditError("expected a policy checkpoint, got '" + ckpt.kind + "'");
  return std::make_unique<QPolicy>(ckpt.net, ckpt.meta.value("policy_id", std::string("pi")));
}

std::shared_ptr<const FeatureParametrizedPolicy> fp_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "feature_parametrized" || !ckpt.catalog)
    throw AuditError("expected a feature-parametrized checkpoint with a catalog");
  return std::make_shared<FeatureParametrizedPolicy>(FeatureParametrizedPolicy{ckpt.net, *ckpt.catalog});
}

// ------------------------------------------------------------------- audit

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw AuditError("cannot open " + path + " for writing");
  os << text;
  if (!os) throw AuditError("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw AuditError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ordered_json run_audit(const ExperimentConfig& cfg, const Checkpoint& policy_ckpt, const Checkpoint& fp_ckpt,
                       const std::string& out_dir) {
  auto env = make_env(cfg.env, cfg.env_params, cfg.seed);
  const std::size_t nf = env->spec().feature_count();
  if (policy_ckpt.env_id != cfg.env || fp_ckpt.env_id != cfg.env)
    throw AuditError("checkpoint environment does not match '" + cfg.env + "'");
  if (policy_ckpt.net.input_size() != static_cast<int>(nf))
    throw AuditError("policy checkpoint expects " + std::to_string(policy_ckpt.net.input_size()) +
                     " features, environment has " + std::to_string(nf));
  if (fp_ckpt.net.input_size() != static_cast<int>(2 * nf))
    throw AuditError("feature-parametrized checkpoint expects " + std::to_string(fp_ckpt.net.input_size() / 2) +
                     " features, environment has " + std::to_string(nf));
  if (policy_ckpt.net.output_size() != env->spec().action_count ||
      fp_ckpt.net.output_size() != env->spec().action_count)
    throw AuditError("checkpoint action count does not match the environment");

  const auto policy = policy_from_checkpoint(policy_ckpt);
  const auto fp = fp_from_checkpoint(fp_ckpt);
  DetectorConfig dc = cfg.detector;
  dc.seed = cfg.seed;
  AuditArtifacts art = audit(*policy, fp, *env, dc);

  const ordered_json prov = {{"config_hash", config_hash(cfg)},
                             {"seed", cfg.seed},
                             {"policy_config_hash", policy_ckpt.meta.value("config_hash", std::string())},
                             {"fp_config_hash", fp_ckpt.meta.value("config_hash", std::string())}};
  ordered_json report = {{"provenance", prov}};
  const ordered_json body = report_to_json(env->spec(), art.report);
  for (const auto& [k, v] : body.items()) report[k] = v;

  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "transitions.jsonl", std::ios::binary);
    if (!os) throw AuditError("cannot write transitions.jsonl in " + out_dir);
    write_transitions_jsonl(os, art.log.transitions(), ordered_json{{"provenance", prov}}.dump());
  }
  write_text_file((fs::path(out_dir) / "critical.json").string(),
                  ordered_json{{"provenance", prov}, {"critical_states", critical_to_json(env->spec(), art.report.critical)}}
                          .dump(2) + "\n");
  write_text_file((fs::path(out_dir) / "alternatives.json").string(),
                  ordered_json{{"provenance", prov},
                               {"alpha", dc.alpha},
                               {"alternatives", alternatives_to_json(env->spec(), art.report.alternatives)}}
                          .dump(2) + "\n");
  write_text_file((fs::path(out_dir) / "report.json").string(), report.dump(2) + "\n");
  write_text_file((fs::path(out_dir) / "summary.md").string(), render_summary({json::parse(report.dump())}));
  return report;
}

// ------------------------------------------------------------------ report

namespace {

std::string subset_text(const json& g) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < g.size(); ++i) os << (i ? " " : "") << g[i].get<int>();
  os << ']';
  return os.str();
}

std::string num(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string ret_text(double v) {
  return v == static_cast<long long>(v) ? std::to_string(static_cast<long long>(v)) : num(v, 2);
}

}  // namespace

std::string render_summary(const std::vector<json>& reports) {
  std::ostringstream os;
  try {
    os << "# Causal-confusion audit\n\n";
    os << "| Environment | Policy | Episodes | Transitions | Critical states | Avg. alternatives | Detections |\n";
    os << "|---|---|---|---|---|---|---|\n";
    for (const auto& r : reports) {
      const auto& s = r.at("summary");
      os << "| " << r.at("env").get<std::string>() << " | " << r.at("audited_policy").get<std::string>() << " | "
         << s.at("episodes").get<int>() << " | " << s.at("transitions").get<std::size_t>() << " | "
         << s.at("critical_states").get<std::size_t>() << " | " << num(s.at("average_alternatives").get<double>(), 2)
         << " | " << s.at("detections").get<std::size_t>() << " |\n";
    }
    for (const auto& r : reports) {
      os << "\n## " << r.at("env").get<std::string>() << " / " << r.at("audited_policy").get<std::string>() << "\n\n";
      const auto& cfgj = r.at("config");
      os << "k = " << cfgj.at("k").get<int>() << ", delta = " << ret_text(cfgj.at("delta").get<double>())
         << ", alpha = " << num(cfgj.at("alpha").get<double>(), 2) << ", intervention "
         << cfgj.at("intervention").get<std::string>() << ".\n\n";
      const auto& findings = r.at("findings");
      if (findings.empty()) {
        os << "No causal confusion detected.\n";
      } else {
        os << "Findings:\n\n";
        for (const auto& f : findings) {
          const auto state = f.at("state").get<std::vector<int>>();
          os << "- In state " << to_string(State(state)) << " (critical #" << f.at("critical_index").get<std::size_t>()
             << "), intervening " << f.at("feature").get<std::string>() << " to " << f.at("value").get<int>()
             << " drops the audited return to " << ret_text(f.at("audited_return").get<double>()) << " while subset "
             << subset_text(f.at("best_subset")) << " achieves " << ret_text(f.at("best_return").get<double>())
             << " (margin " << ret_text(f.at("margin").get<double>()) << ").\n";
        }
        os << "\nRecommendations:\n\n";
        for (const auto& rec : r.at("recommendations")) {
          os << "- Feature " << rec.at("feature").get<std::string>() << ": rely on subset "
             << subset_text(rec.at("subset")) << " in " << rec.at("states").size() << " state(s):";
          for (const auto& s : rec.at("states")) os << ' ' << to_string(State(s.get<std::vector<int>>()));
          os << "\n";
        }
      }
      for (const auto& w : r.at("warnings")) os << "\nWarning: " << w.get<std::string>() << "\n";
    }
  } catch (const json::exception& e) {
    throw AuditError(std::string("corrupt report: ") + e.what());
  }
  return os.str();
}

void write_plot_series(const json& report, const std::string& out_dir) {
  fs::create_directories(out_dir);
  try {
    std::ostringstream crit;
    crit << "index,value,alternatives,findings\n";
    for (const auto& c : report.at("critical_states"))
      crit << c.at("index").get<std::size_t>() << ',' << c.at("value").dump() << ','
           << c.at("alternatives").get<std::size_t>() << ',' << c.at("findings").get<std::size_t>() << "\n";
    write_text_file((fs::path(out_dir) / "critical_series.csv").string(), crit.str());

    std::ostringstream finds;
    finds << "critical_index,feature,value,audited_return,best_return,margin\n";
    for (const auto& f : report.at("findings"))
      finds << f.at("critical_index").get<std::size_t>() << ',' << f.at("feature").get<std::string>() << ','
            << f.at("value").get<int>() << ',' << f.at("audited_return").dump() << ','
            << f.at("best_return").dump() << ',' << f.at("margin").dump() << "\n";
    write_text_file((fs::path(out_dir) / "findings_series.csv").string(), finds.str());
  } catch (const json::exception& e) {
    throw AuditError(std::string("corrupt report: ") + e.what());
  }
}

void run_reproduce(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log) {
  fs::create_directories(out_dir);
  const auto note = [&log](const std::string& what, const Checkpoint& c) {
    log << what << ": " << c.meta.at("steps").get<long>() << " steps, last evaluation "
        << (c.meta.at("history").empty() ? std::string("n/a") : c.meta.at("history").back().at("mean_return").dump())
        << "\n";
  };

  const Checkpoint fp = train_fp_policy(cfg);
  save_checkpoint((fs::path(out_dir) / "fp.ckpt").string(), fp);
  note("pi_G", fp);

  std::vector<json> reports;
  for (const std::string protocol : {"confused", "correct"}) {
    const fs::path dir = fs::path(out_dir) / protocol;
    fs::create_directories(dir);
    const Checkpoint pol = train_audited_policy(cfg, protocol);
    save_checkpoint((dir / "policy.ckpt").string(), pol);
    note("pi_" + protocol, pol);
    reports.push_back(json::parse(run_audit(cfg, pol, fp, dir.string()).dump()));
  }
  write_text_file((fs::path(out_dir) / "summary.md").string(), render_summary(reports));
}

}  // namespace ccaudit
