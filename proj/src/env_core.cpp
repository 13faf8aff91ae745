#include "ccaudit/env_core.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>
#include <sstream>

namespace ccaudit {

std::size_t StateHash::operator()(const State& s) const noexcept {
  // FNV-1a over the raw values.
  std::uint64_t h = 1469598103934665603ULL;
  for (int v : s.values) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

std::string to_string(const State& s) {
  std::ostringstream os;
  os << s;
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const State& s) {
  os << '[';
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (i) os << ' ';
    os << s.values[i];
  }
  return os << ']';
}

std::size_t EnvSpec::feature_index(const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].name == name) return i;
  throw AuditError("unknown feature '" + name + "' for environment " + id);
}

void EnvSpec::validate(const State& s) const {
  if (s.size() != features.size())
    throw AuditError("state " + to_string(s) + " has " + std::to_string(s.size()) +
                     " features, expected " + std::to_string(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (s[i] < 0 || s[i] >= features[i].cardinality)
      throw AuditError("feature '" + features[i].name + "' value " + std::to_string(s[i]) +
                       " outside domain [0, " + std::to_string(features[i].cardinality) + ")");
  }
}

Environment::Environment(EnvSpec spec) : spec_(std::move(spec)), rng_(spec_.seed) {
  if (spec_.action_count < 1) throw AuditError("action count must be positive");
  if (spec_.max_episode_steps < 1) throw AuditError("max episode steps must be positive");
  for (const auto& f : spec_.features) {
    if (f.cardinality < 1) throw AuditError("feature '" + f.name + "' has empty domain");
    for (const auto& g : spec_.features)
      if (&f != &g && f.name == g.name) throw AuditError("duplicate feature name '" + f.name + "'");
  }
}

State Environment::reset(std::uint64_t seed) {
  rng_.seed(seed);
  steps_ = 0;
  clamp_.reset();
  current_ = initial_state(rng_);
  return current_;
}

StepOutcome Environment::step(int action) {
  if (action < 0 || action >= spec_.action_count)
    throw AuditError("action " + std::to_string(action) + " outside [0, " +
                     std::to_string(spec_.action_count) + ") for " + spec_.id);
  StepOutcome out;
  auto [reward, terminal] = advance(current_, action, rng_);
  if (clamp_) current_[clamp_->first] = clamp_->second;
  ++steps_;
  out.state = current_;
  out.reward = reward;
  out.terminal = terminal;
  out.truncated = !terminal && steps_ >= spec_.max_episode_steps;
  return out;
}

StepOutcome Environment::step(const State& s, int action) {
  set_state(s);
  return step(action);
}

Environment& Environment::set_state(const State& s) {
  spec_.validate(s);
  current_ = s;
  steps_ = 0;
  return *this;
}

State Environment::intervene(const State& s, std::size_t feature, int value) const {
  if (feature >= spec_.feature_count())
    throw AuditError("feature index " + std::to_string(feature) + " out of range");
  const auto& dom = spec_.features[feature];
  if (value < 0 || value >= dom.cardinality)
    throw AuditError("intervention value " + std::to_string(value) + " outside domain of '" +
                     dom.name + "'");
  State out = s;
  out[feature] = value;
  return out;
}

void Environment::clamp(std::size_t feature, int value) {
  if (feature >= spec_.feature_count() || value < 0 ||
      value >= spec_.features[feature].cardinality)
    throw AuditError("invalid clamp " + std::to_string(feature) + " -> " + std::to_string(value));
  clamp_ = std::make_pair(feature, value);
}

std::vector<Successor> Environment::successors(const State& s) const {
  spec_.validate(s);
  if (is_terminal(s)) return {};
  std::vector<Successor> out;
  out.reserve(static_cast<std::size_t>(spec_.action_count));
  auto scratch = clone();
  for (int a = 0; a < spec_.action_count; ++a) {
    scratch->set_state(s);
    const auto r = scratch->step(a);
    out.push_back({a, r.state, r.reward, r.terminal});
  }
  return out;
}

std::string Environment::action_name(int action) const { return std::to_string(action); }

void write_transitions_jsonl(std::ostream& os, const std::vector<Transition>& log, const std::string& header) {
  if (!header.empty()) os << header << '\n';
  for (const auto& t : log) {
    nlohmann::ordered_json j;
    j["state"] = t.state.values;
    j["action"] = t.action;
    j["reward"] = t.reward;
    j["next_state"] = t.next_state.values;
    j["terminal"] = t.terminal;
    j["episode"] = t.episode;
    os << j.dump() << '\n';
  }
}

std::vector<Transition> read_transitions_jsonl(std::istream& is) {
  std::vector<Transition> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.contains("provenance")) continue;
      Transition t;
      t.state = State(j.at("state").get<std::vector<int>>());
      t.action = j.at("action").get<int>();
      t.reward = j.at("reward").get<double>();
      t.next_state = State(j.at("next_state").get<std::vector<int>>());
      t.terminal = j.at("terminal").get<bool>();
      t.episode = j.at("episode").get<int>();
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw AuditError("transition log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ccaudit
