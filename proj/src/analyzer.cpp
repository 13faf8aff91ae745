#include "ccaudit/analyzer.hpp"

#include <cmath>
#include <set>

namespace ccaudit {

using nlohmann::ordered_json;

TransitionLog::TransitionLog(std::vector<Transition> transitions) {
  for (auto& t : transitions) add(std::move(t));
}

void TransitionLog::add(Transition t) {
  auto [it, fresh] = counts_.try_emplace(t.state, 0);
  if (fresh) order_.push_back(t.state);
  ++it->second;
  log_.push_back(std::move(t));
}

int TransitionLog::count(const State& s) const {
  const auto it = counts_.find(s);
  return it == counts_.end() ? 0 : it->second;
}

int TransitionLog::episodes() const {
  std::set<int> ids;
  for (const auto& t : log_) ids.insert(t.episode);
  return static_cast<int>(ids.size());
}

TransitionLog collect_transitions(const Policy& policy, Environment& env, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw AuditError("episodes must be at least 1");
  TransitionLog log;
  Rng seeds(seed);
  for (int e = 0; e < episodes; ++e) {
    State s = env.reset(seeds());
    for (;;) {
      const int a = policy.act(s);
      const StepOutcome out = env.step(a);
      log.add({s, a, out.reward, out.state, out.terminal, e});
      if (out.done()) break;
      s = out.state;
    }
  }
  return log;
}

double novelty(const State& s, const TransitionLog& log) {
  const int n = log.count(s);
  return n >= 1 ? 1.0 / std::sqrt(static_cast<double>(n)) : 1.0;
}

std::vector<SuccessorValue> successor_values(const Policy& policy, const Environment& env, const State& s) {
  std::vector<SuccessorValue> out;
  for (const auto& succ : env.successors(s))
    out.push_back({succ.action, succ.state, succ.terminal, succ.terminal ? 0.0 : state_value(policy, succ.state)});
  return out;
}

std::vector<CriticalState> extract_critical(const Policy& policy, const Environment& env, const TransitionLog& log) {
  std::vector<CriticalState> out;
  for (const State& s : log.distinct_states()) {
    if (env.is_terminal(s)) continue;
    const double v = state_value(policy, s);
    auto succ = successor_values(policy, env, s);
    bool maximal = true;
    for (const auto& sv : succ) maximal = maximal && v >= sv.value;
    if (maximal) out.push_back({s, v, std::move(succ)});
  }
  return out;
}

std::vector<AlternativeEnvironment> generate_alternatives(const Environment& env, const State& s_c,
                                                          const TransitionLog& log, double alpha,
                                                          std::size_t critical_index) {
  if (alpha < 0.0 || alpha > 1.0) throw AuditError("alpha must lie in [0, 1]");
  env.spec().validate(s_c);
  std::vector<AlternativeEnvironment> out;
  const auto& features = env.spec().features;
  for (std::size_t f = 0; f < features.size(); ++f) {
    for (int v = 0; v < features[f].cardinality; ++v) {
      if (v == s_c[f]) continue;
      State start = env.intervene(s_c, f, v);
      const double nov = novelty(start, log);
      if (nov > alpha) out.push_back({critical_index, s_c, f, v, std::move(start), nov});
    }
  }
  return out;
}

ordered_json state_to_json(const EnvSpec& spec, const State& s) {
  ordered_json j = ordered_json::object();
  for (std::size_t i = 0; i < s.size() && i < spec.features.size(); ++i) j[spec.features[i].name] = s[i];
  return j;
}

ordered_json critical_to_json(const EnvSpec& spec, const std::vector<CriticalState>& critical) {
  ordered_json arr = ordered_json::array();
  for (std::size_t i = 0; i < critical.size(); ++i) {
    const auto& c = critical[i];
    ordered_json succ = ordered_json::array();
    for (const auto& sv : c.successors)
      succ.push_back({{"action", sv.action}, {"state", sv.state.values}, {"terminal", sv.terminal}, {"value", sv.value}});
    arr.push_back({{"index", i},
                   {"state", c.state.values},
                   {"features", state_to_json(spec, c.state)},
                   {"value", c.value},
                   {"successors", std::move(succ)}});
  }
  return arr;
}

ordered_json alternatives_to_json(const EnvSpec& spec, const std::vector<AlternativeEnvironment>& alts) {
  ordered_json arr = ordered_json::array();
  for (const auto& a : alts)
    arr.push_back({{"critical_index", a.critical_index},
                   {"base_state", a.base.values},
                   {"feature", spec.features.at(a.feature).name},
                   {"feature_index", a.feature},
                   {"value", a.value},
                   {"start_state", a.start.values},
                   {"novelty", a.novelty}});
  return arr;
}

}  // namespace ccaudit
