#include "ccaudit/detector.hpp"

#include <algorithm>
#include <map>

namespace ccaudit {

using nlohmann::ordered_json;

RolloutResult rollout_return(const Environment& env, const AlternativeEnvironment& alt, const Policy& policy, int k) {
  if (k < 1) throw AuditError("rollout horizon k must be at least 1");
  auto sim = env.clone();
  sim->set_state(alt.start);
  sim->clamp(alt.feature, alt.value);
  RolloutResult r;
  r.policy_id = policy.id();
  State s = alt.start;
  while (r.steps < k) {
    if (sim->is_terminal(s)) {
      r.terminated_early = true;
      break;
    }
    const int a = policy.act(s);
    const StepOutcome out = sim->step(a);
    r.actions.push_back(a);
    r.ret += out.reward;
    ++r.steps;
    if (out.terminal) {
      r.terminated_early = r.steps < k;
      break;
    }
    s = out.state;
  }
  return r;
}

std::size_t best_subset_index(const std::vector<double>& returns, const SubsetCatalog& catalog) {
  if (returns.empty() || returns.size() != catalog.size()) throw AuditError("one return per catalog subset required");
  std::size_t best = 0;
  for (std::size_t i = 1; i < returns.size(); ++i) {
    if (returns[i] > returns[best] ||
        (returns[i] == returns[best] && active_count(catalog[i]) < active_count(catalog[best])))
      best = i;
  }
  return best;
}

std::optional<ConfusionFinding> detect(const Environment& env, const AlternativeEnvironment& alt,
                                       const Policy& audited, const std::vector<const Policy*>& subset_policies,
                                       const SubsetCatalog& catalog, int k, double delta) {
  if (!(delta > 0.0)) throw AuditError("delta must be positive");
  if (subset_policies.size() != catalog.size()) throw AuditError("one policy per catalog subset required");
  ConfusionFinding f;
  f.alt = alt;
  f.audited_return = rollout_return(env, alt, audited, k).ret;
  for (const Policy* p : subset_policies) f.subset_returns.push_back(rollout_return(env, alt, *p, k).ret);
  f.best_return = *std::max_element(f.subset_returns.begin(), f.subset_returns.end());
  f.margin = f.best_return - f.audited_return;
  if (f.margin < delta) return std::nullopt;

  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < f.subset_returns.size(); ++i)
    if (f.subset_returns[i] == f.best_return) tied.push_back(i);
  f.tie_horizon = k;
  const int cap = env.spec().max_episode_steps;
  while (tied.size() > 1 && f.tie_horizon < cap) {
    f.tie_horizon = std::min(2 * f.tie_horizon, cap);
    std::vector<double> longer;
    for (std::size_t i : tied) longer.push_back(rollout_return(env, alt, *subset_policies[i], f.tie_horizon).ret);
    const double top = *std::max_element(longer.begin(), longer.end());
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < tied.size(); ++j)
      if (longer[j] == top) keep.push_back(tied[j]);
    tied = std::move(keep);
  }
  f.best_subset = tied.front();
  for (std::size_t i : tied)
    if (active_count(catalog[i]) < active_count(catalog[f.best_subset])) f.best_subset = i;
  return f;
}

double ConfusionReport::average_alternatives() const {
  if (critical.empty()) return 0.0;
  return static_cast<double>(alternatives.size()) / static_cast<double>(critical.size());
}

std::size_t ConfusionReport::states_with_findings() const {
  std::size_t n = 0;
  for (const auto& c : per_critical) n += c.findings > 0;
  return n;
}

AuditArtifacts audit(const Policy& audited, std::shared_ptr<const FeatureParametrizedPolicy> fp, Environment& env,
                     const DetectorConfig& cfg) {
  if (!fp) throw AuditError("feature-parametrized policy missing");
  fp->catalog.validate(env.spec().feature_count());
  if (fp->net.input_size() != static_cast<int>(2 * env.spec().feature_count()))
    throw AuditError("feature-parametrized network input does not match the environment");

  AuditArtifacts out;
  ConfusionReport& rep = out.report;
  rep.env_id = env.spec().id;
  rep.audited_id = audited.id();
  rep.config = cfg;
  rep.catalog = fp->catalog;
  rep.episodes = cfg.episodes;

  out.log = collect_transitions(audited, env, cfg.episodes, cfg.seed);
  rep.transitions = out.log.size();
  rep.critical = extract_critical(audited, env, out.log);
  if (rep.critical.empty()) rep.warnings.push_back("no critical states extracted; audit produced no findings");

  std::vector<SubsetPolicy> views;
  for (std::size_t i = 0; i < fp->catalog.size(); ++i) views.emplace_back(fp, i);
  std::vector<const Policy*> ptrs;
  for (const auto& v : views) ptrs.push_back(&v);

  for (std::size_t ci = 0; ci < rep.critical.size(); ++ci) {
    CriticalSummary sum{ci, rep.critical[ci].state, rep.critical[ci].value, 0, 0};
    for (auto& alt : generate_alternatives(env, rep.critical[ci].state, out.log, cfg.alpha, ci)) {
      if (auto f = detect(env, alt, audited, ptrs, fp->catalog, cfg.k, cfg.delta)) {
        rep.findings.push_back(std::move(*f));
        ++sum.findings;
      }
      rep.alternatives.push_back(std::move(alt));
      ++sum.alternatives;
    }
    rep.per_critical.push_back(std::move(sum));
  }
  return out;
}

std::vector<Recommendation> recommend(const ConfusionReport& report) {
  std::map<std::pair<std::size_t, std::size_t>, Recommendation> groups;
  for (const auto& f : report.findings) {
    auto& g = groups[{f.alt.feature, f.best_subset}];
    g.feature = f.alt.feature;
    g.subset = report.catalog[f.best_subset];
    if (std::find(g.states.begin(), g.states.end(), f.alt.base) == g.states.end()) g.states.push_back(f.alt.base);
    ++g.findings;
  }
  std::vector<Recommendation> out;
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

ordered_json report_to_json(const EnvSpec& spec, const ConfusionReport& rep) {
  const auto feature_name = [&spec](std::size_t f) { return spec.features.at(f).name; };
  ordered_json j;
  j["format"] = "ccaudit-report/1";
  j["env"] = rep.env_id;
  j["audited_policy"] = rep.audited_id;
  j["config"] = {{"k", rep.config.k},
                 {"delta", rep.config.delta},
                 {"alpha", rep.config.alpha},
                 {"episodes", rep.config.episodes},
                 {"seed", rep.config.seed},
                 {"intervention", "persistent"},
                 {"tie_break", "highest k-step return, then highest return over doubled horizons, then fewest active features, then lowest catalog index"}};
  ordered_json names = ordered_json::array();
  for (const auto& f : spec.features) names.push_back(f.name);
  j["feature_names"] = std::move(names);
  ordered_json cat = ordered_json::array();
  for (const auto& g : rep.catalog.subsets) cat.push_back(g);
  j["catalog"] = std::move(cat);

  j["summary"] = {{"episodes", rep.episodes},
                  {"transitions", rep.transitions},
                  {"critical_states", rep.critical.size()},
                  {"alternatives", rep.alternatives.size()},
                  {"average_alternatives", rep.average_alternatives()},
                  {"detections", rep.states_with_findings()},
                  {"findings", rep.findings.size()}};

  ordered_json crit = ordered_json::array();
  for (const auto& c : rep.per_critical)
    crit.push_back({{"index", c.index},
                    {"state", c.state.values},
                    {"features", state_to_json(spec, c.state)},
                    {"value", c.value},
                    {"alternatives", c.alternatives},
                    {"findings", c.findings}});
  j["critical_states"] = std::move(crit);

  ordered_json finds = ordered_json::array();
  for (const auto& f : rep.findings) {
    ordered_json returns = ordered_json::array();
    for (std::size_t i = 0; i < f.subset_returns.size(); ++i)
      returns.push_back({{"subset", rep.catalog[i]}, {"return", f.subset_returns[i]}});
    finds.push_back({{"critical_index", f.alt.critical_index},
                     {"state", f.alt.base.values},
                     {"feature", feature_name(f.alt.feature)},
                     {"feature_index", f.alt.feature},
                     {"value", f.alt.value},
                     {"start_state", f.alt.start.values},
                     {"novelty", f.alt.novelty},
                     {"audited_return", f.audited_return},
                     {"subset_returns", std::move(returns)},
                     {"best_subset", rep.catalog[f.best_subset]},
                     {"best_return", f.best_return},
                     {"tie_horizon", f.tie_horizon},
                     {"margin", f.margin}});
  }
  j["findings"] = std::move(finds);

  ordered_json recs = ordered_json::array();
  for (const auto& r : recommend(rep)) {
    ordered_json states = ordered_json::array();
    for (const auto& s : r.states) states.push_back(s.values);
    recs.push_back({{"feature", feature_name(r.feature)},
                    {"subset", r.subset},
                    {"states", std::move(states)},
                    {"findings", r.findings}});
  }
  j["recommendations"] = std::move(recs);
  j["warnings"] = rep.warnings;
  return j;
}

}  // namespace ccaudit
