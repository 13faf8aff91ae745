#include "ccaudit/feature_policy.hpp"

#include <set>
#include <sstream>

namespace ccaudit {

std::string to_string(const FeatureSubset& g) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < g.size(); ++i) os << (i ? " " : "") << g[i];
  os << ']';
  return os.str();
}

int active_count(const FeatureSubset& g) {
  int n = 0;
  for (int v : g) n += v != 0;
  return n;
}

std::optional<std::size_t> SubsetCatalog::index_of(const FeatureSubset& g) const {
  for (std::size_t i = 0; i < subsets.size(); ++i)
    if (subsets[i] == g) return i;
  return std::nullopt;
}

void SubsetCatalog::validate(std::size_t feature_count) const {
  if (subsets.empty()) throw AuditError("feature-subset catalog is empty");
  std::set<FeatureSubset> seen;
  for (const auto& g : subsets) {
    if (g.size() != feature_count)
      throw AuditError("subset " + to_string(g) + " has length " + std::to_string(g.size()) + ", expected " +
                       std::to_string(feature_count));
    for (int v : g)
      if (v != 0 && v != 1) throw AuditError("subset " + to_string(g) + " is not binary");
    if (!seen.insert(g).second) throw AuditError("duplicate subset " + to_string(g) + " in catalog");
  }
}

std::vector<double> mask_state(const State& s, const FeatureSubset& g) {
  if (s.size() != g.size())
    throw AuditError("mask length " + std::to_string(g.size()) + " does not match state length " +
                     std::to_string(s.size()));
  std::vector<double> out(2 * s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = g[i] ? static_cast<double>(s[i]) : 0.0;
    out[s.size() + i] = static_cast<double>(g[i]);
  }
  return out;
}

std::size_t sample_subset(const SubsetCatalog& catalog, Rng& rng) {
  if (catalog.subsets.empty()) throw AuditError("feature-subset catalog is empty");
  std::uniform_int_distribution<std::size_t> pick(0, catalog.size() - 1);
  return pick(rng);
}

SubsetPolicy::SubsetPolicy(std::shared_ptr<const FeatureParametrizedPolicy> fp, std::size_t index)
    : fp_(std::move(fp)), index_(index) {
  if (!fp_ || index_ >= fp_->catalog.size()) throw AuditError("subset index out of range");
}

std::string SubsetPolicy::id() const { return "G" + to_string(subset()); }

std::vector<double> SubsetPolicy::q_values(const State& s) const {
  return ccaudit::q_values(fp_->net, mask_state(s, subset()));
}

SubsetPolicy policy_for(std::shared_ptr<const FeatureParametrizedPolicy> fp, const FeatureSubset& g) {
  const auto idx = fp->catalog.index_of(g);
  if (!idx) throw AuditError("subset " + to_string(g) + " is not in the catalog");
  return SubsetPolicy(std::move(fp), *idx);
}

FeatureTrainResult train_feature_parametrized(Environment& env, const SubsetCatalog& catalog,
                                              const TrainConfig& cfg) {
  catalog.validate(env.spec().feature_count());
  TrainHooks hooks;
  hooks.tag_count = static_cast<int>(catalog.size());
  hooks.input_size = static_cast<int>(2 * env.spec().feature_count());
  hooks.begin_episode = [&catalog](Rng& rng) { return static_cast<int>(sample_subset(catalog, rng)); };
  hooks.encode = [&catalog](const State& s, int tag, Rng&) {
    return mask_state(s, catalog[static_cast<std::size_t>(tag)]);
  };
  auto eval_env = env.clone();
  const std::uint64_t eval_seed = cfg.seed ^ 0x9e3779b97f4a7c15ULL;
  hooks.evaluate = [&](const NetworkParams& net) {
    double sum = 0.0;
    for (const auto& g : catalog.subsets)
      sum += evaluate_greedy(
          *eval_env, [&](const State& s) { return greedy_action(q_values(net, mask_state(s, g))); },
          cfg.eval_episodes, eval_seed);
    return sum / static_cast<double>(catalog.size());
  };

  FeatureTrainResult out;
  out.train = run_dqn(env, cfg, hooks);
  out.policy = std::make_shared<FeatureParametrizedPolicy>(FeatureParametrizedPolicy{out.train.net, catalog});
  return out;
}

}  // namespace ccaudit
