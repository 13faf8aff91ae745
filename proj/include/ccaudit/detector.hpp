#pragma once

#include "ccaudit/analyzer.hpp"
#include "ccaudit/feature_policy.hpp"

namespace ccaudit {

struct RolloutResult {
  std::string policy_id;
  double ret = 0.0;
  int steps = 0;
  bool terminated_early = false;
  std::vector<int> actions;
};

/// Greedy k-step rollout from the alternative's start state with the
/// intervened feature held at its value for the whole rollout.
RolloutResult rollout_return(const Environment& env, const AlternativeEnvironment& alt, const Policy& policy, int k);

struct DetectorConfig {
  int k = 3;
  double delta = 10.0;
  double alpha = 0.9;
  int episodes = 100;
  std::uint64_t seed = 1;
};

struct ConfusionFinding {
  AlternativeEnvironment alt;
  double audited_return = 0.0;
  std::vector<double> subset_returns;  // catalog order
  std::size_t best_subset = 0;
  double best_return = 0.0;
  double margin = 0.0;
  int tie_horizon = 0;  // horizon that settled the winner; k when untied
};

/// Finding iff max_G R(G) - R_pi >= delta. Subsets tied on the k-step return
/// are re-run over doubled horizons (2k, 4k, ... up to the episode cap) until
/// one leads; remaining ties go to the fewest active features, then the
/// lowest catalog index.
std::optional<ConfusionFinding> detect(const Environment& env, const AlternativeEnvironment& alt,
                                       const Policy& audited, const std::vector<const Policy*>& subset_policies,
                                       const SubsetCatalog& catalog, int k, double delta);

/// Highest return, then fewest active features, then lowest index.
std::size_t best_subset_index(const std::vector<double>& returns, const SubsetCatalog& catalog);

struct CriticalSummary {
  std::size_t index = 0;
  State state;
  double value = 0.0;
  std::size_t alternatives = 0;
  std::size_t findings = 0;
};

struct Recommendation {
  std::size_t feature = 0;
  FeatureSubset subset;
  std::vector<State> states;
  std::size_t findings = 0;
};

struct ConfusionReport {
  std::string env_id;
  std::string audited_id;
  DetectorConfig config;
  SubsetCatalog catalog;
  int episodes = 0;
  std::size_t transitions = 0;
  std::vector<CriticalState> critical;
  std::vector<AlternativeEnvironment> alternatives;
  std::vector<ConfusionFinding> findings;
  std::vector<CriticalSummary> per_critical;
  std::vector<std::string> warnings;

  double average_alternatives() const;
  std::size_t states_with_findings() const;
};

struct AuditArtifacts {
  TransitionLog log;
  ConfusionReport report;
};

/// collect -> critical states -> alternatives -> detection, in the order
/// (critical index, feature, value).
AuditArtifacts audit(const Policy& audited, std::shared_ptr<const FeatureParametrizedPolicy> fp, Environment& env,
                     const DetectorConfig& cfg);

/// Findings grouped by (intervened feature, winning subset), ordered by
/// feature index then catalog index.
std::vector<Recommendation> recommend(const ConfusionReport& report);

nlohmann::ordered_json report_to_json(const EnvSpec& spec, const ConfusionReport& report);

}  // namespace ccaudit
