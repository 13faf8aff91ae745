#pragma once

#include "ccaudit/learner.hpp"

#include <memory>
#include <optional>

namespace ccaudit {

/// Binary mask over features; 1 means the policy may observe the feature.
using FeatureSubset = std::vector<int>;

std::string to_string(const FeatureSubset& g);  // "[1 1 0 1 1]"
int active_count(const FeatureSubset& g);

struct SubsetCatalog {
  std::vector<FeatureSubset> subsets;

  std::size_t size() const { return subsets.size(); }
  const FeatureSubset& operator[](std::size_t i) const { return subsets[i]; }
  std::optional<std::size_t> index_of(const FeatureSubset& g) const;
  /// Non-empty, binary masks of length `feature_count`, no duplicates.
  void validate(std::size_t feature_count) const;
};

/// [s * g ; g]: masked-out coordinates read 0, followed by the mask itself.
std::vector<double> mask_state(const State& s, const FeatureSubset& g);

/// Uniform catalog index.
std::size_t sample_subset(const SubsetCatalog& catalog, Rng& rng);

/// One shared network conditioned on the mask, plus its catalog.
struct FeatureParametrizedPolicy {
  NetworkParams net;
  SubsetCatalog catalog;
};

/// Greedy view of one catalog member.
class SubsetPolicy : public Policy {
 public:
  SubsetPolicy(std::shared_ptr<const FeatureParametrizedPolicy> fp, std::size_t index);
  std::string id() const override;
  std::vector<double> q_values(const State& s) const override;
  const FeatureSubset& subset() const { return fp_->catalog[index_]; }
  std::size_t index() const { return index_; }

 private:
  std::shared_ptr<const FeatureParametrizedPolicy> fp_;
  std::size_t index_;
};

/// Throws AuditError when `g` is not in the catalog.
SubsetPolicy policy_for(std::shared_ptr<const FeatureParametrizedPolicy> fp, const FeatureSubset& g);

struct FeatureTrainResult {
  std::shared_ptr<FeatureParametrizedPolicy> policy;
  TrainResult train;
};

/// One subset per episode, states masked with it, replay tagged by subset.
/// Every update draws a subset uniformly and trains on a batch of that
/// subset only. Evaluation averages the greedy return of every member.
FeatureTrainResult train_feature_parametrized(Environment& env, const SubsetCatalog& catalog,
                                              const TrainConfig& cfg);

}  // namespace ccaudit
