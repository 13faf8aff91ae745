#pragma once

#include "ccaudit/checkpoint.hpp"
#include "ccaudit/detector.hpp"

#include <json.hpp>

#include <iosfwd>
#include <map>

namespace ccaudit {

/// Conjunction of atoms `feature op value` or `feature op feature`, joined
/// by `&&`. Ops: == != < <= > >=. The empty string matches every state.
class Predicate {
 public:
  Predicate() = default;
  static Predicate parse(const std::string& text, const EnvSpec& spec);

  bool matches(const State& s) const;
  const std::string& text() const { return text_; }

 private:
  enum class Op { kEq, kNe, kLt, kLe, kGt, kGe };
  struct Atom {
    std::size_t feature = 0;
    Op op = Op::kEq;
    bool rhs_feature = false;
    int rhs = 0;  // value, or feature index when rhs_feature
  };
  std::string text_;
  std::vector<Atom> atoms_;
};

/// In states matching `when`, the learner sees `randomize` features resampled
/// uniformly over their domains.
struct ProtocolRule {
  std::string when;
  std::vector<std::string> randomize;
};

/// Ordered rules; the first rule whose predicate matches applies. An empty
/// rule list is plain training.
using RandomizationProtocol = std::vector<ProtocolRule>;

/// Validates every name and predicate against `spec` before training.
ObservationHook make_observation_hook(const RandomizationProtocol& protocol, const EnvSpec& spec);

struct ExperimentConfig {
  std::string env = "taxi";
  std::uint64_t seed = 1;
  nlohmann::ordered_json env_params = nlohmann::ordered_json::object();
  /// Overrides of env_params for the environment pi_correct trains in.
  nlohmann::ordered_json correct_env_params = nlohmann::ordered_json::object();
  std::string protocol = "none";  // protocol used by `train`
  TrainConfig train;
  TrainConfig train_fp;
  SubsetCatalog catalog;
  std::map<std::string, RandomizationProtocol> protocols;
  DetectorConfig detector;
};

ExperimentConfig default_config(const std::string& env);
/// Starts from the defaults of `j["env"]` (taxi when absent) and overrides
/// the keys present. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);
/// Names, predicates and catalog checked against the environment.
void validate_config(const ExperimentConfig& cfg);
/// 16 hex digits (FNV-1a over the canonical config dump).
std::string config_hash(const ExperimentConfig& cfg);

std::unique_ptr<Environment> make_env(const std::string& id, const nlohmann::ordered_json& params, std::uint64_t seed);

/// Trains the audited policy under `protocol` ("none", "confused",
/// "correct" or any configured name).
Checkpoint train_audited_policy(const ExperimentConfig& cfg, const std::string& protocol,
                                TrainResult* result = nullptr);
Checkpoint train_fp_policy(const ExperimentConfig& cfg, TrainResult* result = nullptr);

std::unique_ptr<Policy> policy_from_checkpoint(const Checkpoint& ckpt);
std::shared_ptr<const FeatureParametrizedPolicy> fp_from_checkpoint(const Checkpoint& ckpt);

/// Audits the checkpointed policy and writes transitions.jsonl,
/// critical.json, alternatives.json, report.json and summary.md into
/// `out_dir`. Returns the report document.
nlohmann::ordered_json run_audit(const ExperimentConfig& cfg, const Checkpoint& policy, const Checkpoint& fp,
                                 const std::string& out_dir);

/// Summary table (one row per report) plus findings and recommendations.
std::string render_summary(const std::vector<nlohmann::json>& reports);
/// Per-critical-state and per-finding CSV series for plotting.
void write_plot_series(const nlohmann::json& report, const std::string& out_dir);

/// Full protocol: pi_confused, pi_correct, pi_G, both audits, joint summary.
void run_reproduce(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace ccaudit
