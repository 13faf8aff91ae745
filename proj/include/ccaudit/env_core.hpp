#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccaudit {

using Rng = std::mt19937_64;

/// Raised for contract violations: out-of-domain values, bad action
/// indices, malformed files.
class AuditError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-length vector of discrete feature values. Equality is exact.
struct State {
  std::vector<int> values;

  State() = default;
  explicit State(std::vector<int> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  int operator[](std::size_t i) const { return values[i]; }
  int& operator[](std::size_t i) { return values[i]; }

  friend bool operator==(const State&, const State&) = default;
  friend auto operator<=>(const State&, const State&) = default;
};

struct StateHash {
  std::size_t operator()(const State& s) const noexcept;
};

std::string to_string(const State& s);
std::ostream& operator<<(std::ostream& os, const State& s);

struct FeatureDomain {
  std::string name;
  int cardinality = 1;  // values are 0..cardinality-1
  std::string role;
};

struct Transition {
  State state;
  int action = 0;
  double reward = 0.0;
  State next_state;
  bool terminal = false;
  int episode = 0;
};

struct EnvSpec {
  std::string id;
  std::vector<FeatureDomain> features;
  int action_count = 1;
  int max_episode_steps = 200;
  std::uint64_t seed = 0;

  std::size_t feature_count() const { return features.size(); }
  /// Index of the named feature; throws AuditError when absent.
  std::size_t feature_index(const std::string& name) const;
  /// Throws AuditError when the state has the wrong length or an
  /// out-of-domain value.
  void validate(const State& s) const;
};

struct StepOutcome {
  State state;
  double reward = 0.0;
  bool terminal = false;   // true task termination (goal, failure)
  bool truncated = false;  // episode step cap reached
  bool done() const { return terminal || truncated; }
};

struct Successor {
  int action = 0;
  State state;
  double reward = 0.0;
  bool terminal = false;
};

/// Discrete-MDP simulator contract. Dynamics are deterministic given the
/// current state and action; randomness is drawn only from the instance's
/// own generator (episode initialization, and the rule-breaking vehicle in
/// the traffic task). Instances are single-owner; use clone() for parallel
/// or scratch work.
class Environment {
 public:
  explicit Environment(EnvSpec spec);
  virtual ~Environment() = default;

  const EnvSpec& spec() const { return spec_; }
  const State& state() const { return current_; }
  int steps_taken() const { return steps_; }

  State reset(std::uint64_t seed);
  StepOutcome step(int action);
  /// set_state(s) followed by step(action).
  StepOutcome step(const State& s, int action);
  /// Subsequent steps evolve from exactly `s`. The episode step counter
  /// restarts at zero.
  Environment& set_state(const State& s);

  /// do(feature := value): the returned state differs from `s` only in
  /// `feature`. Environments never re-derive a feature from its generative
  /// parents after reset, so the coupling is severed while dynamics keep
  /// reading the new value.
  State intervene(const State& s, std::size_t feature, int value) const;

  /// Holds `feature` at `value` after every step until cleared.
  void clamp(std::size_t feature, int value);
  void clear_clamp() { clamp_.reset(); }

  /// One entry per action, produced by stepping a restored copy. Empty for
  /// terminal states.
  std::vector<Successor> successors(const State& s) const;

  virtual bool is_terminal(const State& s) const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
  virtual std::string action_name(int action) const;

 protected:
  virtual State initial_state(Rng& rng) = 0;
  /// Advances `s` in place; returns (reward, terminal).
  virtual std::pair<double, bool> advance(State& s, int action, Rng& rng) = 0;

  Rng& rng() { return rng_; }

 private:
  EnvSpec spec_;
  State current_;
  Rng rng_;
  int steps_ = 0;
  std::optional<std::pair<std::size_t, int>> clamp_;
};

/// One JSON object per line. A non-empty `header` (a JSON object with a
/// "provenance" key) is written first; readers skip such lines.
void write_transitions_jsonl(std::ostream& os, const std::vector<Transition>& log, const std::string& header = "");
std::vector<Transition> read_transitions_jsonl(std::istream& is);

}  // namespace ccaudit
