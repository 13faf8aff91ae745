#pragma once

#include "ccaudit/learner.hpp"

#include <json.hpp>

#include <unordered_map>

namespace ccaudit {

/// Ordered experience of a policy with an occurrence index n(s) over the
/// `state` field of each entry.
class TransitionLog {
 public:
  TransitionLog() = default;
  explicit TransitionLog(std::vector<Transition> transitions);

  void add(Transition t);
  const std::vector<Transition>& transitions() const { return log_; }
  std::size_t size() const { return log_.size(); }
  bool empty() const { return log_.empty(); }
  int count(const State& s) const;
  /// Distinct states in order of first occurrence.
  const std::vector<State>& distinct_states() const { return order_; }
  int episodes() const;

 private:
  std::vector<Transition> log_;
  std::unordered_map<State, int, StateHash> counts_;
  std::vector<State> order_;
};

/// Greedy unroll of `policy` for `episodes` resets seeded from `seed`.
TransitionLog collect_transitions(const Policy& policy, Environment& env, int episodes, std::uint64_t seed);

/// 1/sqrt(n(s)), or 1 for unseen states.
double novelty(const State& s, const TransitionLog& log);

struct SuccessorValue {
  int action = 0;
  State state;
  bool terminal = false;
  double value = 0.0;  // 0 for terminal successors
};

struct CriticalState {
  State state;
  double value = 0.0;
  std::vector<SuccessorValue> successors;
};

/// Successor values of `s` under `policy` (terminal successors count 0).
std::vector<SuccessorValue> successor_values(const Policy& policy, const Environment& env, const State& s);

/// Distinct logged states whose value is at least that of every successor,
/// in order of first occurrence. Terminal states are skipped.
std::vector<CriticalState> extract_critical(const Policy& policy, const Environment& env, const TransitionLog& log);

/// A(f -> v; s_c).
struct AlternativeEnvironment {
  std::size_t critical_index = 0;
  State base;
  std::size_t feature = 0;
  int value = 0;
  State start;
  double novelty = 1.0;
};

/// Every value-changing intervention on s_c whose resulting state has
/// novelty strictly above alpha, ordered by (feature, value).
std::vector<AlternativeEnvironment> generate_alternatives(const Environment& env, const State& s_c,
                                                          const TransitionLog& log, double alpha,
                                                          std::size_t critical_index = 0);

nlohmann::ordered_json critical_to_json(const EnvSpec& spec, const std::vector<CriticalState>& critical);
nlohmann::ordered_json alternatives_to_json(const EnvSpec& spec, const std::vector<AlternativeEnvironment>& alts);

/// Feature-name -> value map for reports.
nlohmann::ordered_json state_to_json(const EnvSpec& spec, const State& s);

}  // namespace ccaudit
