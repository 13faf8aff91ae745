#pragma once

#include "ccaudit/env_core.hpp"
#include "ccaudit/learner.hpp"

#include <functional>

namespace ccaudit::testing {

/// Small hand-specified MDP for oracle tests.
class TabularEnv final : public Environment {
 public:
  using Dynamics = std::function<std::pair<double, bool>(State&, int)>;
  using Terminal = std::function<bool(const State&)>;

  TabularEnv(EnvSpec spec, State start, Dynamics dyn, Terminal terminal)
      : Environment(std::move(spec)), start_(std::move(start)), dyn_(std::move(dyn)), terminal_(std::move(terminal)) {}

  bool is_terminal(const State& s) const override { return terminal_(s); }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<TabularEnv>(*this); }

 protected:
  State initial_state(Rng&) override { return start_; }
  std::pair<double, bool> advance(State& s, int a, Rng&) override { return dyn_(s, a); }

 private:
  State start_;
  Dynamics dyn_;
  Terminal terminal_;
};

/// Policy whose Q-values come from a lambda.
class ScriptedPolicy final : public Policy {
 public:
  ScriptedPolicy(std::string id, std::function<std::vector<double>(const State&)> q)
      : id_(std::move(id)), q_(std::move(q)) {}
  std::string id() const override { return id_; }
  std::vector<double> q_values(const State& s) const override { return q_(s); }

 private:
  std::string id_;
  std::function<std::vector<double>(const State&)> q_;
};

/// Policy that always plays `action`.
inline ScriptedPolicy constant_policy(std::string id, int action, int action_count) {
  return ScriptedPolicy(std::move(id), [action, action_count](const State&) {
    std::vector<double> q(static_cast<std::size_t>(action_count), 0.0);
    q[static_cast<std::size_t>(action)] = 1.0;
    return q;
  });
}

/// Corridor of `n` cells (feature "pos") with a 2-valued "flag" feature.
/// Actions: 0 left, 1 right. Reaching the last cell ends the episode with
/// +10; every other step costs -1. When flag is 1, moving right from cell 0
/// costs -10 and ends the episode.
inline TabularEnv corridor(int n) {
  EnvSpec spec;
  spec.id = "corridor";
  spec.features = {{"pos", n, "cell"}, {"flag", 2, "trap marker"}};
  spec.action_count = 2;
  spec.max_episode_steps = 50;
  const int last = n - 1;
  return TabularEnv(
      spec, State({0, 0}),
      [last](State& s, int a) -> std::pair<double, bool> {
        if (a == 1 && s[0] == 0 && s[1] == 1) return {-10.0, true};
        s[0] = a == 1 ? std::min(s[0] + 1, last) : std::max(s[0] - 1, 0);
        if (s[0] == last) return {10.0, true};
        return {-1.0, false};
      },
      [last](const State& s) { return s[0] == last; });
}

}  // namespace ccaudit::testing
