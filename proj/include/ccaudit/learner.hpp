#pragma once

#include "ccaudit/env_core.hpp"
#include "ccaudit/mlp.hpp"
#include "ccaudit/replay.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ccaudit {

/// Greedy action of a Q-vector; ties go to the lowest index.
int greedy_action(std::span<const double> q);

/// Epsilon-greedy choice on the network's Q-values for `input`.
int select_action(const NetworkParams& net, std::span<const double> input, double epsilon, Rng& rng);

/// Anything that scores actions in a state.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string id() const = 0;
  virtual std::vector<double> q_values(const State& s) const = 0;
  int act(const State& s) const { return greedy_action(q_values(s)); }
};

/// max_a Q(s, a).
double state_value(const Policy& policy, const State& s);

/// Raw feature values as network input.
std::vector<double> encode_state(const State& s);

/// Greedy policy over a plain Q-network fed with the raw state.
class QPolicy : public Policy {
 public:
  QPolicy(NetworkParams net, std::string id) : net_(std::move(net)), id_(std::move(id)) {}
  std::string id() const override { return id_; }
  std::vector<double> q_values(const State& s) const override;
  const NetworkParams& network() const { return net_; }

 private:
  NetworkParams net_;
  std::string id_;
};

struct TrainConfig {
  int hidden = 256;
  double learning_rate = 1e-4;
  double gamma = 0.99;
  std::size_t memory = 10000;
  EpsilonSchedule epsilon{0.9, 0.01, 100000};
  int batch_size = 64;
  int target_sync = 1000;  // in gradient updates
  OptimizerKind optimizer = OptimizerKind::kSgd;
  long max_steps = 200000;
  /// Early stop needs at least this many steps (defaults to the end of the
  /// epsilon decay) and a relative change below `plateau_tolerance` between
  /// two consecutive evaluations.
  long min_steps = -1;
  long eval_interval = 10000;
  int eval_episodes = 100;
  double plateau_tolerance = 0.01;
  std::uint64_t seed = 1;
};

struct EvalPoint {
  long step = 0;
  double mean_return = 0.0;
};

struct TrainResult {
  NetworkParams net;
  long steps = 0;
  long updates = 0;
  long episodes = 0;
  bool stopped_early = false;
  std::vector<EvalPoint> history;
};

/// Maps the true state to what the learner observes (feature randomization
/// protocols). Never touches the environment.
using ObservationHook = std::function<State(const State&, Rng&)>;

/// Pluggable pieces of the DQN loop. `begin_episode` picks the replay tag
/// for the coming episode; `encode` turns a state into network input for a
/// tag; `evaluate` scores the current network.
struct TrainHooks {
  int tag_count = 1;
  int input_size = 0;
  std::function<int(Rng&)> begin_episode;
  std::function<std::vector<double>(const State&, int tag, Rng&)> encode;
  std::function<double(const NetworkParams&)> evaluate;
};

/// Epsilon-greedy DQN with replay and a periodically synced target network.
/// One gradient step per environment step; each step draws a tag uniformly
/// and trains on a batch of that tag once it holds a full batch. Throws AuditError when the loss becomes non-finite.
TrainResult run_dqn(Environment& env, const TrainConfig& cfg, const TrainHooks& hooks);

/// Mean undiscounted return of greedy play over `episodes` resets seeded
/// from `seed`.
double evaluate_greedy(Environment& env, const std::function<int(const State&)>& act, int episodes,
                       std::uint64_t seed);

/// Plain DQN on the raw state, optionally seeing states through `observe`.
TrainResult train_policy(Environment& env, const TrainConfig& cfg, const ObservationHook& observe = {});

}  // namespace ccaudit
