#include "ccaudit/learner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ccaudit {

int greedy_action(std::span<const double> q) {
  if (q.empty()) throw AuditError("empty Q-vector");
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

int select_action(const NetworkParams& net, std::span<const double> input, double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw AuditError("epsilon must lie in [0, 1]");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (epsilon > 0.0 && u(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, net.output_size() - 1);
    return pick(rng);
  }
  return greedy_action(q_values(net, input));
}

double state_value(const Policy& policy, const State& s) {
  const auto q = policy.q_values(s);
  return *std::max_element(q.begin(), q.end());
}

std::vector<double> encode_state(const State& s) { return {s.values.begin(), s.values.end()}; }

std::vector<double> QPolicy::q_values(const State& s) const {
  return ccaudit::q_values(net_, encode_state(s));
}

double evaluate_greedy(Environment& env, const std::function<int(const State&)>& act, int episodes,
                       std::uint64_t seed) {
  if (episodes < 1) throw AuditError("evaluation needs at least one episode");
  Rng seeds(seed);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    State s = env.reset(seeds());
    for (;;) {
      const StepOutcome out = env.step(act(s));
      total += out.reward;
      if (out.done()) break;
      s = out.state;
    }
  }
  return total / episodes;
}

TrainResult run_dqn(Environment& env, const TrainConfig& cfg, const TrainHooks& hooks) {
  if (cfg.batch_size < 1 || cfg.target_sync < 1 || cfg.max_steps < 1)
    throw AuditError("batch size, target sync and step budget must be positive");
  if (!hooks.encode || !hooks.begin_episode) throw AuditError("training hooks incomplete");

  Rng rng(cfg.seed);
  TrainResult res;
  res.net = NetworkParams::random(hooks.input_size, cfg.hidden, env.spec().action_count, rng);
  NetworkParams target = res.net;
  Optimizer opt(cfg.optimizer, cfg.learning_rate);
  ReplayBuffer replay(cfg.memory, hooks.input_size, hooks.tag_count);
  NetworkParams grad;

  const long min_steps = cfg.min_steps >= 0 ? cfg.min_steps : cfg.epsilon.decay_steps;
  long next_eval = cfg.eval_interval;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  std::uniform_int_distribution<int> tag_dist(0, hooks.tag_count - 1);
  auto pick_tag = [&tag_dist](Rng& r) { return tag_dist(r); };

  while (res.steps < cfg.max_steps) {
    const int tag = hooks.begin_episode(rng);
    State s = env.reset(rng());
    std::vector<double> obs = hooks.encode(s, tag, rng);
    for (;;) {
      const int a = select_action(res.net, obs, cfg.epsilon.value(res.steps), rng);
      const StepOutcome out = env.step(a);
      std::vector<double> next_obs = hooks.encode(out.state, tag, rng);
      replay.push(obs, a, out.reward, next_obs, out.terminal, tag);
      ++res.steps;

      // Tags are drawn per update rather than per episode: episode lengths
      // differ a lot between tags and would otherwise skew the update share.
      const int update_tag = hooks.tag_count > 1 ? pick_tag(rng) : 0;
      if (replay.count(update_tag) >= batch) {
        const TdBatch b = replay.make_batch(replay.sample(batch, rng, update_tag));
        const double loss = td_loss(res.net, target, b, cfg.gamma, &grad);
        if (!std::isfinite(loss) || !grad.all_finite()) {
          std::ostringstream msg;
          msg << "training diverged at step " << res.steps << " (update " << res.updates << "): loss=" << loss;
          throw AuditError(msg.str());
        }
        opt.apply(res.net, grad);
        ++res.updates;
        if (res.updates % cfg.target_sync == 0) target = res.net;
      }
      if (out.done() || res.steps >= cfg.max_steps) break;
      obs = std::move(next_obs);
      s = out.state;
    }
    ++res.episodes;

    if (hooks.evaluate && cfg.eval_interval > 0 && res.steps >= next_eval) {
      next_eval += cfg.eval_interval;
      const double ret = hooks.evaluate(res.net);
      res.history.push_back({res.steps, ret});
      if (res.history.size() >= 2 && res.steps >= min_steps) {
        const double prev = res.history[res.history.size() - 2].mean_return;
        if (std::abs(ret - prev) < cfg.plateau_tolerance * std::max(std::abs(prev), 1.0)) {
          res.stopped_early = true;
          break;
        }
      }
    }
  }
  return res;
}

TrainResult train_policy(Environment& env, const TrainConfig& cfg, const ObservationHook& observe) {
  TrainHooks hooks;
  hooks.input_size = static_cast<int>(env.spec().feature_count());
  hooks.begin_episode = [](Rng&) { return 0; };
  hooks.encode = [observe](const State& s, int, Rng& rng) {
    return encode_state(observe ? observe(s, rng) : s);
  };
  auto eval_env = env.clone();
  const std::uint64_t eval_seed = cfg.seed ^ 0x9e3779b97f4a7c15ULL;
  hooks.evaluate = [&, eval_seed](const NetworkParams& net) {
    Rng obs_rng(eval_seed);
    return evaluate_greedy(
        *eval_env,
        [&](const State& s) { return greedy_action(q_values(net, encode_state(observe ? observe(s, obs_rng) : s))); },
        cfg.eval_episodes, eval_seed);
  };
  return run_dqn(env, cfg, hooks);
}

}  // namespace ccaudit
