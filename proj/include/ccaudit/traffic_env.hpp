#pragma once

#include "ccaudit/env_core.hpp"

namespace ccaudit {

/// Single-lane traffic corridor with a leading vehicle and one traffic
/// light.
///
/// Features (in order): agent_pos, goal_pos, vehicle_action, vehicle_pos,
/// light_pos, light_color. vehicle_pos == corridor_length means the vehicle
/// has left the road. vehicle_action is the move the vehicle makes on the
/// next step (0 stay, 1 forward). light_color: 0 red, 1 green.
///
/// The light governs leaving light_pos. It is demand actuated: a red light
/// turns green after a road user has waited one step at light_pos, and a
/// green light turns red once the leading vehicle has left the road. The
/// vehicle turns off the corridor when it moves past light_pos + 1.
struct TrafficConfig {
  int corridor_length = 6;
  int light_cell = 2;
  int agent_start = 0;
  int vehicle_start = 1;
  bool rule_following = true;
  double p_violate = 0.3;
  int max_episode_steps = 200;
};

class TrafficEnv final : public Environment {
 public:
  enum Feature : std::size_t { kAgent = 0, kGoal, kVehicleAction, kVehicle, kLight, kColor };
  enum Action : int { kStay = 0, kForward = 1 };
  enum Color : int { kRed = 0, kGreen = 1 };

  explicit TrafficEnv(TrafficConfig cfg = {}, std::uint64_t seed = 0);

  const TrafficConfig& config() const { return cfg_; }
  int off_road() const { return cfg_.corridor_length; }
  bool is_terminal(const State& s) const override;
  std::unique_ptr<Environment> clone() const override;
  std::string action_name(int action) const override;

  /// Reward of the agent's `action` from `s`. Independent of the vehicle's
  /// next decision, so no randomness is involved.
  double reward(const State& s, int action) const;

  /// Next vehicle move for the (already advanced) state `s`.
  int leading_vehicle_policy(const State& s, bool rule_following, Rng& rng) const;

 protected:
  State initial_state(Rng& rng) override;
  std::pair<double, bool> advance(State& s, int action, Rng& rng) override;

 private:
  std::pair<double, bool> move(State& s, int action) const;

  TrafficConfig cfg_;
};

}  // namespace ccaudit
