#pragma once

#include "ccaudit/env_core.hpp"

#include <array>

namespace ccaudit {

/// 5x5 taxi task with an extra passenger-descriptor feature that is
/// coupled to the destination at reset.
///
/// Features (in order): x, y, descriptor, passenger_loc, destination.
/// passenger_loc is 0..3 for the four corner stops and 4 for "in taxi".
/// Actions: north, south, east, west, pickup, dropoff.
struct TaxiConfig {
  double p_couple = 1.0;
  double illegal_action_reward = -10.0;
  int max_episode_steps = 200;
};

class TaxiEnv final : public Environment {
 public:
  static constexpr int kGridSize = 5;
  static constexpr int kStops = 4;
  static constexpr int kInTaxi = 4;

  enum Feature : std::size_t { kX = 0, kY, kDescriptor, kPassenger, kDestination };
  enum Action : int { kNorth = 0, kSouth, kEast, kWest, kPickup, kDropoff };

  static constexpr std::array<std::array<int, 2>, kStops> kStopCells{{{0, 0}, {4, 0}, {0, 4}, {4, 4}}};

  explicit TaxiEnv(TaxiConfig cfg = {}, std::uint64_t seed = 0);

  const TaxiConfig& config() const { return cfg_; }
  bool is_terminal(const State& s) const override;
  std::unique_ptr<Environment> clone() const override;
  std::string action_name(int action) const override;

  /// Fixed bijection destination -> descriptor used by the coupling.
  static int descriptor_image(int destination) { return (destination + 1) % kStops; }
  /// Reward of `action` from `s` (no side effects).
  double reward(const State& s, int action) const;

 protected:
  State initial_state(Rng& rng) override;
  std::pair<double, bool> advance(State& s, int action, Rng& rng) override;

 private:
  TaxiConfig cfg_;
};

/// Taxi dynamics on a bare state: mutates `s`, returns (reward, terminal).
std::pair<double, bool> apply_taxi_action(State& s, int action, double illegal_reward);

/// Descriptor drawn at reset: descriptor_image(destination) with
/// probability p_couple, otherwise uniform over the remaining values.
int couple_descriptor(int destination, double p_couple, Rng& rng);

}  // namespace ccaudit
