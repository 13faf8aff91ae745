#include "ccaudit/taxi_env.hpp"

namespace ccaudit {
namespace {

EnvSpec taxi_spec(const TaxiConfig& cfg, std::uint64_t seed) {
  EnvSpec spec;
  spec.id = "taxi";
  spec.features = {
      {"x", TaxiEnv::kGridSize, "taxi column"},
      {"y", TaxiEnv::kGridSize, "taxi row"},
      {"descriptor", TaxiEnv::kStops, "passenger descriptor, coupled to destination"},
      {"passenger_loc", TaxiEnv::kStops + 1, "stop index, 4 = in taxi"},
      {"destination", TaxiEnv::kStops, "destination stop index"},
  };
  spec.action_count = 6;
  spec.max_episode_steps = cfg.max_episode_steps;
  spec.seed = seed;
  return spec;
}

bool at_stop(const State& s, int stop) {
  const auto& c = TaxiEnv::kStopCells[static_cast<std::size_t>(stop)];
  return s[TaxiEnv::kX] == c[0] && s[TaxiEnv::kY] == c[1];
}

}  // namespace

int couple_descriptor(int destination, double p_couple, Rng& rng) {
  const int image = TaxiEnv::descriptor_image(destination);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < p_couple) return image;
  std::uniform_int_distribution<int> other(0, TaxiEnv::kStops - 2);
  int d = other(rng);
  return d >= image ? d + 1 : d;
}

TaxiEnv::TaxiEnv(TaxiConfig cfg, std::uint64_t seed)
    : Environment(taxi_spec(cfg, seed)), cfg_(cfg) {
  if (cfg_.p_couple < 0.0 || cfg_.p_couple > 1.0) throw AuditError("p_couple must lie in [0, 1]");
}

bool TaxiEnv::is_terminal(const State& s) const {
  return s[kPassenger] != kInTaxi && s[kPassenger] == s[kDestination];
}

std::unique_ptr<Environment> TaxiEnv::clone() const { return std::make_unique<TaxiEnv>(*this); }

std::string TaxiEnv::action_name(int action) const {
  static const char* names[] = {"north", "south", "east", "west", "pickup", "dropoff"};
  if (action < 0 || action >= 6) return Environment::action_name(action);
  return names[action];
}

State TaxiEnv::initial_state(Rng& rng) {
  std::uniform_int_distribution<int> cell(0, kGridSize - 1);
  std::uniform_int_distribution<int> stop(0, kStops - 1);
  std::uniform_int_distribution<int> other(0, kStops - 2);
  State s(std::vector<int>(5, 0));
  s[kX] = cell(rng);
  s[kY] = cell(rng);
  s[kDestination] = stop(rng);
  const int p = other(rng);
  s[kPassenger] = p >= s[kDestination] ? p + 1 : p;
  s[kDescriptor] = couple_descriptor(s[kDestination], cfg_.p_couple, rng);
  return s;
}

double TaxiEnv::reward(const State& s, int action) const {
  State copy = s;
  return apply_taxi_action(copy, action, cfg_.illegal_action_reward).first;
}

std::pair<double, bool> TaxiEnv::advance(State& s, int action, Rng&) {
  return apply_taxi_action(s, action, cfg_.illegal_action_reward);
}

std::pair<double, bool> apply_taxi_action(State& s, int action, double illegal_reward) {
  using T = TaxiEnv;
  switch (action) {
    case T::kNorth:
      if (s[T::kY] > 0) --s[T::kY];
      return {-1.0, false};
    case T::kSouth:
      if (s[T::kY] < T::kGridSize - 1) ++s[T::kY];
      return {-1.0, false};
    case T::kEast:
      if (s[T::kX] < T::kGridSize - 1) ++s[T::kX];
      return {-1.0, false};
    case T::kWest:
      if (s[T::kX] > 0) --s[T::kX];
      return {-1.0, false};
    case T::kPickup:
      if (s[T::kPassenger] != T::kInTaxi && at_stop(s, s[T::kPassenger])) {
        s[T::kPassenger] = T::kInTaxi;
        return {10.0, false};
      }
      return {illegal_reward, false};
    case T::kDropoff:
      if (s[T::kPassenger] == T::kInTaxi && at_stop(s, s[T::kDestination])) {
        s[T::kPassenger] = s[T::kDestination];
        return {20.0, true};
      }
      return {illegal_reward, false};
    default:
      throw AuditError("taxi action out of range");
  }
}

}  // namespace ccaudit
