#include "ccaudit/traffic_env.hpp"

namespace ccaudit {
namespace {

constexpr double kLivingReward = -1.0;
constexpr double kFailureReward = -10.0;
constexpr double kGoalReward = 10.0;
constexpr double kCrossingReward = 10.0;

EnvSpec traffic_spec(const TrafficConfig& cfg, std::uint64_t seed) {
  const int n = cfg.corridor_length;
  EnvSpec spec;
  spec.id = "minigrid";
  spec.features = {
      {"agent_pos", n, "agent cell"},
      {"goal_pos", n, "goal cell"},
      {"vehicle_action", 2, "leading vehicle's next move (0 stay, 1 forward)"},
      {"vehicle_pos", n + 1, "leading vehicle cell, corridor length = off road"},
      {"light_pos", n, "stop-line cell of the traffic light"},
      {"light_color", 2, "0 red, 1 green"},
  };
  spec.action_count = 2;
  spec.max_episode_steps = cfg.max_episode_steps;
  spec.seed = seed;
  return spec;
}

}  // namespace

TrafficEnv::TrafficEnv(TrafficConfig cfg, std::uint64_t seed)
    : Environment(traffic_spec(cfg, seed)), cfg_(cfg) {
  const int n = cfg_.corridor_length;
  if (n < 4) throw AuditError("corridor must have at least 4 cells");
  if (cfg_.agent_start < 0 || cfg_.vehicle_start <= cfg_.agent_start || cfg_.vehicle_start >= n)
    throw AuditError("vehicle must start strictly ahead of the agent inside the corridor");
  if (cfg_.light_cell <= cfg_.agent_start || cfg_.light_cell >= n - 1)
    throw AuditError("light cell must lie between the start and the goal");
  if (cfg_.p_violate < 0.0 || cfg_.p_violate > 1.0) throw AuditError("p_violate must lie in [0, 1]");
}

bool TrafficEnv::is_terminal(const State& s) const {
  return s[kAgent] == s[kGoal] || (s[kVehicle] < off_road() && s[kAgent] == s[kVehicle]);
}

std::unique_ptr<Environment> TrafficEnv::clone() const { return std::make_unique<TrafficEnv>(*this); }

std::string TrafficEnv::action_name(int action) const {
  return action == kStay ? "stay" : action == kForward ? "forward" : Environment::action_name(action);
}

State TrafficEnv::initial_state(Rng& rng) {
  State s(std::vector<int>(6, 0));
  s[kAgent] = cfg_.agent_start;
  s[kGoal] = cfg_.corridor_length - 1;
  s[kVehicle] = cfg_.vehicle_start;
  s[kLight] = cfg_.light_cell;
  s[kColor] = kRed;
  s[kVehicleAction] = leading_vehicle_policy(s, cfg_.rule_following, rng);
  return s;
}

int TrafficEnv::leading_vehicle_policy(const State& s, bool rule_following, Rng& rng) const {
  const int vp = s[kVehicle];
  if (vp >= off_road()) return kStay;
  if (s[kAgent] == vp + 1) return kStay;  // blocked
  if (vp != s[kLight]) return kForward;
  bool obey = true;
  if (!rule_following) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    obey = u(rng) >= cfg_.p_violate;
  }
  const bool green = s[kColor] == kGreen;
  return (green == obey) ? kForward : kStay;
}

std::pair<double, bool> TrafficEnv::move(State& s, int action) const {
  const int n = cfg_.corridor_length;
  const int ap = s[kAgent];
  const int vp = s[kVehicle];
  const int lp = s[kLight];
  const bool red = s[kColor] == kRed;
  const bool on_road = vp < n;

  int vp_new = vp;
  if (on_road && s[kVehicleAction] == kForward) {
    vp_new = vp + 1;
    if (vp_new > lp + 1 || vp_new >= n) vp_new = n;
  }
  int ap_new = ap;
  if (action == kForward && ap < n - 1) ap_new = ap + 1;
  const bool moved = ap_new != ap;

  s[kAgent] = ap_new;
  s[kVehicle] = vp_new;

  if (red) {
    const bool vehicle_waited = on_road && vp == lp && vp_new == lp;
    const bool agent_waited = ap == lp && ap_new == lp;
    if (vehicle_waited || agent_waited) s[kColor] = kGreen;
  } else if (vp_new >= n) {
    s[kColor] = kRed;
  }

  if (vp_new < n && ap_new == vp_new) return {kFailureReward, true};
  if (moved && ap == lp && red) return {kFailureReward, true};
  if (ap_new == s[kGoal]) return {kGoalReward, true};
  if (moved && ap == lp) return {kCrossingReward, false};
  return {kLivingReward, false};
}

std::pair<double, bool> TrafficEnv::advance(State& s, int action, Rng& rng) {
  auto out = move(s, action);
  s[kVehicleAction] = leading_vehicle_policy(s, cfg_.rule_following, rng);
  return out;
}

double TrafficEnv::reward(const State& s, int action) const {
  State copy = s;
  return move(copy, action).first;
}

}  // namespace ccaudit
