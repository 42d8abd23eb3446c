#ifndef SIGPRED_HSFM_HPP
#define SIGPRED_HSFM_HPP

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sigpred/core.hpp"

namespace sigpred {

/// Headed social force model parameters. The defaults are conventional
/// SFM literature values; every field is config-overridable.
struct HsfmParams {
  double relaxation_time = 0.5;    // s
  double desired_speed = 1.3;      // m/s, fallback when the goal carries none
  double repulsion_strength = 2.1; // mass-normalized, m/s^2
  double repulsion_range = 0.3;    // m
  double anisotropy = 0.4;         // lambda in [0, 1]
  double forward_gain = 1.0;
  double sideward_gain = 1.0;
  double heading_damping = 0.5;
  double heading_inertia = 1.0;
  double dt = 0.2;                 // s
  double goal_radius = 0.3;        // m

  void validate() const {
    if (relaxation_time <= 0.0) throw std::invalid_argument("HsfmParams: relaxation_time must be > 0");
    if (repulsion_range <= 0.0) throw std::invalid_argument("HsfmParams: repulsion_range must be > 0");
    if (dt <= 0.0) throw std::invalid_argument("HsfmParams: dt must be > 0");
    if (anisotropy < 0.0 || anisotropy > 1.0) throw std::invalid_argument("HsfmParams: anisotropy must be in [0,1]");
    if (goal_radius < 0.0) throw std::invalid_argument("HsfmParams: goal_radius must be >= 0");
  }
};

/// Goal attractor: target point plus the speed the agent wants to walk at.
/// speed <= 0 means "use HsfmParams::desired_speed".
struct Goal {
  Vec2 target{0.0, 0.0};
  double speed = 0.0;
};

/// All agents and their goals at one timestamp.
struct SceneSnapshot {
  std::vector<std::pair<int, AgentState>> agents;  // (agent_id, state), stable order
  std::map<int, Goal> goals;
  double timestamp = 0.0;

  void validate() const {
    std::map<int, int> seen;
    for (const auto& [id, st] : agents) {
      if (++seen[id] > 1) throw std::invalid_argument("SceneSnapshot: duplicate agent id " + std::to_string(id));
      if (goals.find(id) == goals.end()) {
        throw std::invalid_argument("SceneSnapshot: agent " + std::to_string(id) + " has no goal");
      }
      (void)st;
    }
  }

  int index_of(int agent_id) const {
    for (size_t i = 0; i < agents.size(); ++i) {
      if (agents[i].first == agent_id) return static_cast<int>(i);
    }
    throw std::invalid_argument("SceneSnapshot: no agent with id " + std::to_string(agent_id));
  }

  const AgentState& state_of(int agent_id) const {
    return agents[static_cast<size_t>(index_of(agent_id))].second;
  }
};

/// Mass-normalized net force, m/s^2.
struct ForceVector {
  Vec2 net{0.0, 0.0};
};

inline double desired_speed_of(const Goal& goal, const HsfmParams& params) {
  return goal.speed > 0.0 ? goal.speed : params.desired_speed;
}

/// Goal attraction: (v_des * e_goal - v) / tau. Inside goal_radius the
/// desired velocity is zero, so the force reduces to -v / tau.
inline ForceVector goal_force(const AgentState& state, const Goal& goal,
                              const HsfmParams& params) {
  const Vec2 to_goal = goal.target - state.position;
  const double dist = to_goal.norm();
  Vec2 desired_velocity = Vec2::Zero();
  if (dist > params.goal_radius) {
    desired_velocity = desired_speed_of(goal, params) * (to_goal / dist);
  }
  return ForceVector{(desired_velocity - state.velocity) / params.relaxation_time};
}

inline constexpr double kCombinedRadius = 0.6;       // m, two pedestrian bodies
inline constexpr double kCoincidentDistance = 1e-6;  // m

/// Anisotropic exponential repulsion from one neighbor.
/// Magnitude A * exp((r - d)/B), weighted by w(phi) = lambda + (1-lambda)(1+cos phi)/2
/// where phi is the angle between self's motion direction and the direction to other.
inline ForceVector repulsion_force(const AgentState& self, const AgentState& other,
                                   const HsfmParams& params) {
  Vec2 delta = self.position - other.position;  // points away from other
  double d = delta.norm();
  Vec2 away;
  if (d < kCoincidentDistance) {
    away = Vec2(1.0, 0.0);  // deterministic fallback, +x
    d = 0.0;
  } else {
    away = delta / d;
  }

  const double magnitude =
      params.repulsion_strength * std::exp((kCombinedRadius - d) / params.repulsion_range);

  Vec2 motion_dir;
  const double speed = self.velocity.norm();
  if (speed > 1e-9) {
    motion_dir = self.velocity / speed;
  } else {
    motion_dir = Vec2(std::cos(self.heading), std::sin(self.heading));
  }
  const double cos_phi = motion_dir.dot(-away);  // direction to other
  const double w = params.anisotropy + (1.0 - params.anisotropy) * 0.5 * (1.0 + cos_phi);

  return ForceVector{magnitude * w * away};
}

/// Net mass-normalized force on the agent at index i of the scene.
inline ForceVector net_force(const SceneSnapshot& scene, size_t i,
                             const HsfmParams& params) {
  const auto& [id, state] = scene.agents[i];
  Vec2 f = goal_force(state, scene.goals.at(id), params).net;
  for (size_t j = 0; j < scene.agents.size(); ++j) {
    if (j == i) continue;
    f += repulsion_force(state, scene.agents[j].second, params).net;
  }
  return ForceVector{f};
}

/// Integrates one agent by dt given its net world-frame force. The force is
/// decomposed in the body frame: the forward component accelerates the agent
/// along its heading, the sideward component turns it. Semi-implicit Euler,
/// rates first.
inline AgentState integrate_agent(const AgentState& s, const ForceVector& force,
                                  const HsfmParams& p) {
  const Vec2 heading_dir(std::cos(s.heading), std::sin(s.heading));
  const Vec2 side_dir(-std::sin(s.heading), std::cos(s.heading));
  const double f_fwd = force.net.dot(heading_dir);
  const double f_side = force.net.dot(side_dir);

  AgentState out = s;
  out.angular_rate =
      s.angular_rate +
      p.dt * (p.sideward_gain * f_side - p.heading_damping * s.angular_rate) /
          p.heading_inertia;
  out.heading = normalize_angle(s.heading + p.dt * out.angular_rate);
  out.velocity = s.velocity + p.dt * p.forward_gain * f_fwd * heading_dir;
  out.position = s.position + p.dt * out.velocity;
  return out;
}

/// One transition T(.): advances every agent by dt. Deterministic.
inline SceneSnapshot hsfm_step(const SceneSnapshot& scene, const HsfmParams& params) {
  params.validate();
  SceneSnapshot out;
  out.goals = scene.goals;
  out.timestamp = scene.timestamp + params.dt;
  out.agents.reserve(scene.agents.size());
  for (size_t i = 0; i < scene.agents.size(); ++i) {
    const ForceVector f = net_force(scene, i, params);
    out.agents.emplace_back(scene.agents[i].first,
                            integrate_agent(scene.agents[i].second, f, params));
  }
  return out;
}

/// Stacked transitions; returns steps+1 snapshots including the input.
inline std::vector<SceneSnapshot> rollout(const SceneSnapshot& scene,
                                          const HsfmParams& params, int steps) {
  if (steps < 0) throw std::invalid_argument("rollout: steps must be >= 0");
  std::vector<SceneSnapshot> out;
  out.reserve(static_cast<size_t>(steps) + 1);
  out.push_back(scene);
  for (int k = 0; k < steps; ++k) {
    out.push_back(hsfm_step(out.back(), params));
  }
  return out;
}

}  // namespace sigpred

#endif  // SIGPRED_HSFM_HPP
