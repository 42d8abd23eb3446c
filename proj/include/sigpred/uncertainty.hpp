#ifndef SIGPRED_UNCERTAINTY_HPP
#define SIGPRED_UNCERTAINTY_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "sigpred/core.hpp"
#include "sigpred/hsfm.hpp"

namespace sigpred {

/// Jacobian of the transition function at the agent's mean state.
struct Jacobian {
  Matrix6d g = Matrix6d::Zero();
  AgentState at_mean;
};

/// Monte-Carlo estimation config. The initial distribution is diagonal
/// Gaussian noise on position, velocity and heading (zero angular-rate
/// variance).
struct McConfig {
  int n_samples = 1000;
  std::uint64_t seed = 0;
  double init_pos_std = 0.05;      // m
  double init_vel_std = 0.1;       // m/s
  double init_heading_std = 0.05;  // rad
};

inline Vector6d default_fd_eps() { return Vector6d::Constant(1e-5); }

/// Central finite-difference Jacobian of flatten(T(.)) w.r.t. the agent's
/// own six state components, neighbors held at their means.
inline Jacobian jacobian_fd(const SceneSnapshot& scene, int agent_id,
                            const HsfmParams& params,
                            const Vector6d& eps = default_fd_eps()) {
  if ((eps.array() <= 0.0).any()) {
    throw std::invalid_argument("jacobian_fd: eps must be positive");
  }
  const int idx = scene.index_of(agent_id);

  auto step_with = [&](const Vector6d& x) {
    SceneSnapshot s = scene;
    s.agents[static_cast<size_t>(idx)].second = unflatten_state(x);
    return flatten_state(hsfm_step(s, params).agents[static_cast<size_t>(idx)].second);
  };

  const Vector6d x0 = flatten_state(scene.agents[static_cast<size_t>(idx)].second);
  Jacobian jac;
  jac.at_mean = scene.agents[static_cast<size_t>(idx)].second;
  for (int j = 0; j < kStateDim; ++j) {
    Vector6d xp = x0, xm = x0;
    xp[j] += eps[j];
    xm[j] -= eps[j];
    const Vector6d fp = step_with(xp);
    const Vector6d fm = step_with(xm);
    Vector6d diff = fp - fm;
    diff[4] = normalize_angle(fp[4] - fm[4]);  // heading row wraps
    jac.g.col(j) = diff / (2.0 * eps[j]);
  }
  return jac;
}

/// One linearized covariance propagation step:
/// mean' = T(mean) (neighbors at their means), cov' = sym(G cov G^T).
inline GaussianBelief fp_step(const GaussianBelief& belief, const SceneSnapshot& scene,
                              int agent_id, const HsfmParams& params,
                              const Vector6d& eps = default_fd_eps()) {
  const int idx = scene.index_of(agent_id);
  SceneSnapshot s = scene;
  s.agents[static_cast<size_t>(idx)].second = belief.mean;

  const Jacobian jac = jacobian_fd(s, agent_id, params, eps);
  const SceneSnapshot next = hsfm_step(s, params);

  Matrix6d cov = symmetrize(jac.g * belief.covariance * jac.g.transpose());
  const double lambda_min = min_eigenvalue(cov);
  if (lambda_min < -1e-6) {
    throw NumericalError("fp_step: propagated covariance lost PSD (min eigenvalue " +
                         std::to_string(lambda_min) + ")");
  }

  GaussianBelief out;
  out.mean = next.agents[static_cast<size_t>(idx)].second;
  out.covariance = cov;
  return out;
}

/// Iterated fp_step, re-linearizing at each new mean while the whole scene
/// advances deterministically. Returns steps+1 beliefs.
inline std::vector<GaussianBelief> fp_rollout(const GaussianBelief& belief0,
                                              const SceneSnapshot& scene, int agent_id,
                                              const HsfmParams& params, int steps,
                                              const Vector6d& eps = default_fd_eps()) {
  if (steps < 0) throw std::invalid_argument("fp_rollout: steps must be >= 0");
  const int idx = scene.index_of(agent_id);

  std::vector<GaussianBelief> out;
  out.reserve(static_cast<size_t>(steps) + 1);
  out.push_back(belief0);

  SceneSnapshot current = scene;
  current.agents[static_cast<size_t>(idx)].second = belief0.mean;
  for (int k = 0; k < steps; ++k) {
    GaussianBelief next = fp_step(out.back(), current, agent_id, params, eps);
    current = hsfm_step(current, params);
    out.push_back(std::move(next));
  }
  return out;
}

namespace detail {

// splitmix64; mixes (seed, sample index) into an independent substream seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Per-step position statistics of a Monte-Carlo rollout.
struct McStep {
  Vec2 mean{0.0, 0.0};
  Eigen::Matrix2d cov2 = Eigen::Matrix2d::Zero();
};

/// Samples initial scenes (every agent perturbed, one coherent draw per
/// sample), rolls each through the full multi-agent dynamics and returns the
/// tracked agent's per-step position sample mean and unbiased covariance.
/// Deterministic given cfg.seed; sample i uses substream (seed, i).
inline std::vector<McStep> mc_estimate(const SceneSnapshot& scene, int agent_id,
                                       const HsfmParams& params, const McConfig& cfg,
                                       int steps) {
  if (cfg.n_samples < 2) {
    throw std::invalid_argument("mc_estimate: n_samples must be >= 2");
  }
  if (steps < 0) throw std::invalid_argument("mc_estimate: steps must be >= 0");
  const int idx = scene.index_of(agent_id);
  const size_t n_steps = static_cast<size_t>(steps) + 1;

  std::vector<std::vector<Vec2>> positions(n_steps);
  for (auto& v : positions) v.reserve(static_cast<size_t>(cfg.n_samples));

  for (int i = 0; i < cfg.n_samples; ++i) {
    std::mt19937_64 rng(detail::mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> gauss(0.0, 1.0);

    SceneSnapshot s = scene;
    for (auto& [id, st] : s.agents) {
      st.position.x() += cfg.init_pos_std * gauss(rng);
      st.position.y() += cfg.init_pos_std * gauss(rng);
      st.velocity.x() += cfg.init_vel_std * gauss(rng);
      st.velocity.y() += cfg.init_vel_std * gauss(rng);
      st.heading = normalize_angle(st.heading + cfg.init_heading_std * gauss(rng));
    }

    positions[0].push_back(s.agents[static_cast<size_t>(idx)].second.position);
    for (int k = 0; k < steps; ++k) {
      s = hsfm_step(s, params);
      positions[static_cast<size_t>(k) + 1].push_back(
          s.agents[static_cast<size_t>(idx)].second.position);
    }
  }

  // Reduction in fixed sample-index order.
  std::vector<McStep> out(n_steps);
  const double n = static_cast<double>(cfg.n_samples);
  for (size_t k = 0; k < n_steps; ++k) {
    Vec2 mean = Vec2::Zero();
    for (const Vec2& p : positions[k]) mean += p;
    mean /= n;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const Vec2& p : positions[k]) {
      const Vec2 d = p - mean;
      cov += d * d.transpose();
    }
    cov /= (n - 1.0);
    out[k] = McStep{mean, cov};
  }
  return out;
}

}  // namespace sigpred

#endif  // SIGPRED_UNCERTAINTY_HPP
