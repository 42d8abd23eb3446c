#ifndef SIGPRED_DATA_HPP
#define SIGPRED_DATA_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigpred/core.hpp"
#include "sigpred/covnet.hpp"
#include "sigpred/hsfm.hpp"

namespace sigpred {

inline constexpr double kGridDt = 0.2;  // s, the resampling grid

/// One dataset line: `frame_id ped_id x y` in meters, world frame.
struct TrajectoryRecord {
  long frame_id = 0;
  int ped_id = 0;
  Vec2 position{0.0, 0.0};
};

inline std::vector<TrajectoryRecord> parse_trajectories(std::istream& in,
                                                        const std::string& name) {
  std::vector<TrajectoryRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream is(line);
    TrajectoryRecord rec;
    double x = 0.0, y = 0.0;
    if (!(is >> rec.frame_id >> rec.ped_id >> x >> y)) {
      throw DataError(name + ":" + std::to_string(line_no) +
                               ": malformed line '" + line + "'");
    }
    std::string trailing;
    if (is >> trailing) {
      throw DataError(name + ":" + std::to_string(line_no) +
                               ": trailing tokens in '" + line + "'");
    }
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw DataError(name + ":" + std::to_string(line_no) +
                               ": non-finite position");
    }
    rec.position = Vec2(x, y);
    out.push_back(rec);
  }
  return out;
}

inline std::vector<TrajectoryRecord> parse_trajectories(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("parse_trajectories: cannot open " + path);
  return parse_trajectories(f, path);
}

/// One pedestrian's positions on the global kGridDt grid; sample i sits at
/// time (start_step + i) * kGridDt.
struct PedSeries {
  int ped_id = 0;
  long start_step = 0;
  std::vector<Vec2> positions;
};

/// Linear interpolation of each pedestrian's track onto the global
/// target_dt grid spanning its observed interval. Record time is
/// frame_id * source_dt. Pedestrians with fewer than two frames are
/// dropped and reported to skip_report.
inline std::vector<PedSeries> resample(const std::vector<TrajectoryRecord>& records,
                                       double source_dt, double target_dt = kGridDt,
                                       std::ostream& skip_report = std::cerr) {
  if (source_dt <= 0.0 || target_dt <= 0.0) {
    throw std::invalid_argument("resample: dt must be > 0");
  }
  std::map<int, std::vector<std::pair<double, Vec2>>> tracks;  // ped -> (t, pos)
  for (const auto& r : records) {
    auto& tr = tracks[r.ped_id];
    const double t = static_cast<double>(r.frame_id) * source_dt;
    if (!tr.empty() && t <= tr.back().first) {
      throw std::invalid_argument("resample: non-monotone frames for ped " +
                                  std::to_string(r.ped_id));
    }
    tr.emplace_back(t, r.position);
  }

  std::vector<PedSeries> out;
  for (const auto& [ped_id, tr] : tracks) {
    if (tr.size() < 2) {
      skip_report << "skipped ped " << ped_id << ": fewer than two frames\n";
      continue;
    }
    const double t0 = tr.front().first;
    const double t1 = tr.back().first;
    const long k0 = static_cast<long>(std::ceil(t0 / target_dt - 1e-9));
    const long k1 = static_cast<long>(std::floor(t1 / target_dt + 1e-9));
    if (k1 < k0) {
      skip_report << "skipped ped " << ped_id << ": interval shorter than one grid step\n";
      continue;
    }
    PedSeries series;
    series.ped_id = ped_id;
    series.start_step = k0;
    series.positions.reserve(static_cast<size_t>(k1 - k0 + 1));
    size_t seg = 0;
    for (long k = k0; k <= k1; ++k) {
      const double t = static_cast<double>(k) * target_dt;
      while (seg + 2 < tr.size() && tr[seg + 1].first < t) ++seg;
      const auto& [ta, pa] = tr[seg];
      const auto& [tb, pb] = tr[seg + 1];
      const double u = std::clamp((t - ta) / (tb - ta), 0.0, 1.0);
      series.positions.push_back(pa + u * (pb - pa));
    }
    out.push_back(std::move(series));
  }
  return out;
}

struct TimedState {
  double t = 0.0;
  AgentState state;
};

struct TimedPos {
  double t = 0.0;
  Vec2 position{0.0, 0.0};
};

struct NeighborTrack {
  int ped_id = 0;
  std::vector<TimedState> observed;
};

/// One prediction task: n_obs observed states, n_pred future positions,
/// neighbors co-present over the whole observed span, and v1 = the
/// pedestrian's velocity at the last observed step.
struct PredictionWindow {
  int ped_id = 0;
  std::vector<TimedState> observed;
  std::vector<TimedPos> future;
  std::vector<NeighborTrack> neighbors_observed;
  Vec2 v1{0.0, 0.0};
};

namespace detail {

// Central differences inside, one-sided at the ends; headings from velocity
// with zero-velocity fallback to the previous heading.
inline std::vector<AgentState> kinematics_from_positions(
    const std::vector<Vec2>& pos, double dt) {
  const size_t n = pos.size();
  std::vector<AgentState> out(n);
  double prev_heading = 0.0;
  for (size_t i = 0; i < n; ++i) {
    Vec2 v;
    if (n == 1) {
      v = Vec2::Zero();
    } else if (i == 0) {
      v = (pos[1] - pos[0]) / dt;
    } else if (i + 1 == n) {
      v = (pos[n - 1] - pos[n - 2]) / dt;
    } else {
      v = (pos[i + 1] - pos[i - 1]) / (2.0 * dt);
    }
    double heading = prev_heading;
    if (v.norm() > 1e-9) heading = std::atan2(v.y(), v.x());
    prev_heading = heading;
    out[i] = AgentState(pos[i], v, heading, 0.0);
  }
  return out;
}

}  // namespace detail

/// Sliding windows over pedestrians continuously present for
/// n_obs + n_pred grid steps.
inline std::vector<PredictionWindow> build_windows(const std::vector<PedSeries>& series,
                                                   int n_obs = 8, int n_pred = 24,
                                                   int stride = 1) {
  if (n_obs < 1 || n_pred < 1 || stride < 1) {
    throw std::invalid_argument("build_windows: counts must be >= 1");
  }
  const int span = n_obs + n_pred;
  std::vector<PredictionWindow> out;

  for (const auto& ped : series) {
    const long n = static_cast<long>(ped.positions.size());
    for (long off = 0; off + span <= n; off += stride) {
      PredictionWindow w;
      w.ped_id = ped.ped_id;

      std::vector<Vec2> obs_pos(ped.positions.begin() + off,
                                ped.positions.begin() + off + n_obs);
      const auto states = detail::kinematics_from_positions(obs_pos, kGridDt);
      for (int i = 0; i < n_obs; ++i) {
        const double t = static_cast<double>(ped.start_step + off + i) * kGridDt;
        w.observed.push_back(TimedState{t, states[static_cast<size_t>(i)]});
      }
      w.v1 = states.back().velocity;
      for (int i = 0; i < n_pred; ++i) {
        const long k = off + n_obs + i;
        const double t = static_cast<double>(ped.start_step + k) * kGridDt;
        w.future.push_back(TimedPos{t, ped.positions[static_cast<size_t>(k)]});
      }

      // Neighbors must cover the whole observed span on the global grid.
      const long obs_first = ped.start_step + off;
      const long obs_last = obs_first + n_obs - 1;
      for (const auto& other : series) {
        if (other.ped_id == ped.ped_id) continue;
        const long of = other.start_step;
        const long ol = other.start_step + static_cast<long>(other.positions.size()) - 1;
        if (of > obs_first || ol < obs_last) continue;
        std::vector<Vec2> npos;
        for (long k = obs_first; k <= obs_last; ++k) {
          npos.push_back(other.positions[static_cast<size_t>(k - of)]);
        }
        const auto nstates = detail::kinematics_from_positions(npos, kGridDt);
        NeighborTrack track;
        track.ped_id = other.ped_id;
        for (int i = 0; i < n_obs; ++i) {
          track.observed.push_back(
              TimedState{static_cast<double>(obs_first + i) * kGridDt,
                         nstates[static_cast<size_t>(i)]});
        }
        w.neighbors_observed.push_back(std::move(track));
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

/// Ground-truth covariance proxy: squared deviation of the future position
/// from constant-velocity extrapolation, times I2.
struct CovTarget {
  double horizon = 0.0;  // s
  double scale = 0.0;    // m^2; sigma_bar = scale * I2

  Eigen::Matrix2d sigma_bar() const { return scale * Eigen::Matrix2d::Identity(); }
};

inline CovTarget gt_covariance(const PredictionWindow& w, int h_steps) {
  if (h_steps < 1 || h_steps > static_cast<int>(w.future.size())) {
    throw std::invalid_argument("gt_covariance: h_steps out of range [1, " +
                                std::to_string(w.future.size()) + "]");
  }
  const double horizon = static_cast<double>(h_steps) * kGridDt;
  const Vec2 x1 = w.observed.back().state.position;
  const Vec2 xh = w.future[static_cast<size_t>(h_steps) - 1].position;
  const Vec2 deviation = x1 + horizon * w.v1 - xh;
  return CovTarget{horizon, deviation.squaredNorm()};
}

/// Builds the HSFM scene at the last observed frame of a window. Goals are
/// linear extrapolations of the observed motion over the prediction horizon;
/// per-agent desired speed is the observed mean speed clamped to [0.1, 2.5].
inline SceneSnapshot scene_from_window(const PredictionWindow& w) {
  const double horizon = static_cast<double>(w.future.size()) * kGridDt;
  SceneSnapshot scene;
  scene.timestamp = w.observed.back().t;

  auto add_agent = [&](int id, const std::vector<TimedState>& observed) {
    const AgentState& last = observed.back().state;
    const Vec2& first_pos = observed.front().state.position;
    const double span = observed.back().t - observed.front().t;
    const Vec2 mean_vel =
        span > 0.0 ? Vec2((last.position - first_pos) / span) : Vec2::Zero();
    Goal goal;
    goal.target = last.position + mean_vel * horizon;
    goal.speed = std::clamp(mean_vel.norm(), 0.1, 2.5);
    scene.agents.emplace_back(id, last);
    scene.goals[id] = goal;
  };

  add_agent(w.ped_id, w.observed);
  for (const auto& nb : w.neighbors_observed) add_agent(nb.ped_id, nb.observed);
  return scene;
}

/// One training sample per (window, horizon step). Teacher forcing: the
/// incoming variance input at step h is the step h-1 target (0 at h = 1).
inline std::vector<CovSample> build_covnet_dataset(
    const std::vector<PredictionWindow>& windows, const HsfmParams& params) {
  std::vector<CovSample> out;
  for (const auto& w : windows) {
    const int n_pred = static_cast<int>(w.future.size());
    const SceneSnapshot scene = scene_from_window(w);
    const auto snapshots = rollout(scene, params, n_pred);
    const int idx = scene.index_of(w.ped_id);

    double prev_target = 0.0;
    for (int h = 1; h <= n_pred; ++h) {
      const AgentState& cur =
          snapshots[static_cast<size_t>(h) - 1].agents[static_cast<size_t>(idx)].second;
      const AgentState& nxt =
          snapshots[static_cast<size_t>(h)].agents[static_cast<size_t>(idx)].second;
      const double target = gt_covariance(w, h).scale;
      const CovNetInput in(Vec2::Zero(), cur.velocity, prev_target, prev_target,
                           nxt.position - cur.position);
      out.emplace_back(in, Vec2(target, target));
      prev_target = target;
    }
  }
  return out;
}

}  // namespace sigpred

#endif  // SIGPRED_DATA_HPP
