#ifndef SIGPRED_COVNET_HPP
#define SIGPRED_COVNET_HPP

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigpred/core.hpp"
#include "sigpred/hsfm.hpp"

namespace sigpred {

inline constexpr int kCovNetIn = 8;
inline constexpr int kCovNetH1 = 100;
inline constexpr int kCovNetH2 = 50;
inline constexpr int kCovNetOut = 2;

/// Weights of the 2-hidden-layer covariance predictor.
/// Layer sizes 8 -> 100 -> 50 -> 2 (log-variances on output).
struct CovNetParams {
  Eigen::MatrixXd w1{kCovNetH1, kCovNetIn};
  Eigen::VectorXd b1{kCovNetH1};
  Eigen::MatrixXd w2{kCovNetH2, kCovNetH1};
  Eigen::VectorXd b2{kCovNetH2};
  Eigen::MatrixXd w3{kCovNetOut, kCovNetH2};
  Eigen::VectorXd b3{kCovNetOut};

  static CovNetParams zeros() {
    CovNetParams p;
    p.w1.setZero(); p.b1.setZero();
    p.w2.setZero(); p.b2.setZero();
    p.w3.setZero(); p.b3.setZero();
    return p;
  }
};

/// Net input, 8 reals: state (x, y, vx, vy), incoming variances
/// (sx2, sy2), and the model-predicted next position (px, py).
/// Positions are expected pre-centered to the agent's current position.
struct CovNetInput {
  Eigen::Matrix<double, kCovNetIn, 1> v;

  CovNetInput() { v.setZero(); }
  CovNetInput(const Vec2& pos, const Vec2& vel, double sx2, double sy2,
              const Vec2& pred) {
    if (sx2 < 0.0 || sy2 < 0.0) {
      throw std::invalid_argument("CovNetInput: variances must be >= 0");
    }
    v << pos.x(), pos.y(), vel.x(), vel.y(), sx2, sy2, pred.x(), pred.y();
    if (!v.allFinite()) throw std::invalid_argument("CovNetInput: non-finite");
  }
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 128;
  std::uint64_t seed = 0;
  double init_scale = 0.1;
};

using CovSample = std::pair<CovNetInput, Vec2>;  // input, target (sx2, sy2)

inline constexpr double kTargetEps = 1e-4;  // m^2, floor inside log

namespace detail {

struct ForwardCache {
  Eigen::VectorXd z1, h1, z2, h2, z3;
};

inline ForwardCache covnet_forward_cache(const CovNetParams& p,
                                         const CovNetInput& in) {
  ForwardCache c;
  c.z1 = p.w1 * in.v + p.b1;
  c.h1 = c.z1.cwiseMax(0.0);
  c.z2 = p.w2 * c.h1 + p.b2;
  c.h2 = c.z2.cwiseMax(0.0);
  c.z3 = p.w3 * c.h2 + p.b3;
  return c;
}

}  // namespace detail

/// Forward pass; returns predicted variances (sx2, sy2) = exp(final layer).
inline Vec2 covnet_forward(const CovNetParams& p, const CovNetInput& in) {
  const auto c = detail::covnet_forward_cache(p, in);
  return Vec2(std::exp(c.z3[0]), std::exp(c.z3[1]));
}

/// Mean over the batch of sum over both axes of
/// (log(pred) - log(target + eps))^2.
inline double covnet_loss(const CovNetParams& p, const std::vector<CovSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("covnet_loss: empty batch");
  double total = 0.0;
  for (const auto& [in, target] : batch) {
    if (target.x() < 0.0 || target.y() < 0.0) {
      throw std::invalid_argument("covnet_loss: negative target variance");
    }
    const auto c = detail::covnet_forward_cache(p, in);
    for (int a = 0; a < kCovNetOut; ++a) {
      const double r = c.z3[a] - std::log(target[a] + kTargetEps);
      total += r * r;
    }
  }
  return total / static_cast<double>(batch.size());
}

/// Analytic gradient of covnet_loss. ReLU subgradient at 0 is 0.
inline CovNetParams covnet_backprop(const CovNetParams& p,
                                    const std::vector<CovSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("covnet_backprop: empty batch");
  CovNetParams g = CovNetParams::zeros();
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (const auto& [in, target] : batch) {
    const auto c = detail::covnet_forward_cache(p, in);

    Eigen::Vector2d dz3;
    for (int a = 0; a < kCovNetOut; ++a) {
      dz3[a] = 2.0 * (c.z3[a] - std::log(target[a] + kTargetEps)) * inv_n;
    }

    g.w3 += dz3 * c.h2.transpose();
    g.b3 += dz3;

    Eigen::VectorXd dh2 = p.w3.transpose() * dz3;
    Eigen::VectorXd dz2 =
        (c.z2.array() > 0.0).select(dh2.array(), 0.0).matrix();
    g.w2 += dz2 * c.h1.transpose();
    g.b2 += dz2;

    Eigen::VectorXd dh1 = p.w2.transpose() * dz2;
    Eigen::VectorXd dz1 =
        (c.z1.array() > 0.0).select(dh1.array(), 0.0).matrix();
    g.w1 += dz1 * in.v.transpose();
    g.b1 += dz1;
  }
  return g;
}

/// Mini-batch gradient descent. Weight init uniform in
/// [-init_scale, init_scale] from the seed; deterministic.
struct TrainResult {
  CovNetParams params;
  std::vector<double> loss_history;  // full-dataset loss after each epoch
};

inline TrainResult covnet_train(const std::vector<CovSample>& dataset,
                                const TrainConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("covnet_train: empty dataset");
  if (cfg.learning_rate < 0.0) throw std::invalid_argument("covnet_train: negative learning rate");
  if (cfg.batch_size < 1) throw std::invalid_argument("covnet_train: batch_size must be >= 1");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uni(-cfg.init_scale, cfg.init_scale);
  CovNetParams p;
  auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uni(rng);
  };
  fill(p.w1); fill(p.b1); fill(p.w2); fill(p.b2); fill(p.w3); fill(p.b3);

  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainResult result;
  result.loss_history.reserve(static_cast<size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<CovSample> batch;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i) batch.push_back(dataset[order[i]]);

      const CovNetParams g = covnet_backprop(p, batch);
      p.w1 -= cfg.learning_rate * g.w1;
      p.b1 -= cfg.learning_rate * g.b1;
      p.w2 -= cfg.learning_rate * g.w2;
      p.b2 -= cfg.learning_rate * g.b2;
      p.w3 -= cfg.learning_rate * g.w3;
      p.b3 -= cfg.learning_rate * g.b3;
    }
    result.loss_history.push_back(covnet_loss(p, dataset));
  }
  result.params = p;
  return result;
}

// ---------------------------------------------------------------------------
// Weight file: covnet-v1 text format.

namespace detail {

inline std::string fmt_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("fmt_double failed");
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& tok, int line_no) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw DataError("weight file: bad number '" + tok + "' at line " +
                             std::to_string(line_no));
  }
  return x;
}

}  // namespace detail

inline void covnet_save(const CovNetParams& p, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("covnet_save: cannot open " + path);
  f << "covnet-v1\n";
  f << "dims " << kCovNetIn << " " << kCovNetH1 << " " << kCovNetH2 << " "
    << kCovNetOut << "\n";
  auto block = [&](const char* name, const Eigen::MatrixXd& m) {
    f << name << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c) f << " ";
        f << detail::fmt_double(m(r, c));
      }
      f << "\n";
    }
  };
  block("w1", p.w1); block("b1", p.b1);
  block("w2", p.w2); block("b2", p.b2);
  block("w3", p.w3); block("b3", p.b3);
}

inline CovNetParams covnet_load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("covnet_load: cannot open " + path);
  int line_no = 0;
  auto next_line = [&]() {
    std::string line;
    if (!std::getline(f, line)) {
      throw DataError("weight file: unexpected end of file after line " +
                               std::to_string(line_no));
    }
    ++line_no;
    return line;
  };

  if (next_line() != "covnet-v1") {
    throw DataError("weight file: bad magic at line 1, expected covnet-v1");
  }
  {
    std::istringstream is(next_line());
    std::string tag;
    int in = 0, h1 = 0, h2 = 0, out = 0;
    is >> tag >> in >> h1 >> h2 >> out;
    if (tag != "dims" || in != kCovNetIn || h1 != kCovNetH1 || h2 != kCovNetH2 ||
        out != kCovNetOut) {
      throw DataError("weight file: bad dims header at line 2, expected 'dims 8 100 50 2'");
    }
  }

  CovNetParams p;
  auto block = [&](const char* name, Eigen::Ref<Eigen::MatrixXd> m) {
    std::istringstream hs(next_line());
    std::string tag;
    Eigen::Index rows = 0, cols = 0;
    hs >> tag >> rows >> cols;
    if (tag != name || rows != m.rows() || cols != m.cols()) {
      throw DataError(
          "weight file: bad block header at line " + std::to_string(line_no) +
          ", expected '" + name + " " + std::to_string(m.rows()) + " " +
          std::to_string(m.cols()) + "'");
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      std::istringstream rs(next_line());
      for (Eigen::Index c = 0; c < cols; ++c) {
        std::string tok;
        if (!(rs >> tok)) {
          throw DataError("weight file: short row at line " +
                                   std::to_string(line_no));
        }
        m(r, c) = detail::parse_double(tok, line_no);
      }
    }
  };
  block("w1", p.w1); block("b1", p.b1);
  block("w2", p.w2); block("b2", p.b2);
  block("w3", p.w3); block("b3", p.b3);
  return p;
}

// ---------------------------------------------------------------------------
// Recursive application along a rollout.

/// Per-step output of the covariance-prediction rollout.
struct SignnStep {
  Vec2 mean{0.0, 0.0};
  Vec2 variances{0.0, 0.0};  // (sx2, sy2); step 0 carries the initial values
};

/// Mean trajectory from the HSFM rollout; at each step the net maps
/// (current state, current variances, predicted next position) to the next
/// variances. Inputs are re-centered to the agent's current position.
inline std::vector<SignnStep> signn_rollout(const Vec2& init_variances,
                                            const SceneSnapshot& scene, int agent_id,
                                            const HsfmParams& params_hsfm,
                                            const CovNetParams& params_net, int steps) {
  if (steps < 0) throw std::invalid_argument("signn_rollout: steps must be >= 0");
  const int idx = scene.index_of(agent_id);
  const auto snapshots = rollout(scene, params_hsfm, steps);

  std::vector<SignnStep> out;
  out.reserve(static_cast<size_t>(steps) + 1);
  out.push_back(SignnStep{snapshots[0].agents[static_cast<size_t>(idx)].second.position,
                          init_variances});
  for (int k = 0; k < steps; ++k) {
    const AgentState& cur = snapshots[static_cast<size_t>(k)].agents[static_cast<size_t>(idx)].second;
    const AgentState& nxt = snapshots[static_cast<size_t>(k) + 1].agents[static_cast<size_t>(idx)].second;
    const Vec2& prev_var = out.back().variances;
    const CovNetInput in(Vec2::Zero(), cur.velocity, prev_var.x(), prev_var.y(),
                         nxt.position - cur.position);
    out.push_back(SignnStep{nxt.position, covnet_forward(params_net, in)});
  }
  return out;
}

}  // namespace sigpred

#endif  // SIGPRED_COVNET_HPP
