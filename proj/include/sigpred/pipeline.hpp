#ifndef SIGPRED_PIPELINE_HPP
#define SIGPRED_PIPELINE_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sigpred/config.hpp"
#include "sigpred/covnet.hpp"
#include "sigpred/data.hpp"
#include "sigpred/eval.hpp"
#include "sigpred/hsfm.hpp"
#include "sigpred/uncertainty.hpp"

namespace sigpred {

inline std::string scene_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

struct SceneWindows {
  std::string name;
  std::vector<PredictionWindow> windows;
};

inline SceneWindows load_scene_windows(const std::string& path, const RunConfig& cfg,
                                       std::ostream& skip_report = std::cerr) {
  const auto records = parse_trajectories(path);
  const auto series = resample(records, cfg.source_dt, kGridDt, skip_report);
  return SceneWindows{scene_stem(path),
                      build_windows(series, cfg.n_obs, cfg.n_pred, cfg.window_stride)};
}

inline std::vector<PredictionWindow> training_windows(const RunConfig& cfg,
                                                      std::ostream& skip_report = std::cerr) {
  std::vector<PredictionWindow> out;
  for (const auto& path : cfg.datasets) {
    if (scene_stem(path) == cfg.holdout) continue;
    auto sw = load_scene_windows(path, cfg, skip_report);
    out.insert(out.end(), sw.windows.begin(), sw.windows.end());
  }
  return out;
}

inline std::vector<PredictionWindow> holdout_windows(const RunConfig& cfg,
                                                     std::ostream& skip_report = std::cerr) {
  for (const auto& path : cfg.datasets) {
    if (scene_stem(path) == cfg.holdout) {
      return load_scene_windows(path, cfg, skip_report).windows;
    }
  }
  throw std::runtime_error("holdout scene '" + cfg.holdout + "' not among datasets");
}

inline Matrix6d initial_state_covariance(const McConfig& mc) {
  Matrix6d cov = Matrix6d::Zero();
  cov(0, 0) = cov(1, 1) = mc.init_pos_std * mc.init_pos_std;
  cov(2, 2) = cov(3, 3) = mc.init_vel_std * mc.init_vel_std;
  cov(4, 4) = mc.init_heading_std * mc.init_heading_std;
  return cov;
}

/// Evaluates one window with all requested methods. MC uses substream
/// (seed, window_id) so windows are independent but reproducible.
inline std::vector<PredictionOutcome> evaluate_window(
    const PredictionWindow& w, int window_id, const RunConfig& cfg,
    const std::optional<CovNetParams>& net) {
  const SceneSnapshot scene = scene_from_window(w);
  const int idx = scene.index_of(w.ped_id);
  const int n_pred = static_cast<int>(w.future.size());

  std::vector<PredictionOutcome> out;

  // FP
  {
    GaussianBelief belief0;
    belief0.mean = scene.agents[static_cast<size_t>(idx)].second;
    belief0.covariance = initial_state_covariance(cfg.mc);
    const auto beliefs = fp_rollout(belief0, scene, w.ped_id, cfg.hsfm, n_pred);
    PredictionOutcome o;
    o.method = Method::FP;
    o.window_id = window_id;
    for (int h = 1; h <= n_pred; ++h) {
      const auto& b = beliefs[static_cast<size_t>(h)];
      o.steps.push_back(PredictionOutcome::Step{
          b.mean.position, b.covariance.topLeftCorner<2, 2>(),
          w.future[static_cast<size_t>(h) - 1].position});
    }
    out.push_back(std::move(o));
  }

  // MC
  {
    McConfig mc = cfg.mc;
    mc.seed = detail::mix_seed(cfg.mc.seed, static_cast<std::uint64_t>(window_id));
    const auto steps = mc_estimate(scene, w.ped_id, cfg.hsfm, mc, n_pred);
    PredictionOutcome o;
    o.method = Method::MC;
    o.window_id = window_id;
    for (int h = 1; h <= n_pred; ++h) {
      const auto& s = steps[static_cast<size_t>(h)];
      o.steps.push_back(PredictionOutcome::Step{
          s.mean, s.cov2, w.future[static_cast<size_t>(h) - 1].position});
    }
    out.push_back(std::move(o));
  }

  // SIGNN
  if (net) {
    const auto steps = signn_rollout(cfg.signn_init_var, scene, w.ped_id, cfg.hsfm,
                                     *net, n_pred);
    PredictionOutcome o;
    o.method = Method::SIGNN;
    o.window_id = window_id;
    for (int h = 1; h <= n_pred; ++h) {
      const auto& s = steps[static_cast<size_t>(h)];
      Eigen::Matrix2d cov2 = Eigen::Matrix2d::Zero();
      cov2(0, 0) = s.variances.x();
      cov2(1, 1) = s.variances.y();
      o.steps.push_back(PredictionOutcome::Step{
          s.mean, cov2, w.future[static_cast<size_t>(h) - 1].position});
    }
    out.push_back(std::move(o));
  }

  return out;
}

inline std::vector<PredictionOutcome> evaluate_windows(
    const std::vector<PredictionWindow>& windows, const RunConfig& cfg,
    const std::optional<CovNetParams>& net) {
  std::vector<PredictionOutcome> out;
  for (size_t i = 0; i < windows.size(); ++i) {
    auto res = evaluate_window(windows[i], static_cast<int>(i), cfg, net);
    out.insert(out.end(), res.begin(), res.end());
  }
  return out;
}

inline std::string default_weights_path(const RunConfig& cfg) {
  return cfg.weights_path.empty()
             ? (std::filesystem::path(cfg.out_dir) / "covnet.txt").string()
             : cfg.weights_path;
}

/// Trains the covariance net on all scenes except the holdout and writes
/// the weight file plus train_loss.csv.
inline TrainResult run_train_cov(const RunConfig& cfg, std::ostream& log = std::cout) {
  const auto windows = training_windows(cfg);
  if (windows.empty()) throw std::runtime_error("train-cov: no training windows extracted");
  const auto dataset = build_covnet_dataset(windows, cfg.hsfm);
  log << "training on " << windows.size() << " windows (" << dataset.size()
      << " samples)\n";

  TrainResult result = covnet_train(dataset, cfg.train);

  std::filesystem::create_directories(cfg.out_dir);
  covnet_save(result.params, default_weights_path(cfg));

  std::ofstream loss_csv(std::filesystem::path(cfg.out_dir) / "train_loss.csv");
  loss_csv << "epoch,loss\n";
  for (size_t e = 0; e < result.loss_history.size(); ++e) {
    loss_csv << (e + 1) << "," << detail::fmt6(result.loss_history[e]) << "\n";
  }
  if (!result.loss_history.empty()) {
    log << "loss: " << result.loss_history.front() << " -> "
        << result.loss_history.back() << "\n";
  }
  return result;
}

/// Evaluates FP, MC and (when weights exist) SIGNN on the held-out scene and
/// writes coverage.csv, mahalanobis.csv and errors.csv.
inline std::vector<CoverageRow> run_eval(const RunConfig& cfg,
                                         std::ostream& log = std::cout) {
  const auto windows = holdout_windows(cfg);
  if (windows.empty()) throw std::runtime_error("eval: no windows in holdout scene");

  std::optional<CovNetParams> net;
  const std::string wpath = default_weights_path(cfg);
  if (std::filesystem::exists(wpath)) {
    net = covnet_load(wpath);
  } else {
    log << "warning: no weights at " << wpath << ", SIGNN omitted\n";
  }

  const auto outcomes = evaluate_windows(windows, cfg, net);
  const auto rows = coverage_table(outcomes, cfg.coverage_mode);

  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream f(std::filesystem::path(cfg.out_dir) / "coverage.csv");
    write_coverage_csv(rows, f);
  }
  {
    std::ofstream f(std::filesystem::path(cfg.out_dir) / "mahalanobis.csv");
    write_mahalanobis_csv(outcomes, f);
  }
  {
    std::ofstream f(std::filesystem::path(cfg.out_dir) / "errors.csv");
    write_errors_csv(outcomes, f);
  }
  render_coverage_table(rows, cfg.coverage_mode, log);
  return rows;
}

/// Runs all methods on one window of one scene and writes predictions.csv.
inline std::vector<PredictionOutcome> run_predict(const RunConfig& cfg,
                                                  const std::string& scene_file,
                                                  int window_index,
                                                  std::ostream& log = std::cout) {
  const auto sw = load_scene_windows(scene_file, cfg);
  if (window_index < 0 || window_index >= static_cast<int>(sw.windows.size())) {
    throw std::runtime_error("predict: window " + std::to_string(window_index) +
                             " out of range [0, " +
                             std::to_string(sw.windows.size()) + ")");
  }

  std::optional<CovNetParams> net;
  const std::string wpath = default_weights_path(cfg);
  if (std::filesystem::exists(wpath)) {
    net = covnet_load(wpath);
  } else {
    log << "warning: no weights at " << wpath << ", SIGNN omitted\n";
  }

  const auto outcomes =
      evaluate_window(sw.windows[static_cast<size_t>(window_index)], window_index,
                      cfg, net);

  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream f(std::filesystem::path(cfg.out_dir) / "predictions.csv");
  f << "method,step,horizon_s,mean_x,mean_y,cov_xx,cov_xy,cov_yy,truth_x,truth_y\n";
  for (const auto& o : outcomes) {
    for (size_t h = 0; h < o.steps.size(); ++h) {
      const auto& s = o.steps[h];
      f << method_name(o.method) << "," << (h + 1) << ","
        << detail::fmt6(static_cast<double>(h + 1) * kGridDt) << ","
        << detail::fmt6(s.mean.x()) << "," << detail::fmt6(s.mean.y()) << ","
        << detail::fmt6(s.cov2(0, 0)) << "," << detail::fmt6(s.cov2(0, 1)) << ","
        << detail::fmt6(s.cov2(1, 1)) << "," << detail::fmt6(s.truth.x()) << ","
        << detail::fmt6(s.truth.y()) << "\n";
    }
  }
  for (const auto& o : outcomes) {
    const auto& last = o.steps.back();
    log << method_name(o.method) << " step " << o.steps.size() << ": mean ("
        << last.mean.x() << ", " << last.mean.y() << "), cov trace "
        << last.cov2.trace() << "\n";
  }
  return outcomes;
}

}  // namespace sigpred

#endif  // SIGPRED_PIPELINE_HPP
