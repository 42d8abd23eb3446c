// Command-line entry point: predict / train-cov / eval / gen-data.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "sigpred/config.hpp"
#include "sigpred/pipeline.hpp"
#include "sigpred/synthetic.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

std::string config_key_help() {
  std::string s = "Config file keys (key = value, # comments):";
  for (const auto& k : sigpred::known_config_keys()) s += "\n  " + k;
  return s;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string holdout;
  std::string coverage_mode;
  std::string weights;
  std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config_path, "Run config file")->required();
  cmd->add_option("--out", f.out_dir, "Output directory (overrides out_dir)");
  cmd->add_option("--seed", f.seed, "Global seed (overrides seed)");
  cmd->add_option("--holdout", f.holdout, "Held-out scene stem (overrides holdout)");
  cmd->add_option("--coverage-mode", f.coverage_mode,
                  "mahalanobis or per_axis (overrides coverage_mode)");
  cmd->add_option("--weights", f.weights, "Weight file path (overrides weights)");
}

sigpred::RunConfig load_config(const CommonFlags& f) {
  sigpred::RunConfig cfg = sigpred::load_run_config(f.config_path);
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (!f.holdout.empty()) cfg.holdout = f.holdout;
  if (!f.weights.empty()) cfg.weights_path = f.weights;
  if (f.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(f.seed);
    cfg.mc.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
  }
  if (!f.coverage_mode.empty()) {
    if (f.coverage_mode == "mahalanobis") {
      cfg.coverage_mode = sigpred::CoverageMode::Mahalanobis;
    } else if (f.coverage_mode == "per_axis") {
      cfg.coverage_mode = sigpred::CoverageMode::PerAxis;
    } else {
      throw std::invalid_argument("--coverage-mode must be mahalanobis or per_axis");
    }
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pedestrian motion prediction with covariance estimation "
               "(forward propagation, Monte-Carlo, and a per-layer "
               "covariance network)"};
  app.require_subcommand(1);
  app.footer(config_key_help());

  CommonFlags flags;

  auto* predict = app.add_subcommand(
      "predict", "Run all methods on one prediction window and write predictions.csv");
  std::string scene_file;
  int window_index = 0;
  add_common(predict, flags);
  predict->add_option("--scene", scene_file, "Scene trajectory file")->required();
  predict->add_option("--window", window_index, "Window index within the scene")
      ->required();

  auto* train = app.add_subcommand(
      "train-cov", "Train the covariance net on all scenes except the holdout");
  add_common(train, flags);

  auto* eval = app.add_subcommand(
      "eval", "Evaluate FP/MC/SIGNN on the held-out scene; writes coverage.csv, "
              "mahalanobis.csv, errors.csv");
  add_common(eval, flags);

  auto* gen = app.add_subcommand(
      "gen-data", "Generate synthetic crossing-pedestrian scene files");
  std::string gen_prefix = "data/scene";
  int gen_scenes = 5;
  std::int64_t gen_seed = 1;
  gen->add_option("--prefix", gen_prefix, "Output path prefix");
  gen->add_option("--scenes", gen_scenes, "Number of scene files");
  gen->add_option("--seed", gen_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      for (int i = 0; i < gen_scenes; ++i) {
        sigpred::SyntheticSceneConfig scfg;
        scfg.seed = static_cast<std::uint64_t>(gen_seed) + static_cast<std::uint64_t>(i);
        const auto records = sigpred::generate_scene(scfg);
        const std::string path =
            gen_prefix + "_" + std::string(1, static_cast<char>('a' + i)) + ".txt";
        std::filesystem::create_directories(
            std::filesystem::path(path).parent_path().empty()
                ? "."
                : std::filesystem::path(path).parent_path().string());
        sigpred::write_scene(records, path);
        std::cout << "wrote " << path << " (" << records.size() << " records)\n";
      }
      return 0;
    }

    const sigpred::RunConfig cfg = load_config(flags);
    if (predict->parsed()) {
      sigpred::run_predict(cfg, scene_file, window_index);
    } else if (train->parsed()) {
      sigpred::run_train_cov(cfg);
    } else if (eval->parsed()) {
      sigpred::run_eval(cfg);
    }
    return 0;
  } catch (const sigpred::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const sigpred::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
