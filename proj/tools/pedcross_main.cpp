#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pedcross/config.hpp"
#include "pedcross/pipeline.hpp"
#include "pedcross/random.hpp"

namespace {

namespace fs = std::filesystem;
using namespace pedcross;

int log_level() {
  // PEDCROSS_LOG=debug|info|warn|quiet (default info)
  const char* env = std::getenv("PEDCROSS_LOG");
  if (!env) return 1;
  const std::string v = env;
  if (v == "debug") return 0;
  if (v == "warn") return 2;
  if (v == "quiet") return 3;
  return 1;
}

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> lambda;
  std::string condition;
};

RunConfig resolve_config(const GlobalFlags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) cfg = load_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.out.empty()) cfg.out_dir = flags.out;
  if (flags.lambda) {
    cfg.tracker.lambda = *flags.lambda;
    cfg.tracker.validate();
  }
  if (!flags.condition.empty())
    cfg.run.conditions = {sim::condition_from_string(flags.condition)};
  return cfg;
}

sim::Condition single_condition(const RunConfig& cfg) {
  return cfg.run.conditions.empty() ? sim::Condition::kBaseline : cfg.run.conditions.front();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pedestrian crossing-intention pipeline"};
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "JSON config file");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override the global seed");
  app.add_option("--out", flags.out, "override the output directory");
  double lambda_value = 0.5;
  auto* lambda_opt =
      app.add_option("--lambda", lambda_value, "override the tracker cost weight in [0,1]");
  app.add_option("--condition", flags.condition,
                 "restrict to one condition: baseline|screen_display|traffic_light");

  auto* cmd_simulate = app.add_subcommand("simulate", "generate a scenario and its ground truth");
  std::string sim_dir;
  cmd_simulate->add_option("--dir", sim_dir, "scenario directory (default <out>/scenario)");

  auto* cmd_track = app.add_subcommand("track", "run pose filter, stereo range and tracking");
  std::string track_dir;
  cmd_track->add_option("--run", track_dir, "run directory with scenario.jsonl + truth.jsonl")
      ->required();

  auto* cmd_train = app.add_subcommand("train", "train the intention model on tracked runs");
  std::vector<std::string> train_dirs;
  std::string model_dir;
  cmd_train->add_option("--runs", train_dirs, "run directories with tracks.jsonl + truth.jsonl")
      ->required();
  cmd_train->add_option("--model-dir", model_dir, "output directory (default <out>/model)");

  auto* cmd_predict = app.add_subcommand("predict", "score triggered tracks with a trained model");
  std::string predict_dir, model_path;
  cmd_predict->add_option("--run", predict_dir, "run directory with tracks.jsonl")->required();
  cmd_predict->add_option("--model", model_path, "model file (default <out>/model/model.bin)");

  auto* cmd_evaluate = app.add_subcommand("evaluate", "aggregate metrics over evaluated runs");
  std::vector<std::string> eval_dirs;
  std::string report_dir;
  cmd_evaluate->add_option("--runs", eval_dirs, "run directories with predictions.jsonl")
      ->required();
  cmd_evaluate->add_option("--report-dir", report_dir, "output directory (default <out>/report)");

  auto* cmd_run_all =
      app.add_subcommand("run-all", "simulate, track, train, predict and evaluate end to end");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) flags.seed = seed_value;
  if (*lambda_opt) flags.lambda = lambda_value;

  try {
    const RunConfig cfg = resolve_config(flags);
    std::ostream& log = std::cout;

    if (*cmd_simulate) {
      const fs::path dir = sim_dir.empty() ? fs::path(cfg.out_dir) / "scenario" : fs::path(sim_dir);
      const auto scen = cfg.scenario_config(single_condition(cfg), mix_seed(cfg.seed, 0x5ce0ull));
      const auto status = pipeline::stage_simulate(cfg, scen, dir);
      if (log_level() <= 1)
        log << (status.skipped ? "up to date: " : "wrote: ") << dir.string() << "\n";
    } else if (*cmd_track) {
      const auto status = pipeline::stage_track(cfg, track_dir);
      const auto tracks = pipeline::load_tracks_file(track_dir);
      if (log_level() <= 1)
        log << (status.skipped ? "up to date: " : "wrote: ") << track_dir << "/tracks.jsonl"
            << " (tracks created: " << tracks.tracks_created
            << ", confirmed: " << tracks.confirmed_ids.size() << ")\n";
    } else if (*cmd_train) {
      const fs::path dir = model_dir.empty() ? fs::path(cfg.out_dir) / "model" : fs::path(model_dir);
      std::vector<fs::path> dirs(train_dirs.begin(), train_dirs.end());
      const auto status = pipeline::stage_train(cfg, dirs, dir);
      if (log_level() <= 1)
        log << (status.skipped ? "up to date: " : "wrote: ") << (dir / "model.bin").string()
            << "\n";
    } else if (*cmd_predict) {
      const fs::path model =
          model_path.empty() ? fs::path(cfg.out_dir) / "model" / "model.bin" : fs::path(model_path);
      const auto status = pipeline::stage_predict(cfg, predict_dir, model);
      if (log_level() <= 1)
        log << (status.skipped ? "up to date: " : "wrote: ") << predict_dir
            << "/predictions.jsonl\n";
    } else if (*cmd_evaluate) {
      const fs::path dir =
          report_dir.empty() ? fs::path(cfg.out_dir) / "report" : fs::path(report_dir);
      std::vector<fs::path> dirs(eval_dirs.begin(), eval_dirs.end());
      const auto status = pipeline::stage_evaluate(cfg, dirs, dir);
      if (log_level() <= 1) {
        log << (status.skipped ? "up to date: " : "wrote: ") << dir.string() << "\n";
        std::ifstream table(dir / "report.txt");
        log << table.rdbuf();
      }
    } else if (*cmd_run_all) {
      pipeline::run_all(cfg, log);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
