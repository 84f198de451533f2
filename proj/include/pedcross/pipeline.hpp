#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <vector>

#include "pedcross/config.hpp"
#include "pedcross/eval.hpp"
#include "pedcross/intent.hpp"
#include "pedcross/sim.hpp"
#include "pedcross/track.hpp"

namespace pedcross::pipeline {

inline constexpr int kSchemaVersion = 1;

// ---- scenario files (line-delimited; one frame record per line) ----

void write_scenario_files(const sim::Scenario& scenario, const std::filesystem::path& dir);

struct LoadedScenario {
  sim::Scenario scenario;  // config + agents + vehicle trace, no detections
  std::vector<std::vector<sim::Detection>> detections;  // per frame
};

LoadedScenario load_scenario_files(const std::filesystem::path& dir);

json scenario_config_to_json(const sim::ScenarioConfig& c);
sim::ScenarioConfig scenario_config_from_json(const json& j);

// ---- model file: flat float64 tensors behind a JSON shape header ----

void save_model(const intent::StackedGruModel& model, const std::filesystem::path& path);
intent::StackedGruModel load_model(const std::filesystem::path& path);

// ---- tracking stage ----

struct TrackStageOutput {
  double frame_rate = 30.0;
  int n_frames = 0;
  sim::Condition condition = sim::Condition::kBaseline;
  std::map<int, std::vector<intent::TrackFrameData>> track_frames;  // per track id
  std::vector<track::AssociationRecord> associations;
  std::vector<eval::FrameObservation> frame_observations;
  std::set<int> confirmed_ids;
  int tracks_created = 0;
};

/// Full per-frame chain: pose filter, stereo range, 15 m gate, tracker step,
/// local-context extraction for every live track.
TrackStageOutput run_tracking(const RunConfig& cfg, const LoadedScenario& loaded);

void write_tracks_file(const TrackStageOutput& out, const RunConfig& cfg,
                       const std::filesystem::path& dir);
TrackStageOutput load_tracks_file(const std::filesystem::path& dir);

// ---- window datasets ----

struct WindowDataset {
  std::vector<intent::ObservationWindow> windows;
  std::vector<int> labels;  // 1 = cross
};

/// Harvests labeled windows from tracker output, labeling each window by the
/// dominant truth agent over its matched frames.
void harvest_training_windows(const RunConfig& cfg, const TrackStageOutput& tracks,
                              const std::map<int, bool>& agent_labels, WindowDataset& dataset);

/// Truth-linked dataset straight from the simulator (no tracker): streams come
/// from each agent's own detections. Used for model experiments and tests.
WindowDataset dataset_from_truth(const RunConfig& cfg, const sim::Scenario& scenario,
                                 int window_stride);

std::map<int, bool> load_agent_labels(const std::filesystem::path& dir);

// ---- prediction records ----

struct PredictionRecord {
  int track_id = -1;
  int trigger_frame = -1;
  double probability = 0.5;
  bool cross = false;
  std::optional<int> truth_agent;
};

std::vector<PredictionRecord> run_prediction(const RunConfig& cfg, const TrackStageOutput& tracks,
                                             const intent::StackedGruModel& model);
void write_predictions_file(const std::vector<PredictionRecord>& predictions, const RunConfig& cfg,
                            sim::Condition condition, const std::filesystem::path& dir);
std::vector<PredictionRecord> load_predictions_file(const std::filesystem::path& dir);

// ---- evaluation ----

eval::ScenarioOutcome evaluate_run_dir(const RunConfig& cfg, const std::filesystem::path& dir);
eval::MetricsReport evaluate_dirs(const RunConfig& cfg,
                                  const std::vector<std::filesystem::path>& dirs);
void write_report_files(const eval::MetricsReport& report, const std::filesystem::path& dir);

// ---- on-disk stages with checksummed staging ----

struct StageStatus {
  bool skipped = false;
};

StageStatus stage_simulate(const RunConfig& cfg, const sim::ScenarioConfig& scen,
                           const std::filesystem::path& dir);
StageStatus stage_track(const RunConfig& cfg, const std::filesystem::path& dir);
StageStatus stage_train(const RunConfig& cfg, const std::vector<std::filesystem::path>& run_dirs,
                        const std::filesystem::path& model_dir);
StageStatus stage_predict(const RunConfig& cfg, const std::filesystem::path& run_dir,
                          const std::filesystem::path& model_path);
StageStatus stage_evaluate(const RunConfig& cfg, const std::vector<std::filesystem::path>& run_dirs,
                           const std::filesystem::path& report_dir);

/// simulate -> track -> train -> predict -> evaluate over the configured
/// condition/scenario grid; stages are skipped when their manifests match.
void run_all(const RunConfig& cfg, std::ostream& log);

}  // namespace pedcross::pipeline
