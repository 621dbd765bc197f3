#pragma once

#include "fasr/config.hpp"
#include "fasr/landscape.hpp"
#include "fasr/optimizer.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace fasr {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Final metrics of one seed; test metrics are averaged over held-out views.
struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double psnr_test = kNaN;
  double ssim_test = kNaN;
  double train_loss = kNaN;
  double test_loss = kNaN;
  double gap = kNaN;         // test_loss - train_loss
  double lambda_max = kNaN;  // only when measured
  double wall_s = kNaN;
  double n_gaussians = kNaN;
  double initial_train_loss = kNaN;
  int aborted_steps = 0;
};

inline constexpr std::array<std::string_view, 8> kMetricNames = {
    "psnr_test", "ssim_test", "train_loss", "test_loss", "gap", "lambda_max", "wall_s", "n_gaussians"};

double metric(const SeedResult& r, std::string_view name);
void set_metric(SeedResult& r, std::string_view name, double value);

struct RunSummary {
  std::string name;
  std::string config_hash;
  std::vector<SeedResult> seeds;
  std::vector<double> mean;  // per kMetricNames, over successful seeds
  std::vector<double> std;   // sample standard deviation (n - 1)
  bool complete = false;

  double mean_of(std::string_view metric_name) const;
  double std_of(std::string_view metric_name) const;
};

/// Mean and (n - 1) standard deviation of every metric over successful seeds.
void aggregate(RunSummary& summary);

/// Fixture shared by every mode for one seed: teacher renders, split, scale maps, trainee.
struct SeedSetup {
  SyntheticScene scene;
  ViewSplit split;
  std::vector<TrainView> train;
  std::vector<ImageBuffer> test_targets;
  GaussianCloud trainee;
};

SeedSetup prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// Mean loss over the given views.
double mean_view_loss(const GaussianCloud& cloud, const std::vector<Camera>& cams,
                      const std::vector<ImageBuffer>& targets, const ExperimentConfig& cfg);

struct TrainOutcome {
  GaussianCloud cloud;
  std::vector<StepStats> steps;
  std::vector<std::pair<int, double>> test_curve;  // (iteration, mean test loss)
  std::vector<VectorXd> snapshots;                 // flat parameters every snapshot_interval
  int aborted_steps = 0;
  double wall_s = 0.0;
};

struct TrainOptions {
  int iters = 0;
  int iteration_offset = 0;     // schedule position of the first step
  int schedule_total = 0;       // iteration count the late-phase fraction refers to
  bool densify = true;
  bool record_snapshots = false;
};

/// Trains `cloud` in place from a fresh Adam state.
TrainOutcome train_cloud(GaussianCloud cloud, const SeedSetup& setup, const ExperimentConfig& cfg,
                         std::uint64_t seed, const TrainOptions& opts);

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// Runs seeds scene.seed .. scene.seed + n_seeds - 1 (up to cfg.threads at once), writes
/// per-seed logs and summary files when output_root is set.
RunSummary run_experiment(const ExperimentConfig& cfg);

/// Frozen-count comparison: a densified baseline warm-up shared by every mode, then each
/// mode continues without densification. Reports lambda_max and losses per mode.
struct LandscapeRun {
  Mode mode = Mode::baseline;
  double lambda_max = kNaN;
  double train_loss = kNaN;
  double test_loss = kNaN;
  std::vector<VectorXd> trajectory;
};

struct LandscapeComparison {
  std::uint64_t seed = 0;
  std::vector<LandscapeRun> runs;
  PcaPlane plane;
  LossGrid grid;  // over the PCA plane, centered on its origin; empty unless requested
};

/// `variants` hold the FasrConfig of each compared method; lambda_max is measured on the
/// train-view loss at the end of each continuation.
LandscapeComparison compare_landscape(const ExperimentConfig& cfg, const std::vector<FasrConfig>& variants,
                                      std::uint64_t seed, bool with_grid);

double median(std::vector<double> v);

}  // namespace fasr
