#pragma once

#include "fasr/frequency.hpp"
#include "fasr/optimizer.hpp"
#include "fasr/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fasr {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SceneSpec {
  std::uint64_t seed = 0;  // first seed; run k uses seed + k
  int n_gaussians = 200;
  int n_cameras = 8;
  CameraLayout layout = CameraLayout::ring;
  SceneOptions options;
};

struct LandscapeOptions {
  bool measure_lambda = false;  // lambda_max of the train loss at the end of each run
  int power_iters = 40;
  double power_tol = 1e-3;
  int grid_resolution = 41;
  double grid_half_width_factor = 2.0;  // times the trajectory radius in the PCA plane
  int snapshot_interval = 50;
  int pretrain_iters = 1000;            // frozen-count protocol: densified warm-up
  int continue_iters = 1000;            // then comparative runs without densification
};

struct ExperimentConfig {
  std::string name = "experiment";
  SceneSpec scene;
  TraineeOptions trainee;
  int n_train = 3;
  int total_iters = 2000;
  int eval_interval = 200;
  double lambda_ssim = 0.2;
  PerAttribute<double> lr = default_learning_rates(1.0);
  FasrConfig fasr;
  FrequencyConfig frequency;
  DensifyOptions densify;
  LandscapeOptions landscape;
  RenderOptions render;
  int n_seeds = 1;
  int threads = 1;
  std::filesystem::path output_root;  // empty: nothing written
  bool write_step_log = true;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Parses `key = value` lines grouped under `[section]` headers; `#` starts a comment.
/// A top-level `include = path` (relative to `base_dir`) is read first and then overridden.
/// Unknown keys and sections are errors.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Sets one field by its dotted name, e.g. "fasr.rho_mu".
void set_config_value(ExperimentConfig& cfg, std::string_view dotted_key, std::string_view value);

/// Every field in canonical order and full precision; parse_config(to_text(c)) == c.
std::string config_to_text(const ExperimentConfig& cfg);

/// FNV-1a 64 of the canonical text, ignoring output-only fields (output_root, threads).
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

/// output_root / "<name>-<hash>".
std::filesystem::path run_directory(const ExperimentConfig& cfg);

}  // namespace fasr
