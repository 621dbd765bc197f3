#pragma once

#include "fasr/experiment.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace fasr {

enum class GridStage { individual, joint };

struct GridCell {
  PerAttribute<double> rho{};
  double mean_psnr = kNaN;
  double std_psnr = kNaN;
};

using ExperimentRunner = std::function<RunSummary(const ExperimentConfig&)>;

/// Two-stage search over per-attribute perturbation radii: each attribute alone first, then
/// the cross product of every attribute's best value and the smaller candidates.
class GridSearch {
 public:
  explicit GridSearch(ExperimentConfig base, ExperimentRunner runner = run_experiment);

  /// Attributes with an empty candidate list are left at 0 and skipped.
  void run_individual(const PerAttribute<std::vector<double>>& candidates);
  /// Throws std::logic_error unless run_individual has completed.
  GridCell run_joint();

  bool individual_done() const { return individual_done_; }
  /// Cells of one stage in evaluation order.
  const std::vector<GridCell>& table(GridStage stage) const;
  /// Individual-stage cells for attribute `a` only.
  std::vector<GridCell> individual_table(Attribute a) const;
  /// Per-attribute argmax of the individual stage (0 for skipped attributes).
  const PerAttribute<double>& individual_best() const;
  /// Candidates admitted to the joint stage for `a`.
  std::vector<double> joint_candidates(Attribute a) const;

  /// Base config with the given radii, as evaluated for a cell.
  ExperimentConfig cell_config(const PerAttribute<double>& rho) const;

 private:
  GridCell evaluate(const PerAttribute<double>& rho);

  ExperimentConfig base_;
  ExperimentRunner runner_;
  PerAttribute<std::vector<double>> candidates_{};
  std::vector<GridCell> individual_;
  std::vector<Attribute> individual_attr_;
  std::vector<GridCell> joint_;
  PerAttribute<double> best_{};
  bool individual_done_ = false;
};

std::string grid_table_csv(const std::vector<GridCell>& cells);

}  // namespace fasr
