#pragma once

#include "fasr/objective.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace fasr {

using Eigen::Vector2d;

class LandscapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 1e-4 * (1 + |w|_inf).
double default_hvp_step(const VectorXd& w);

/// (grad(w + h v) - grad(w - h v)) / (2 h). `h <= 0` selects default_hvp_step. A non-finite
/// result is retried once with h / 10, then raises LandscapeError.
VectorXd hvp_fd(const Objective& f, const VectorXd& w, const VectorXd& v, double h = 0.0);

struct LambdaMaxResult {
  double lambda = 0.0;   // |dominant eigenvalue|
  int iterations = 0;
  bool converged = false;
};

/// Power iteration on hvp_fd from a seeded random start, stopping when the relative change
/// of the Rayleigh quotient drops below `tol` or after `iters` products (iters >= 20).
LambdaMaxResult lambda_max(const Objective& f, const VectorXd& w, int iters, std::uint64_t seed,
                           double tol = 1e-3);

struct PcaPlane {
  VectorXd origin;
  VectorXd axis1;
  VectorXd axis2;
  double variance1 = 0.0;
  double variance2 = 0.0;
  /// Fewer than two independent directions in the snapshots; axis2 (and for identical
  /// snapshots also axis1) is then an arbitrary orthonormal completion.
  bool one_dimensional = false;
  std::vector<std::vector<Vector2d>> coords;  // per trajectory, per snapshot
};

/// Top-2 principal plane of all snapshots pooled, by block power iteration on the Gram
/// matrix followed by a Rayleigh-Ritz step.
PcaPlane pca_plane(const std::vector<std::vector<VectorXd>>& trajectories, std::uint64_t seed = 0);

struct LossGrid {
  int resolution = 0;
  double half_width = 0.0;
  std::vector<double> coords;   // node offsets along each axis, symmetric about 0
  MatrixXd train;               // (a index, b index), NaN where missing
  MatrixXd test;
  int missing = 0;
};

/// Both objectives on origin + a axis1 + b axis2 over a (resolution x resolution) grid.
/// `resolution` must be odd so that the center node is the origin itself.
LossGrid loss_grid(const Objective& train, const Objective& test, const VectorXd& origin, const VectorXd& axis1,
                   const VectorXd& axis2, double half_width, int resolution, int threads = 1);

void write_loss_grid_csv(const std::filesystem::path& path, const LossGrid& grid);
/// 16-bit PGM heat map of the train grid, min to max.
void write_loss_grid_pgm(const std::filesystem::path& path, const LossGrid& grid);

}  // namespace fasr
