#pragma once

#include "fasr/renderer.hpp"
#include "fasr/scene.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace fasr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Location of one flat coordinate inside the cloud.
struct FlatIndex {
  std::uint32_t gaussian = 0;
  Attribute attribute = Attribute::mean;
  std::uint8_t component = 0;
};

/// Every attribute present in a cloud laid out Gaussian-major, attribute order as in
/// kAllAttributes. color_ac is included only for sh_degree >= 1.
struct FlatParams {
  VectorXd values;
  std::vector<FlatIndex> index;
};

std::size_t flat_size(const GaussianCloud& cloud);
FlatParams flatten(const GaussianCloud& cloud);
VectorXd flatten_values(const GaussianCloud& cloud);
VectorXd flatten_gradient(const GradientSet& grads, const GaussianCloud& layout);
/// Writes `values` back into a copy of `layout` (same Gaussian count and sh_degree).
GaussianCloud unflatten(const VectorXd& values, const GaussianCloud& layout);

/// Scalar function of a flat parameter vector. Implementations must be safe to call
/// concurrently from several threads.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual Eigen::Index dim() const = 0;
  virtual double value(const VectorXd& w) const = 0;
  /// Returns the value and writes the gradient into `grad`.
  virtual double value_and_gradient(const VectorXd& w, VectorXd& grad) const = 0;
};

/// 0.5 w^T A w + b^T w.
class QuadraticObjective : public Objective {
 public:
  explicit QuadraticObjective(MatrixXd a, VectorXd b = {});
  Eigen::Index dim() const override { return a_.rows(); }
  double value(const VectorXd& w) const override;
  double value_and_gradient(const VectorXd& w, VectorXd& grad) const override;

 private:
  MatrixXd a_;
  VectorXd b_;
};

/// c * inner(w).
class ScaledObjective : public Objective {
 public:
  ScaledObjective(const Objective& inner, double c) : inner_(inner), c_(c) {}
  Eigen::Index dim() const override { return inner_.dim(); }
  double value(const VectorXd& w) const override { return c_ * inner_.value(w); }
  double value_and_gradient(const VectorXd& w, VectorXd& grad) const override;

 private:
  const Objective& inner_;
  double c_;
};

/// Photometric loss averaged over a fixed set of views, as a function of the flat parameters
/// of a cloud with the layout of `layout`.
class SceneObjective : public Objective {
 public:
  SceneObjective(GaussianCloud layout, std::vector<Camera> cameras, std::vector<ImageBuffer> targets,
                 double lambda_ssim, RenderOptions render = {});
  Eigen::Index dim() const override { return dim_; }
  double value(const VectorXd& w) const override;
  double value_and_gradient(const VectorXd& w, VectorXd& grad) const override;

 private:
  GaussianCloud layout_;
  std::vector<Camera> cameras_;
  std::vector<ImageBuffer> targets_;
  double lambda_ssim_;
  RenderOptions render_;
  Eigen::Index dim_;
};

}  // namespace fasr
