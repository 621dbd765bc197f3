#pragma once

#include "fasr/scene.hpp"

#include <Eigen/Core>

#include <vector>

namespace fasr {

using Eigen::Matrix2d;

inline constexpr double kNearPlane = 0.01;
inline constexpr double kLowPassDilation = 0.3;  // px^2 added to the projected covariance
inline constexpr double kMaxAlpha = 0.999;
inline constexpr double kVisibleAlpha = 1e-4;

/// Screen-space footprint of one Gaussian (EWA splatting).
struct Projection {
  Vector2d mean2d = Vector2d::Zero();
  Matrix2d cov2d = Matrix2d::Identity();
  double depth = 0.0;   // camera-space z
  bool valid = false;   // false when behind the near plane
};

Projection project_gaussian(const Gaussian3D& g, const Camera& cam);

/// View-dependent color: color_dc plus the degree-1 terms along the camera-to-mean direction.
Vector3d gaussian_color(const Gaussian3D& g, int sh_degree, const Vector3d& camera_center);

struct RenderOptions {
  /// Half-width of the per-Gaussian screen bounding box, in projected standard deviations.
  double cutoff_sigma = 3.0;
};

struct RenderOutput {
  ImageBuffer image;                 // raw composite, not clamped
  std::vector<double> alpha;         // H x W accumulated opacity
  std::vector<double> depth;         // H x W alpha-normalized expected depth, 0 where empty
  std::vector<Vector2d> screen_xy;   // per Gaussian projected mean (px)
  std::vector<double> cam_depth;     // per Gaussian camera-space z
  std::vector<bool> visibility;      // in front of the camera and max alpha > 1e-4

  double depth_at(int x, int y) const { return depth[static_cast<std::size_t>(y) * image.width + x]; }
  double alpha_at(int x, int y) const { return alpha[static_cast<std::size_t>(y) * image.width + x]; }
};

/// Front-to-back alpha compositing over Gaussians sorted by camera depth, on a black background.
RenderOutput render_forward(const GaussianCloud& cloud, const Camera& cam,
                            const RenderOptions& opts = {});

/// Analytic gradient of sum(dL_dimage * image) with respect to every Gaussian attribute.
GradientSet render_backward(const GaussianCloud& cloud, const Camera& cam,
                            const ImageBuffer& dL_dimage, const RenderOptions& opts = {});

}  // namespace fasr
