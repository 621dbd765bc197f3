#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fasr {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::Vector4d;

/// Learnable Gaussian attributes, in the order used by every per-attribute table.
enum class Attribute : int { mean = 0, rot, scale, opacity, color_dc, color_ac };

inline constexpr int kNumAttributes = 6;
inline constexpr std::array<Attribute, kNumAttributes> kAllAttributes = {
    Attribute::mean,    Attribute::rot,      Attribute::scale,
    Attribute::opacity, Attribute::color_dc, Attribute::color_ac};

template <class T>
using PerAttribute = std::array<T, kNumAttributes>;

constexpr int index_of(Attribute a) { return static_cast<int>(a); }

/// Short names used in configs, CSV headers and CLI flags (mu, q, s, sigma, dc, ac).
std::string_view attribute_name(Attribute a);
Attribute attribute_from_name(std::string_view name);

/// Number of scalar components of an attribute for one Gaussian.
constexpr int attribute_size(Attribute a) {
  switch (a) {
    case Attribute::mean: return 3;
    case Attribute::rot: return 4;
    case Attribute::scale: return 3;
    case Attribute::opacity: return 1;
    case Attribute::color_dc: return 3;
    case Attribute::color_ac: return 9;
  }
  return 0;
}

/// Mean, rotation and scale carry the frequency/depth adaptivity.
constexpr bool is_geometric(Attribute a) {
  return a == Attribute::mean || a == Attribute::rot || a == Attribute::scale;
}

struct Gaussian3D {
  Vector3d mean = Vector3d::Zero();
  Vector4d rot = Vector4d(1.0, 0.0, 0.0, 0.0);  // (w, x, y, z), normalized at use
  Vector3d scale_log = Vector3d::Zero();        // log of per-axis std-dev
  double opacity_logit = 0.0;
  Vector3d color_dc = Vector3d::Zero();         // linear RGB base
  Matrix3d color_ac = Matrix3d::Zero();         // column k: RGB weight of degree-1 basis k

  bool operator==(const Gaussian3D&) const = default;
};

/// Per-Gaussian gradient with the same layout as Gaussian3D.
struct GaussianGrad {
  Vector3d mean = Vector3d::Zero();
  Vector4d rot = Vector4d::Zero();
  Vector3d scale_log = Vector3d::Zero();
  double opacity_logit = 0.0;
  Vector3d color_dc = Vector3d::Zero();
  Matrix3d color_ac = Matrix3d::Zero();

  bool operator==(const GaussianGrad&) const = default;
};

using GradientSet = std::vector<GaussianGrad>;

/// Mutable view of one attribute's components (works for Gaussian3D and GaussianGrad).
template <class G>
std::span<double> values(G& g, Attribute a) {
  switch (a) {
    case Attribute::mean: return {g.mean.data(), 3};
    case Attribute::rot: return {g.rot.data(), 4};
    case Attribute::scale: return {g.scale_log.data(), 3};
    case Attribute::opacity: return {&g.opacity_logit, 1};
    case Attribute::color_dc: return {g.color_dc.data(), 3};
    case Attribute::color_ac: return {g.color_ac.data(), 9};
  }
  throw std::logic_error("unknown attribute");
}

template <class G>
std::span<const double> values(const G& g, Attribute a) {
  return values(const_cast<G&>(g), a);
}

struct GaussianCloud {
  std::vector<Gaussian3D> gaussians;
  int sh_degree = 0;                 // 0: color_dc only, 1: adds color_ac
  std::uint64_t generation = 0;      // bumped by densification

  std::size_t size() const { return gaussians.size(); }
  bool empty() const { return gaussians.empty(); }
  bool operator==(const GaussianCloud&) const = default;
};

/// Attributes that exist for this cloud (color_ac only with sh_degree 1).
bool has_attribute(const GaussianCloud& cloud, Attribute a);

GradientSet zero_gradients(std::size_t n);

double sigmoid(double x);
double logit(double p);

/// Rotation matrix of the normalized quaternion (w, x, y, z).
Matrix3d rotation_from_quaternion(const Vector4d& q);

struct Camera {
  Matrix3d rotation = Matrix3d::Identity();   // world -> camera
  Vector3d translation = Vector3d::Zero();
  double focal = 1.0;                         // px
  int width = 0;
  int height = 0;
  std::string id;

  double cx() const { return 0.5 * width; }
  double cy() const { return 0.5 * height; }
  Vector3d to_camera(const Vector3d& p) const { return rotation * p + translation; }
  Vector3d center() const { return -rotation.transpose() * translation; }
  bool operator==(const Camera&) const = default;
};

/// Pinhole camera at `eye` looking at `target`; image x right, y down, z forward.
Camera look_at(const Vector3d& eye, const Vector3d& target, double focal, int width,
               int height, std::string id);

void validate_camera(const Camera& cam);

/// H x W x 3 interleaved RGB.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * 3 + c;
  }
  double& at(int x, int y, int c) { return pixels[index(x, y, c)]; }
  double at(int x, int y, int c) const { return pixels[index(x, y, c)]; }
  std::size_t size() const { return pixels.size(); }
  bool same_shape(const ImageBuffer& o) const { return width == o.width && height == o.height; }

  /// Copy with every channel clamped to [0, 1].
  ImageBuffer clamped() const;
};

enum class CameraLayout { ring, arc, random };

std::string_view layout_name(CameraLayout layout);
CameraLayout layout_from_name(std::string_view name);

struct SceneOptions {
  int width = 64;
  int height = 64;
  double fov_degrees = 50.0;
  double camera_distance = 3.0;
  double arc_degrees = 120.0;
  double elevation_degrees = 15.0;
  double max_radius = 0.8;        // Gaussians are confined to this ball after centering
  double large_fraction = 0.25;   // share of wide, low-frequency Gaussians
};

struct SyntheticScene {
  GaussianCloud teacher;
  std::vector<Camera> cameras;
};

/// Reproducible teacher cloud plus cameras around its centroid (at the origin).
SyntheticScene gen_synthetic_scene(std::uint64_t seed, int n_gaussians, int n_cameras,
                                   CameraLayout layout, const SceneOptions& opts = {});

struct TraineeOptions {
  double mean_jitter = 0.05;
  double extra_fraction = 0.2;
  double init_opacity = 0.1;
  int sh_degree = 1;
};

/// Trainee initialization: jittered teacher means plus random extra Gaussians, neutral appearance.
GaussianCloud make_trainee(const GaussianCloud& teacher, std::uint64_t seed,
                           const TraineeOptions& opts = {});

struct ViewSplit {
  std::vector<Camera> train;
  std::vector<Camera> test;
};

/// Greedy farthest-point selection of training views on camera centers.
ViewSplit split_views(const std::vector<Camera>& cameras, int n_train, std::uint64_t seed);

}  // namespace fasr
