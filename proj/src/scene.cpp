#include "fasr/scene.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace fasr {

std::string_view attribute_name(Attribute a) {
  switch (a) {
    case Attribute::mean: return "mu";
    case Attribute::rot: return "q";
    case Attribute::scale: return "s";
    case Attribute::opacity: return "sigma";
    case Attribute::color_dc: return "dc";
    case Attribute::color_ac: return "ac";
  }
  return "?";
}

Attribute attribute_from_name(std::string_view name) {
  for (Attribute a : kAllAttributes) {
    if (attribute_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown attribute '" + std::string(name) + "'");
}

bool has_attribute(const GaussianCloud& cloud, Attribute a) {
  return a != Attribute::color_ac || cloud.sh_degree >= 1;
}

GradientSet zero_gradients(std::size_t n) { return GradientSet(n); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p) - std::log1p(-p); }

Matrix3d rotation_from_quaternion(const Vector4d& q_raw) {
  const Vector4d q = q_raw / q_raw.norm();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Camera look_at(const Vector3d& eye, const Vector3d& target, double focal, int width,
               int height, std::string id) {
  const Vector3d forward = (target - eye).normalized();
  Vector3d up(0.0, -1.0, 0.0);
  if (std::abs(forward.dot(up)) > 0.99) up = Vector3d(0.0, 0.0, 1.0);
  const Vector3d right = up.cross(forward).normalized();
  const Vector3d down = forward.cross(right);

  Camera cam;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -cam.rotation * eye;
  cam.focal = focal;
  cam.width = width;
  cam.height = height;
  cam.id = std::move(id);
  return cam;
}

void validate_camera(const Camera& cam) {
  if (!(cam.focal > 0.0) || !std::isfinite(cam.focal)) {
    throw std::invalid_argument("camera '" + cam.id + "': focal must be positive");
  }
  if (cam.width <= 0 || cam.height <= 0) {
    throw std::invalid_argument("camera '" + cam.id + "': image size must be positive");
  }
  const double ortho_err =
      (cam.rotation * cam.rotation.transpose() - Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho_err <= 1e-6) || cam.rotation.determinant() < 0.0) {
    throw std::invalid_argument("camera '" + cam.id + "': rotation is not orthonormal");
  }
  if (!cam.translation.allFinite()) {
    throw std::invalid_argument("camera '" + cam.id + "': non-finite translation");
  }
}

ImageBuffer ImageBuffer::clamped() const {
  ImageBuffer out = *this;
  for (double& v : out.pixels) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::string_view layout_name(CameraLayout layout) {
  switch (layout) {
    case CameraLayout::ring: return "ring";
    case CameraLayout::arc: return "arc";
    case CameraLayout::random: return "random";
  }
  return "?";
}

CameraLayout layout_from_name(std::string_view name) {
  if (name == "ring") return CameraLayout::ring;
  if (name == "arc") return CameraLayout::arc;
  if (name == "random") return CameraLayout::random;
  throw std::invalid_argument("unknown camera layout '" + std::string(name) + "'");
}

namespace {

Vector4d random_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector4d q(n(rng), n(rng), n(rng), n(rng));
  while (q.norm() < 1e-6) q = Vector4d(n(rng), n(rng), n(rng), n(rng));
  return q / q.norm();
}

Vector3d random_in_ball(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Vector3d p(u(rng), u(rng), u(rng));
    if (p.squaredNorm() <= 1.0) return radius * p;
  }
}

std::vector<Vector3d> camera_centers(std::mt19937_64& rng, int n, CameraLayout layout,
                                     const SceneOptions& opts) {
  constexpr double deg = std::numbers::pi / 180.0;
  std::vector<Vector3d> centers;
  centers.reserve(n);
  const double elev = opts.elevation_degrees * deg;
  auto on_sphere = [&](double azimuth, double elevation) -> Vector3d {
    return Vector3d(std::cos(elevation) * std::sin(azimuth), -std::sin(elevation),
                    -std::cos(elevation) * std::cos(azimuth)) *
           opts.camera_distance;
  };
  switch (layout) {
    case CameraLayout::ring:
      for (int i = 0; i < n; ++i) centers.push_back(on_sphere(2.0 * std::numbers::pi * i / n, elev));
      break;
    case CameraLayout::arc: {
      const double span = opts.arc_degrees * deg;
      for (int i = 0; i < n; ++i) {
        centers.push_back(on_sphere(-0.5 * span + span * i / (n - 1), elev));
      }
      break;
    }
    case CameraLayout::random: {
      std::uniform_real_distribution<double> az(0.0, 2.0 * std::numbers::pi);
      std::uniform_real_distribution<double> el(-std::sin(60.0 * deg), std::sin(60.0 * deg));
      for (int i = 0; i < n; ++i) centers.push_back(on_sphere(az(rng), std::asin(el(rng))));
      break;
    }
  }
  return centers;
}

}  // namespace

SyntheticScene gen_synthetic_scene(std::uint64_t seed, int n_gaussians, int n_cameras,
                                   CameraLayout layout, const SceneOptions& opts) {
  if (n_gaussians < 1) throw std::invalid_argument("gen_synthetic_scene: n_gaussians must be >= 1");
  if (n_cameras < 2) {
    throw std::invalid_argument("gen_synthetic_scene: n_cameras must be >= 2 to form a train/test split");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticScene scene;
  GaussianCloud& cloud = scene.teacher;
  cloud.sh_degree = 0;
  cloud.gaussians.resize(n_gaussians);
  for (Gaussian3D& g : cloud.gaussians) {
    const bool large = unit(rng) < opts.large_fraction;
    g.mean = random_in_ball(rng, 0.7);
    g.rot = random_quaternion(rng);
    const double base = large ? std::exp(std::log(0.12) + unit(rng) * std::log(2.0))
                              : std::exp(std::log(0.02) + unit(rng) * std::log(3.0));
    for (int k = 0; k < 3; ++k) g.scale_log[k] = std::log(base * (0.6 + 0.8 * unit(rng)));
    g.opacity_logit = logit(0.55 + 0.4 * unit(rng));
    for (int c = 0; c < 3; ++c) g.color_dc[c] = 0.1 + 0.8 * unit(rng);
  }

  Vector3d centroid = Vector3d::Zero();
  for (const Gaussian3D& g : cloud.gaussians) centroid += g.mean;
  centroid /= n_gaussians;
  double radius = 0.0;
  for (Gaussian3D& g : cloud.gaussians) {
    g.mean -= centroid;
    radius = std::max(radius, g.mean.norm());
  }
  if (radius > opts.max_radius) {
    const double shrink = opts.max_radius / radius;
    for (Gaussian3D& g : cloud.gaussians) g.mean *= shrink;
  }

  constexpr double deg = std::numbers::pi / 180.0;
  const double focal = 0.5 * opts.width / std::tan(0.5 * opts.fov_degrees * deg);
  const auto centers = camera_centers(rng, n_cameras, layout, opts);
  for (int i = 0; i < n_cameras; ++i) {
    scene.cameras.push_back(look_at(centers[i], Vector3d::Zero(), focal, opts.width, opts.height,
                                    "cam" + std::to_string(i)));
  }
  return scene;
}

GaussianCloud make_trainee(const GaussianCloud& teacher, std::uint64_t seed,
                           const TraineeOptions& opts) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> jitter(0.0, opts.mean_jitter);

  std::vector<Vector3d> means;
  for (const Gaussian3D& g : teacher.gaussians) {
    means.push_back(g.mean + Vector3d(jitter(rng), jitter(rng), jitter(rng)));
  }
  double radius = 0.0;
  for (const Gaussian3D& g : teacher.gaussians) radius = std::max(radius, g.mean.norm());
  const int n_extra = static_cast<int>(std::lround(opts.extra_fraction * teacher.size()));
  for (int i = 0; i < n_extra; ++i) means.push_back(random_in_ball(rng, std::max(radius, 0.1)));

  GaussianCloud cloud;
  cloud.sh_degree = opts.sh_degree;
  cloud.gaussians.resize(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    // Isotropic initial scale from the mean distance to the three nearest neighbours.
    std::array<double, 3> nearest;
    nearest.fill(std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < means.size(); ++j) {
      if (j == i) continue;
      const double d = (means[i] - means[j]).norm();
      for (int k = 0; k < 3; ++k) {
        if (d < nearest[k]) {
          for (int m = 2; m > k; --m) nearest[m] = nearest[m - 1];
          nearest[k] = d;
          break;
        }
      }
    }
    double sum = 0.0;
    int count = 0;
    for (double d : nearest) {
      if (std::isfinite(d)) {
        sum += d;
        ++count;
      }
    }
    const double spacing = count > 0 ? std::clamp(sum / count, 0.01, 0.3) : 0.1;

    Gaussian3D& g = cloud.gaussians[i];
    g.mean = means[i];
    g.rot = Vector4d(1.0, 0.0, 0.0, 0.0);
    g.scale_log = Vector3d::Constant(std::log(0.5 * spacing));
    g.opacity_logit = logit(opts.init_opacity);
    g.color_dc = Vector3d::Constant(0.5);
    g.color_ac.setZero();
  }
  return cloud;
}

ViewSplit split_views(const std::vector<Camera>& cameras, int n_train, std::uint64_t seed) {
  const int n = static_cast<int>(cameras.size());
  if (n_train < 1 || n_train >= n) {
    throw std::invalid_argument("split_views: need 1 <= n_train < number of cameras");
  }
  std::mt19937_64 rng(seed);
  std::vector<bool> chosen(n, false);
  std::vector<int> order;
  order.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(n)));
  chosen[order.front()] = true;
  while (static_cast<int>(order.size()) < n_train) {
    int best = -1;
    double best_dist = -1.0;
    for (int i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      double d = std::numeric_limits<double>::infinity();
      for (int j : order) d = std::min(d, (cameras[i].center() - cameras[j].center()).norm());
      if (d > best_dist + 1e-12) {
        best_dist = d;
        best = i;
      }
    }
    chosen[best] = true;
    order.push_back(best);
  }
  ViewSplit split;
  for (int i : order) split.train.push_back(cameras[i]);
  for (int i = 0; i < n; ++i) {
    if (!chosen[i]) split.test.push_back(cameras[i]);
  }
  return split;
}

}  // namespace fasr
