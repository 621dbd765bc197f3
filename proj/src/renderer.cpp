#include "fasr/renderer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fasr {

namespace {

constexpr double kShC1 = 0.4886025119029199;
constexpr int kTile = 8;

using Matrix23d = Eigen::Matrix<double, 2, 3>;

// Degree-1 basis evaluated along a unit direction.
Vector3d sh1_basis(const Vector3d& dir) {
  return Vector3d(-kShC1 * dir.y(), kShC1 * dir.z(), -kShC1 * dir.x());
}

struct Splat {
  int index = 0;
  Vector2d mean2d;
  double conic_a = 0, conic_b = 0, conic_c = 0;
  double opacity = 0;
  Vector3d color;
  double depth = 0;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;

  // Cached intermediates for the backward pass.
  Vector3d t_cam;
  Matrix3d rot;
  Vector3d std_dev;
  Matrix3d cov_cam;
  Matrix23d jac;
  Matrix2d conic;

  bool covers(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct ProjectionDetail {
  Projection proj;
  Vector3d t_cam;
  Matrix3d rot;
  Vector3d std_dev;
  Matrix3d cov_cam;
  Matrix23d jac;
};

ProjectionDetail project_detail(const Gaussian3D& g, const Camera& cam) {
  ProjectionDetail d;
  d.t_cam = cam.to_camera(g.mean);
  d.proj.depth = d.t_cam.z();
  if (!(d.t_cam.z() > kNearPlane)) return d;

  const double f = cam.focal;
  const double z = d.t_cam.z();
  d.rot = rotation_from_quaternion(g.rot);
  d.std_dev = g.scale_log.array().exp();
  const Matrix3d m = d.rot * d.std_dev.asDiagonal();
  d.cov_cam = cam.rotation * (m * m.transpose()) * cam.rotation.transpose();
  d.jac << f / z, 0.0, -f * d.t_cam.x() / (z * z), 0.0, f / z, -f * d.t_cam.y() / (z * z);

  d.proj.mean2d = Vector2d(f * d.t_cam.x() / z + cam.cx(), f * d.t_cam.y() / z + cam.cy());
  d.proj.cov2d = d.jac * d.cov_cam * d.jac.transpose() + kLowPassDilation * Matrix2d::Identity();
  d.proj.valid = true;
  return d;
}

struct Prepared {
  std::vector<Splat> splats;                 // sorted front to back
  int tiles_x = 0, tiles_y = 0;
  std::vector<std::vector<int>> tile_lists;  // splat positions per tile, front to back
};

Prepared prepare(const GaussianCloud& cloud, const Camera& cam, const RenderOptions& opts) {
  if (cloud.empty()) throw std::invalid_argument("render: empty cloud");
  validate_camera(cam);
  const Vector3d cam_center = cam.center();

  Prepared p;
  p.splats.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Gaussian3D& g = cloud.gaussians[i];
    ProjectionDetail d = project_detail(g, cam);
    if (!d.proj.valid) continue;
    Splat s;
    s.index = static_cast<int>(i);
    s.mean2d = d.proj.mean2d;
    s.conic = d.proj.cov2d.inverse();
    s.conic_a = s.conic(0, 0);
    s.conic_b = s.conic(0, 1);
    s.conic_c = s.conic(1, 1);
    s.opacity = sigmoid(g.opacity_logit);
    s.color = gaussian_color(g, cloud.sh_degree, cam_center);
    s.depth = d.t_cam.z();
    const double rx = opts.cutoff_sigma * std::sqrt(d.proj.cov2d(0, 0));
    const double ry = opts.cutoff_sigma * std::sqrt(d.proj.cov2d(1, 1));
    if (!std::isfinite(s.mean2d.x()) || !std::isfinite(s.mean2d.y())) continue;
    // Clamp in floating point first; huge footprints would overflow the integer cast.
    auto lo = [](double v, int n) { return static_cast<int>(std::clamp(std::ceil(v), 0.0, static_cast<double>(n))); };
    auto hi = [](double v, int n) { return static_cast<int>(std::clamp(std::floor(v), -1.0, n - 1.0)); };
    s.x0 = lo(s.mean2d.x() - rx, cam.width);
    s.x1 = hi(s.mean2d.x() + rx, cam.width);
    s.y0 = lo(s.mean2d.y() - ry, cam.height);
    s.y1 = hi(s.mean2d.y() + ry, cam.height);
    s.t_cam = d.t_cam;
    s.rot = d.rot;
    s.std_dev = d.std_dev;
    s.cov_cam = d.cov_cam;
    s.jac = d.jac;
    p.splats.push_back(s);
  }
  std::stable_sort(p.splats.begin(), p.splats.end(), [](const Splat& a, const Splat& b) {
    return a.depth < b.depth || (a.depth == b.depth && a.index < b.index);
  });

  p.tiles_x = (cam.width + kTile - 1) / kTile;
  p.tiles_y = (cam.height + kTile - 1) / kTile;
  p.tile_lists.assign(static_cast<std::size_t>(p.tiles_x) * p.tiles_y, {});
  for (int k = 0; k < static_cast<int>(p.splats.size()); ++k) {
    const Splat& s = p.splats[k];
    if (s.x0 > s.x1 || s.y0 > s.y1) continue;
    for (int ty = s.y0 / kTile; ty <= s.y1 / kTile; ++ty)
      for (int tx = s.x0 / kTile; tx <= s.x1 / kTile; ++tx)
        p.tile_lists[static_cast<std::size_t>(ty) * p.tiles_x + tx].push_back(k);
  }
  return p;
}

struct Contribution {
  int splat;
  double alpha;
  double gauss;
  double transmittance;  // T before this splat
  double dx, dy;
  bool clamped;
};

// Composites one pixel front to back, recording each contribution.
template <class Visit>
double composite_pixel(const Prepared& p, int x, int y, Visit&& visit) {
  const auto& list = p.tile_lists[static_cast<std::size_t>(y / kTile) * p.tiles_x + x / kTile];
  double trans = 1.0;
  for (int k : list) {
    const Splat& s = p.splats[k];
    if (!s.covers(x, y)) continue;
    const double dx = x - s.mean2d.x();
    const double dy = y - s.mean2d.y();
    const double q = s.conic_a * dx * dx + 2.0 * s.conic_b * dx * dy + s.conic_c * dy * dy;
    const double gauss = std::exp(-0.5 * q);
    double alpha = s.opacity * gauss;
    const bool clamped = alpha > kMaxAlpha;
    if (clamped) alpha = kMaxAlpha;
    visit(Contribution{k, alpha, gauss, trans, dx, dy, clamped});
    trans *= 1.0 - alpha;
  }
  return trans;
}

}  // namespace

Projection project_gaussian(const Gaussian3D& g, const Camera& cam) {
  return project_detail(g, cam).proj;
}

Vector3d gaussian_color(const Gaussian3D& g, int sh_degree, const Vector3d& camera_center) {
  if (sh_degree < 1) return g.color_dc;
  const Vector3d offset = g.mean - camera_center;
  const double len = offset.norm();
  if (!(len > 0.0)) return g.color_dc;
  return g.color_dc + g.color_ac * sh1_basis(offset / len);
}

RenderOutput render_forward(const GaussianCloud& cloud, const Camera& cam, const RenderOptions& opts) {
  const Prepared p = prepare(cloud, cam, opts);
  const int w = cam.width, h = cam.height;

  RenderOutput out;
  out.image = ImageBuffer(w, h);
  out.alpha.assign(static_cast<std::size_t>(w) * h, 0.0);
  out.depth.assign(static_cast<std::size_t>(w) * h, 0.0);
  out.screen_xy.assign(cloud.size(), Vector2d::Constant(std::nan("")));
  out.cam_depth.resize(cloud.size());
  out.visibility.assign(cloud.size(), false);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    out.cam_depth[i] = cam.to_camera(cloud.gaussians[i].mean).z();
  }
  std::vector<double> max_alpha(p.splats.size(), 0.0);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Vector3d color = Vector3d::Zero();
      double acc = 0.0, depth_sum = 0.0;
      composite_pixel(p, x, y, [&](const Contribution& c) {
        const Splat& s = p.splats[c.splat];
        const double weight = c.alpha * c.transmittance;
        color += weight * s.color;
        depth_sum += weight * s.depth;
        acc += weight;
        max_alpha[c.splat] = std::max(max_alpha[c.splat], c.alpha);
      });
      const std::size_t pix = static_cast<std::size_t>(y) * w + x;
      for (int ch = 0; ch < 3; ++ch) out.image.pixels[pix * 3 + ch] = color[ch];
      out.alpha[pix] = acc;
      out.depth[pix] = depth_sum / std::max(acc, 1e-6);
    }
  }
  for (std::size_t k = 0; k < p.splats.size(); ++k) {
    const Splat& s = p.splats[k];
    out.screen_xy[s.index] = s.mean2d;
    out.visibility[s.index] = max_alpha[k] > kVisibleAlpha;
  }
  return out;
}

GradientSet render_backward(const GaussianCloud& cloud, const Camera& cam,
                            const ImageBuffer& dL_dimage, const RenderOptions& opts) {
  if (dL_dimage.width != cam.width || dL_dimage.height != cam.height ||
      dL_dimage.size() != static_cast<std::size_t>(cam.width) * cam.height * 3) {
    throw std::invalid_argument("render_backward: upstream gradient shape does not match camera");
  }
  const Prepared p = prepare(cloud, cam, opts);
  const std::size_t n = p.splats.size();

  // Screen-space accumulators per splat.
  std::vector<Vector2d> d_mean2d(n, Vector2d::Zero());
  std::vector<Eigen::Vector3d> d_conic(n, Vector3d::Zero());  // (a, b, c) with q = a dx^2 + 2 b dx dy + c dy^2
  std::vector<double> d_opacity(n, 0.0);
  std::vector<Vector3d> d_color(n, Vector3d::Zero());

  std::vector<Contribution> contribs;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const std::size_t pix = static_cast<std::size_t>(y) * cam.width + x;
      const Vector3d up(dL_dimage.pixels[pix * 3], dL_dimage.pixels[pix * 3 + 1],
                        dL_dimage.pixels[pix * 3 + 2]);
      if (up.isZero(0.0)) continue;
      contribs.clear();
      composite_pixel(p, x, y, [&](const Contribution& c) { contribs.push_back(c); });

      Vector3d behind = Vector3d::Zero();  // sum of weighted colors of later contributions
      for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
        const Contribution& c = *it;
        const Splat& s = p.splats[c.splat];
        const double weight = c.alpha * c.transmittance;
        d_color[c.splat] += weight * up;
        const double d_alpha =
            (c.transmittance * s.color - behind / (1.0 - c.alpha)).dot(up);
        behind += weight * s.color;
        if (c.clamped) continue;
        d_opacity[c.splat] += d_alpha * c.gauss;
        const double d_q = -0.5 * c.gauss * s.opacity * d_alpha;
        d_mean2d[c.splat] += d_q * Vector2d(-2.0 * (s.conic_a * c.dx + s.conic_b * c.dy),
                                            -2.0 * (s.conic_b * c.dx + s.conic_c * c.dy));
        d_conic[c.splat] += d_q * Vector3d(c.dx * c.dx, 2.0 * c.dx * c.dy, c.dy * c.dy);
      }
    }
  }

  GradientSet grads = zero_gradients(cloud.size());
  const Vector3d cam_center = cam.center();
  const double f = cam.focal;
  for (std::size_t k = 0; k < n; ++k) {
    const Splat& s = p.splats[k];
    const Gaussian3D& g = cloud.gaussians[s.index];
    GaussianGrad& out = grads[s.index];

    // Color and opacity.
    out.color_dc = d_color[k];
    Vector3d d_mean = Vector3d::Zero();
    if (cloud.sh_degree >= 1) {
      const Vector3d offset = g.mean - cam_center;
      const double len = offset.norm();
      if (len > 0.0) {
        const Vector3d dir = offset / len;
        const Vector3d basis = sh1_basis(dir);
        for (int j = 0; j < 3; ++j) out.color_ac.col(j) = basis[j] * d_color[k];
        const Vector3d d_basis = g.color_ac.transpose() * d_color[k];
        const Vector3d d_dir(-kShC1 * d_basis[2], -kShC1 * d_basis[0], kShC1 * d_basis[1]);
        d_mean += (d_dir - dir * dir.dot(d_dir)) / len;
      }
    }
    out.opacity_logit = d_opacity[k] * s.opacity * (1.0 - s.opacity);

    // Conic -> 2D covariance -> camera covariance and projection Jacobian.
    Matrix2d g_conic;
    g_conic << d_conic[k][0], 0.5 * d_conic[k][1], 0.5 * d_conic[k][1], d_conic[k][2];
    const Matrix2d g_cov2d = -s.conic * g_conic * s.conic;
    const Matrix3d g_cov_cam = s.jac.transpose() * g_cov2d * s.jac;
    const Matrix23d g_jac = 2.0 * g_cov2d * s.jac * s.cov_cam;

    // World covariance -> rotation and scale.
    const Matrix3d g_cov = cam.rotation.transpose() * g_cov_cam * cam.rotation;
    const Matrix3d m = s.rot * s.std_dev.asDiagonal();
    const Matrix3d g_m = 2.0 * g_cov * m;
    for (int j = 0; j < 3; ++j) {
      out.scale_log[j] = g_m.col(j).dot(s.rot.col(j)) * s.std_dev[j];
    }
    const Matrix3d g_r = g_m * s.std_dev.asDiagonal();
    const Vector4d qn = g.rot / g.rot.norm();
    const double qw = qn[0], qx = qn[1], qy = qn[2], qz = qn[3];
    Vector4d g_qn;
    g_qn[0] = 2.0 * (-qz * g_r(0, 1) + qy * g_r(0, 2) + qz * g_r(1, 0) - qx * g_r(1, 2) -
                     qy * g_r(2, 0) + qx * g_r(2, 1));
    g_qn[1] = 2.0 * (qy * g_r(0, 1) + qz * g_r(0, 2) + qy * g_r(1, 0) - 2.0 * qx * g_r(1, 1) -
                     qw * g_r(1, 2) + qz * g_r(2, 0) + qw * g_r(2, 1) - 2.0 * qx * g_r(2, 2));
    g_qn[2] = 2.0 * (-2.0 * qy * g_r(0, 0) + qx * g_r(0, 1) + qw * g_r(0, 2) + qx * g_r(1, 0) +
                     qz * g_r(1, 2) - qw * g_r(2, 0) + qz * g_r(2, 1) - 2.0 * qy * g_r(2, 2));
    g_qn[3] = 2.0 * (-2.0 * qz * g_r(0, 0) - qw * g_r(0, 1) + qx * g_r(0, 2) + qw * g_r(1, 0) -
                     2.0 * qz * g_r(1, 1) + qy * g_r(1, 2) + qx * g_r(2, 0) + qy * g_r(2, 1));
    out.rot = (g_qn - qn * qn.dot(g_qn)) / g.rot.norm();

    // Mean through the projected center and the Jacobian.
    const double tx = s.t_cam.x(), ty = s.t_cam.y(), tz = s.t_cam.z();
    const double dU = d_mean2d[k].x(), dV = d_mean2d[k].y();
    Vector3d g_t;
    g_t.x() = dU * f / tz - g_jac(0, 2) * f / (tz * tz);
    g_t.y() = dV * f / tz - g_jac(1, 2) * f / (tz * tz);
    g_t.z() = -dU * f * tx / (tz * tz) - dV * f * ty / (tz * tz) -
              (g_jac(0, 0) + g_jac(1, 1)) * f / (tz * tz) +
              2.0 * f * (g_jac(0, 2) * tx + g_jac(1, 2) * ty) / (tz * tz * tz);
    out.mean = d_mean + cam.rotation.transpose() * g_t;
  }
  return grads;
}

}  // namespace fasr
