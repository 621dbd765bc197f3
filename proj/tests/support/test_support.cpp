#include "test_support.hpp"

#include <cmath>
#include <numbers>

namespace fasr::testing {

GaussianCloud random_cloud(std::mt19937_64& rng, int n, int sh_degree) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  GaussianCloud cloud;
  cloud.sh_degree = sh_degree;
  for (int i = 0; i < n; ++i) {
    Gaussian3D g;
    Vector3d p;
    do {
      p = Vector3d(2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0);
    } while (p.norm() > 1.0);
    g.mean = 0.5 * p;
    g.rot = Vector4d(normal(rng), normal(rng), normal(rng), normal(rng));
    for (int k = 0; k < 3; ++k) g.scale_log[k] = std::log(0.08 + 0.22 * u(rng));
    g.opacity_logit = logit(0.3 + 0.6 * u(rng));
    for (int c = 0; c < 3; ++c) g.color_dc[c] = 0.1 + 0.8 * u(rng);
    if (sh_degree >= 1) {
      for (int k = 0; k < 9; ++k) g.color_ac.data()[k] = 0.4 * u(rng) - 0.2;
    }
    cloud.gaussians.push_back(g);
  }
  return cloud;
}

Camera random_camera(std::mt19937_64& rng, int width, int height) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double az = 2.0 * std::numbers::pi * u(rng);
  const double el = (u(rng) - 0.5) * 0.8;
  const Vector3d eye = 3.0 * Vector3d(std::cos(el) * std::sin(az), std::sin(el), -std::cos(el) * std::cos(az));
  const double focal = 0.5 * width / std::tan(0.5 * 50.0 * std::numbers::pi / 180.0);
  return look_at(eye, Vector3d::Zero(), focal, width, height, "test");
}

ImageBuffer random_image(std::mt19937_64& rng, int width, int height, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  ImageBuffer img(width, height);
  for (double& v : img.pixels) v = u(rng);
  return img;
}

RenderOptions full_support() {
  RenderOptions o;
  o.cutoff_sigma = 1e4;
  return o;
}

void GradCheck::merge(const GradCheck& o) {
  checked += o.checked;
  failed += o.failed;
  if (o.worst_rel > worst_rel) {
    worst_rel = o.worst_rel;
    worst = o.worst;
  }
}

bool gradients_agree(double analytic, double numeric, double rel_tol, double abs_tol) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_tol) return true;
  return diff / std::max(std::abs(analytic), std::abs(numeric)) < rel_tol;
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

namespace {

void record(GradCheck& r, double analytic, double numeric, double rel_tol, double abs_tol, const std::string& where) {
  ++r.checked;
  const double diff = std::abs(analytic - numeric);
  const double rel = diff <= abs_tol ? 0.0 : diff / std::max(std::abs(analytic), std::abs(numeric));
  if (!gradients_agree(analytic, numeric, rel_tol, abs_tol)) ++r.failed;
  if (rel > r.worst_rel) {
    r.worst_rel = rel;
    r.worst = where + " analytic " + std::to_string(analytic) + " numeric " + std::to_string(numeric);
  }
}

double weighted_sum(const ImageBuffer& img, const ImageBuffer& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) s += img.pixels[i] * w.pixels[i];
  return s;
}

GradCheck check_cloud(const GaussianCloud& cloud, const GradientSet& grads,
                      const std::function<double(const GaussianCloud&)>& f, double h, double rel_tol, double abs_tol) {
  GradCheck r;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (Attribute a : kAllAttributes) {
      if (!has_attribute(cloud, a)) continue;
      for (int k = 0; k < attribute_size(a); ++k) {
        GaussianCloud probe = cloud;
        const double x0 = values(cloud.gaussians[i], a)[k];
        const double numeric = central_difference(
            [&](double x) {
              values(probe.gaussians[i], a)[k] = x;
              return f(probe);
            },
            x0, h);
        record(r, values(grads[i], a)[k], numeric, rel_tol, abs_tol,
               "gaussian " + std::to_string(i) + " " + std::string(attribute_name(a)) + "[" + std::to_string(k) + "]");
      }
    }
  }
  return r;
}

}  // namespace

GradCheck check_render_gradients(const GaussianCloud& cloud, const Camera& cam, const ImageBuffer& upstream,
                                 const RenderOptions& opts, double h, double rel_tol, double abs_tol) {
  const GradientSet grads = render_backward(cloud, cam, upstream, opts);
  return check_cloud(
      cloud, grads, [&](const GaussianCloud& c) { return weighted_sum(render_forward(c, cam, opts).image, upstream); }, h,
      rel_tol, abs_tol);
}

GradCheck check_loss_gradients(const ImageBuffer& pred, const ImageBuffer& gt, double lambda_ssim, double h,
                               double rel_tol, double abs_tol) {
  const LossWithGrad lw = photometric_loss(pred, gt, lambda_ssim);
  GradCheck r;
  ImageBuffer probe = pred;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    const double numeric = central_difference(
        [&](double x) {
          probe.pixels[p] = x;
          return photometric_loss_value(probe, gt, lambda_ssim).total;
        },
        pred.pixels[p], h);
    probe.pixels[p] = pred.pixels[p];
    record(r, lw.grad.pixels[p], numeric, rel_tol, abs_tol, "pixel value " + std::to_string(p));
  }
  return r;
}

GradCheck check_end_to_end_gradients(const GaussianCloud& cloud, const Camera& cam, const ImageBuffer& gt,
                                     double lambda_ssim, const RenderOptions& opts, double h, double rel_tol,
                                     double abs_tol) {
  const LossWithGrad lw = photometric_loss(render_forward(cloud, cam, opts).image, gt, lambda_ssim);
  const GradientSet grads = render_backward(cloud, cam, lw.grad, opts);
  return check_cloud(
      cloud, grads,
      [&](const GaussianCloud& c) { return photometric_loss_value(render_forward(c, cam, opts).image, gt, lambda_ssim).total; },
      h, rel_tol, abs_tol);
}

}  // namespace fasr::testing
