#include "fasr/objective.hpp"

#include "fasr/loss.hpp"

#include <stdexcept>

namespace fasr {

namespace {

int per_gaussian_size(const GaussianCloud& cloud) {
  int n = 0;
  for (Attribute a : kAllAttributes)
    if (has_attribute(cloud, a)) n += attribute_size(a);
  return n;
}

}  // namespace

std::size_t flat_size(const GaussianCloud& cloud) { return cloud.size() * per_gaussian_size(cloud); }

FlatParams flatten(const GaussianCloud& cloud) {
  FlatParams out;
  out.values = flatten_values(cloud);
  out.index.reserve(out.values.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (Attribute a : kAllAttributes) {
      if (!has_attribute(cloud, a)) continue;
      for (int k = 0; k < attribute_size(a); ++k) {
        out.index.push_back({static_cast<std::uint32_t>(i), a, static_cast<std::uint8_t>(k)});
      }
    }
  return out;
}

VectorXd flatten_values(const GaussianCloud& cloud) {
  VectorXd out(static_cast<Eigen::Index>(flat_size(cloud)));
  Eigen::Index p = 0;
  for (const auto& g : cloud.gaussians)
    for (Attribute a : kAllAttributes) {
      if (!has_attribute(cloud, a)) continue;
      for (double x : values(g, a)) out[p++] = x;
    }
  return out;
}

VectorXd flatten_gradient(const GradientSet& grads, const GaussianCloud& layout) {
  if (grads.size() != layout.size()) throw std::invalid_argument("flatten_gradient: size mismatch");
  VectorXd out(static_cast<Eigen::Index>(flat_size(layout)));
  Eigen::Index p = 0;
  for (const auto& g : grads)
    for (Attribute a : kAllAttributes) {
      if (!has_attribute(layout, a)) continue;
      for (double x : values(g, a)) out[p++] = x;
    }
  return out;
}

GaussianCloud unflatten(const VectorXd& w, const GaussianCloud& layout) {
  if (static_cast<std::size_t>(w.size()) != flat_size(layout)) {
    throw std::invalid_argument("unflatten: vector length " + std::to_string(w.size()) + " does not match layout " +
                                std::to_string(flat_size(layout)));
  }
  GaussianCloud out = layout;
  Eigen::Index p = 0;
  for (auto& g : out.gaussians)
    for (Attribute a : kAllAttributes) {
      if (!has_attribute(out, a)) continue;
      for (double& x : values(g, a)) x = w[p++];
    }
  return out;
}

QuadraticObjective::QuadraticObjective(MatrixXd a, VectorXd b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != a_.cols()) throw std::invalid_argument("QuadraticObjective: matrix must be square");
  if (b_.size() == 0) b_ = VectorXd::Zero(a_.rows());
  if (b_.size() != a_.rows()) throw std::invalid_argument("QuadraticObjective: linear term has the wrong length");
}

double QuadraticObjective::value(const VectorXd& w) const { return 0.5 * w.dot(a_ * w) + b_.dot(w); }

double QuadraticObjective::value_and_gradient(const VectorXd& w, VectorXd& grad) const {
  const VectorXd aw = a_ * w;
  grad = 0.5 * (aw + a_.transpose() * w) + b_;
  return 0.5 * w.dot(aw) + b_.dot(w);
}

double ScaledObjective::value_and_gradient(const VectorXd& w, VectorXd& grad) const {
  const double v = inner_.value_and_gradient(w, grad);
  grad *= c_;
  return c_ * v;
}

SceneObjective::SceneObjective(GaussianCloud layout, std::vector<Camera> cameras, std::vector<ImageBuffer> targets,
                               double lambda_ssim, RenderOptions render)
    : layout_(std::move(layout)),
      cameras_(std::move(cameras)),
      targets_(std::move(targets)),
      lambda_ssim_(lambda_ssim),
      render_(render),
      dim_(static_cast<Eigen::Index>(flat_size(layout_))) {
  if (cameras_.empty() || cameras_.size() != targets_.size()) {
    throw std::invalid_argument("SceneObjective: need one target image per camera");
  }
}

double SceneObjective::value(const VectorXd& w) const {
  const GaussianCloud cloud = unflatten(w, layout_);
  double sum = 0.0;
  for (std::size_t v = 0; v < cameras_.size(); ++v) {
    sum += photometric_loss_value(render_forward(cloud, cameras_[v], render_).image, targets_[v], lambda_ssim_).total;
  }
  return sum / static_cast<double>(cameras_.size());
}

double SceneObjective::value_and_gradient(const VectorXd& w, VectorXd& grad) const {
  const GaussianCloud cloud = unflatten(w, layout_);
  double sum = 0.0;
  grad = VectorXd::Zero(dim_);
  for (std::size_t v = 0; v < cameras_.size(); ++v) {
    const auto lw = photometric_loss(render_forward(cloud, cameras_[v], render_).image, targets_[v], lambda_ssim_);
    sum += lw.report.total;
    grad += flatten_gradient(render_backward(cloud, cameras_[v], lw.grad, render_), cloud);
  }
  const double inv = 1.0 / static_cast<double>(cameras_.size());
  grad *= inv;
  return sum * inv;
}

}  // namespace fasr
