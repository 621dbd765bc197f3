#include "fasr/optimizer.hpp"

#include <cmath>
#include <string>

namespace fasr {

void DensifyStats::reset(std::size_t n) {
  grad_norm_sum.assign(n, 0.0);
  count.assign(n, 0);
}

void DensifyStats::accumulate(const GradientSet& grads) {
  if (grads.size() != grad_norm_sum.size()) {
    throw std::invalid_argument("DensifyStats: gradient count does not match the tracked cloud");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double n = grads[i].mean.norm();
    if (n > 0.0) {
      grad_norm_sum[i] += n;
      count[i] += 1;
    }
  }
}

std::vector<double> DensifyStats::average() const {
  std::vector<double> out(grad_norm_sum.size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (count[i] > 0) out[i] = grad_norm_sum[i] / count[i];
  }
  return out;
}

DensifyReport densify_and_prune(GaussianCloud& cloud, AdamState& state, const std::vector<double>& avg_grad_norms,
                                const DensifyOptions& opts) {
  const std::size_t n = cloud.size();
  if (avg_grad_norms.size() != n || state.m.size() != n || state.v.size() != n) {
    throw std::invalid_argument("densify_and_prune: statistics, moments and cloud sizes differ");
  }
  if (!(opts.split_factor > 1.0)) throw std::invalid_argument("densify_and_prune: split_factor must exceed 1");

  struct Entry {
    Gaussian3D g;
    bool fresh;
    std::size_t source;
  };
  std::vector<Entry> kept;
  std::vector<Entry> added;
  kept.reserve(n);
  DensifyReport report;

  std::size_t budget = opts.max_gaussians > n ? opts.max_gaussians - n : 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Gaussian3D& g = cloud.gaussians[i];
    if (avg_grad_norms[i] <= opts.grad_threshold || budget == 0) {
      kept.push_back({g, false, i});
      continue;
    }
    int axis = 0;
    g.scale_log.maxCoeff(&axis);
    const double extent = std::exp(g.scale_log[axis]);
    if (extent > opts.extent_threshold) {
      const Vector3d offset = rotation_from_quaternion(g.rot).col(axis) * extent;
      Gaussian3D a = g, b = g;
      a.mean = g.mean + offset;
      b.mean = g.mean - offset;
      const double shrink = std::log(opts.split_factor);
      a.scale_log.array() -= shrink;
      b.scale_log.array() -= shrink;
      kept.push_back({a, true, i});
      added.push_back({b, true, i});
      report.split += 1;
    } else {
      kept.push_back({g, false, i});
      added.push_back({g, true, i});
      report.cloned += 1;
    }
    budget -= 1;
  }
  kept.insert(kept.end(), added.begin(), added.end());

  std::vector<Entry> survivors;
  survivors.reserve(kept.size());
  for (auto& e : kept) {
    if (sigmoid(e.g.opacity_logit) < opts.prune_opacity) {
      report.pruned += 1;
    } else {
      survivors.push_back(std::move(e));
    }
  }
  if (survivors.empty()) {
    throw std::runtime_error("densify_and_prune: pruning would remove all " + std::to_string(kept.size()) +
                             " Gaussians");
  }

  std::vector<Gaussian3D> gaussians;
  std::vector<GaussianGrad> m, v;
  gaussians.reserve(survivors.size());
  m.reserve(survivors.size());
  v.reserve(survivors.size());
  for (const auto& e : survivors) {
    gaussians.push_back(e.g);
    m.push_back(e.fresh ? GaussianGrad{} : state.m[e.source]);
    v.push_back(e.fresh ? GaussianGrad{} : state.v[e.source]);
  }
  cloud.gaussians = std::move(gaussians);
  state.m = std::move(m);
  state.v = std::move(v);
  if (report.cloned + report.split + report.pruned > 0) cloud.generation += 1;
  return report;
}

}  // namespace fasr
