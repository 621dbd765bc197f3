#include "fasr/optimizer.hpp"

#include "fasr/loss.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <random>
#include <string>

namespace fasr {

PerAttribute<double> default_learning_rates(double scene_extent) {
  return {1.6e-4 * scene_extent, 1e-3, 5e-3, 5e-2, 2.5e-3, 2.5e-3};
}

AdamState AdamState::for_cloud(std::size_t n, const PerAttribute<double>& lr) {
  AdamState s;
  s.lr = lr;
  s.m.assign(n, GaussianGrad{});
  s.v.assign(n, GaussianGrad{});
  return s;
}

void adam_step(AdamState& state, GaussianCloud& cloud, const GradientSet& grads) {
  if (grads.size() != cloud.size() || state.m.size() != cloud.size() || state.v.size() != cloud.size()) {
    throw std::invalid_argument("adam_step: gradient, moment and cloud sizes differ (" +
                                std::to_string(grads.size()) + ", " + std::to_string(state.m.size()) +
                                ", " + std::to_string(cloud.size()) + ")");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (Attribute a : kAllAttributes) {
      for (double g : values(grads[i], a)) {
        if (!std::isfinite(g)) {
          throw NonFiniteGradient("adam_step: non-finite gradient at gaussian " + std::to_string(i) +
                                  ", attribute " + std::string(attribute_name(a)));
        }
      }
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (Attribute a : kAllAttributes) {
      const double lr = state.lr[index_of(a)];
      auto w = values(cloud.gaussians[i], a);
      auto m = values(state.m[i], a);
      auto v = values(state.v[i], a);
      const auto g = values(grads[i], a);
      for (std::size_t k = 0; k < w.size(); ++k) {
        m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
        v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
        w[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + state.eps);
      }
    }
  }
}

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::baseline: return "baseline";
    case Mode::sam_global: return "sam_global";
    case Mode::sam_per_gaussian: return "sam_per_gaussian";
    case Mode::fasr: return "fasr";
    case Mode::random_perturb: return "random_perturb";
  }
  return "?";
}

Mode mode_from_name(std::string_view name) {
  for (Mode m : {Mode::baseline, Mode::sam_global, Mode::sam_per_gaussian, Mode::fasr, Mode::random_perturb}) {
    if (mode_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

std::string_view random_rule_name(RandomRule r) {
  return r == RandomRule::per_gaussian ? "per_gaussian" : "frequency_adaptive";
}

RandomRule random_rule_from_name(std::string_view name) {
  if (name == "per_gaussian") return RandomRule::per_gaussian;
  if (name == "frequency_adaptive") return RandomRule::frequency_adaptive;
  throw std::invalid_argument("unknown random rule '" + std::string(name) + "'");
}

void FasrConfig::validate() const {
  for (Attribute a : kAllAttributes) {
    const double r = rho[index_of(a)];
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("rho_" + std::string(attribute_name(a)) + " must be finite and >= 0");
    }
  }
  if (!(wsam_gamma >= 0.0 && wsam_gamma < 1.0)) throw std::invalid_argument("wsam_gamma must be in [0, 1)");
  if (!(gamma_cap > 0.0 && gamma_cap < 1.0)) throw std::invalid_argument("gamma_cap must be in (0, 1)");
  if (!(late_start_fraction >= 0.0 && late_start_fraction <= 1.0)) {
    throw std::invalid_argument("late_start_fraction must be in [0, 1]");
  }
  if (!(grad_norm_floor > 0.0)) throw std::invalid_argument("grad_norm_floor must be positive");
}

bool FasrConfig::uses_frequency() const {
  if (mode == Mode::fasr) return adaptive_magnitude || adaptive_weighting;
  if (mode == Mode::random_perturb) return random_rule == RandomRule::frequency_adaptive;
  return false;
}

namespace {

// Whether the frequency-adaptive rules apply (fasr, or random_perturb mirroring it).
bool follows_fasr(const FasrConfig& cfg) {
  return cfg.mode == Mode::fasr ||
         (cfg.mode == Mode::random_perturb && cfg.random_rule == RandomRule::frequency_adaptive);
}

double magnitude(const FasrConfig& cfg, const GaussianFrequency* freq, double focal, std::size_t i, Attribute a) {
  const double rho = cfg.rho[index_of(a)];
  if (!follows_fasr(cfg) || !cfg.adaptive_magnitude || !is_geometric(a)) return rho;
  const double gamma = freq->gamma[i];
  if (a == Attribute::rot) return gamma * rho;
  return (gamma * std::max(freq->depth[i], kNearPlane) / focal) * rho;
}

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void require_frequency(const FasrConfig& cfg, const GaussianFrequency* freq, std::size_t n, const char* who) {
  if (!cfg.uses_frequency()) return;
  if (freq == nullptr) throw std::invalid_argument(std::string(who) + ": frequency data required in this mode");
  if (freq->gamma.size() != n || freq->gamma_bar.size() != n || freq->depth.size() != n) {
    throw std::invalid_argument(std::string(who) + ": frequency data does not match the cloud");
  }
}

}  // namespace

PerturbResult perturb(const GaussianCloud& cloud, const GradientSet& grads, const GaussianFrequency* freq,
                      const Camera& cam, const FasrConfig& cfg, std::uint64_t noise_seed) {
  if (grads.size() != cloud.size()) throw std::invalid_argument("perturb: gradient count does not match the cloud");
  require_frequency(cfg, freq, cloud.size(), "perturb");

  PerturbResult out;
  out.cloud = cloud;
  if (cfg.mode == Mode::baseline) return out;

  if (cfg.mode == Mode::sam_global) {
    for (Attribute a : kAllAttributes) {
      if (!cfg.active(a)) continue;
      double sq = 0.0;
      for (const auto& g : grads)
        for (double x : values(g, a)) sq += x * x;
      const double total = std::sqrt(sq);
      if (total < cfg.grad_norm_floor) continue;
      const double step = cfg.rho[index_of(a)] / total;
      double norm_sum = 0.0;
      for (std::size_t i = 0; i < grads.size(); ++i) {
        auto w = values(out.cloud.gaussians[i], a);
        const auto g = values(grads[i], a);
        for (std::size_t k = 0; k < w.size(); ++k) w[k] += step * g[k];
        norm_sum += step * norm_of(g);
      }
      out.count[index_of(a)] = static_cast<int>(grads.size());
      out.mean_norm[index_of(a)] = norm_sum / static_cast<double>(grads.size());
    }
    return out;
  }

  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (Attribute a : kAllAttributes) {
      if (!cfg.active(a)) continue;
      const auto g = values(grads[i], a);
      const double gnorm = norm_of(g);
      if (gnorm < cfg.grad_norm_floor) continue;
      const double m = magnitude(cfg, freq, cam.focal, i, a);
      auto w = values(out.cloud.gaussians[i], a);
      const auto before = values(cloud.gaussians[i], a);
      if (cfg.mode == Mode::random_perturb) {
        double dir[9];
        double dn = 0.0;
        while (dn == 0.0) {
          dn = 0.0;
          for (std::size_t k = 0; k < w.size(); ++k) {
            dir[k] = normal(rng);
            dn += dir[k] * dir[k];
          }
        }
        dn = std::sqrt(dn);
        for (std::size_t k = 0; k < w.size(); ++k) w[k] += (m / dn) * dir[k];
      } else {
        const double step = m / gnorm;
        for (std::size_t k = 0; k < w.size(); ++k) w[k] += step * g[k];
      }
      double sq = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) sq += (w[k] - before[k]) * (w[k] - before[k]);
      out.mean_norm[index_of(a)] += std::sqrt(sq);
      out.count[index_of(a)] += 1;
    }
  }
  for (int a = 0; a < kNumAttributes; ++a) {
    if (out.count[a] > 0) out.mean_norm[a] /= out.count[a];
  }
  return out;
}

double blend_weight(const FasrConfig& cfg, const GaussianFrequency* freq, std::size_t i, Attribute a) {
  if (!follows_fasr(cfg)) return cfg.wsam_gamma;
  if (!is_geometric(a)) return 0.5;
  if (!cfg.adaptive_weighting) return cfg.wsam_gamma;
  return freq->gamma_bar[i];
}

GradientSet blend_gradients(const GradientSet& grad_orig, const GradientSet& grad_pert,
                            const GaussianFrequency* freq, const FasrConfig& cfg) {
  if (grad_orig.size() != grad_pert.size()) throw std::invalid_argument("blend_gradients: gradient sets differ in size");
  require_frequency(cfg, freq, grad_orig.size(), "blend_gradients");
  GradientSet out = grad_orig;
  if (cfg.mode == Mode::baseline) return out;
  for (std::size_t i = 0; i < grad_orig.size(); ++i) {
    for (Attribute a : kAllAttributes) {
      if (!cfg.active(a)) continue;
      const double gb = blend_weight(cfg, freq, i, a);
      if (!(gb < 1.0) || !(gb >= 0.0)) {
        throw std::invalid_argument("blend_gradients: blend weight " + std::to_string(gb) + " outside [0, 1)");
      }
      const double c_orig = (1.0 - 2.0 * gb) / (1.0 - gb);
      const double c_pert = gb / (1.0 - gb);
      auto o = values(out[i], a);
      const auto go = values(grad_orig[i], a);
      const auto gp = values(grad_pert[i], a);
      for (std::size_t k = 0; k < o.size(); ++k) o[k] = c_orig * go[k] + c_pert * gp[k];
    }
  }
  return out;
}

bool is_regularized_step(const FasrConfig& cfg, int iteration, int total_iters) {
  if (cfg.mode == Mode::baseline) return false;
  return !(iteration < cfg.late_start_fraction * total_iters);
}

StepStats train_step(GaussianCloud& cloud, AdamState& state, const TrainView& view, const FasrConfig& cfg,
                     const StepContext& ctx, int iteration, int total_iters, GradientSet* descent_grad) {
  const auto t0 = std::chrono::steady_clock::now();
  StepStats stats;
  stats.iteration = iteration;
  stats.regularized = is_regularized_step(cfg, iteration, total_iters);

  const RenderOutput render = render_forward(cloud, view.camera, ctx.render);
  const LossWithGrad lw = photometric_loss(render.image, view.target, ctx.lambda_ssim);
  stats.loss = lw.report.total;
  GradientSet grads = render_backward(cloud, view.camera, lw.grad, ctx.render);

  if (stats.regularized) {
    std::optional<GaussianFrequency> freq;
    if (cfg.uses_frequency() || ctx.frequency_hook) {
      freq = lookup_gamma(cloud, render, view.scale_map, ctx.frequency, cfg.gamma_cap);
      if (ctx.frequency_hook) ctx.frequency_hook(*freq);
    }
    const GaussianFrequency* fp = freq ? &*freq : nullptr;
    const std::uint64_t step_seed = ctx.noise_seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(iteration + 1));
    const PerturbResult pert = perturb(cloud, grads, fp, view.camera, cfg, step_seed);
    stats.perturbation_norm = pert.mean_norm;

    const RenderOutput render_p = render_forward(pert.cloud, view.camera, ctx.render);
    const LossWithGrad lw_p = photometric_loss(render_p.image, view.target, ctx.lambda_ssim);
    stats.perturbed_loss = lw_p.report.total;
    if (!std::isfinite(stats.perturbed_loss)) {
      stats.aborted = true;
      stats.n_gaussians = cloud.size();
      return stats;
    }
    const GradientSet grads_p = render_backward(pert.cloud, view.camera, lw_p.grad, ctx.render);
    grads = blend_gradients(grads, grads_p, fp, cfg);
  }

  adam_step(state, cloud, grads);
  if (descent_grad) *descent_grad = std::move(grads);
  stats.n_gaussians = cloud.size();
  stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

}  // namespace fasr
