#pragma once

#include "fasr/frequency.hpp"
#include "fasr/renderer.hpp"
#include "fasr/scene.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace fasr {

// --- Adam -------------------------------------------------------------------------------

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 3DGS-style per-attribute learning rates for a scene of the given spatial extent.
PerAttribute<double> default_learning_rates(double scene_extent);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  PerAttribute<double> lr{};
  std::vector<GaussianGrad> m;   // first moments, one per Gaussian
  std::vector<GaussianGrad> v;   // second moments
  std::int64_t step = 0;

  static AdamState for_cloud(std::size_t n, const PerAttribute<double>& lr);
};

/// w <- w - lr * m_hat / (sqrt(v_hat) + eps) for every attribute. Throws NonFiniteGradient
/// (leaving state and cloud untouched) if any gradient entry is not finite.
void adam_step(AdamState& state, GaussianCloud& cloud, const GradientSet& grads);

// --- Sharpness-aware ascent and blended descent ------------------------------------------

enum class Mode { baseline, sam_global, sam_per_gaussian, fasr, random_perturb };

std::string_view mode_name(Mode m);
Mode mode_from_name(std::string_view name);

/// Magnitude/weight rule followed by random_perturb.
enum class RandomRule { per_gaussian, frequency_adaptive };

std::string_view random_rule_name(RandomRule r);
RandomRule random_rule_from_name(std::string_view name);

struct FasrConfig {
  Mode mode = Mode::baseline;
  PerAttribute<double> rho{};                 // neighborhood radius per attribute
  double wsam_gamma = 0.5;                    // fixed blend weight; 0.5 is plain SAM
  double gamma_cap = kGammaCap;
  double late_start_fraction = 0.0;           // 0.875 regularizes the last 12.5% only
  PerAttribute<bool> attribute_mask = {true, true, true, true, true, true};
  double grad_norm_floor = 1e-12;
  bool adaptive_magnitude = true;             // frequency/depth-scaled radius (fasr)
  bool adaptive_weighting = true;             // frequency-scaled blend weight (fasr)
  RandomRule random_rule = RandomRule::frequency_adaptive;

  void validate() const;
  /// Perturbed and blended; inactive attributes follow plain descent.
  bool active(Attribute a) const { return attribute_mask[index_of(a)] && rho[index_of(a)] > 0.0; }
  bool uses_frequency() const;
};

struct PerturbResult {
  GaussianCloud cloud;
  PerAttribute<double> mean_norm{};  // mean |theta_hat_i - theta_i| over perturbed Gaussians
  PerAttribute<int> count{};         // number of perturbed Gaussians
};

/// Ascent step. `freq` is required when the config uses frequency adaptivity; `noise_seed`
/// drives the random directions of random_perturb.
PerturbResult perturb(const GaussianCloud& cloud, const GradientSet& grads,
                      const GaussianFrequency* freq, const Camera& cam, const FasrConfig& cfg,
                      std::uint64_t noise_seed = 0);

/// Blend weight gamma_bar used for Gaussian `i` and attribute `a`.
double blend_weight(const FasrConfig& cfg, const GaussianFrequency* freq, std::size_t i, Attribute a);

/// ((1 - 2 g) / (1 - g)) * grad_orig + (g / (1 - g)) * grad_pert per Gaussian and attribute.
GradientSet blend_gradients(const GradientSet& grad_orig, const GradientSet& grad_pert,
                            const GaussianFrequency* freq, const FasrConfig& cfg);

// --- Training step ----------------------------------------------------------------------

struct TrainView {
  Camera camera;
  ImageBuffer target;
  ScaleMap scale_map;
};

struct StepContext {
  double lambda_ssim = 0.2;
  FrequencyConfig frequency;
  RenderOptions render;
  std::uint64_t noise_seed = 0;
  // Applied to the per-Gaussian frequency lookup before it is used; ablations pin gamma here.
  std::function<void(GaussianFrequency&)> frequency_hook;
};

struct StepStats {
  int iteration = 0;
  double loss = 0.0;
  double perturbed_loss = std::numeric_limits<double>::quiet_NaN();
  PerAttribute<double> perturbation_norm{};
  std::size_t n_gaussians = 0;
  double wall_ms = 0.0;
  bool regularized = false;
  bool aborted = false;
};

bool is_regularized_step(const FasrConfig& cfg, int iteration, int total_iters);

/// One optimization step on `view`. Regularized steps render twice (original and perturbed
/// point) and apply Adam at the original point with the blended gradient. When
/// `descent_grad` is given it receives the gradient handed to Adam.
StepStats train_step(GaussianCloud& cloud, AdamState& state, const TrainView& view,
                     const FasrConfig& cfg, const StepContext& ctx, int iteration, int total_iters,
                     GradientSet* descent_grad = nullptr);

// --- Densification ----------------------------------------------------------------------

struct DensifyOptions {
  bool enabled = true;
  int interval = 100;
  int start = 200;
  int end = 1000;
  double grad_threshold = 2e-3;     // mean |d L / d mu| over visible steps
  double extent_threshold = 0.1;    // world units; larger Gaussians split, smaller clone
  double prune_opacity = 0.005;
  double split_factor = 1.6;
  std::size_t max_gaussians = 600;

  bool due(int iteration) const {
    return enabled && iteration >= start && iteration <= end && iteration % interval == 0;
  }
};

/// Running mean of the per-Gaussian mean-gradient norm over steps where it was nonzero.
struct DensifyStats {
  std::vector<double> grad_norm_sum;
  std::vector<int> count;

  void reset(std::size_t n);
  void accumulate(const GradientSet& grads);
  std::vector<double> average() const;
};

struct DensifyReport {
  int cloned = 0;
  int split = 0;
  int pruned = 0;
};

/// Clone small high-gradient Gaussians, split large ones into two children along the largest
/// axis, prune low-opacity ones. Adam moments follow: new entries zeroed, pruned removed.
DensifyReport densify_and_prune(GaussianCloud& cloud, AdamState& state,
                                const std::vector<double>& avg_grad_norms, const DensifyOptions& opts);

}  // namespace fasr
