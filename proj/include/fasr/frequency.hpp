#pragma once

#include "fasr/renderer.hpp"
#include "fasr/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fasr {

inline constexpr double kGammaCap = 0.95;

struct FrequencyConfig {
  std::vector<double> candidate_scales = {1.0, 2.0, 4.0, 8.0, 16.0};  // LoG sigma, px
  double rise_threshold = 0.1;  // fraction of the per-pixel maximum response

  double gamma_max() const { return candidate_scales.back(); }
  void validate() const;
};

/// Per-pixel LoG scale; small values mark high local frequency.
struct ScaleMap {
  int width = 0;
  int height = 0;
  std::vector<double> scale;
  std::string view_id;

  double at(int x, int y) const { return scale[static_cast<std::size_t>(y) * width + x]; }
};

struct GaussianFrequency {
  std::vector<double> gamma;      // scale-map value at the projected center (px)
  std::vector<double> gamma_bar;  // cap * gamma / gamma_max
  std::vector<double> depth;      // rendered depth at the same pixel
};

/// Luma 0.299 R + 0.587 G + 0.114 B, row-major.
std::vector<double> grayscale(const ImageBuffer& image);

/// |sigma^2 * Laplacian(G_sigma * gray)|: separable Gaussian (radius ceil(3 sigma)) then a
/// 5-point Laplacian, both with replicate padding.
std::vector<double> log_response(const std::vector<double>& gray, int width, int height, double sigma);

ScaleMap optimal_scale_map(const ImageBuffer& image, const FrequencyConfig& cfg,
                           std::string view_id = {});

GaussianFrequency lookup_gamma(const GaussianCloud& cloud, const RenderOutput& render,
                               const ScaleMap& scale_map, const FrequencyConfig& cfg,
                               double gamma_cap = kGammaCap);

/// 16-bit PGM of the candidate index per pixel.
void write_scale_map_pgm(const std::filesystem::path& path, const ScaleMap& map,
                         const FrequencyConfig& cfg);

}  // namespace fasr
