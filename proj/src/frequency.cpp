#include "fasr/frequency.hpp"

#include "fasr/scene_io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fasr {

namespace {

// Responses below this are treated as numerically flat.
constexpr double kResponseFloor = 1e-9;

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

void FrequencyConfig::validate() const {
  if (candidate_scales.size() < 2) throw std::invalid_argument("frequency: need at least two candidate scales");
  for (std::size_t i = 0; i < candidate_scales.size(); ++i) {
    if (!(candidate_scales[i] > 0.0)) throw std::invalid_argument("frequency: candidate scales must be positive");
    if (i > 0 && !(candidate_scales[i] > candidate_scales[i - 1])) {
      throw std::invalid_argument("frequency: candidate scales must be strictly ascending");
    }
  }
  if (!(rise_threshold > 0.0)) throw std::invalid_argument("frequency: rise_threshold must be positive");
}

std::vector<double> grayscale(const ImageBuffer& image) {
  std::vector<double> gray(static_cast<std::size_t>(image.width) * image.height);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = 0.299 * image.pixels[3 * i] + 0.587 * image.pixels[3 * i + 1] + 0.114 * image.pixels[3 * i + 2];
  }
  return gray;
}

std::vector<double> log_response(const std::vector<double>& gray, int w, int h, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("log_response: sigma must be positive");
  if (gray.size() != static_cast<std::size_t>(w) * h) {
    throw std::invalid_argument("log_response: buffer size does not match dimensions");
  }
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  auto at = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

  std::vector<double> tmp(gray.size()), smooth(gray.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * gray[at(std::clamp(x + i, 0, w - 1), y)];
      tmp[at(x, y)] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp[at(x, std::clamp(y + i, 0, h - 1))];
      smooth[at(x, y)] = acc;
    }

  std::vector<double> out(gray.size());
  const double norm = sigma * sigma;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double c = smooth[at(x, y)];
      const double lap = smooth[at(std::max(x - 1, 0), y)] + smooth[at(std::min(x + 1, w - 1), y)] +
                         smooth[at(x, std::max(y - 1, 0))] + smooth[at(x, std::min(y + 1, h - 1))] - 4.0 * c;
      out[at(x, y)] = std::abs(norm * lap);
    }
  return out;
}

ScaleMap optimal_scale_map(const ImageBuffer& image, const FrequencyConfig& cfg, std::string view_id) {
  cfg.validate();
  if (image.width <= 0 || image.height <= 0) throw std::invalid_argument("optimal_scale_map: empty image");
  const auto gray = grayscale(image);
  const std::size_t n_scales = cfg.candidate_scales.size();
  std::vector<std::vector<double>> responses;
  responses.reserve(n_scales);
  for (double s : cfg.candidate_scales) responses.push_back(log_response(gray, image.width, image.height, s));

  ScaleMap map;
  map.width = image.width;
  map.height = image.height;
  map.view_id = std::move(view_id);
  map.scale.assign(gray.size(), cfg.gamma_max());
  for (std::size_t p = 0; p < gray.size(); ++p) {
    double peak = 0.0;
    for (const auto& r : responses) peak = std::max(peak, r[p]);
    if (peak < kResponseFloor) continue;
    const double threshold = cfg.rise_threshold * peak;
    // The curve starts from zero response below the smallest candidate, so structure that is
    // already strong at the finest scale counts as a rise there.
    double previous = 0.0;
    for (std::size_t k = 0; k < n_scales; ++k) {
      if (responses[k][p] - previous > threshold) {
        map.scale[p] = cfg.candidate_scales[k == 0 ? 0 : k - 1];
        break;
      }
      previous = responses[k][p];
    }
  }
  return map;
}

GaussianFrequency lookup_gamma(const GaussianCloud& cloud, const RenderOutput& render,
                               const ScaleMap& scale_map, const FrequencyConfig& cfg, double gamma_cap) {
  if (scale_map.width != render.image.width || scale_map.height != render.image.height) {
    throw std::invalid_argument("lookup_gamma: scale map does not match the render size");
  }
  if (render.screen_xy.size() != cloud.size()) {
    throw std::invalid_argument("lookup_gamma: render output does not match the cloud");
  }
  const double gamma_max = cfg.gamma_max();
  GaussianFrequency out;
  out.gamma.assign(cloud.size(), gamma_max);
  out.depth.assign(cloud.size(), 0.0);
  out.gamma_bar.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    out.depth[i] = render.cam_depth[i];
    const Vector2d& xy = render.screen_xy[i];
    if (render.visibility[i] && xy.allFinite()) {
      const long x = std::lround(xy.x());
      const long y = std::lround(xy.y());
      if (x >= 0 && y >= 0 && x < scale_map.width && y < scale_map.height) {
        out.gamma[i] = scale_map.at(static_cast<int>(x), static_cast<int>(y));
        // Empty pixels carry no rendered depth; keep the camera-space depth there.
        if (render.alpha_at(static_cast<int>(x), static_cast<int>(y)) > kVisibleAlpha) {
          out.depth[i] = render.depth_at(static_cast<int>(x), static_cast<int>(y));
        }
      }
    }
    out.gamma_bar[i] = gamma_cap * out.gamma[i] / gamma_max;
  }
  return out;
}

void write_scale_map_pgm(const std::filesystem::path& path, const ScaleMap& map, const FrequencyConfig& cfg) {
  std::vector<std::uint16_t> idx(map.scale.size());
  for (std::size_t p = 0; p < idx.size(); ++p) {
    const auto it = std::find(cfg.candidate_scales.begin(), cfg.candidate_scales.end(), map.scale[p]);
    idx[p] = static_cast<std::uint16_t>(it - cfg.candidate_scales.begin());
  }
  write_pgm16(path, map.width, map.height, idx);
}

}  // namespace fasr
