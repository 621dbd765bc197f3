#include "fasr/frequency.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace fasr {
namespace {

ImageBuffer gray_image(int w, int h, const std::function<double(int, int)>& f) {
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = f(x, y);
  return img;
}

bool in_candidates(double v, const FrequencyConfig& cfg) {
  return std::find(cfg.candidate_scales.begin(), cfg.candidate_scales.end(), v) != cfg.candidate_scales.end();
}

TEST(FrequencyConfig, Validation) {
  FrequencyConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.gamma_max(), 16.0);
  cfg.candidate_scales = {2.0};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.candidate_scales = {2.0, 2.0};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.candidate_scales = {0.0, 2.0};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.rise_threshold = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Grayscale, LumaWeights) {
  ImageBuffer img(1, 1);
  img.at(0, 0, 0) = 1.0;
  img.at(0, 0, 1) = 0.5;
  img.at(0, 0, 2) = 0.25;
  EXPECT_NEAR(grayscale(img)[0], 0.299 + 0.587 * 0.5 + 0.114 * 0.25, 1e-15);
}

TEST(LogResponse, ConstantImageIsZero) {
  const std::vector<double> gray(20 * 15, 0.37);
  for (double s : {1.0, 2.5, 8.0})
    for (double v : log_response(gray, 20, 15, s)) EXPECT_NEAR(v, 0.0, 1e-14);
  EXPECT_THROW(log_response(gray, 20, 15, 0.0), std::invalid_argument);
}

TEST(LogResponse, ImpulsePeaksAtSmallestScale) {
  std::vector<double> gray(41 * 41, 0.0);
  gray[20 * 41 + 20] = 1.0;
  double prev = INFINITY;
  for (double s : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double r = log_response(gray, 41, 41, s)[20 * 41 + 20];
    EXPECT_LT(r, prev);
    prev = r;
  }
}

// Dense sigma scan: the scale-normalized response at a disk center peaks near r / sqrt(2).
TEST(LogResponse, DiskPeaksNearCharacteristicScale) {
  const int w = 96;
  for (double radius : {4.0, 8.0, 12.0}) {
    std::vector<double> gray(w * w, 0.0);
    for (int y = 0; y < w; ++y)
      for (int x = 0; x < w; ++x)
        if ((x - 48) * (x - 48) + (y - 48) * (y - 48) <= radius * radius) gray[y * w + x] = 1.0;
    double best = 0.0, best_sigma = 0.0;
    for (double s = 0.5; s <= 16.0; s += 0.05) {
      const double r = log_response(gray, w, w, s)[48 * w + 48];
      if (r > best) {
        best = r;
        best_sigma = s;
      }
    }
    EXPECT_NEAR(best_sigma / (radius / std::sqrt(2.0)), 1.0, 0.05) << radius;
  }
}

TEST(ScaleMap, ConstantImageIsGammaMax) {
  const FrequencyConfig cfg;
  const auto map = optimal_scale_map(ImageBuffer(24, 20, 0.6), cfg, "flat");
  EXPECT_EQ(map.view_id, "flat");
  EXPECT_EQ(map.width, 24);
  EXPECT_EQ(map.height, 20);
  for (double v : map.scale) EXPECT_EQ(v, cfg.gamma_max());
}

TEST(ScaleMap, SharpDot) {
  const FrequencyConfig cfg;
  const int w = 128;
  const auto img = gray_image(w, w, [](int x, int y) { return x == 20 && y == 20 ? 1.0 : 0.0; });
  const auto map = optimal_scale_map(img, cfg);
  EXPECT_EQ(map.at(20, 20), cfg.candidate_scales.front());
  // Beyond the largest kernel's reach every response is exactly zero.
  for (int y = 80; y < w; ++y)
    for (int x = 80; x < w; ++x) EXPECT_EQ(map.at(x, y), cfg.gamma_max());
}

// Oracle: scan each pixel's response curve from a zero response below the smallest scale.
TEST(ScaleMap, MatchesPerPixelScanOracle) {
  const FrequencyConfig cfg;
  std::mt19937_64 rng(8);
  const auto img = testing::random_image(rng, 40, 32);
  const auto map = optimal_scale_map(img, cfg);
  const auto gray = grayscale(img);
  std::vector<std::vector<double>> resp;
  for (double s : cfg.candidate_scales) resp.push_back(log_response(gray, 40, 32, s));
  for (std::size_t p = 0; p < gray.size(); ++p) {
    double peak = 0.0;
    for (const auto& r : resp) peak = std::max(peak, r[p]);
    double expected = cfg.gamma_max(), prev = 0.0;
    for (std::size_t k = 0; k < resp.size(); ++k) {
      if (resp[k][p] - prev > cfg.rise_threshold * peak) {
        expected = cfg.candidate_scales[k == 0 ? 0 : k - 1];
        break;
      }
      prev = resp[k][p];
    }
    ASSERT_EQ(map.scale[p], expected) << p;
  }
}

TEST(ScaleMap, BlobCenterCoarserThanCheckerboard) {
  const FrequencyConfig cfg;
  const auto img = gray_image(192, 128, [](int x, int y) {
    if (x < 64) return ((x / 2 + y / 2) % 2) ? 0.9 : 0.1;
    const double dx = x - 128, dy = y - 64;
    return 0.1 + 0.8 * std::exp(-(dx * dx + dy * dy) / (2.0 * 20.0 * 20.0));
  });
  const auto map = optimal_scale_map(img, cfg);
  EXPECT_GT(map.at(128, 64), map.at(32, 64));
  for (double v : map.scale) EXPECT_TRUE(in_candidates(v, cfg));
}

TEST(ScaleMap, FlatRegionCoarserThanTexture) {
  FrequencyConfig cfg;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageBuffer img(96, 48, 0.5);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      const double v = u(rng);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = v;
    }
  for (auto scales : {std::vector<double>{1, 2, 4, 8, 16}, std::vector<double>{1, 1.5, 3, 6}}) {
    cfg.candidate_scales = scales;
    const auto map = optimal_scale_map(img, cfg);
    double texture = 0.0, flat = 0.0;
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 48; ++x) {
        texture += map.at(x, y);
        flat += map.at(48 + x, y);
      }
    EXPECT_GT(flat, texture);
    for (double v : map.scale) EXPECT_TRUE(in_candidates(v, cfg));
  }
}

TEST(ScaleMap, EntriesAlwaysCandidates) {
  const FrequencyConfig cfg;
  for (int seed = 0; seed < 5; ++seed) {
    const auto scene = gen_synthetic_scene(seed, 60, 4, CameraLayout::ring);
    for (const auto& cam : scene.cameras) {
      const auto map = optimal_scale_map(render_forward(scene.teacher, cam).image.clamped(), cfg);
      for (double v : map.scale) ASSERT_TRUE(in_candidates(v, cfg));
    }
  }
}

class LookupGamma : public ::testing::Test {
 protected:
  void SetUp() override {
    cam = look_at(Vector3d(0, 0, -3), Vector3d::Zero(), 40.0, 32, 32, "c");
    Gaussian3D g;
    g.scale_log = Vector3d::Constant(std::log(0.1));
    g.opacity_logit = logit(0.9);
    g.color_dc = Vector3d::Ones();
    cloud.gaussians = {g, g, g};
    cloud.gaussians[1].mean = Vector3d(0.5, 0.0, 0.5);
    cloud.gaussians[2].mean = Vector3d(20.0, 0.0, 1.0);  // off screen
    render = render_forward(cloud, cam);
    map.width = 32;
    map.height = 32;
    map.scale.assign(32 * 32, cfg.gamma_max());
  }

  Camera cam;
  GaussianCloud cloud;
  RenderOutput render;
  ScaleMap map;
  FrequencyConfig cfg;
};

TEST_F(LookupGamma, CapArithmetic) {
  const auto f = lookup_gamma(cloud, render, map, cfg);
  EXPECT_EQ(f.gamma[0], 16.0);
  EXPECT_NEAR(f.gamma_bar[0], 0.95, 1e-15);
  EXPECT_NEAR(f.depth[0], render.depth_at(16, 16), 1e-15);
}

TEST_F(LookupGamma, SmallestScaleRatio) {
  const long x = std::lround(render.screen_xy[1].x()), y = std::lround(render.screen_xy[1].y());
  map.scale[y * 32 + x] = 1.0;
  const auto f = lookup_gamma(cloud, render, map, cfg);
  EXPECT_EQ(f.gamma[1], 1.0);
  EXPECT_NEAR(f.gamma_bar[1], 0.95 / 16.0, 1e-15);
  EXPECT_EQ(f.gamma[0], 16.0);
  for (double gb : f.gamma_bar) {
    EXPECT_GT(gb, 0.0);
    EXPECT_LE(gb, 0.95);
  }
}

TEST_F(LookupGamma, OffScreenFallback) {
  const auto f = lookup_gamma(cloud, render, map, cfg);
  EXPECT_FALSE(render.visibility[2]);
  EXPECT_EQ(f.gamma[2], cfg.gamma_max());
  EXPECT_EQ(f.depth[2], cam.to_camera(cloud.gaussians[2].mean).z());
}

TEST_F(LookupGamma, ShapeMismatchRejected) {
  map.width = 16;
  EXPECT_THROW(lookup_gamma(cloud, render, map, cfg), std::invalid_argument);
}

TEST(ScaleMapPgm, WritesCandidateIndices) {
  const FrequencyConfig cfg;
  ScaleMap map;
  map.width = 3;
  map.height = 1;
  map.scale = {1.0, 4.0, 16.0};
  const auto path = std::filesystem::temp_directory_path() / "fasr_scale_map_test.pgm";
  write_scale_map_pgm(path, map, cfg);
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w, h, maxv;
  in >> magic >> w >> h >> maxv;
  in.get();
  unsigned char buf[6];
  in.read(reinterpret_cast<char*>(buf), 6);
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(w, 3);
  EXPECT_EQ(h, 1);
  EXPECT_GT(maxv, 255);
  EXPECT_EQ(buf[1], 0);
  EXPECT_EQ(buf[3], 2);
  EXPECT_EQ(buf[5], 4);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace fasr
