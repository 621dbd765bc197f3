#include "fasr/experiment.hpp"
#include "fasr/optimizer.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace fasr {
namespace {

GaussianCloud cloud_of(std::vector<Gaussian3D> gs) {
  GaussianCloud c;
  c.gaussians = std::move(gs);
  return c;
}

Gaussian3D make(double x, double extent, double opacity) {
  Gaussian3D g;
  g.mean = Vector3d(x, 0, 0);
  g.scale_log = Vector3d(std::log(extent), std::log(0.5 * extent), std::log(0.25 * extent));
  g.opacity_logit = logit(opacity);
  return g;
}

AdamState marked_state(std::size_t n) {
  AdamState s = AdamState::for_cloud(n, default_learning_rates(1.0));
  for (std::size_t i = 0; i < n; ++i) {
    s.m[i].opacity_logit = static_cast<double>(i + 1);
    s.v[i].opacity_logit = static_cast<double>(10 * (i + 1));
  }
  return s;
}

TEST(Densify, QuietCloudUnchanged) {
  GaussianCloud cloud = cloud_of({make(0, 0.05, 0.5), make(1, 0.3, 0.5)});
  const GaussianCloud before = cloud;
  AdamState state = marked_state(2);
  const auto rep = densify_and_prune(cloud, state, {1e-4, 1e-4}, DensifyOptions{});
  EXPECT_EQ(rep.cloned + rep.split + rep.pruned, 0);
  EXPECT_EQ(cloud, before);
  EXPECT_EQ(state.m[1].opacity_logit, 2.0);
}

// Hand trace: axis 0 is the largest, so the children sit at mean +- R e_x * extent.
TEST(Densify, SplitLargeHighGradientGaussian) {
  GaussianCloud cloud = cloud_of({make(0, 0.05, 0.5), make(1, 0.3, 0.5)});
  AdamState state = marked_state(2);
  DensifyOptions opts;
  const auto rep = densify_and_prune(cloud, state, {0.0, 1.0}, opts);
  EXPECT_EQ(rep.split, 1);
  ASSERT_EQ(cloud.size(), 3u);
  EXPECT_EQ(cloud.generation, 1u);
  EXPECT_NEAR(cloud.gaussians[1].mean.x(), 1.3, 1e-12);
  EXPECT_NEAR(cloud.gaussians[2].mean.x(), 0.7, 1e-12);
  for (int k : {1, 2}) {
    EXPECT_NEAR(std::exp(cloud.gaussians[k].scale_log[0]), 0.3 / 1.6, 1e-12);
    EXPECT_NEAR(std::exp(cloud.gaussians[k].scale_log[2]), 0.075 / 1.6, 1e-12);
    EXPECT_EQ(state.m[k], GaussianGrad{});
    EXPECT_EQ(state.v[k], GaussianGrad{});
  }
  EXPECT_EQ(state.m[0].opacity_logit, 1.0);
}

TEST(Densify, CloneSmallHighGradientGaussian) {
  GaussianCloud cloud = cloud_of({make(0, 0.05, 0.5), make(1, 0.3, 0.5)});
  AdamState state = marked_state(2);
  const auto rep = densify_and_prune(cloud, state, {1.0, 0.0}, DensifyOptions{});
  EXPECT_EQ(rep.cloned, 1);
  ASSERT_EQ(cloud.size(), 3u);
  EXPECT_EQ(cloud.gaussians[2], cloud.gaussians[0]);
  EXPECT_EQ(state.m[0].opacity_logit, 1.0);
  EXPECT_EQ(state.m[1].opacity_logit, 2.0);
  EXPECT_EQ(state.m[2], GaussianGrad{});
}

TEST(Densify, PruneLowOpacity) {
  GaussianCloud cloud = cloud_of({make(0, 0.05, 0.5), make(1, 0.3, 0.001), make(2, 0.1, 0.7)});
  AdamState state = marked_state(3);
  const auto rep = densify_and_prune(cloud, state, {0, 0, 0}, DensifyOptions{});
  EXPECT_EQ(rep.pruned, 1);
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_EQ(state.m.size(), 2u);
  EXPECT_EQ(state.v.size(), 2u);
  EXPECT_EQ(cloud.gaussians[1].mean.x(), 2.0);
  EXPECT_EQ(state.m[1].opacity_logit, 3.0);
  EXPECT_EQ(state.v[1].opacity_logit, 30.0);
}

TEST(Densify, PruningEverythingIsAnError) {
  GaussianCloud cloud = cloud_of({make(0, 0.05, 0.001)});
  AdamState state = marked_state(1);
  EXPECT_THROW(densify_and_prune(cloud, state, {0.0}, DensifyOptions{}), std::runtime_error);
}

TEST(Densify, RespectsBudget) {
  std::vector<Gaussian3D> gs;
  for (int i = 0; i < 5; ++i) gs.push_back(make(i, 0.05, 0.5));
  GaussianCloud cloud = cloud_of(gs);
  AdamState state = marked_state(5);
  DensifyOptions opts;
  opts.max_gaussians = 7;
  const auto rep = densify_and_prune(cloud, state, std::vector<double>(5, 1.0), opts);
  EXPECT_EQ(rep.cloned, 2);
  EXPECT_EQ(cloud.size(), 7u);
}

TEST(Densify, SizeMismatchRejected) {
  GaussianCloud cloud = cloud_of({make(0, 0.05, 0.5)});
  AdamState state = marked_state(1);
  EXPECT_THROW(densify_and_prune(cloud, state, {0.0, 0.0}, DensifyOptions{}), std::invalid_argument);
}

TEST(DensifyStats, AveragesOnlyNonzeroSteps) {
  DensifyStats s;
  s.reset(2);
  GradientSet g = zero_gradients(2);
  g[0].mean = Vector3d(3, 4, 0);
  s.accumulate(g);
  g[0].mean = Vector3d(1, 0, 0);
  s.accumulate(g);
  const auto avg = s.average();
  EXPECT_DOUBLE_EQ(avg[0], 3.0);
  EXPECT_EQ(avg[1], 0.0);
  EXPECT_THROW(s.accumulate(zero_gradients(3)), std::invalid_argument);
}

TEST(DensifyOptions, DueWindow) {
  DensifyOptions o;
  EXPECT_FALSE(o.due(100));
  EXPECT_TRUE(o.due(200));
  EXPECT_FALSE(o.due(250));
  EXPECT_TRUE(o.due(1000));
  EXPECT_FALSE(o.due(1100));
  o.enabled = false;
  EXPECT_FALSE(o.due(200));
}

// Index audit: moments stay aligned with the cloud through real densification rounds.
TEST(Densify, MomentsTrackCloudDuringTraining) {
  ExperimentConfig cfg;
  cfg.scene.n_gaussians = 40;
  cfg.scene.options.width = 32;
  cfg.scene.options.height = 32;
  cfg.densify.start = 20;
  cfg.densify.interval = 20;
  cfg.densify.end = 200;
  cfg.densify.grad_threshold = 5e-4;
  const SeedSetup setup = prepare_seed(cfg, 1);
  GaussianCloud cloud = setup.trainee;
  AdamState state = AdamState::for_cloud(cloud.size(), cfg.lr);
  DensifyStats stats;
  stats.reset(cloud.size());
  int changes = 0;
  for (int it = 0; it < 200; ++it) {
    GradientSet used;
    train_step(cloud, state, setup.train[it % setup.train.size()], cfg.fasr, StepContext{}, it, 200, &used);
    stats.accumulate(used);
    if (cfg.densify.due(it + 1)) {
      const GaussianCloud before = cloud;
      const AdamState state_before = state;
      const auto rep = densify_and_prune(cloud, state, stats.average(), cfg.densify);
      changes += rep.cloned + rep.split + rep.pruned;
      ASSERT_EQ(state.m.size(), cloud.size());
      ASSERT_EQ(state.v.size(), cloud.size());
      // Entries that carry moments must be an untouched Gaussian from before, with its moments.
      std::size_t j = 0;
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (state.m[i] == GaussianGrad{} && state.v[i] == GaussianGrad{}) continue;
        while (j < before.size() && !(before.gaussians[j] == cloud.gaussians[i])) ++j;
        ASSERT_LT(j, before.size()) << i;
        ASSERT_EQ(state.m[i], state_before.m[j]);
        ASSERT_EQ(state.v[i], state_before.v[j]);
      }
      stats.reset(cloud.size());
    }
  }
  EXPECT_GT(changes, 0);
}

}  // namespace
}  // namespace fasr
