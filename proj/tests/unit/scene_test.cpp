#include "fasr/renderer.hpp"
#include "fasr/scene.hpp"
#include "fasr/scene_io.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

#include <algorithm>
#include <numeric>

namespace fasr {
namespace {

TEST(Scene, GenerationIsDeterministic) {
  const auto a = gen_synthetic_scene(7, 1, 2, CameraLayout::ring);
  const auto b = gen_synthetic_scene(7, 1, 2, CameraLayout::ring);
  EXPECT_EQ(encode_scene(a.teacher, a.cameras), encode_scene(b.teacher, b.cameras));
  const auto c = gen_synthetic_scene(8, 1, 2, CameraLayout::ring);
  EXPECT_NE(encode_scene(a.teacher, a.cameras), encode_scene(c.teacher, c.cameras));
}

TEST(Scene, RingCamerasAreEquidistantFromCentroid) {
  const auto s = gen_synthetic_scene(7, 50, 8, CameraLayout::ring);
  Vector3d centroid = Vector3d::Zero();
  for (const auto& g : s.teacher.gaussians) centroid += g.mean;
  centroid /= static_cast<double>(s.teacher.size());
  EXPECT_LT(centroid.norm(), 1e-12);
  const double d0 = (s.cameras[0].center() - centroid).norm();
  for (const auto& cam : s.cameras) EXPECT_NEAR((cam.center() - centroid).norm(), d0, 1e-9);
}

TEST(Scene, CamerasLookAtCentroid) {
  for (auto layout : {CameraLayout::ring, CameraLayout::arc, CameraLayout::random}) {
    const auto s = gen_synthetic_scene(3, 20, 8, layout);
    for (const auto& cam : s.cameras) {
      const Vector3d c = cam.to_camera(Vector3d::Zero());
      EXPECT_NEAR(c.x(), 0.0, 1e-9);
      EXPECT_NEAR(c.y(), 0.0, 1e-9);
      EXPECT_GT(c.z(), 1.0);
      EXPECT_NEAR((cam.rotation * cam.rotation.transpose() - Matrix3d::Identity()).norm(), 0.0, 1e-12);
      EXPECT_NEAR(cam.rotation.determinant(), 1.0, 1e-12);
    }
  }
}

TEST(Scene, ArcViewsEachCoverSomePixelsOpaquely) {
  const auto s = gen_synthetic_scene(3, 20, 8, CameraLayout::arc);
  for (const auto& cam : s.cameras) {
    const auto r = render_forward(s.teacher, cam);
    EXPECT_GT(*std::max_element(r.alpha.begin(), r.alpha.end()), 0.5) << cam.id;
  }
}

TEST(Scene, EveryGaussianVisibleFromSomeCamera) {
  const auto s = gen_synthetic_scene(11, 60, 6, CameraLayout::ring);
  std::vector<bool> seen(s.teacher.size(), false);
  for (const auto& cam : s.cameras) {
    const auto r = render_forward(s.teacher, cam);
    for (std::size_t i = 0; i < seen.size(); ++i) seen[i] = seen[i] || r.visibility[i];
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
}

TEST(Scene, GaussiansInsideUnitScaleVolume) {
  const auto s = gen_synthetic_scene(5, 300, 4, CameraLayout::random);
  for (const auto& g : s.teacher.gaussians) {
    EXPECT_LE(g.mean.norm(), SceneOptions{}.max_radius + 1e-12);
    EXPECT_TRUE(g.scale_log.allFinite());
  }
}

TEST(Scene, RejectsTooFewCameras) {
  EXPECT_THROW(gen_synthetic_scene(1, 5, 1, CameraLayout::ring), std::invalid_argument);
  EXPECT_THROW(gen_synthetic_scene(1, 0, 4, CameraLayout::ring), std::invalid_argument);
}

TEST(Scene, SplitIsDisjointAndExhaustive) {
  const auto s = gen_synthetic_scene(0, 10, 8, CameraLayout::ring);
  const auto split = split_views(s.cameras, 3, 0);
  ASSERT_EQ(split.train.size(), 3u);
  ASSERT_EQ(split.test.size(), 5u);
  std::vector<std::string> ids;
  for (const auto& c : split.train) ids.push_back(c.id);
  for (const auto& c : split.test) ids.push_back(c.id);
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
  EXPECT_EQ(ids.size(), 8u);
  const auto again = split_views(s.cameras, 3, 0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(again.train[i].id, split.train[i].id);
}

TEST(Scene, SplitOfTwoCameras) {
  const auto s = gen_synthetic_scene(0, 3, 2, CameraLayout::ring);
  const auto split = split_views(s.cameras, 1, 0);
  EXPECT_EQ(split.train.size(), 1u);
  EXPECT_EQ(split.test.size(), 1u);
}

TEST(Scene, SplitRejectsBadCounts) {
  const auto s = gen_synthetic_scene(0, 3, 4, CameraLayout::ring);
  EXPECT_THROW(split_views(s.cameras, 4, 0), std::invalid_argument);
  EXPECT_THROW(split_views(s.cameras, 0, 0), std::invalid_argument);
}

// Brute force over all triples of an 8-camera ring: the chosen triple is at least as spread
// (minimum pairwise distance) as any contiguous triple.
TEST(Scene, SplitTrainViewsAreSpreadOut) {
  const auto s = gen_synthetic_scene(0, 10, 8, CameraLayout::ring);
  auto min_pair = [](const std::vector<Vector3d>& c) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j) m = std::min(m, (c[i] - c[j]).norm());
    return m;
  };
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto split = split_views(s.cameras, 3, seed);
    std::vector<Vector3d> chosen;
    for (const auto& c : split.train) chosen.push_back(c.center());
    const double got = min_pair(chosen);
    for (int start = 0; start < 8; ++start) {
      std::vector<Vector3d> contiguous;
      for (int k = 0; k < 3; ++k) contiguous.push_back(s.cameras[(start + k) % 8].center());
      EXPECT_GE(got + 1e-12, min_pair(contiguous));
    }
  }
}

TEST(Scene, TraineeKeepsTeacherCountPlusExtras) {
  const auto s = gen_synthetic_scene(2, 50, 4, CameraLayout::ring);
  const auto t = make_trainee(s.teacher, 2);
  EXPECT_EQ(t.size(), 60u);
  EXPECT_EQ(t.sh_degree, 1);
  for (const auto& g : t.gaussians) {
    EXPECT_NEAR(sigmoid(g.opacity_logit), 0.1, 1e-12);
    EXPECT_TRUE(g.color_ac.isZero());
  }
  EXPECT_EQ(make_trainee(s.teacher, 2), t);
}

TEST(Scene, SigmoidLogitRoundTrip) {
  for (double p : {0.001, 0.1, 0.5, 0.9, 0.999}) EXPECT_NEAR(sigmoid(logit(p)), p, 1e-12);
}

TEST(Scene, QuaternionRotationIsOrthonormalForUnnormalizedInput) {
  const Matrix3d r = rotation_from_quaternion(Vector4d(2.0, -1.0, 0.5, 3.0));
  EXPECT_NEAR((r * r.transpose() - Matrix3d::Identity()).norm(), 0.0, 1e-12);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  EXPECT_TRUE(rotation_from_quaternion(Vector4d(1, 0, 0, 0)).isIdentity(1e-15));
}

TEST(Scene, AttributeNamesRoundTrip) {
  for (Attribute a : kAllAttributes) EXPECT_EQ(attribute_from_name(attribute_name(a)), a);
  EXPECT_THROW(attribute_from_name("mean"), std::invalid_argument);
}

}  // namespace
}  // namespace fasr
