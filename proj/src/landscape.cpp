#include "fasr/landscape.hpp"

#include "fasr/scene_io.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <thread>

namespace fasr {

double default_hvp_step(const VectorXd& w) {
  const double inf = w.size() > 0 ? w.cwiseAbs().maxCoeff() : 0.0;
  return 1e-4 * (1.0 + inf);
}

VectorXd hvp_fd(const Objective& f, const VectorXd& w, const VectorXd& v, double h) {
  if (w.size() != f.dim() || v.size() != f.dim()) throw std::invalid_argument("hvp_fd: dimension mismatch");
  if (std::abs(v.norm() - 1.0) > 1e-6) throw std::invalid_argument("hvp_fd: direction must have unit norm");
  if (!(h > 0.0)) h = default_hvp_step(w);
  for (int attempt = 0; attempt < 2; ++attempt) {
    VectorXd gp, gm;
    f.value_and_gradient(w + h * v, gp);
    f.value_and_gradient(w - h * v, gm);
    VectorXd out = (gp - gm) / (2.0 * h);
    if (out.allFinite()) return out;
    h /= 10.0;
  }
  throw LandscapeError("hvp_fd: non-finite Hessian-vector product after reducing the step");
}

LambdaMaxResult lambda_max(const Objective& f, const VectorXd& w, int iters, std::uint64_t seed, double tol) {
  if (iters < 20) throw std::invalid_argument("lambda_max: need at least 20 iterations");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(f.dim());
  for (int attempt = 0;; ++attempt) {
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
    if (v.norm() > 0.0) break;
    if (attempt == 3) throw LandscapeError("lambda_max: could not draw a nonzero start vector");
  }
  v.normalize();

  LambdaMaxResult out;
  const double h = default_hvp_step(w);
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int it = 1; it <= iters; ++it) {
    const VectorXd hv = hvp_fd(f, w, v, h);
    const double rq = v.dot(hv);
    out.lambda = std::abs(rq);
    out.iterations = it;
    const double n = hv.norm();
    if (n == 0.0) {
      out.converged = true;
      break;
    }
    if (std::isfinite(previous) && std::abs(rq - previous) <= tol * std::abs(rq)) {
      out.converged = true;
      break;
    }
    previous = rq;
    v = hv / n;
  }
  return out;
}

namespace {

VectorXd orthonormal_completion(const VectorXd& axis) {
  Eigen::Index k = 0;
  axis.cwiseAbs().minCoeff(&k);
  VectorXd e = VectorXd::Zero(axis.size());
  e[k] = 1.0;
  e -= e.dot(axis) * axis;
  return e.normalized();
}

}  // namespace

PcaPlane pca_plane(const std::vector<std::vector<VectorXd>>& trajectories, std::uint64_t seed) {
  std::vector<const VectorXd*> snaps;
  for (const auto& t : trajectories)
    for (const auto& s : t) snaps.push_back(&s);
  if (snaps.size() < 2) throw std::invalid_argument("pca_plane: need at least two snapshots");
  const Eigen::Index dim = snaps.front()->size();
  if (dim < 2) throw std::invalid_argument("pca_plane: parameter vectors need at least two entries");
  for (const auto* s : snaps) {
    if (s->size() != dim) throw std::invalid_argument("pca_plane: snapshots differ in length");
  }

  const Eigen::Index m = static_cast<Eigen::Index>(snaps.size());
  PcaPlane out;
  out.origin = VectorXd::Zero(dim);
  for (const auto* s : snaps) out.origin += *s;
  out.origin /= static_cast<double>(m);
  MatrixXd xc(dim, m);
  for (Eigen::Index j = 0; j < m; ++j) xc.col(j) = *snaps[j] - out.origin;

  // The nonzero spectrum of the covariance equals that of the small Gram matrix.
  const MatrixXd gram = xc.transpose() * xc;
  const Eigen::Index k = std::min<Eigen::Index>(m, 6);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd q(m, k);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = normal(rng);
  q = Eigen::HouseholderQR<MatrixXd>(q).householderQ() * MatrixXd::Identity(m, k);

  Eigen::VectorXd ritz = Eigen::VectorXd::Zero(k);
  MatrixXd vecs;
  for (int it = 0; it < 10000; ++it) {
    const MatrixXd z = gram * q;
    q = Eigen::HouseholderQR<MatrixXd>(z).householderQ() * MatrixXd::Identity(m, k);
    const MatrixXd small = q.transpose() * gram * q;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (small + small.transpose()));
    const VectorXd next = es.eigenvalues().reverse();
    vecs = es.eigenvectors().rowwise().reverse();
    const double scale = std::max(std::abs(next[0]), std::numeric_limits<double>::min());
    const double change = (next.head(std::min<Eigen::Index>(k, 2)) - ritz.head(std::min<Eigen::Index>(k, 2)))
                              .cwiseAbs()
                              .maxCoeff();
    ritz = next;
    if (it > 0 && change <= 1e-15 * scale) break;
  }
  const MatrixXd u = q * vecs;  // Ritz vectors of the Gram matrix, descending

  const double mu1 = std::max(ritz[0], 0.0);
  const double mu2 = k > 1 ? std::max(ritz[1], 0.0) : 0.0;
  const double total = gram.trace();
  out.variance1 = mu1 / static_cast<double>(m);
  out.variance2 = mu2 / static_cast<double>(m);
  if (!(mu1 > 1e-24 * std::max(total, 1.0)) || total <= 0.0) {
    out.one_dimensional = true;
    out.axis1 = VectorXd::Unit(dim, 0);
    out.axis2 = VectorXd::Unit(dim, 1);
  } else {
    out.axis1 = (xc * u.col(0)).normalized();
    if (mu2 > 1e-12 * mu1) {
      VectorXd a2 = xc * u.col(1);
      a2 -= a2.dot(out.axis1) * out.axis1;
      out.axis2 = a2.normalized();
    } else {
      out.one_dimensional = true;
      out.axis2 = orthonormal_completion(out.axis1);
    }
  }

  out.coords.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    std::vector<Vector2d> c;
    c.reserve(t.size());
    for (const auto& s : t) {
      const VectorXd d = s - out.origin;
      c.emplace_back(d.dot(out.axis1), d.dot(out.axis2));
    }
    out.coords.push_back(std::move(c));
  }
  return out;
}

LossGrid loss_grid(const Objective& train, const Objective& test, const VectorXd& origin, const VectorXd& axis1,
                   const VectorXd& axis2, double half_width, int resolution, int threads) {
  if (resolution < 1 || resolution % 2 == 0) throw std::invalid_argument("loss_grid: resolution must be odd");
  if (!(half_width >= 0.0)) throw std::invalid_argument("loss_grid: half_width must be >= 0");
  if (origin.size() != axis1.size() || origin.size() != axis2.size() || origin.size() != train.dim() ||
      origin.size() != test.dim()) {
    throw std::invalid_argument("loss_grid: dimension mismatch");
  }
  LossGrid g;
  g.resolution = resolution;
  g.half_width = half_width;
  const int c = resolution / 2;
  const double step = c > 0 ? half_width / c : 0.0;
  for (int i = 0; i < resolution; ++i) g.coords.push_back((i - c) * step);
  g.train = MatrixXd::Constant(resolution, resolution, std::numeric_limits<double>::quiet_NaN());
  g.test = g.train;

  const int cells = resolution * resolution;
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int cell = next++; cell < cells; cell = next++) {
      const int i = cell / resolution, j = cell % resolution;
      const VectorXd w = origin + g.coords[i] * axis1 + g.coords[j] * axis2;
      g.train(i, j) = train.value(w);
      g.test(i, j) = test.value(w);
    }
  };
  const int n_threads = std::clamp(threads, 1, cells);
  std::vector<std::jthread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) {
      if (!std::isfinite(g.train(i, j))) {
        g.train(i, j) = std::numeric_limits<double>::quiet_NaN();
        ++g.missing;
      }
      if (!std::isfinite(g.test(i, j))) {
        g.test(i, j) = std::numeric_limits<double>::quiet_NaN();
        ++g.missing;
      }
    }
  return g;
}

void write_loss_grid_csv(const std::filesystem::path& path, const LossGrid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "a,b,train,test\n";
  char buf[128];
  for (int i = 0; i < grid.resolution; ++i)
    for (int j = 0; j < grid.resolution; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", grid.coords[i], grid.coords[j], grid.train(i, j),
                    grid.test(i, j));
      out << buf;
    }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_loss_grid_pgm(const std::filesystem::path& path, const LossGrid& grid) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < grid.resolution; ++i)
    for (int j = 0; j < grid.resolution; ++j) {
      const double v = grid.train(i, j);
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  std::vector<std::uint16_t> px(static_cast<std::size_t>(grid.resolution) * grid.resolution, 0);
  for (int i = 0; i < grid.resolution; ++i)
    for (int j = 0; j < grid.resolution; ++j) {
      const double v = grid.train(i, j);
      if (!std::isfinite(v) || !(hi > lo)) continue;
      // Row index is b so the image reads like a plot with a on the horizontal axis.
      px[static_cast<std::size_t>(j) * grid.resolution + i] =
          static_cast<std::uint16_t>(std::lround(65535.0 * (v - lo) / (hi - lo)));
    }
  write_pgm16(path, grid.resolution, grid.resolution, px);
}

}  // namespace fasr
