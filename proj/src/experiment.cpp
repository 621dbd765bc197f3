#include "fasr/experiment.hpp"

#include "fasr/export.hpp"
#include "fasr/loss.hpp"
#include "fasr/scene_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

namespace fasr {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Camera> train_cameras(const SeedSetup& s) {
  std::vector<Camera> out;
  for (const auto& v : s.train) out.push_back(v.camera);
  return out;
}

std::vector<ImageBuffer> train_targets(const SeedSetup& s) {
  std::vector<ImageBuffer> out;
  for (const auto& v : s.train) out.push_back(v.target);
  return out;
}

SeedResult run_seed_impl(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& log_dir) {
  SeedResult r;
  r.seed = seed;
  try {
    const SeedSetup setup = prepare_seed(cfg, seed);
    const auto tcams = train_cameras(setup);
    const auto ttargets = train_targets(setup);
    r.initial_train_loss = mean_view_loss(setup.trainee, tcams, ttargets, cfg);

    TrainOptions opts;
    opts.iters = cfg.total_iters;
    opts.schedule_total = cfg.total_iters;
    opts.densify = cfg.densify.enabled;
    const TrainOutcome out = train_cloud(setup.trainee, setup, cfg, seed, opts);

    r.train_loss = mean_view_loss(out.cloud, tcams, ttargets, cfg);
    r.test_loss = mean_view_loss(out.cloud, setup.split.test, setup.test_targets, cfg);
    r.gap = r.test_loss - r.train_loss;
    double p = 0.0, s = 0.0;
    for (std::size_t v = 0; v < setup.split.test.size(); ++v) {
      const ImageBuffer img = render_forward(out.cloud, setup.split.test[v], cfg.render).image.clamped();
      p += psnr(img, setup.test_targets[v]);
      s += ssim(img, setup.test_targets[v]);
    }
    r.psnr_test = p / static_cast<double>(setup.split.test.size());
    r.ssim_test = s / static_cast<double>(setup.split.test.size());
    r.wall_s = out.wall_s;
    r.n_gaussians = static_cast<double>(out.cloud.size());
    r.aborted_steps = out.aborted_steps;
    if (cfg.landscape.measure_lambda) {
      const SceneObjective obj(out.cloud, tcams, ttargets, cfg.lambda_ssim, cfg.render);
      r.lambda_max = lambda_max(obj, flatten_values(out.cloud), cfg.landscape.power_iters, seed,
                                cfg.landscape.power_tol).lambda;
    }
    if (!log_dir.empty()) {
      if (cfg.write_step_log) write_step_log(log_dir / ("steps_seed" + std::to_string(seed) + ".csv"), out);
      save_scene(log_dir / ("final_seed" + std::to_string(seed) + ".scene"), out.cloud, setup.scene.cameras);
    }
    r.ok = std::isfinite(r.train_loss) && std::isfinite(r.test_loss);
    if (!r.ok) r.error = "non-finite final loss";
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

}  // namespace

double metric(const SeedResult& r, std::string_view name) {
  if (name == "psnr_test") return r.psnr_test;
  if (name == "ssim_test") return r.ssim_test;
  if (name == "train_loss") return r.train_loss;
  if (name == "test_loss") return r.test_loss;
  if (name == "gap") return r.gap;
  if (name == "lambda_max") return r.lambda_max;
  if (name == "wall_s") return r.wall_s;
  if (name == "n_gaussians") return r.n_gaussians;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

void set_metric(SeedResult& r, std::string_view name, double value) {
  if (name == "psnr_test") r.psnr_test = value;
  else if (name == "ssim_test") r.ssim_test = value;
  else if (name == "train_loss") r.train_loss = value;
  else if (name == "test_loss") r.test_loss = value;
  else if (name == "gap") r.gap = value;
  else if (name == "lambda_max") r.lambda_max = value;
  else if (name == "wall_s") r.wall_s = value;
  else if (name == "n_gaussians") r.n_gaussians = value;
  else throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

double RunSummary::mean_of(std::string_view name) const {
  for (std::size_t k = 0; k < kMetricNames.size(); ++k)
    if (kMetricNames[k] == name) return mean.at(k);
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

double RunSummary::std_of(std::string_view name) const {
  for (std::size_t k = 0; k < kMetricNames.size(); ++k)
    if (kMetricNames[k] == name) return std.at(k);
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

void aggregate(RunSummary& summary) {
  summary.mean.assign(kMetricNames.size(), kNaN);
  summary.std.assign(kMetricNames.size(), kNaN);
  summary.complete = !summary.seeds.empty();
  for (const auto& s : summary.seeds) summary.complete = summary.complete && s.ok;
  for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
    std::vector<double> xs;
    for (const auto& s : summary.seeds)
      if (s.ok) xs.push_back(metric(s, kMetricNames[k]));
    if (xs.empty()) continue;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    summary.mean[k] = m;
    if (xs.size() > 1) {
      double ss = 0.0;
      for (double x : xs) ss += (x - m) * (x - m);
      summary.std[k] = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
  }
}

SeedSetup prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedSetup s;
  s.scene = gen_synthetic_scene(seed, cfg.scene.n_gaussians, cfg.scene.n_cameras, cfg.scene.layout, cfg.scene.options);
  std::map<std::string, ImageBuffer> targets;
  for (const auto& cam : s.scene.cameras) {
    targets[cam.id] = render_forward(s.scene.teacher, cam, cfg.render).image.clamped();
  }
  s.split = split_views(s.scene.cameras, cfg.n_train, seed);
  for (const auto& cam : s.split.train) {
    const ImageBuffer& t = targets.at(cam.id);
    s.train.push_back({cam, t, optimal_scale_map(t, cfg.frequency, cam.id)});
  }
  for (const auto& cam : s.split.test) s.test_targets.push_back(targets.at(cam.id));
  TraineeOptions topts = cfg.trainee;
  s.trainee = make_trainee(s.scene.teacher, seed, topts);
  return s;
}

double mean_view_loss(const GaussianCloud& cloud, const std::vector<Camera>& cams,
                      const std::vector<ImageBuffer>& targets, const ExperimentConfig& cfg) {
  if (cams.empty() || cams.size() != targets.size()) throw std::invalid_argument("mean_view_loss: view mismatch");
  double sum = 0.0;
  for (std::size_t v = 0; v < cams.size(); ++v) {
    sum += photometric_loss_value(render_forward(cloud, cams[v], cfg.render).image, targets[v], cfg.lambda_ssim).total;
  }
  return sum / static_cast<double>(cams.size());
}

TrainOutcome train_cloud(GaussianCloud cloud, const SeedSetup& setup, const ExperimentConfig& cfg,
                         std::uint64_t seed, const TrainOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainOutcome out;
  AdamState state = AdamState::for_cloud(cloud.size(), cfg.lr);
  DensifyStats dstats;
  dstats.reset(cloud.size());
  StepContext ctx;
  ctx.lambda_ssim = cfg.lambda_ssim;
  ctx.frequency = cfg.frequency;
  ctx.render = cfg.render;
  ctx.noise_seed = seed * 0x2545F4914F6CDD1DULL + 0x632BE59BD9B4E019ULL;
  const int total = opts.schedule_total > 0 ? opts.schedule_total : opts.iters;
  const int n_views = static_cast<int>(setup.train.size());
  out.steps.reserve(static_cast<std::size_t>(opts.iters));
  if (opts.record_snapshots) out.snapshots.push_back(flatten_values(cloud));

  for (int k = 0; k < opts.iters; ++k) {
    const int it = opts.iteration_offset + k;
    const TrainView& view = setup.train[static_cast<std::size_t>(it % n_views)];
    GradientSet descent;
    StepStats st = train_step(cloud, state, view, cfg.fasr, ctx, it, total, &descent);
    if (st.aborted) {
      ++out.aborted_steps;
    } else if (opts.densify && cfg.densify.enabled) {
      dstats.accumulate(descent);
      if (cfg.densify.due(it + 1)) {
        densify_and_prune(cloud, state, dstats.average(), cfg.densify);
        dstats.reset(cloud.size());
      }
    }
    st.n_gaussians = cloud.size();
    out.steps.push_back(st);
    if ((k + 1) % cfg.eval_interval == 0 || k + 1 == opts.iters) {
      out.test_curve.emplace_back(it + 1, mean_view_loss(cloud, setup.split.test, setup.test_targets, cfg));
    }
    if (opts.record_snapshots && ((k + 1) % cfg.landscape.snapshot_interval == 0 || k + 1 == opts.iters)) {
      out.snapshots.push_back(flatten_values(cloud));
    }
  }
  out.cloud = std::move(cloud);
  out.wall_s = seconds_since(t0);
  return out;
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) { return run_seed_impl(cfg, seed, {}); }

RunSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunSummary summary;
  summary.name = cfg.name;
  summary.config_hash = config_hash_hex(cfg);
  summary.seeds.resize(static_cast<std::size_t>(cfg.n_seeds));

  std::filesystem::path dir;
  if (!cfg.output_root.empty()) {
    dir = run_directory(cfg);
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "config.cfg") << config_to_text(cfg);
  }

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < cfg.n_seeds; k = next++) {
      summary.seeds[static_cast<std::size_t>(k)] = run_seed_impl(cfg, cfg.scene.seed + static_cast<std::uint64_t>(k), dir);
    }
  };
  const int n_threads = std::clamp(cfg.threads, 1, cfg.n_seeds);
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }
  aggregate(summary);

  if (!dir.empty()) {
    export_metrics(summary, ExportFormat::csv, dir / "summary.csv");
    export_metrics(summary, ExportFormat::md, dir / "summary.md");
  }
  return summary;
}

LandscapeComparison compare_landscape(const ExperimentConfig& cfg, const std::vector<FasrConfig>& variants,
                                      std::uint64_t seed, bool with_grid) {
  cfg.validate();
  if (variants.empty()) throw std::invalid_argument("compare_landscape: no variants");
  const SeedSetup setup = prepare_seed(cfg, seed);
  const auto tcams = train_cameras(setup);
  const auto ttargets = train_targets(setup);

  ExperimentConfig warm = cfg;
  warm.fasr = FasrConfig{};
  TrainOptions pre;
  pre.iters = cfg.landscape.pretrain_iters;
  pre.schedule_total = cfg.landscape.pretrain_iters;
  pre.densify = true;
  const GaussianCloud start =
      cfg.landscape.pretrain_iters > 0 ? train_cloud(setup.trainee, setup, warm, seed, pre).cloud : setup.trainee;

  LandscapeComparison out;
  out.seed = seed;
  std::vector<std::vector<VectorXd>> trajectories;
  for (const auto& variant : variants) {
    variant.validate();
    ExperimentConfig c = cfg;
    c.fasr = variant;
    TrainOptions cont;
    cont.iters = cfg.landscape.continue_iters;
    cont.schedule_total = cfg.landscape.continue_iters;
    cont.densify = false;
    cont.record_snapshots = true;
    TrainOutcome t = train_cloud(start, setup, c, seed, cont);
    LandscapeRun run;
    run.mode = variant.mode;
    const SceneObjective obj(t.cloud, tcams, ttargets, cfg.lambda_ssim, cfg.render);
    run.lambda_max = lambda_max(obj, flatten_values(t.cloud), cfg.landscape.power_iters, seed, cfg.landscape.power_tol).lambda;
    run.train_loss = mean_view_loss(t.cloud, tcams, ttargets, cfg);
    run.test_loss = mean_view_loss(t.cloud, setup.split.test, setup.test_targets, cfg);
    run.trajectory = std::move(t.snapshots);
    trajectories.push_back(run.trajectory);
    out.runs.push_back(std::move(run));
  }

  out.plane = pca_plane(trajectories, seed);
  if (with_grid) {
    double radius = 0.0;
    for (const auto& tr : out.plane.coords)
      for (const auto& c : tr) radius = std::max(radius, c.norm());
    const SceneObjective train_obj(start, tcams, ttargets, cfg.lambda_ssim, cfg.render);
    const SceneObjective test_obj(start, setup.split.test, setup.test_targets, cfg.lambda_ssim, cfg.render);
    out.grid = loss_grid(train_obj, test_obj, out.plane.origin, out.plane.axis1, out.plane.axis2,
                         cfg.landscape.grid_half_width_factor * radius, cfg.landscape.grid_resolution, cfg.threads);
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace fasr
