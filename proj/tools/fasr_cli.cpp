// Command-line driver: synthetic scenes, training runs, landscape probes, grid search, export.

#include "fasr/config.hpp"
#include "fasr/experiment.hpp"
#include "fasr/export.hpp"
#include "fasr/grid_search.hpp"
#include "fasr/landscape.hpp"
#include "fasr/loss.hpp"
#include "fasr/scene_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace fasr;

namespace {

// Flags shared by every subcommand that builds an ExperimentConfig.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> seeds, iters, threads, gaussians, train_views;
  std::optional<std::string> mode, layout, name, out;
  std::optional<double> late_start;
  PerAttribute<std::optional<double>> rho;
  std::vector<std::string> sets;

  void add_to(CLI::App* app) {
    app->add_option("-c,--config", config_path, "Experiment config file");
    app->add_option("--seed", seed, "First scene seed");
    app->add_option("--seeds", seeds, "Number of seeds");
    app->add_option("--iters", iters, "Training iterations");
    app->add_option("--threads", threads, "Parallel seeds");
    app->add_option("--gaussians", gaussians, "Teacher Gaussian count");
    app->add_option("--views", train_views, "Training views");
    app->add_option("--mode", mode, "baseline | sam_global | sam_per_gaussian | fasr | random_perturb");
    app->add_option("--layout", layout, "ring | arc | random");
    app->add_option("--late-start", late_start, "Fraction of iterations before regularization starts");
    app->add_option("--name", name, "Run name");
    app->add_option("-o,--out", out, "Output root directory");
    for (Attribute a : kAllAttributes) {
      app->add_option("--rho-" + std::string(attribute_name(a)), rho[index_of(a)],
                      "Perturbation radius for " + std::string(attribute_name(a)));
    }
    app->add_option("--set", sets, "Override any config key: section.key=value")->take_all();
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    auto set = [&](const char* key, const std::string& v) { set_config_value(cfg, key, v); };
    if (seed) set("scene.seed", std::to_string(*seed));
    if (seeds) set("train.seeds", std::to_string(*seeds));
    if (iters) set("train.iters", std::to_string(*iters));
    if (threads) set("train.threads", std::to_string(*threads));
    if (gaussians) set("scene.gaussians", std::to_string(*gaussians));
    if (train_views) set("train.views", std::to_string(*train_views));
    if (mode) set("fasr.mode", *mode);
    if (layout) set("scene.layout", *layout);
    if (late_start) cfg.fasr.late_start_fraction = *late_start;
    if (name) set("name", *name);
    if (out) cfg.output_root = *out;
    for (Attribute a : kAllAttributes)
      if (rho[index_of(a)]) cfg.fasr.rho[index_of(a)] = *rho[index_of(a)];
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

void print_summary(const RunSummary& s) {
  std::cout << summary_to_markdown(s);
  for (const auto& r : s.seeds)
    if (!r.ok) std::cerr << "seed " << r.seed << " failed: " << r.error << "\n";
}

int cmd_scene_gen(std::uint64_t seed, int gaussians, int cameras, const std::string& layout, int size,
                  const std::string& out, const std::string& images) {
  SceneOptions opts;
  opts.width = opts.height = size;
  const auto scene = gen_synthetic_scene(seed, gaussians, cameras, layout_from_name(layout), opts);
  save_scene(out, scene.teacher, scene.cameras);
  if (!images.empty()) {
    fs::create_directories(images);
    for (const auto& cam : scene.cameras) {
      const auto img = render_forward(scene.teacher, cam).image.clamped();
      write_ppm(fs::path(images) / (cam.id + ".ppm"), img);
      write_raw_planar(fs::path(images) / (cam.id + ".f32"), img);
    }
  }
  std::cout << "wrote " << out << " (" << scene.teacher.size() << " gaussians, " << scene.cameras.size()
            << " cameras)\n";
  return 0;
}

int cmd_fit(const ConfigFlags& flags) {
  const auto cfg = flags.build();
  const auto summary = run_experiment(cfg);
  print_summary(summary);
  if (!cfg.output_root.empty()) std::cout << "\nresults in " << run_directory(cfg).string() << "\n";
  return summary.complete ? 0 : 1;
}

int cmd_eval(const ConfigFlags& flags, const std::string& scene_path, std::uint64_t seed, const std::string& images) {
  const auto cfg = flags.build();
  const SceneFile file = load_scene(scene_path);
  const SeedSetup setup = prepare_seed(cfg, seed);
  if (file.cameras.size() != setup.scene.cameras.size()) {
    throw std::runtime_error("scene file cameras do not match the config's scene");
  }
  if (!images.empty()) fs::create_directories(images);
  double p = 0.0, s = 0.0, l = 0.0;
  const auto& test = setup.split.test;
  for (std::size_t v = 0; v < test.size(); ++v) {
    const auto img = render_forward(file.cloud, test[v], cfg.render).image;
    const auto clamped = img.clamped();
    const double pv = psnr(clamped, setup.test_targets[v]);
    const double sv = ssim(clamped, setup.test_targets[v]);
    const double lv = photometric_loss_value(img, setup.test_targets[v], cfg.lambda_ssim).total;
    std::printf("%-10s psnr %8.3f  ssim %.4f  loss %.5f\n", test[v].id.c_str(), pv, sv, lv);
    p += pv;
    s += sv;
    l += lv;
    if (!images.empty()) write_ppm(fs::path(images) / (test[v].id + ".ppm"), clamped);
  }
  const double n = static_cast<double>(test.size());
  std::printf("mean       psnr %8.3f  ssim %.4f  loss %.5f\n", p / n, s / n, l / n);
  return 0;
}

int cmd_landscape(const ConfigFlags& flags, const std::string& variants, bool grid, const std::string& out_dir) {
  const auto cfg = flags.build();
  std::vector<FasrConfig> configs;
  for (const auto& name : split_list(variants)) {
    FasrConfig f = cfg.fasr;
    f.mode = mode_from_name(name);
    configs.push_back(f);
  }
  const auto cmp = compare_landscape(cfg, configs, cfg.scene.seed, grid);
  std::printf("%-18s %12s %12s %12s %12s\n", "mode", "lambda_max", "train", "test", "gap");
  for (const auto& r : cmp.runs) {
    std::printf("%-18s %12.5g %12.6f %12.6f %12.6f\n", std::string(mode_name(r.mode)).c_str(), r.lambda_max,
                r.train_loss, r.test_loss, r.test_loss - r.train_loss);
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream traj(fs::path(out_dir) / "trajectories.csv");
    traj << "mode,snapshot,a,b\n";
    for (std::size_t t = 0; t < cmp.runs.size(); ++t)
      for (std::size_t k = 0; k < cmp.plane.coords[t].size(); ++k)
        traj << mode_name(cmp.runs[t].mode) << "," << k << "," << cmp.plane.coords[t][k].x() << ","
             << cmp.plane.coords[t][k].y() << "\n";
    if (grid) {
      write_loss_grid_csv(fs::path(out_dir) / "grid.csv", cmp.grid);
      write_loss_grid_pgm(fs::path(out_dir) / "grid.pgm", cmp.grid);
    }
    std::cout << "wrote " << out_dir << "\n";
  }
  return 0;
}

int cmd_gridsearch(const ConfigFlags& flags, const std::vector<std::string>& candidates, bool joint,
                   const std::string& out_dir) {
  ExperimentConfig cfg = flags.build();
  cfg.output_root.clear();
  PerAttribute<std::vector<double>> lists{};
  for (const auto& spec : candidates) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("candidate lists look like mu=0.001,0.01");
    auto& list = lists[index_of(attribute_from_name(spec.substr(0, eq)))];
    for (const auto& v : split_list(spec.substr(eq + 1))) list.push_back(std::stod(v));
  }
  GridSearch gs(cfg);
  gs.run_individual(lists);
  std::cout << "individual stage\n" << grid_table_csv(gs.table(GridStage::individual));
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "individual.csv") << grid_table_csv(gs.table(GridStage::individual));
  }
  if (joint) {
    const GridCell best = gs.run_joint();
    std::cout << "\njoint stage\n" << grid_table_csv(gs.table(GridStage::joint)) << "\nbest\n"
              << grid_table_csv({best});
    if (!out_dir.empty()) std::ofstream(fs::path(out_dir) / "joint.csv") << grid_table_csv(gs.table(GridStage::joint));
  }
  return 0;
}

int cmd_compare(const ConfigFlags& flags, const std::string& modes) {
  const auto base = flags.build();
  bool all_ok = true;
  std::printf("%-18s %16s %18s %18s %18s %10s\n", "mode", "psnr", "test_loss", "gap", "lambda_max", "wall_s");
  for (const auto& name : split_list(modes)) {
    ExperimentConfig cfg = base;
    cfg.fasr.mode = mode_from_name(name);
    cfg.name = base.name + "-" + name;
    const auto s = run_experiment(cfg);
    all_ok = all_ok && s.complete;
    std::printf("%-18s %8.3f+-%-6.3f %9.5f+-%-7.5f %9.5f+-%-7.5f %9.4g+-%-7.2g %10.2f\n", name.c_str(),
                s.mean_of("psnr_test"), s.std_of("psnr_test"), s.mean_of("test_loss"), s.std_of("test_loss"),
                s.mean_of("gap"), s.std_of("gap"), s.mean_of("lambda_max"), s.std_of("lambda_max"),
                s.mean_of("wall_s"));
    for (const auto& r : s.seeds)
      if (!r.ok) std::cerr << name << " seed " << r.seed << " failed: " << r.error << "\n";
  }
  return all_ok ? 0 : 1;
}

int cmd_export(const std::string& summary, const std::string& format, const std::string& out) {
  auto s = read_summary_csv(summary);
  // Run directories are named <name>-<hash prefix>.
  const std::string dir = std::filesystem::absolute(summary).parent_path().filename().string();
  const auto dash = dir.rfind('-');
  s.name = dash == std::string::npos ? dir : dir.substr(0, dash);
  if (dash != std::string::npos) s.config_hash = dir.substr(dash + 1);
  export_metrics(s, export_format_from_name(format), out);
  return s.complete ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-adaptive sharpness regularization for Gaussian splatting on synthetic scenes"};
  app.require_subcommand(1);

  auto* scene = app.add_subcommand("scene", "Synthetic scene tools");
  scene->require_subcommand(1);
  auto* gen = scene->add_subcommand("gen", "Generate a teacher scene");
  std::uint64_t gen_seed = 0;
  int gen_gaussians = 200, gen_cameras = 8, gen_size = 64;
  std::string gen_layout = "ring", gen_out, gen_images;
  gen->add_option("--seed", gen_seed);
  gen->add_option("--gaussians", gen_gaussians);
  gen->add_option("--cameras", gen_cameras);
  gen->add_option("--layout", gen_layout);
  gen->add_option("--size", gen_size, "Image width and height");
  gen->add_option("-o,--out", gen_out, "Scene file")->required();
  gen->add_option("--images", gen_images, "Directory for PPM and float32 renders");

  ConfigFlags fit_flags, eval_flags, land_flags, grid_flags, cmp_flags;
  auto* fit = app.add_subcommand("fit", "Train every seed of a config and summarize");
  fit_flags.add_to(fit);

  auto* eval = app.add_subcommand("eval", "Evaluate a saved scene on the held-out views");
  eval_flags.add_to(eval);
  std::string eval_scene, eval_images;
  std::uint64_t eval_seed = 0;
  eval->add_option("--scene", eval_scene, "Scene file written by fit")->required();
  eval->add_option("--scene-seed", eval_seed, "Seed the scene was trained on")->required();
  eval->add_option("--images", eval_images, "Directory for rendered test views");

  auto* land = app.add_subcommand("landscape", "Frozen-count sharpness and loss-surface comparison");
  land_flags.add_to(land);
  std::string land_variants = "baseline,sam_global,fasr", land_dir;
  bool land_grid = false;
  land->add_option("--variants", land_variants, "Comma-separated modes");
  land->add_flag("--grid", land_grid, "Evaluate the loss grid over the PCA plane");
  land->add_option("--dump", land_dir, "Directory for trajectory and grid files");

  auto* grid = app.add_subcommand("gridsearch", "Individual then joint search over perturbation radii");
  grid_flags.add_to(grid);
  std::vector<std::string> grid_cands;
  bool grid_joint = true;
  std::string grid_dir;
  grid->add_option("--candidates", grid_cands, "Per attribute: mu=0.001,0.01 q=0.01")->required()->take_all();
  grid->add_flag("!--no-joint", grid_joint, "Stop after the individual stage");
  grid->add_option("--dump", grid_dir, "Directory for the stage tables");

  auto* cmp = app.add_subcommand("compare", "Run several modes on the same seeds");
  cmp_flags.add_to(cmp);
  std::string cmp_modes = "baseline,sam_global,fasr";
  cmp->add_option("--modes", cmp_modes, "Comma-separated modes");

  auto* exp = app.add_subcommand("export", "Convert a summary.csv");
  std::string exp_in, exp_format = "md", exp_out;
  exp->add_option("summary", exp_in, "summary.csv")->required();
  exp->add_option("--format", exp_format, "csv | md");
  exp->add_option("-o,--out", exp_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_scene_gen(gen_seed, gen_gaussians, gen_cameras, gen_layout, gen_size, gen_out, gen_images);
    if (*fit) return cmd_fit(fit_flags);
    if (*eval) return cmd_eval(eval_flags, eval_scene, eval_seed, eval_images);
    if (*land) return cmd_landscape(land_flags, land_variants, land_grid, land_dir);
    if (*grid) return cmd_gridsearch(grid_flags, grid_cands, grid_joint, grid_dir);
    if (*cmp) return cmd_compare(cmp_flags, cmp_modes);
    if (*exp) return cmd_export(exp_in, exp_format, exp_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
