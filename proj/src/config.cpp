#include "fasr/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace fasr {

namespace {

struct Field {
  std::string key;  // "section.name" or "name" at top level
  std::function<void(std::string_view)> set;
  std::function<std::string()> get;
  bool hashed = true;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw ConfigError("not a number: '" + std::string(s) + "'");
  return v;
}

template <class Int>
Int to_int(std::string_view s) {
  Int v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw ConfigError("not an integer: '" + std::string(s) + "'");
  return v;
}

bool to_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("not a boolean: '" + std::string(s) + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Field real(std::string key, double& x) {
  return {std::move(key), [&x](std::string_view s) { x = to_double(s); }, [&x] { return fmt(x); }};
}

template <class Int>
Field integer(std::string key, Int& x) {
  return {std::move(key), [&x](std::string_view s) { x = to_int<Int>(s); }, [&x] { return std::to_string(x); }};
}

Field boolean(std::string key, bool& x) {
  return {std::move(key), [&x](std::string_view s) { x = to_bool(s); }, [&x] { return std::string(x ? "true" : "false"); }};
}

std::vector<Field> bind(ExperimentConfig& c) {
  std::vector<Field> f;
  f.push_back({"name", [&c](std::string_view s) { c.name = std::string(s); }, [&c] { return c.name; }});

  f.push_back(integer("scene.seed", c.scene.seed));
  f.push_back(integer("scene.gaussians", c.scene.n_gaussians));
  f.push_back(integer("scene.cameras", c.scene.n_cameras));
  f.push_back({"scene.layout", [&c](std::string_view s) { c.scene.layout = layout_from_name(s); },
               [&c] { return std::string(layout_name(c.scene.layout)); }});
  f.push_back(integer("scene.width", c.scene.options.width));
  f.push_back(integer("scene.height", c.scene.options.height));
  f.push_back(real("scene.fov_degrees", c.scene.options.fov_degrees));
  f.push_back(real("scene.camera_distance", c.scene.options.camera_distance));
  f.push_back(real("scene.arc_degrees", c.scene.options.arc_degrees));
  f.push_back(real("scene.elevation_degrees", c.scene.options.elevation_degrees));
  f.push_back(real("scene.max_radius", c.scene.options.max_radius));
  f.push_back(real("scene.large_fraction", c.scene.options.large_fraction));

  f.push_back(real("trainee.mean_jitter", c.trainee.mean_jitter));
  f.push_back(real("trainee.extra_fraction", c.trainee.extra_fraction));
  f.push_back(real("trainee.init_opacity", c.trainee.init_opacity));
  f.push_back(integer("trainee.sh_degree", c.trainee.sh_degree));

  f.push_back(integer("train.views", c.n_train));
  f.push_back(integer("train.iters", c.total_iters));
  f.push_back(integer("train.eval_interval", c.eval_interval));
  f.push_back(real("train.lambda_ssim", c.lambda_ssim));
  for (Attribute a : kAllAttributes) {
    f.push_back(real("train.lr_" + std::string(attribute_name(a)), c.lr[index_of(a)]));
  }
  f.push_back(real("train.cutoff_sigma", c.render.cutoff_sigma));
  f.push_back(integer("train.seeds", c.n_seeds));
  Field threads = integer("train.threads", c.threads);
  threads.hashed = false;
  f.push_back(threads);
  f.push_back({"train.output_root", [&c](std::string_view s) { c.output_root = std::string(s); },
               [&c] { return c.output_root.string(); }, false});
  Field log = boolean("train.step_log", c.write_step_log);
  log.hashed = false;
  f.push_back(log);

  f.push_back({"fasr.mode", [&c](std::string_view s) { c.fasr.mode = mode_from_name(s); },
               [&c] { return std::string(mode_name(c.fasr.mode)); }});
  for (Attribute a : kAllAttributes) {
    f.push_back(real("fasr.rho_" + std::string(attribute_name(a)), c.fasr.rho[index_of(a)]));
  }
  for (Attribute a : kAllAttributes) {
    f.push_back(boolean("fasr.mask_" + std::string(attribute_name(a)), c.fasr.attribute_mask[index_of(a)]));
  }
  f.push_back(real("fasr.wsam_gamma", c.fasr.wsam_gamma));
  f.push_back(real("fasr.gamma_cap", c.fasr.gamma_cap));
  f.push_back(real("fasr.late_start_fraction", c.fasr.late_start_fraction));
  f.push_back(real("fasr.grad_norm_floor", c.fasr.grad_norm_floor));
  f.push_back(boolean("fasr.adaptive_magnitude", c.fasr.adaptive_magnitude));
  f.push_back(boolean("fasr.adaptive_weighting", c.fasr.adaptive_weighting));
  f.push_back({"fasr.random_rule", [&c](std::string_view s) { c.fasr.random_rule = random_rule_from_name(s); },
               [&c] { return std::string(random_rule_name(c.fasr.random_rule)); }});

  f.push_back({"frequency.scales",
               [&c](std::string_view s) {
                 c.frequency.candidate_scales.clear();
                 while (!s.empty()) {
                   const auto comma = s.find(',');
                   c.frequency.candidate_scales.push_back(to_double(trim(s.substr(0, comma))));
                   if (comma == std::string_view::npos) break;
                   s.remove_prefix(comma + 1);
                 }
               },
               [&c] {
                 std::string out;
                 for (double v : c.frequency.candidate_scales) out += (out.empty() ? "" : ",") + fmt(v);
                 return out;
               }});
  f.push_back(real("frequency.rise_threshold", c.frequency.rise_threshold));

  f.push_back(boolean("densify.enabled", c.densify.enabled));
  f.push_back(integer("densify.interval", c.densify.interval));
  f.push_back(integer("densify.start", c.densify.start));
  f.push_back(integer("densify.end", c.densify.end));
  f.push_back(real("densify.grad_threshold", c.densify.grad_threshold));
  f.push_back(real("densify.extent_threshold", c.densify.extent_threshold));
  f.push_back(real("densify.prune_opacity", c.densify.prune_opacity));
  f.push_back(real("densify.split_factor", c.densify.split_factor));
  f.push_back(integer("densify.max_gaussians", c.densify.max_gaussians));

  f.push_back(boolean("landscape.measure_lambda", c.landscape.measure_lambda));
  f.push_back(integer("landscape.power_iters", c.landscape.power_iters));
  f.push_back(real("landscape.power_tol", c.landscape.power_tol));
  f.push_back(integer("landscape.grid_resolution", c.landscape.grid_resolution));
  f.push_back(real("landscape.grid_half_width_factor", c.landscape.grid_half_width_factor));
  f.push_back(integer("landscape.snapshot_interval", c.landscape.snapshot_interval));
  f.push_back(integer("landscape.pretrain_iters", c.landscape.pretrain_iters));
  f.push_back(integer("landscape.continue_iters", c.landscape.continue_iters));
  return f;
}

void apply(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  for (auto& field : bind(cfg)) {
    if (field.key == key) {
      try {
        field.set(value);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void parse_into(ExperimentConfig& cfg, std::string_view text, const std::filesystem::path& base_dir, int depth) {
  if (depth > 8) throw ConfigError("include nesting too deep");
  std::string section;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const char* known[] = {"scene", "trainee", "train", "fasr", "frequency", "densify", "landscape"};
      bool ok = false;
      for (const char* k : known) ok = ok || section == k;
      if (!ok) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty() && key == "include") {
      const auto path = base_dir / std::string(value);
      std::ifstream in(path);
      if (!in) throw ConfigError(where + "cannot open include '" + path.string() + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      parse_into(cfg, ss.str(), path.parent_path(), depth + 1);
      continue;
    }
    try {
      apply(cfg, section.empty() ? key : section + "." + key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

std::string canonical(const ExperimentConfig& cfg, bool hashed_only) {
  auto& c = const_cast<ExperimentConfig&>(cfg);
  std::string out, section;
  for (const auto& field : bind(c)) {
    if (hashed_only && !field.hashed) continue;
    const auto dot = field.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : field.key.substr(0, dot);
    const std::string name = dot == std::string::npos ? field.key : field.key.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += name + " = " + field.get() + "\n";
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  need(!name.empty() && name.find_first_of("/ \t") == std::string::npos, "name must be nonempty without spaces or '/'");
  need(scene.n_gaussians >= 1, "scene.gaussians must be >= 1");
  need(scene.n_cameras >= 2, "scene.cameras must be >= 2");
  need(scene.options.width > 0 && scene.options.height > 0, "scene width/height must be positive");
  need(n_train >= 1 && n_train < scene.n_cameras, "train.views must be in [1, cameras)");
  need(total_iters >= 1, "train.iters must be >= 1");
  need(eval_interval >= 1, "train.eval_interval must be >= 1");
  need(lambda_ssim >= 0.0 && lambda_ssim < 1.0, "train.lambda_ssim must be in [0, 1)");
  for (double v : lr) need(v >= 0.0 && std::isfinite(v), "learning rates must be finite and >= 0");
  need(render.cutoff_sigma > 0.0, "train.cutoff_sigma must be positive");
  need(n_seeds >= 1, "train.seeds must be >= 1");
  need(threads >= 1, "train.threads must be >= 1");
  need(trainee.sh_degree == 0 || trainee.sh_degree == 1, "trainee.sh_degree must be 0 or 1");
  need(densify.interval >= 1, "densify.interval must be >= 1");
  need(densify.prune_opacity >= 0.0 && densify.prune_opacity < 1.0, "densify.prune_opacity must be in [0, 1)");
  need(densify.split_factor > 1.0, "densify.split_factor must exceed 1");
  need(landscape.power_iters >= 20, "landscape.power_iters must be >= 20");
  need(landscape.grid_resolution >= 1 && landscape.grid_resolution % 2 == 1, "landscape.grid_resolution must be odd");
  need(landscape.snapshot_interval >= 1, "landscape.snapshot_interval must be >= 1");
  try {
    fasr.validate();
    frequency.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  parse_into(cfg, text, base_dir, 0);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void set_config_value(ExperimentConfig& cfg, std::string_view dotted_key, std::string_view value) {
  apply(cfg, dotted_key, trim(value));
}

std::string config_to_text(const ExperimentConfig& cfg) { return canonical(cfg, false); }

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical(cfg, true)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

std::filesystem::path run_directory(const ExperimentConfig& cfg) {
  return cfg.output_root / (cfg.name + "-" + config_hash_hex(cfg).substr(0, 12));
}

}  // namespace fasr
