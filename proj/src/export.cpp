#include "fasr/export.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fasr {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string& s) {
  if (s == "nan" || s == "-nan") return kNaN;
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw std::runtime_error("bad number '" + s + "' in summary csv");
  return v;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

ExportFormat export_format_from_name(std::string_view name) {
  if (name == "csv") return ExportFormat::csv;
  if (name == "md") return ExportFormat::md;
  throw std::invalid_argument("unknown export format '" + std::string(name) + "'");
}

std::string summary_to_csv(const RunSummary& summary) {
  std::string out = "seed,status";
  for (auto m : kMetricNames) out += "," + std::string(m);
  out += "\n";
  for (const auto& s : summary.seeds) {
    out += std::to_string(s.seed) + "," + (s.ok ? "ok" : "failed");
    for (auto m : kMetricNames) out += "," + fmt(metric(s, m));
    out += "\n";
  }
  for (int row = 0; row < 2; ++row) {
    const auto& vals = row == 0 ? summary.mean : summary.std;
    out += row == 0 ? "mean," : "std,";
    out += summary.complete ? "complete" : "incomplete";
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) out += "," + fmt(k < vals.size() ? vals[k] : kNaN);
    out += "\n";
  }
  return out;
}

std::string summary_to_markdown(const RunSummary& summary) {
  int ok = 0;
  for (const auto& s : summary.seeds) ok += s.ok ? 1 : 0;
  std::string out = "## " + (summary.name.empty() ? std::string("run") : summary.name);
  if (!summary.config_hash.empty()) out += " (" + summary.config_hash + ")";
  out += "\n\n";
  out += std::to_string(ok) + " of " + std::to_string(summary.seeds.size()) + " seeds completed" +
         (summary.complete ? "" : " (incomplete)") + ".\n\n";
  out += "| metric | mean | std |\n|---|---|---|\n";
  for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
    const int digits = kMetricNames[k] == "psnr_test" ? 3 : (kMetricNames[k] == "wall_s" ? 2 : 4);
    out += "| " + std::string(kMetricNames[k]) + " | " + fixed(summary.mean.at(k), digits) + " | " +
           fixed(summary.std.at(k), digits) + " |\n";
  }
  return out;
}

void export_metrics(const RunSummary& summary, ExportFormat format, const std::filesystem::path& path) {
  if (summary.seeds.empty()) throw std::invalid_argument("export_metrics: summary has no seeds");
  if (summary.mean.size() != kMetricNames.size() || summary.std.size() != kMetricNames.size()) {
    throw std::invalid_argument("export_metrics: summary is not aggregated");
  }
  write_file(path, format == ExportFormat::csv ? summary_to_csv(summary) : summary_to_markdown(summary));
}

RunSummary read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  const auto header = split_csv(line);
  if (header.size() != kMetricNames.size() + 2 || header[0] != "seed") {
    throw std::runtime_error(path.string() + ": unexpected header");
  }
  RunSummary summary;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw std::runtime_error(path.string() + ": wrong number of columns");
    if (cells[0] == "mean" || cells[0] == "std") continue;
    SeedResult r;
    r.seed = std::stoull(cells[0]);
    r.ok = cells[1] == "ok";
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) set_metric(r, header[k + 2], parse_real(cells[k + 2]));
    summary.seeds.push_back(r);
  }
  aggregate(summary);
  return summary;
}

void write_step_log(const std::filesystem::path& path, const TrainOutcome& outcome) {
  std::ostringstream out;
  out << "iteration,loss,perturbed_loss,test_loss";
  for (Attribute a : kAllAttributes) out << ",pert_" << attribute_name(a);
  out << ",n_gaussians,wall_ms\n";
  std::size_t curve = 0;
  for (const auto& s : outcome.steps) {
    out << s.iteration << "," << fmt(s.loss) << ",";
    if (std::isfinite(s.perturbed_loss)) out << fmt(s.perturbed_loss);
    out << ",";
    while (curve < outcome.test_curve.size() && outcome.test_curve[curve].first < s.iteration + 1) ++curve;
    if (curve < outcome.test_curve.size() && outcome.test_curve[curve].first == s.iteration + 1) {
      out << fmt(outcome.test_curve[curve].second);
    }
    for (double p : s.perturbation_norm) out << "," << fmt(p);
    out << "," << s.n_gaussians << "," << fmt(s.wall_ms) << "\n";
  }
  write_file(path, out.str());
}

}  // namespace fasr
