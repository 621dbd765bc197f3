#include "fasr/grid_search.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fasr {

GridSearch::GridSearch(ExperimentConfig base, ExperimentRunner runner)
    : base_(std::move(base)), runner_(std::move(runner)) {
  if (!runner_) throw std::invalid_argument("GridSearch: runner required");
  if (base_.fasr.mode == Mode::baseline) throw std::invalid_argument("GridSearch: base mode must perturb");
  base_.validate();
}

ExperimentConfig GridSearch::cell_config(const PerAttribute<double>& rho) const {
  ExperimentConfig c = base_;
  c.fasr.rho = rho;
  return c;
}

GridCell GridSearch::evaluate(const PerAttribute<double>& rho) {
  const RunSummary s = runner_(cell_config(rho));
  GridCell cell;
  cell.rho = rho;
  if (!s.mean.empty()) {
    cell.mean_psnr = s.mean_of("psnr_test");
    cell.std_psnr = s.std_of("psnr_test");
  }
  return cell;
}

namespace {

// First cell with the largest finite mean PSNR; NaN cells never win.
std::size_t argmax(const std::vector<GridCell>& cells) {
  std::size_t best = cells.size();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (!std::isfinite(cells[k].mean_psnr)) continue;
    if (best == cells.size() || cells[k].mean_psnr > cells[best].mean_psnr) best = k;
  }
  return best;
}

}  // namespace

void GridSearch::run_individual(const PerAttribute<std::vector<double>>& candidates) {
  bool any = false;
  for (const auto& list : candidates) {
    for (double v : list) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("GridSearch: candidates must be finite and >= 0");
    }
    any = any || !list.empty();
  }
  if (!any) throw std::invalid_argument("GridSearch: no candidates");
  candidates_ = candidates;
  individual_.clear();
  individual_attr_.clear();
  joint_.clear();
  best_ = {};
  for (Attribute a : kAllAttributes) {
    const auto& list = candidates[index_of(a)];
    if (list.empty()) continue;
    std::vector<GridCell> cells;
    for (double v : list) {
      PerAttribute<double> rho{};
      rho[index_of(a)] = v;
      cells.push_back(evaluate(rho));
    }
    const std::size_t b = argmax(cells);
    if (b == cells.size()) throw std::runtime_error("GridSearch: every cell failed for " + std::string(attribute_name(a)));
    best_[index_of(a)] = list[b];
    for (auto& c : cells) {
      individual_.push_back(c);
      individual_attr_.push_back(a);
    }
  }
  individual_done_ = true;
}

std::vector<double> GridSearch::joint_candidates(Attribute a) const {
  if (!individual_done_) throw std::logic_error("GridSearch: individual stage has not run");
  std::vector<double> out;
  const auto& list = candidates_[index_of(a)];
  if (list.empty()) return {0.0};
  for (double v : list)
    if (v <= best_[index_of(a)]) out.push_back(v);
  return out;
}

GridCell GridSearch::run_joint() {
  if (!individual_done_) throw std::logic_error("GridSearch: joint stage requires the individual stage first");
  joint_.clear();
  PerAttribute<std::vector<double>> lists;
  for (Attribute a : kAllAttributes) lists[index_of(a)] = joint_candidates(a);
  PerAttribute<std::size_t> pos{};
  while (true) {
    PerAttribute<double> rho{};
    for (int a = 0; a < kNumAttributes; ++a) rho[a] = lists[a][pos[a]];
    joint_.push_back(evaluate(rho));
    int a = kNumAttributes - 1;
    while (a >= 0 && ++pos[a] == lists[a].size()) pos[a--] = 0;
    if (a < 0) break;
  }
  const std::size_t b = argmax(joint_);
  if (b == joint_.size()) throw std::runtime_error("GridSearch: every joint cell failed");
  return joint_[b];
}

const std::vector<GridCell>& GridSearch::table(GridStage stage) const {
  return stage == GridStage::individual ? individual_ : joint_;
}

std::vector<GridCell> GridSearch::individual_table(Attribute a) const {
  std::vector<GridCell> out;
  for (std::size_t k = 0; k < individual_.size(); ++k)
    if (individual_attr_[k] == a) out.push_back(individual_[k]);
  return out;
}

const PerAttribute<double>& GridSearch::individual_best() const {
  if (!individual_done_) throw std::logic_error("GridSearch: individual stage has not run");
  return best_;
}

std::string grid_table_csv(const std::vector<GridCell>& cells) {
  std::string out;
  for (Attribute a : kAllAttributes) out += "rho_" + std::string(attribute_name(a)) + ",";
  out += "mean_psnr,std_psnr\n";
  char buf[64];
  for (const auto& c : cells) {
    for (double r : c.rho) {
      std::snprintf(buf, sizeof buf, "%.17g,", r);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c.mean_psnr, c.std_psnr);
    out += buf;
  }
  return out;
}

}  // namespace fasr
