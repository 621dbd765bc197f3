#include "fasr/grid_search.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

namespace fasr {
namespace {

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.fasr.mode = Mode::fasr;
  return cfg;
}

// Synthetic response surface: PSNR peaks at rho_mu = 0.01 alone, lower when combined.
RunSummary fake_runner(const ExperimentConfig& cfg, std::vector<PerAttribute<double>>* calls) {
  if (calls) calls->push_back(cfg.fasr.rho);
  const auto& r = cfg.fasr.rho;
  double psnr = 20.0 - 1e4 * std::pow(r[0] - 0.01, 2) - 100.0 * std::pow(r[1] - 0.02, 2) - 50.0 * r[0] * r[1] * 1e3;
  RunSummary s;
  SeedResult seed;
  seed.ok = true;
  seed.psnr_test = psnr;
  s.seeds = {seed, seed};
  s.seeds[1].psnr_test = psnr + 0.5;
  aggregate(s);
  return s;
}

TEST(GridSearch, RejectsBaselineBase) {
  ExperimentConfig cfg;
  EXPECT_THROW(GridSearch(cfg, [](const ExperimentConfig& c) { return fake_runner(c, nullptr); }),
               std::invalid_argument);
}

TEST(GridSearch, JointRequiresIndividualStage) {
  GridSearch gs(base_config(), [](const ExperimentConfig& c) { return fake_runner(c, nullptr); });
  EXPECT_THROW(gs.run_joint(), std::logic_error);
  EXPECT_THROW(gs.individual_best(), std::logic_error);
  EXPECT_THROW(gs.joint_candidates(Attribute::mean), std::logic_error);
  EXPECT_FALSE(gs.individual_done());
}

TEST(GridSearch, IndividualStageVariesOneAttributeAtATime) {
  std::vector<PerAttribute<double>> calls;
  GridSearch gs(base_config(), [&](const ExperimentConfig& c) { return fake_runner(c, &calls); });
  PerAttribute<std::vector<double>> cands{};
  cands[0] = {0.001, 0.01, 0.1};
  cands[1] = {0.005, 0.02};
  gs.run_individual(cands);
  ASSERT_EQ(calls.size(), 5u);
  for (const auto& rho : calls) {
    int nonzero = 0;
    for (double v : rho) nonzero += v != 0.0;
    EXPECT_EQ(nonzero, 1);
  }
  EXPECT_EQ(gs.individual_best()[0], 0.01);
  EXPECT_EQ(gs.individual_best()[1], 0.02);
  EXPECT_EQ(gs.individual_best()[2], 0.0);
  EXPECT_EQ(gs.individual_table(Attribute::mean).size(), 3u);
  EXPECT_DOUBLE_EQ(gs.table(GridStage::individual)[0].mean_psnr, fake_runner(gs.cell_config(calls[0]), nullptr).mean_of("psnr_test"));
}

// The returned best must be the argmax of the recorded table.
TEST(GridSearch, ArgmaxConsistency) {
  GridSearch gs(base_config(), [](const ExperimentConfig& c) { return fake_runner(c, nullptr); });
  PerAttribute<std::vector<double>> cands{};
  cands[0] = {0.001, 0.01, 0.1};
  cands[1] = {0.005, 0.02};
  gs.run_individual(cands);
  for (Attribute a : {Attribute::mean, Attribute::rot}) {
    const auto table = gs.individual_table(a);
    std::size_t best = 0;
    for (std::size_t k = 1; k < table.size(); ++k)
      if (table[k].mean_psnr > table[best].mean_psnr) best = k;
    EXPECT_EQ(gs.individual_best()[index_of(a)], table[best].rho[index_of(a)]);
  }
  EXPECT_EQ(gs.joint_candidates(Attribute::mean), (std::vector<double>{0.001, 0.01}));
  EXPECT_EQ(gs.joint_candidates(Attribute::rot), (std::vector<double>{0.005, 0.02}));
  EXPECT_EQ(gs.joint_candidates(Attribute::scale), (std::vector<double>{0.0}));
  const GridCell best = gs.run_joint();
  const auto& joint = gs.table(GridStage::joint);
  EXPECT_EQ(joint.size(), 4u);
  for (const auto& c : joint) EXPECT_LE(c.mean_psnr, best.mean_psnr);
  EXPECT_LE(best.rho[0], gs.individual_best()[0]);
  EXPECT_EQ(best.rho[0], 0.001);
  EXPECT_NEAR(best.std_psnr, std::sqrt(0.125), 1e-12);
}

TEST(GridSearch, ZeroOnlyCandidateMatchesBaselineRho) {
  std::vector<PerAttribute<double>> calls;
  GridSearch gs(base_config(), [&](const ExperimentConfig& c) { return fake_runner(c, &calls); });
  PerAttribute<std::vector<double>> cands{};
  cands[0] = {0.0};
  gs.run_individual(cands);
  EXPECT_EQ(gs.individual_best()[0], 0.0);
  EXPECT_EQ(calls[0], PerAttribute<double>{});
}

TEST(GridSearch, FailedCellsNeverWin) {
  GridSearch gs(base_config(), [](const ExperimentConfig& c) {
    RunSummary s = fake_runner(c, nullptr);
    if (c.fasr.rho[0] == 0.01) {
      for (auto& r : s.seeds) r.ok = false;
      aggregate(s);
    }
    return s;
  });
  PerAttribute<std::vector<double>> cands{};
  cands[0] = {0.001, 0.01, 0.1};
  gs.run_individual(cands);
  EXPECT_EQ(gs.individual_best()[0], 0.001);
  EXPECT_TRUE(std::isnan(gs.individual_table(Attribute::mean)[1].mean_psnr));
}

TEST(GridSearch, RejectsBadCandidates) {
  GridSearch gs(base_config(), [](const ExperimentConfig& c) { return fake_runner(c, nullptr); });
  EXPECT_THROW(gs.run_individual(PerAttribute<std::vector<double>>{}), std::invalid_argument);
  PerAttribute<std::vector<double>> cands{};
  cands[0] = {-0.1};
  EXPECT_THROW(gs.run_individual(cands), std::invalid_argument);
}

TEST(GridSearch, TableCsv) {
  GridCell c;
  c.rho[0] = 0.5;
  c.mean_psnr = 21.25;
  c.std_psnr = 0.5;
  const std::string csv = grid_table_csv({c});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "rho_mu,rho_q,rho_s,rho_sigma,rho_dc,rho_ac,mean_psnr,std_psnr");
  EXPECT_NE(csv.find("0.5,0,0,0,0,0,21.25,0.5"), std::string::npos);
}

}  // namespace
}  // namespace fasr
