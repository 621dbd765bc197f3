#include "fasr/export.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace fasr {
namespace {

RunSummary two_seed_summary() {
  RunSummary s;
  s.name = "demo";
  s.config_hash = "0123456789abcdef";
  for (int k = 0; k < 2; ++k) {
    SeedResult r;
    r.seed = 10 + k;
    r.ok = true;
    r.psnr_test = 25.0 + 0.1 / 3.0 * k;
    r.ssim_test = 0.9 + 1e-17 * k;
    r.train_loss = 0.001 * (k + 1);
    r.test_loss = 0.04 + k * 1e-9;
    r.gap = r.test_loss - r.train_loss;
    r.wall_s = 12.5;
    r.n_gaussians = 300 + k;
    s.seeds.push_back(r);
  }
  aggregate(s);
  return s;
}

std::filesystem::path temp_file(const char* name) { return std::filesystem::temp_directory_path() / name; }

TEST(Export, CsvRowsAndColumns) {
  const std::string csv = summary_to_csv(two_seed_summary());
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const auto nl = csv.find('\n', pos);
    lines.push_back(csv.substr(pos, nl - pos));
    pos = nl + 1;
  }
  ASSERT_EQ(lines.size(), 1u + 2u + 2u);
  EXPECT_EQ(lines[0], "seed,status,psnr_test,ssim_test,train_loss,test_loss,gap,lambda_max,wall_s,n_gaussians");
  EXPECT_EQ(lines[1].substr(0, 6), "10,ok,");
  EXPECT_EQ(lines[3].substr(0, 14), "mean,complete,");
  EXPECT_EQ(lines[4].substr(0, 13), "std,complete,");
  EXPECT_NE(lines[1].find("nan"), std::string::npos);
}

TEST(Export, CsvRoundTripIsExact) {
  const auto s = two_seed_summary();
  const auto path = temp_file("fasr_export_test.csv");
  export_metrics(s, ExportFormat::csv, path);
  const auto back = read_summary_csv(path);
  ASSERT_EQ(back.seeds.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back.seeds[k].seed, s.seeds[k].seed);
    for (auto m : kMetricNames) {
      const double a = metric(s.seeds[k], m), b = metric(back.seeds[k], m);
      if (std::isnan(a)) EXPECT_TRUE(std::isnan(b));
      else EXPECT_EQ(a, b) << m;
    }
  }
  EXPECT_EQ(summary_to_csv(back).substr(summary_to_csv(back).find('\n')),
            summary_to_csv(s).substr(summary_to_csv(s).find('\n')));
  std::filesystem::remove(path);
}

TEST(Export, EmptySummaryWritesNothing) {
  const auto path = temp_file("fasr_export_empty.csv");
  std::filesystem::remove(path);
  RunSummary empty;
  aggregate(empty);
  EXPECT_THROW(export_metrics(empty, ExportFormat::csv, path), std::invalid_argument);
  EXPECT_FALSE(std::filesystem::exists(path));
  RunSummary raw = two_seed_summary();
  raw.mean.clear();
  EXPECT_THROW(export_metrics(raw, ExportFormat::md, path), std::invalid_argument);
}

TEST(Export, UnwritablePath) {
  EXPECT_THROW(export_metrics(two_seed_summary(), ExportFormat::csv, "/nonexistent/dir/x.csv"), std::runtime_error);
}

TEST(Export, MarkdownMeanStd) {
  const std::string md = summary_to_markdown(two_seed_summary());
  EXPECT_NE(md.find("## demo (0123456789abcdef)"), std::string::npos);
  EXPECT_NE(md.find("| psnr_test | 25.017 | 0.024 |"), std::string::npos);
  EXPECT_NE(md.find("| lambda_max | n/a | n/a |"), std::string::npos);
  EXPECT_NE(md.find("2 of 2 seeds completed."), std::string::npos);
}

TEST(Export, FormatNames) {
  EXPECT_EQ(export_format_from_name("md"), ExportFormat::md);
  EXPECT_THROW(export_format_from_name("xlsx"), std::invalid_argument);
}

TEST(Export, StepLogColumns) {
  TrainOutcome out;
  for (int k = 0; k < 4; ++k) {
    StepStats s;
    s.iteration = k;
    s.loss = 0.5 / (1 << k);
    if (k >= 2) s.perturbed_loss = s.loss + 0.01;
    s.n_gaussians = 10;
    out.steps.push_back(s);
  }
  out.test_curve = {{2, 0.5}, {4, 0.25}};
  const auto path = temp_file("fasr_steps_test.csv");
  write_step_log(path, out);
  std::ifstream in(path);
  std::string header, l0, l1;
  std::getline(in, header);
  std::getline(in, l0);
  std::getline(in, l1);
  EXPECT_EQ(header, "iteration,loss,perturbed_loss,test_loss,pert_mu,pert_q,pert_s,pert_sigma,pert_dc,pert_ac,n_gaussians,wall_ms");
  EXPECT_EQ(l0.substr(0, 8), "0,0.5,,,");
  EXPECT_NE(l1.find(",,0.5,"), std::string::npos);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace fasr
