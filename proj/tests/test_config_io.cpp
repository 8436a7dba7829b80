#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "silm/config.hpp"
#include "silm/io.hpp"

namespace silm {
namespace {

TEST(KeyValues, ParsesCommentsAndWhitespace) {
  std::istringstream in("# experiment\n  p = 0.75  # dominant\n\nruns=3\n");
  const KeyValues kv = parse_key_values(in);
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].first, "p");
  EXPECT_EQ(kv[0].second, "0.75");
  EXPECT_EQ(kv[1].first, "runs");
  EXPECT_EQ(kv[1].second, "3");
}

TEST(KeyValues, RejectsLinesWithoutEquals) {
  std::istringstream in("p 0.5\n");
  EXPECT_THROW(parse_key_values(in), ConfigError);
}

TEST(ApplyKey, UnknownKeyIsNamed) {
  ExperimentConfig cfg;
  try {
    apply_key(cfg, "bottlenek", "80");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "bottlenek");
    EXPECT_NE(std::string(e.what()).find("bottlenek"), std::string::npos);
  }
}

TEST(ApplyKey, BadValuesAreNamed) {
  ExperimentConfig cfg;
  EXPECT_THROW(apply_key(cfg, "runs", "many"), ConfigError);
  EXPECT_THROW(apply_key(cfg, "loss", "hinge"), ConfigError);
  EXPECT_THROW(apply_key(cfg, "auto_per", "batch"), ConfigError);
  EXPECT_THROW(apply_key(cfg, "preset", "medium"), ConfigError);
}

TEST(ApplyKeyValues, PresetAppliesBeforeOtherKeys) {
  ExperimentConfig cfg;
  apply_key_values(cfg, {{"r", "7"}, {"preset", "large"}, {"p", "0.75"}});
  EXPECT_EQ(cfg.sim.n1, 20u);
  EXPECT_EQ(cfg.sim.bottleneck_size, 185u);
  EXPECT_EQ(cfg.sim.r, 7u);
  EXPECT_DOUBLE_EQ(cfg.sim.p, 0.75);
  EXPECT_EQ(cfg.baseline_samples, 100u);
}

TEST(ApplyKeyValues, EverySimulationKeyIsAccepted) {
  ExperimentConfig cfg;
  apply_key_values(cfg, {{"n1", "9"}, {"n2", "11"}, {"n3", "12"}, {"bottleneck", "70"},
                         {"auto_pool", "200"}, {"r", "10"}, {"epochs", "5"},
                         {"learning_rate", "2.5"}, {"generations", "4"}, {"seed", "77"},
                         {"threshold", "0.4"}, {"loss", "bce"}, {"auto_per", "epoch"},
                         {"jobs", "2"}, {"p_min", "0.6"}, {"p_max", "0.8"}, {"p_step", "0.1"},
                         {"baseline_samples", "300"}, {"baseline_seed", "9"},
                         {"architectures", "10x10x10, 9x11x12:20"}});
  EXPECT_EQ(cfg.sim.architecture(), "9x11x12");
  EXPECT_EQ(cfg.sim.loss, Loss::bce);
  EXPECT_EQ(cfg.sim.auto_per, AutoPer::epoch);
  EXPECT_DOUBLE_EQ(cfg.sim.learning_rate, 2.5);
  ASSERT_EQ(cfg.architectures.size(), 2u);
  EXPECT_EQ(cfg.architectures[1].r, 20u);
  EXPECT_NO_THROW(validate(cfg));
}

TEST(Validate, ReportsOffendingKey) {
  ExperimentConfig cfg;
  cfg.baseline_samples = 0;
  try {
    validate(cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "baseline_samples");
  }
  cfg = ExperimentConfig{};
  cfg.sim.bottleneck_size = 2000;
  try {
    validate(cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "bottleneck");
  }
}

TEST(Architecture, Parsing) {
  const Architecture a = parse_architecture("10x15x20");
  EXPECT_EQ(a.label, "10x15x20");
  EXPECT_EQ(a.n3, 20u);
  EXPECT_EQ(a.r, 15u);
  EXPECT_EQ(parse_architecture("20x30x20:30").r, 30u);
  EXPECT_THROW(parse_architecture("10x10"), ConfigError);
  EXPECT_THROW(parse_architecture("10xax10"), ConfigError);
  const auto defaults = default_architectures();
  ASSERT_EQ(defaults.size(), 4u);
  EXPECT_EQ(defaults[2].label, "9x11x12");
}

TEST(PGrid, DefaultGridHasElevenCleanValues) {
  const auto grid = p_grid(0.5, 1.0, 0.05);
  ASSERT_EQ(grid.size(), 11u);
  EXPECT_EQ(grid.front(), 0.5);
  EXPECT_EQ(grid[5], 0.75);
  EXPECT_EQ(grid.back(), 1.0);
  EXPECT_THROW(p_grid(0.5, 1.0, 0.0), ConfigError);
  EXPECT_THROW(p_grid(0.8, 0.5, 0.1), ConfigError);
}

TEST(Format, SixDecimalsLocaleFree) {
  EXPECT_EQ(format_fixed(1.0), "1.000000");
  EXPECT_EQ(format_fixed(std::ldexp(1.0, -10)), "0.000977");
  EXPECT_EQ(format_fixed(-1e-9), "0.000000");
  EXPECT_EQ(format_fixed(-0.25), "-0.250000");
}

Trajectory fake_trajectory(double p, unsigned run, double final_a, double final_b) {
  Trajectory t;
  t.config.p = p;
  t.run = run;
  for (unsigned g = 0; g < 3; ++g) {
    GenerationRecord rec;
    rec.generation = g;
    rec.metrics.a = g == 2 ? final_a : 0.5;
    rec.metrics.b = g == 2 ? final_b : 0.5;
    if (g > 0) {
      rec.metrics.s = 0.25;
      rec.metrics.s_raw = 0.26;
    }
    t.records.push_back(rec);
  }
  return t;
}

TEST(Csv, TrajectoryLayout) {
  const std::vector<Trajectory> ts{fake_trajectory(0.75, 0, 1.0, 0.0)};
  std::ostringstream os;
  write_trajectories_csv(os, ts);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "run,p,generation,x,c,s,a,b,x_raw,c_raw,s_raw,a_raw,b_raw");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0.750000,0,0.000000,0.000000,,0.500000,0.500000,0.000000,0.000000,,0.000000,0.000000");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 31), "0,0.750000,1,0.000000,0.000000,");
  EXPECT_NE(line.find(",0.250000,"), std::string::npos);

  std::ostringstream with;
  write_trajectories_csv(with, ts, true);
  EXPECT_NE(with.str().find("b_raw,final_a,final_b\n"), std::string::npos);
  EXPECT_NE(with.str().find(",1.000000,0.000000\n"), std::string::npos);
}

TEST(Summary, FractionsAndMeansPerP) {
  const std::vector<Trajectory> ts{fake_trajectory(0.5, 0, 1.0, 0.0), fake_trajectory(0.5, 1, 0.0, 0.95),
                                   fake_trajectory(0.5, 2, 0.0, 0.0), fake_trajectory(0.5, 3, 0.0, 0.0),
                                   fake_trajectory(1.0, 0, 1.0, 0.0)};
  const auto rows = summarize(ts);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[0].frac_a, 0.25);
  EXPECT_DOUBLE_EQ(rows[0].frac_b, 0.25);
  EXPECT_DOUBLE_EQ(rows[0].mean_a, 0.25);
  EXPECT_EQ(rows[0].runs, 4u);
  EXPECT_DOUBLE_EQ(rows[1].frac_a, 1.0);
  std::ostringstream os;
  write_summary_csv(os, rows);
  EXPECT_EQ(os.str(),
            "p,frac_a_gt_0.9,frac_b_gt_0.9,mean_a,mean_b\n"
            "0.500000,0.250000,0.250000,0.250000,0.237500\n"
            "1.000000,1.000000,0.000000,1.000000,0.000000\n");
}

TEST(Compare, LabelOnEveryRow) {
  const std::vector<Trajectory> ts{fake_trajectory(0.5, 0, 1.0, 0.0), fake_trajectory(0.5, 1, 0.0, 0.0)};
  std::ostringstream os;
  write_compare_header(os);
  write_compare_rows(os, "9x11x12", ts);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "architecture,p,run,final_a,final_b,final_x,mean_a");
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.rfind("9x11x12,", 0), 0u);
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "0.500000");
    ++rows;
  }
  EXPECT_EQ(rows, 2);
}

TEST(Manifest, BaselinesRoundTripAtFullPrecision) {
  const Baselines b = compute_baselines(8, 8, 200, 3);
  std::stringstream ss;
  write_baselines(ss, b);
  const std::string text = ss.str();
  EXPECT_NE(text.find("baseline.f0 = analytic=0.003906"), std::string::npos);
  EXPECT_NE(text.find("status=ok"), std::string::npos);
  EXPECT_NE(text.find("baseline.c0 = analytic=NA"), std::string::npos);
  const auto back = read_manifest_baselines(ss);
  EXPECT_EQ(back.at("f0"), b.f0);
  EXPECT_EQ(back.at("x0"), b.x0);
  EXPECT_EQ(back.at("c0"), b.c0);
}

TEST(Manifest, RunLinesCarrySeedsAndParents) {
  Trajectory t = fake_trajectory(0.75, 4, 1.0, 0.0);
  t.run_seed = 0xABCDEFULL;
  std::ostringstream os;
  write_run_lines(os, std::vector<Trajectory>{t});
  EXPECT_EQ(os.str(), "run = p=0.750000 index=4 seed=0000000000abcdef parent_a=0000000000000000 "
                      "parent_b=0000000000000000\n");
}

}  // namespace
}  // namespace silm
