#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fairimb/experiment.hpp"
#include "oracles.hpp"

using namespace fairimb;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("fairimb_exp_" + name)).string();
}

ExperimentConfig small_config(std::uint64_t seed = 1) {
  ExperimentConfig config;
  config.seed = seed;
  config.source.spec.dim = 5;
  config.source.spec.class_separation = 2.5;
  config.source.spec.group_shift = 2.5;
  config.source.spec.noise_std = 1.0;
  config.source.spec.ratios.target_size = 1000;
  config.split_fractions = {0.7, 0.15, 0.15};
  config.loss.variant = LossVariant::Vanilla;
  config.train_config.hidden_dim = 12;
  config.train_config.epochs = 12;
  return config;
}

bool rows_equal(const ResultRow& a, const ResultRow& b) {
  return a.config_id == b.config_id && a.method == b.method &&
         a.margin_scale == b.margin_scale && a.mmd_weight == b.mmd_weight &&
         a.adversary_weight == b.adversary_weight && a.setting == b.setting &&
         a.dev_f == b.dev_f && a.dev_gap == b.dev_gap && a.test_f == b.test_f &&
         a.test_gap == b.test_gap;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("ratio presets encode the published settings") {
  const auto original = make_ratio_preset("original");
  CHECK(original.train.positive_fraction == 0.7);
  CHECK(original.train.stereotype(0, 0) == 0.18);
  CHECK(original.train.stereotype(1, 1) == 0.82);
  CHECK_FALSE(original.test.has_value());

  const auto nineties = make_ratio_preset("90-90");
  CHECK(nineties.train.positive_fraction == 0.9);
  CHECK(nineties.train.stereotype(1, 0) == 0.9);
  CHECK(nineties.train.stereotype(0, 0) == 0.1);

  const auto table1 = make_ratio_preset("table1:0.8");
  CHECK(table1.train.positive_fraction == 0.5);
  CHECK(table1.train.stereotype(1, 0) == 0.8);
  CHECK(table1.train.stereotype(0, 0) == doctest::Approx(0.2));
  REQUIRE(table1.test.has_value());
  CHECK(table1.test->stereotype(0, 0) == 0.5);

  const auto table1_paren = make_ratio_preset("table1(0.8)");
  CHECK(table1_paren.train.stereotype(1, 0) == 0.8);

  const auto table2 = make_ratio_preset("table2:0.9");
  CHECK(table2.train.positive_fraction == 0.9);
  CHECK(table2.train.stereotype(1, 0) == 0.8);
  CHECK_FALSE(table2.test.has_value());

  CHECK_THROWS_AS(make_ratio_preset("table3:0.5"), std::invalid_argument);
  CHECK(is_ratio_preset("95-95"));
  CHECK_FALSE(is_ratio_preset("custom"));
}

TEST_CASE("run_experiment is deterministic") {
  const auto config = small_config(7);
  const ResultRow a = run_experiment(config);
  const ResultRow b = run_experiment(config);
  CHECK(rows_equal(a, b));
  CHECK(a.method == "VANILLA");
  CHECK(a.dev_f > 0.5);
}

TEST_CASE("vanilla CE is fair on balanced unstereotyped data") {
  auto config = small_config(3);
  config.source.spec.group_shift = 2.0;
  // balanced classes, no class-group correlation
  config.ratios = make_ratio_preset("table1:0.5").train;
  config.ratios->target_size = 1200;
  const ResultRow row = run_experiment(config);
  CHECK(1.0 - row.test_gap >= 0.9);
}

TEST_CASE("table1 presets build a stereotype-balanced test pool") {
  auto config = small_config(5);
  apply_setting(config, "table1:0.8");
  const auto art = run_experiment_full(config);

  const auto train_counts = compute_counts(art.train);
  const auto test_counts = compute_counts(art.test);
  // train keeps the 80:20 within-class skew, test is 50:50 within class
  CHECK(double(train_counts.cell(1, 0)) / double(train_counts.per_class[1]) ==
        doctest::Approx(0.8).epsilon(0.01));
  CHECK(test_counts.cell(0, 0) == test_counts.cell(0, 1));
  CHECK(test_counts.cell(1, 0) == test_counts.cell(1, 1));
  // sizes follow the split fractions of the configured target
  CHECK(art.train.size() + art.dev.size() == 850);
  CHECK(art.test.size() == 150);
}

TEST_CASE("higher rho buys fairness on stereotyped data") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto config = small_config(seed);
    config.source.spec.group_shift = 3.0;
    apply_setting(config, "table1:0.8");
    config.loss.variant = LossVariant::LdamReg;
    config.loss.margin_scale = 1.0;
    config.loss.mmd_weight = 0.0;
    const ResultRow plain = run_experiment(config);
    config.loss.mmd_weight = 2.0;
    const ResultRow reg = run_experiment(config);
    if (1.0 - reg.test_gap > 1.0 - plain.test_gap) ++wins;
  }
  CHECK(wins >= 3);
}

TEST_CASE("sweep echoes grid values in enumeration order") {
  SweepGrid grid;
  grid.mmd_weights = {0.0, 1.0, 10.0};
  auto base = small_config(11);
  base.loss.variant = LossVariant::LdamReg;
  base.loss.margin_scale = 1.0;
  const auto result = run_sweep(grid, base);
  CHECK(result.failures.empty());
  REQUIRE(result.rows.size() == 3);
  CHECK(result.rows[0].mmd_weight == 0.0);
  CHECK(result.rows[1].mmd_weight == 1.0);
  CHECK(result.rows[2].mmd_weight == 10.0);
  CHECK(result.rows[0].config_id == "c0000");
  CHECK(result.rows[2].config_id == "c0002");

  SUBCASE("re-running reproduces the rows") {
    const auto again = run_sweep(grid, base);
    REQUIRE(again.rows.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(rows_equal(again.rows[i], result.rows[i]));
  }
  SUBCASE("thread count does not change results") {
    const auto threaded = run_sweep(grid, base, 4);
    REQUIRE(threaded.rows.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(rows_equal(threaded.rows[i], result.rows[i]));
  }
}

TEST_CASE("sweep records per-row failures without aborting") {
  SweepGrid grid;
  grid.margin_scales = {1.0, -1.0, 2.0};  // the negative C row must fail
  auto base = small_config(13);
  base.loss.variant = LossVariant::Ldam;
  const auto result = run_sweep(grid, base);
  CHECK(result.rows.size() == 2);
  REQUIRE(result.failures.size() == 1);
  CHECK(result.failures[0].config_id == "c0001");
}

TEST_CASE("default grid spans the documented ranges") {
  const auto grid = default_grid();
  REQUIRE(grid.margin_scales.size() == 10);
  CHECK(grid.margin_scales.front() == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK(grid.margin_scales.back() == doctest::Approx(30.0).epsilon(1e-12));
  REQUIRE(grid.mmd_weights.size() == 10);
  CHECK(grid.mmd_weights.front() == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(grid.mmd_weights.back() == doctest::Approx(1e2).epsilon(1e-12));
  REQUIRE(grid.adversary_weights.size() == 10);
  CHECK(grid.adversary_weights.front() == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(grid.adversary_weights.back() == doctest::Approx(1e2).epsilon(1e-12));
}

TEST_CASE("result rows round-trip through CSV") {
  std::vector<ResultRow> rows(2);
  rows[0] = {"c0000", "LDAM_REG", 1.5, 0.25, 0.0, 0.9999, 2.0, "table1:0.8",
             0.811111, 0.0625, 0.79, 0.0500000001};
  rows[1] = {"c0001", "INLP", 0.0, 0.0, 0.0, 0.9999, 2.0, "original",
             0.7, 0.1, 0.68, 0.12};
  const auto path = temp_path("rows.csv");
  write_result_rows(rows, path);

  const std::string contents = read_file(path);
  CHECK(contents.rfind(
            "config_id,variant,C,rho,lambda,beta,gamma,setting,dev_f,dev_gap,test_f,test_gap\n",
            0) == 0);

  const auto loaded = read_result_rows(path);
  REQUIRE(loaded.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(rows_equal(loaded[i], rows[i]));
    CHECK(loaded[i].weight_smoothing == rows[i].weight_smoothing);
    CHECK(loaded[i].focal_gamma == rows[i].focal_gamma);
  }
  std::filesystem::remove(path);
}

TEST_CASE("emit_frontier writes exactly the undominated rows") {
  std::vector<ResultRow> rows(4);
  const double fs[4] = {0.5, 0.6, 0.55, 0.5};
  const double fair[4] = {0.9, 0.8, 0.85, 0.8};
  for (int i = 0; i < 4; ++i) {
    rows[i].config_id = "c000" + std::to_string(i);
    rows[i].method = "LDAM_REG";
    rows[i].setting = "original";
    rows[i].test_f = fs[i];
    rows[i].test_gap = 1.0 - fair[i];
  }
  const auto path = temp_path("front.csv");
  emit_frontier(rows, path);
  const std::string contents = read_file(path);
  CHECK(contents.rfind("f,fairness,config_id\n", 0) == 0);
  CHECK(contents.find("c0000") != std::string::npos);
  CHECK(contents.find("c0001") != std::string::npos);
  CHECK(contents.find("c0002") != std::string::npos);
  CHECK(contents.find("c0003") == std::string::npos);

  SUBCASE("single row survives alone") {
    emit_frontier({rows[0]}, path);
    CHECK(read_file(path) == "f,fairness,config_id\n0.5,0.90000000000000002,c0000\n");
  }
  std::filesystem::remove(path);
}

TEST_CASE("emit_table selects one row per setting and method") {
  std::vector<ResultRow> rows;
  for (const char* setting : {"table1:0.5", "table1:0.8"})
    for (const char* method : {"VANILLA", "LDAM_REG"})
      for (int c = 0; c < 3; ++c) {
        ResultRow r;
        r.config_id = "c" + std::to_string(rows.size());
        r.method = method;
        r.setting = setting;
        r.dev_f = 0.5 + 0.1 * c;
        r.dev_gap = 0.1;
        r.test_f = 0.4 + 0.1 * c;
        r.test_gap = 0.2;
        rows.push_back(r);
      }
  const auto path = temp_path("table.csv");
  emit_table(rows, path, SelectionPolicy::BestDevF);
  const std::string contents = read_file(path);
  std::size_t lines = 0;
  for (char ch : contents) lines += ch == '\n';
  CHECK(lines == 5);  // header + 2 settings x 2 methods
  // BEST_DEV_F picks c = 2 in every group: test_f 0.6 reported
  CHECK(contents.find("table1:0.5,LDAM_REG,0.6") != std::string::npos);
  CHECK(contents.find("table1:0.8,VANILLA,0.6") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("experiment config json round-trips through the loader") {
  const auto path = temp_path("config.json");
  std::ofstream(path) << R"({
    "seed": 42,
    "setting": "table1:0.7",
    "dataset": {"synthetic": {"dim": 5, "class_separation": 2.0, "group_shift": 2.0,
                               "noise_std": 1.0, "ratios": {"target_size": 900}}},
    "split": [0.7, 0.15, 0.15],
    "loss": {"variant": "LDAM_REG", "C": 1.5, "rho": 2.0},
    "train": {"hidden_dim": 8, "epochs": 5},
    "inlp": {"enabled": false},
    "selection": "HARMONIC_MEAN"
  })";
  const auto config = load_experiment_config(path);
  CHECK(config.seed == 42);
  CHECK(config.setting == "table1:0.7");
  CHECK(config.loss.variant == LossVariant::LdamReg);
  CHECK(config.loss.margin_scale == 1.5);
  CHECK(config.loss.mmd_weight == 2.0);
  CHECK(config.train_config.hidden_dim == 8);
  CHECK(config.selection == SelectionPolicy::HarmonicMean);
  REQUIRE(config.ratios.has_value());
  CHECK(config.ratios->target_size == 900);
  CHECK(config.ratios->stereotype(1, 0) == 0.7);
  REQUIRE(config.test_ratios.has_value());

  SUBCASE("unknown keys are rejected") {
    std::ofstream(path) << R"({"seed": 1, "dataset": {"synthetic": {}},
                              "loss": {"variant": "VANILLA"}, "typo_key": 3})";
    CHECK_THROWS_WITH_AS(load_experiment_config(path), doctest::Contains("typo_key"),
                         std::runtime_error);
  }
  std::filesystem::remove(path);
}

TEST_CASE("csv-backed experiments resample to the requested ratios") {
  // build a big balanced pool on disk, then ask for a stereotyped train set
  SyntheticSpec spec;
  spec.dim = 4;
  spec.class_separation = 2.0;
  spec.group_shift = 2.0;
  spec.noise_std = 1.0;
  spec.ratios.positive_fraction = 0.5;
  spec.ratios.stereotype = Matrix(2, 2, 0.5);
  spec.ratios.target_size = 3000;
  const auto pool = generate_synthetic(spec, 77);
  const auto path = temp_path("pool.csv");
  save_csv(pool, path);

  ExperimentConfig config;
  config.seed = 9;
  config.source.synthetic = false;
  config.source.csv_path = path;
  RatioSpec ratios;
  ratios.positive_fraction = 0.7;
  ratios.stereotype = Matrix(2, 2, 0.5);
  ratios.target_size = 1000;
  config.ratios = ratios;
  config.split_fractions = {0.7, 0.15, 0.15};
  config.loss.variant = LossVariant::Vanilla;
  config.train_config.hidden_dim = 8;
  config.train_config.epochs = 5;

  const auto art = run_experiment_full(config);
  const auto counts = compute_counts(art.train);
  CHECK(art.train.size() + art.dev.size() + art.test.size() == 1000);
  CHECK(double(counts.per_class[1]) / double(counts.total) == doctest::Approx(0.7).epsilon(0.01));
  std::filesystem::remove(path);
}

}  // TEST_SUITE
