#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairimb/dataset.hpp"
#include "fairimb/inlp.hpp"
#include "fairimb/losses.hpp"
#include "fairimb/metrics.hpp"
#include "fairimb/model.hpp"

namespace fairimb {

struct DatasetSource {
  bool synthetic = true;
  SyntheticSpec spec;     // when synthetic
  std::string csv_path;   // when not
  int csv_num_classes = 0;  // 0 = infer
  int csv_num_groups = 0;
};

struct InlpSettings {
  bool enabled = false;
  int max_iters = 10;
  double stop_accuracy = -1.0;  // negative = majority fraction + 0.02
};

/// Everything one run needs: data source, distributions, objective,
/// training setup, optional INLP post-processing and a seed.
struct ExperimentConfig {
  std::string config_id = "c0000";
  std::string setting = "custom";
  std::uint64_t seed = 0;
  DatasetSource source;
  std::optional<RatioSpec> ratios;       // train/dev distribution override
  std::optional<RatioSpec> test_ratios;  // set when the test pool differs
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};
  LossSpec loss;
  TrainConfig train_config;
  InlpSettings inlp;
  SelectionPolicy selection = SelectionPolicy::BestDevF;
  double f_floor = 0.0;
};

/// One line of the results CSV.
struct ResultRow {
  std::string config_id;
  std::string method;  // loss variant name, or INLP for post-processed runs
  double margin_scale = 0.0;
  double mmd_weight = 0.0;
  double adversary_weight = 0.0;
  double weight_smoothing = 0.9999;
  double focal_gamma = 2.0;
  std::string setting;
  double dev_f = 0.0;
  double dev_gap = 0.0;
  double test_f = 0.0;
  double test_gap = 0.0;
};

/// Named ratio presets: `original`, `90-90`, `95-95`, `table1:<r>`
/// (balanced classes, symmetric stereotype r, stereotype-balanced test) and
/// `table2:<p>` (symmetric 0.8 stereotype, positive fraction p).
struct RatioPreset {
  std::string name;
  RatioSpec train;  // target_size left 0, resolved from the config
  std::optional<RatioSpec> test;
};

RatioPreset make_ratio_preset(const std::string& name);
bool is_ratio_preset(const std::string& name);

/// Applies a preset's distributions to the config (target sizes are kept).
void apply_setting(ExperimentConfig& config, const std::string& preset_name);

/// The prepared data and trained artifacts behind a ResultRow.
struct ExperimentArtifacts {
  LabeledGroupedDataset train;
  LabeledGroupedDataset dev;
  LabeledGroupedDataset test;
  ModelParams params;
  TrainHistory history;
  std::optional<ProjectionState> inlp_state;
  std::optional<RetrainedHead> inlp_head;
  EvalReport dev_report;
  EvalReport test_report;
  ResultRow row;
};

/// Build/resample data, split, train (optionally + INLP), evaluate dev and
/// test. Deterministic given (config, seed).
ExperimentArtifacts run_experiment_full(const ExperimentConfig& config);
ResultRow run_experiment(const ExperimentConfig& config);

/// Replaces the classifier head with the INLP-retrained head folded through
/// the projection, so plain forward/predict sees projected features.
ModelParams fold_inlp_head(const ModelParams& params, const ProjectionState& state,
                           const RetrainedHead& head);

struct SweepGrid {
  std::vector<double> margin_scales;      // C axis
  std::vector<double> mmd_weights;        // rho axis
  std::vector<double> adversary_weights;  // lambda axis
  std::vector<int> inlp_iterations;
  std::vector<std::string> settings;      // ratio preset names
};

/// n log-spaced points from lo to hi inclusive.
std::vector<double> log_space(double lo, double hi, int n);

/// The search ranges used throughout: C in [1e-2, 30], rho and lambda in
/// [1e-4, 1e2], 10 log-spaced points per axis.
SweepGrid default_grid();

struct SweepFailure {
  std::string config_id;
  std::string message;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<SweepFailure> failures;
};

/// Cartesian product over the grid axes (empty axes fall back to the base
/// config's value). Row seeds derive from mix_seed(base seed, row index);
/// rows are merged in enumeration order regardless of thread count.
/// Per-row errors are recorded as failures without aborting the sweep.
SweepResult run_sweep(const SweepGrid& grid, const ExperimentConfig& base, int threads = 1);

/// Results CSV, header:
/// config_id,variant,C,rho,lambda,beta,gamma,setting,dev_f,dev_gap,test_f,test_gap
void write_result_rows(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> read_result_rows(const std::string& path);

/// Frontier CSV (`f,fairness,config_id`): exactly the Pareto-optimal rows by
/// (test macro-F, test 1-GAP).
void emit_frontier(const std::vector<ResultRow>& rows, const std::string& path);

/// Table CSV (`setting,variant,f,one_minus_gap`): one row per setting x
/// method, picking each group's row by the dev-set selection policy and
/// reporting its test metrics.
void emit_table(const std::vector<ResultRow>& rows, const std::string& path,
                SelectionPolicy policy = SelectionPolicy::BestDevF, double f_floor = 0.0);

/// JSON config loaders (schemas documented in the README). Unknown keys are
/// rejected.
ExperimentConfig load_experiment_config(const std::string& path);
SweepGrid load_sweep_grid(const std::string& path);
SyntheticSpec load_synthetic_spec(const std::string& path);
RatioSpec load_ratio_spec(const std::string& path);

}  // namespace fairimb
