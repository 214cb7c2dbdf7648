#include "cli.hpp"

#include <cstdio>
#include <stdexcept>

#include <CLI11.hpp>

#include "fairimb/dataset.hpp"
#include "fairimb/experiment.hpp"
#include "fairimb/inlp.hpp"
#include "fairimb/losses.hpp"
#include "fairimb/metrics.hpp"
#include "fairimb/model.hpp"

namespace fairimb::cli {

namespace {

void write_report_json(const EvalReport& report, std::FILE* f) {
  std::fprintf(f, "{\n  \"macro_f\": %.17g,\n  \"tpr\": [%.17g,%.17g],\n", report.macro_f,
               report.tpr[0], report.tpr[1]);
  std::fprintf(f, "  \"tnr\": [%.17g,%.17g],\n  \"gap\": %.17g,\n", report.tnr[0],
               report.tnr[1], report.gap);
  std::fprintf(f, "  \"one_minus_gap\": %.17g,\n  \"degenerate_rates\": %s\n}\n",
               report.one_minus_gap, report.degenerate_rates ? "true" : "false");
}

void save_history_csv(const TrainHistory& history, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("history csv: cannot write '" + path + "'");
  std::fprintf(f, "epoch,train_loss,dev_macro_f,dev_one_minus_gap\n");
  for (std::size_t e = 0; e < history.train_loss.size(); ++e)
    std::fprintf(f, "%zu,%.17g,%.17g,%.17g\n", e, history.train_loss[e],
                 history.dev_macro_f[e], history.dev_one_minus_gap[e]);
  if (std::fclose(f) != 0) throw std::runtime_error("history csv: write failed for '" + path + "'");
}

// Default sweep axes for the config's method: the trade-off hyperparameters
// the method actually has.
SweepGrid grid_for(const ExperimentConfig& config) {
  SweepGrid grid;
  const SweepGrid full = default_grid();
  if (config.inlp.enabled) {
    grid.inlp_iterations = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    return grid;
  }
  switch (config.loss.variant) {
    case LossVariant::Ldam:
    case LossVariant::LdamCw:
    case LossVariant::LdamIw:
      grid.margin_scales = full.margin_scales;
      break;
    case LossVariant::LdamReg:
      grid.margin_scales = full.margin_scales;
      grid.mmd_weights = full.mmd_weights;
      break;
    case LossVariant::LdamAdv:
      grid.margin_scales = full.margin_scales;
      grid.adversary_weights = full.adversary_weights;
      break;
    default:
      break;  // single row
  }
  return grid;
}

struct SeedOption {
  std::uint64_t value = 0;
  bool set = false;
};

int run_app(int argc, const char* const* argv) {
  CLI::App app{"margin-based class-imbalanced learning with fairness mechanisms"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset CSV");
  std::string gen_spec, gen_out;
  std::uint64_t gen_seed = 0;
  generate->add_option("--spec", gen_spec, "SyntheticSpec JSON file")->required();
  generate->add_option("--out", gen_out, "output dataset CSV")->required();
  generate->add_option("--seed", gen_seed, "generator seed");

  // resample
  auto* resample = app.add_subcommand("resample", "subsample a dataset CSV to target ratios");
  std::string rs_in, rs_out, rs_ratios, rs_preset;
  std::uint64_t rs_seed = 0;
  std::int64_t rs_target = 0;
  int rs_k = 0, rs_g = 0;
  resample->add_option("--in", rs_in, "input dataset CSV")->required();
  resample->add_option("--out", rs_out, "output dataset CSV")->required();
  resample->add_option("--ratios", rs_ratios, "RatioSpec JSON file");
  resample->add_option("--preset", rs_preset, "ratio preset name");
  resample->add_option("--target-size", rs_target, "override target size");
  resample->add_option("--seed", rs_seed, "sampling seed");
  resample->add_option("--num-classes", rs_k, "declared K (0 = infer)");
  resample->add_option("--num-groups", rs_g, "declared G (0 = infer)");

  // train
  auto* train_cmd = app.add_subcommand("train", "run one training configuration");
  std::string tr_config, tr_out, tr_history;
  SeedOption tr_seed;
  train_cmd->add_option("--config", tr_config, "experiment config JSON")->required();
  train_cmd->add_option("--out", tr_out, "output model checkpoint JSON")->required();
  train_cmd->add_option("--seed", tr_seed.value, "override config seed")
      ->each([&](const std::string&) { tr_seed.set = true; });
  train_cmd->add_option("--history-out", tr_history, "per-epoch history CSV");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on a dataset CSV");
  std::string ev_model, ev_data, ev_out;
  eval_cmd->add_option("--model", ev_model, "model checkpoint JSON")->required();
  eval_cmd->add_option("--data", ev_data, "dataset CSV")->required();
  eval_cmd->add_option("--out", ev_out, "write the report JSON here instead of stdout");

  // inlp
  auto* inlp_cmd = app.add_subcommand("inlp", "nullspace-project a checkpoint's representations");
  std::string in_model, in_data, in_out, in_state;
  int in_iters = 10;
  double in_stop = -1.0;
  inlp_cmd->add_option("--model", in_model, "model checkpoint JSON")->required();
  inlp_cmd->add_option("--data", in_data, "dataset CSV to fit the projection on")->required();
  inlp_cmd->add_option("--out", in_out, "output checkpoint with the folded head")->required();
  inlp_cmd->add_option("--state-out", in_state, "projection state JSON");
  inlp_cmd->add_option("--max-iters", in_iters, "maximum INLP iterations");
  inlp_cmd->add_option("--stop-accuracy", in_stop,
                       "stop threshold (negative = majority fraction + 0.02)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "run a hyperparameter grid");
  std::string sw_config, sw_grid, sw_out, sw_table, sw_policy = "BEST_DEV_F";
  double sw_floor = 0.0;
  int sw_threads = 1;
  sweep_cmd->add_option("--config", sw_config, "base experiment config JSON")->required();
  sweep_cmd->add_option("--grid", sw_grid, "sweep grid JSON (default: the method's axes)");
  sweep_cmd->add_option("--out", sw_out, "results CSV")->required();
  sweep_cmd->add_option("--threads", sw_threads, "worker threads (rows stay in order)");
  sweep_cmd->add_option("--table-out", sw_table, "also emit a setting x method table CSV");
  sweep_cmd->add_option("--table-policy", sw_policy, "selection policy for --table-out");
  sweep_cmd->add_option("--table-floor", sw_floor, "F floor for F_FLOOR_THEN_MIN_GAP");

  // frontier
  auto* frontier_cmd = app.add_subcommand("frontier", "extract the Pareto frontier of a results CSV");
  std::string fr_in, fr_out;
  frontier_cmd->add_option("--in", fr_in, "results CSV")->required();
  frontier_cmd->add_option("--out", fr_out, "frontier CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (generate->parsed()) {
      const SyntheticSpec spec = load_synthetic_spec(gen_spec);
      save_csv(generate_synthetic(spec, gen_seed), gen_out);
      std::printf("wrote %s (%lld instances)\n", gen_out.c_str(),
                  static_cast<long long>(spec.ratios.target_size));
    } else if (resample->parsed()) {
      if (rs_ratios.empty() == rs_preset.empty())
        throw std::runtime_error("resample: pass exactly one of --ratios or --preset");
      RatioSpec ratios =
          rs_ratios.empty() ? make_ratio_preset(rs_preset).train : load_ratio_spec(rs_ratios);
      if (rs_target > 0) ratios.target_size = rs_target;
      if (ratios.target_size < 1)
        throw std::runtime_error("resample: target size required (--target-size or in the spec)");
      const LabeledGroupedDataset data = load_csv(rs_in, rs_k, rs_g);
      save_csv(resample_to_ratios(data, ratios, rs_seed), rs_out);
      std::printf("wrote %s (%lld instances)\n", rs_out.c_str(),
                  static_cast<long long>(ratios.target_size));
    } else if (train_cmd->parsed()) {
      ExperimentConfig config = load_experiment_config(tr_config);
      if (tr_seed.set) config.seed = tr_seed.value;
      const ExperimentArtifacts art = run_experiment_full(config);
      const ModelParams& to_save =
          config.inlp.enabled ? fold_inlp_head(art.params, *art.inlp_state, *art.inlp_head)
                              : art.params;
      save_checkpoint(to_save, tr_out);
      if (!tr_history.empty()) save_history_csv(art.history, tr_history);
      std::printf("%s dev_f=%.4f dev_1-gap=%.4f test_f=%.4f test_1-gap=%.4f\n",
                  art.row.config_id.c_str(), art.row.dev_f, 1.0 - art.row.dev_gap,
                  art.row.test_f, 1.0 - art.row.test_gap);
    } else if (eval_cmd->parsed()) {
      const ModelParams params = load_checkpoint(ev_model);
      const LabeledGroupedDataset data = load_csv(ev_data, 2, 2);
      const EvalReport report =
          evaluate(predict(params, data.features), data.labels, data.groups, 2, 2);
      if (ev_out.empty()) {
        write_report_json(report, stdout);
      } else {
        std::FILE* f = std::fopen(ev_out.c_str(), "wb");
        if (!f) throw std::runtime_error("report: cannot write '" + ev_out + "'");
        write_report_json(report, f);
        if (std::fclose(f) != 0)
          throw std::runtime_error("report: write failed for '" + ev_out + "'");
      }
    } else if (inlp_cmd->parsed()) {
      const ModelParams params = load_checkpoint(in_model);
      const LabeledGroupedDataset data = load_csv(in_data, 2, 2);
      const Matrix reps = forward(params, data.features).hidden;
      const ProjectionState state = inlp_run(reps, data.groups, in_iters, in_stop);
      const RetrainedHead head =
          apply_and_retrain(state, reps, data.labels, data.num_classes);
      save_checkpoint(fold_inlp_head(params, state, head), in_out);
      if (!in_state.empty()) save_projection_state(state, in_state);
      std::printf("inlp removed %d direction(s); adversary accuracy:", state.iterations);
      for (double a : state.accuracies) std::printf(" %.4f", a);
      std::printf("\n");
    } else if (sweep_cmd->parsed()) {
      const ExperimentConfig base = load_experiment_config(sw_config);
      const SweepGrid grid = sw_grid.empty() ? grid_for(base) : load_sweep_grid(sw_grid);
      const SweepResult result = run_sweep(grid, base, sw_threads);
      write_result_rows(result.rows, sw_out);
      for (const auto& failure : result.failures)
        std::fprintf(stderr, "warning: %s failed: %s\n", failure.config_id.c_str(),
                     failure.message.c_str());
      if (!sw_table.empty())
        emit_table(result.rows, sw_table, selection_policy_from_string(sw_policy), sw_floor);
      std::printf("wrote %s (%zu rows, %zu failures)\n", sw_out.c_str(), result.rows.size(),
                  result.failures.size());
    } else if (frontier_cmd->parsed()) {
      emit_frontier(read_result_rows(fr_in), fr_out);
      std::printf("wrote %s\n", fr_out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) { return run_app(argc, argv); }

int run(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("fairimb");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& a : full) argv.push_back(a.c_str());
  return run_app(static_cast<int>(argv.size()), argv.data());
}

}  // namespace fairimb::cli
