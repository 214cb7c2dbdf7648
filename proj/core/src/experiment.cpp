#include "fairimb/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "fairimb/rng.hpp"

namespace fairimb {

namespace {

// Sub-stream tags within one experiment.
constexpr std::uint64_t kDataTag = 0x21;
constexpr std::uint64_t kSplitTag = 0x22;
constexpr std::uint64_t kTrainTag = 0x23;
constexpr std::uint64_t kTestPoolTag = 0x24;

Matrix stereotype_rows(std::initializer_list<double> class0, std::initializer_list<double> class1) {
  Matrix m(2, class0.size());
  std::size_t j = 0;
  for (double v : class0) m(0, j++) = v;
  j = 0;
  for (double v : class1) m(1, j++) = v;
  return m;
}

// Accepts "table1:0.8" and "table1(0.8)".
bool parse_parameterized(const std::string& name, const std::string& prefix, double& value) {
  if (name.rfind(prefix, 0) != 0) return false;
  std::string rest = name.substr(prefix.size());
  if (rest.size() >= 2 && rest.front() == '(' && rest.back() == ')')
    rest = rest.substr(1, rest.size() - 2);
  else if (!rest.empty() && rest.front() == ':')
    rest = rest.substr(1);
  else
    return false;
  try {
    std::size_t used = 0;
    value = std::stod(rest, &used);
    return used == rest.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

RatioPreset make_ratio_preset(const std::string& name) {
  RatioPreset preset;
  preset.name = name;
  double v = 0.0;
  if (name == "original") {
    preset.train.positive_fraction = 0.7;
    preset.train.stereotype = stereotype_rows({0.18, 0.82}, {0.18, 0.82});
  } else if (name == "90-90") {
    preset.train.positive_fraction = 0.9;
    preset.train.stereotype = stereotype_rows({0.1, 0.9}, {0.9, 0.1});
  } else if (name == "95-95") {
    preset.train.positive_fraction = 0.95;
    preset.train.stereotype = stereotype_rows({0.05, 0.95}, {0.95, 0.05});
  } else if (parse_parameterized(name, "table1", v)) {
    if (!(v > 0.0 && v < 1.0))
      throw std::invalid_argument("ratio preset: table1 stereotype must be in (0,1)");
    preset.train.positive_fraction = 0.5;
    preset.train.stereotype = stereotype_rows({1.0 - v, v}, {v, 1.0 - v});
    RatioSpec test;
    test.positive_fraction = 0.5;
    test.stereotype = stereotype_rows({0.5, 0.5}, {0.5, 0.5});
    preset.test = test;
  } else if (parse_parameterized(name, "table2", v)) {
    if (!(v > 0.0 && v < 1.0))
      throw std::invalid_argument("ratio preset: table2 positive fraction must be in (0,1)");
    preset.train.positive_fraction = v;
    preset.train.stereotype = stereotype_rows({0.2, 0.8}, {0.8, 0.2});
  } else {
    throw std::invalid_argument("unknown ratio preset '" + name + "'");
  }
  return preset;
}

bool is_ratio_preset(const std::string& name) {
  try {
    make_ratio_preset(name);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void apply_setting(ExperimentConfig& config, const std::string& preset_name) {
  const RatioPreset preset = make_ratio_preset(preset_name);
  std::int64_t target = 0;
  if (config.ratios.has_value()) target = config.ratios->target_size;
  if (target == 0 && config.source.synthetic) target = config.source.spec.ratios.target_size;

  config.setting = preset_name;
  config.ratios = preset.train;
  config.ratios->target_size = target;
  config.test_ratios = preset.test;
  if (config.test_ratios.has_value()) config.test_ratios->target_size = 0;  // derived later
}

namespace {

std::string method_label(const ExperimentConfig& config) {
  return config.inlp.enabled ? "INLP" : to_string(config.loss.variant);
}

RatioSpec resolve_train_ratios(const ExperimentConfig& config) {
  RatioSpec ratios;
  if (config.ratios.has_value()) {
    ratios = *config.ratios;
    if (ratios.target_size == 0 && config.source.synthetic)
      ratios.target_size = config.source.spec.ratios.target_size;
  } else if (config.source.synthetic) {
    ratios = config.source.spec.ratios;
  } else {
    throw std::invalid_argument("experiment: CSV source without explicit ratios");
  }
  if (ratios.target_size < 1)
    throw std::invalid_argument("experiment: target_size must be set (got 0)");
  return ratios;
}

struct PreparedData {
  LabeledGroupedDataset train;
  LabeledGroupedDataset dev;
  LabeledGroupedDataset test;
};

PreparedData prepare_data(const ExperimentConfig& config) {
  const auto& fractions = config.split_fractions;
  for (double f : fractions)
    if (!(f > 0.0))
      throw std::invalid_argument("experiment: all three split fractions must be positive");

  const RatioSpec train_ratios = resolve_train_ratios(config);
  PreparedData out;

  if (!config.test_ratios.has_value()) {
    LabeledGroupedDataset data;
    if (config.source.synthetic) {
      SyntheticSpec spec = config.source.spec;
      spec.ratios = train_ratios;
      data = generate_synthetic(spec, mix_seed(config.seed, kDataTag));
    } else {
      data = load_csv(config.source.csv_path, config.source.csv_num_classes,
                      config.source.csv_num_groups);
      data = resample_to_ratios(data, train_ratios, mix_seed(config.seed, kDataTag));
    }
    SplitResult sp = split(data, fractions, mix_seed(config.seed, kSplitTag));
    out.train = std::move(sp.train);
    out.dev = std::move(sp.dev);
    out.test = std::move(sp.test);
    return out;
  }

  // Separate test pool with its own distribution.
  const double pool_frac = fractions[0] + fractions[1];
  RatioSpec pool_ratios = train_ratios;
  pool_ratios.target_size = static_cast<std::int64_t>(
      std::llround(static_cast<double>(train_ratios.target_size) * pool_frac));
  RatioSpec test_ratios = *config.test_ratios;
  if (test_ratios.target_size == 0)
    test_ratios.target_size = train_ratios.target_size - pool_ratios.target_size;

  if (config.source.synthetic) {
    SyntheticSpec pool_spec = config.source.spec;
    pool_spec.ratios = pool_ratios;
    const LabeledGroupedDataset pool =
        generate_synthetic(pool_spec, mix_seed(config.seed, kDataTag));
    SplitResult sp = split(pool, {fractions[0] / pool_frac, fractions[1] / pool_frac, 0.0},
                           mix_seed(config.seed, kSplitTag));
    out.train = std::move(sp.train);
    out.dev = std::move(sp.dev);
    SyntheticSpec test_spec = config.source.spec;
    test_spec.ratios = test_ratios;
    out.test = generate_synthetic(test_spec, mix_seed(config.seed, kTestPoolTag));
  } else {
    const LabeledGroupedDataset data = load_csv(
        config.source.csv_path, config.source.csv_num_classes, config.source.csv_num_groups);
    SplitResult halves = split(data, {pool_frac, 0.0, fractions[2]},
                               mix_seed(config.seed, kSplitTag));
    const LabeledGroupedDataset pool =
        resample_to_ratios(halves.train, pool_ratios, mix_seed(config.seed, kDataTag));
    SplitResult sp = split(pool, {fractions[0] / pool_frac, fractions[1] / pool_frac, 0.0},
                           mix_seed(config.seed, mix_seed(kSplitTag, 1)));
    out.train = std::move(sp.train);
    out.dev = std::move(sp.dev);
    out.test = resample_to_ratios(halves.test, test_ratios, mix_seed(config.seed, kTestPoolTag));
  }
  return out;
}

}  // namespace

ModelParams fold_inlp_head(const ModelParams& params, const ProjectionState& state,
                           const RetrainedHead& head) {
  ModelParams folded = params;
  folded.w2 = matmul(head.w, state.projection);
  folded.b2 = head.bias;
  folded.has_adversary = false;
  folded.wa = Matrix();
  folded.ba.clear();
  return folded;
}

ExperimentArtifacts run_experiment_full(const ExperimentConfig& config) {
  config.loss.validate();
  config.train_config.validate();

  ExperimentArtifacts art;
  PreparedData data = prepare_data(config);
  art.train = std::move(data.train);
  art.dev = std::move(data.dev);
  art.test = std::move(data.test);

  TrainConfig train_config = config.train_config;
  train_config.seed = mix_seed(config.seed, kTrainTag);
  auto [params, history] = train(art.train, art.dev, config.loss, train_config);
  art.params = std::move(params);
  art.history = std::move(history);

  std::vector<int> dev_preds, test_preds;
  if (config.inlp.enabled) {
    const Matrix train_reps = forward(art.params, art.train.features).hidden;
    art.inlp_state = inlp_run(train_reps, art.train.groups, config.inlp.max_iters,
                              config.inlp.stop_accuracy);
    art.inlp_head = apply_and_retrain(*art.inlp_state, train_reps, art.train.labels,
                                      art.train.num_classes);
    dev_preds = head_predict(*art.inlp_head, *art.inlp_state,
                             forward(art.params, art.dev.features).hidden);
    test_preds = head_predict(*art.inlp_head, *art.inlp_state,
                              forward(art.params, art.test.features).hidden);
  } else {
    dev_preds = predict(art.params, art.dev.features);
    test_preds = predict(art.params, art.test.features);
  }
  art.dev_report = evaluate(dev_preds, art.dev.labels, art.dev.groups, art.dev.num_classes,
                            art.dev.num_groups);
  art.test_report = evaluate(test_preds, art.test.labels, art.test.groups,
                             art.test.num_classes, art.test.num_groups);

  art.row.config_id = config.config_id;
  art.row.method = method_label(config);
  art.row.margin_scale = config.loss.margin_scale;
  art.row.mmd_weight = config.loss.mmd_weight;
  art.row.adversary_weight = config.loss.adversary_weight;
  art.row.weight_smoothing = config.loss.weight_smoothing;
  art.row.focal_gamma = config.loss.focal_gamma;
  art.row.setting = config.setting;
  art.row.dev_f = art.dev_report.macro_f;
  art.row.dev_gap = art.dev_report.gap;
  art.row.test_f = art.test_report.macro_f;
  art.row.test_gap = art.test_report.gap;
  return art;
}

ResultRow run_experiment(const ExperimentConfig& config) {
  return run_experiment_full(config).row;
}

std::vector<double> log_space(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw std::invalid_argument("log_space: bad range");
  std::vector<double> out(n);
  const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) out[i] = std::exp(std::log(lo) + step * i);
  out.front() = lo;
  out.back() = hi;
  return out;
}

SweepGrid default_grid() {
  SweepGrid grid;
  grid.margin_scales = log_space(1e-2, 30.0, 10);
  grid.mmd_weights = log_space(1e-4, 1e2, 10);
  grid.adversary_weights = log_space(1e-4, 1e2, 10);
  return grid;
}

namespace {

std::string format_config_id(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "c%04zu", index);
  return buf;
}

}  // namespace

SweepResult run_sweep(const SweepGrid& grid, const ExperimentConfig& base, int threads) {
  const std::vector<std::string> settings =
      grid.settings.empty() ? std::vector<std::string>{""} : grid.settings;
  const std::vector<double> cs =
      grid.margin_scales.empty() ? std::vector<double>{base.loss.margin_scale}
                                 : grid.margin_scales;
  const std::vector<double> rhos =
      grid.mmd_weights.empty() ? std::vector<double>{base.loss.mmd_weight} : grid.mmd_weights;
  const std::vector<double> lambdas = grid.adversary_weights.empty()
                                          ? std::vector<double>{base.loss.adversary_weight}
                                          : grid.adversary_weights;
  const std::vector<int> iters = grid.inlp_iterations.empty()
                                     ? std::vector<int>{base.inlp.max_iters}
                                     : grid.inlp_iterations;

  std::vector<ExperimentConfig> configs;
  for (const auto& setting : settings)
    for (double c : cs)
      for (double rho : rhos)
        for (double lambda : lambdas)
          for (int it : iters) {
            ExperimentConfig cfg = base;
            if (!setting.empty()) apply_setting(cfg, setting);
            cfg.loss.margin_scale = c;
            cfg.loss.mmd_weight = rho;
            cfg.loss.adversary_weight = lambda;
            cfg.inlp.max_iters = it;
            const std::size_t index = configs.size();
            cfg.config_id = format_config_id(index);
            cfg.seed = mix_seed(base.seed, static_cast<std::uint64_t>(index));
            configs.push_back(std::move(cfg));
          }

  std::vector<std::optional<ResultRow>> slots(configs.size());
  std::vector<std::optional<SweepFailure>> failures(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      try {
        slots[i] = run_experiment(configs[i]);
      } catch (const std::exception& e) {
        failures[i] = SweepFailure{configs[i].config_id, e.what()};
      }
    }
  };

  const int worker_count = std::max(1, std::min<int>(threads, static_cast<int>(configs.size())));
  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (int t = 0; t < worker_count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult result;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (slots[i].has_value()) result.rows.push_back(std::move(*slots[i]));
    if (failures[i].has_value()) result.failures.push_back(std::move(*failures[i]));
  }
  return result;
}

namespace {

constexpr const char* kResultHeader =
    "config_id,variant,C,rho,lambda,beta,gamma,setting,dev_f,dev_gap,test_f,test_gap";

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(const std::string& tok, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("results csv line " + std::to_string(line) +
                             ": malformed number '" + tok + "'");
  }
}

}  // namespace

void write_result_rows(const std::vector<ResultRow>& rows, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("results csv: cannot write '" + path + "'");
  std::fprintf(f, "%s\n", kResultHeader);
  for (const auto& r : rows)
    std::fprintf(f, "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%.17g,%.17g,%.17g,%.17g\n",
                 r.config_id.c_str(), r.method.c_str(), r.margin_scale, r.mmd_weight,
                 r.adversary_weight, r.weight_smoothing, r.focal_gamma, r.setting.c_str(),
                 r.dev_f, r.dev_gap, r.test_f, r.test_gap);
  if (std::fclose(f) != 0) throw std::runtime_error("results csv: write failed for '" + path + "'");
}

std::vector<ResultRow> read_result_rows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("results csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("results csv: empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultHeader)
    throw std::runtime_error("results csv: unexpected header in '" + path + "'");

  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 12)
      throw std::runtime_error("results csv line " + std::to_string(lineno) +
                               ": expected 12 fields, got " + std::to_string(fields.size()));
    ResultRow r;
    r.config_id = fields[0];
    r.method = fields[1];
    r.margin_scale = parse_double(fields[2], lineno);
    r.mmd_weight = parse_double(fields[3], lineno);
    r.adversary_weight = parse_double(fields[4], lineno);
    r.weight_smoothing = parse_double(fields[5], lineno);
    r.focal_gamma = parse_double(fields[6], lineno);
    r.setting = fields[7];
    r.dev_f = parse_double(fields[8], lineno);
    r.dev_gap = parse_double(fields[9], lineno);
    r.test_f = parse_double(fields[10], lineno);
    r.test_gap = parse_double(fields[11], lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit_frontier(const std::vector<ResultRow>& rows, const std::string& path) {
  if (rows.empty()) throw std::invalid_argument("emit_frontier: no rows");
  std::vector<TradeoffPoint> points;
  points.reserve(rows.size());
  for (const auto& r : rows)
    points.push_back(TradeoffPoint{r.test_f, 1.0 - r.test_gap, r.config_id});
  const auto frontier = pareto_frontier(points);

  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("frontier csv: cannot write '" + path + "'");
  std::fprintf(f, "f,fairness,config_id\n");
  for (const auto& p : frontier)
    std::fprintf(f, "%.17g,%.17g,%s\n", p.f, p.fairness, p.config_id.c_str());
  if (std::fclose(f) != 0)
    throw std::runtime_error("frontier csv: write failed for '" + path + "'");
}

void emit_table(const std::vector<ResultRow>& rows, const std::string& path,
                SelectionPolicy policy, double f_floor) {
  if (rows.empty()) throw std::invalid_argument("emit_table: no rows");
  std::map<std::pair<std::string, std::string>, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) groups[{r.setting, r.method}].push_back(&r);

  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("table csv: cannot write '" + path + "'");
  std::fprintf(f, "setting,variant,f,one_minus_gap\n");
  for (const auto& [key, members] : groups) {
    std::vector<SelectionCandidate> candidates;
    candidates.reserve(members.size());
    for (const ResultRow* r : members)
      candidates.push_back(SelectionCandidate{r->config_id, r->dev_f, r->dev_gap});
    const std::string chosen = select_model(candidates, policy, f_floor);
    const auto it = std::find_if(members.begin(), members.end(),
                                 [&](const ResultRow* r) { return r->config_id == chosen; });
    std::fprintf(f, "%s,%s,%.17g,%.17g\n", key.first.c_str(), key.second.c_str(),
                 (*it)->test_f, 1.0 - (*it)->test_gap);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("table csv: write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// JSON config parsing
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end())
      throw std::runtime_error("config: unknown key '" + key + "' in " + context);
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config: invalid JSON in '" + path + "': " + e.what());
  }
}

RatioSpec parse_ratio_spec(const json& j) {
  if (j.is_string()) return make_ratio_preset(j.get<std::string>()).train;
  check_keys(j, {"preset", "positive_fraction", "stereotype", "target_size"}, "ratios");
  if (j.contains("preset")) {
    RatioSpec out = make_ratio_preset(j.at("preset").get<std::string>()).train;
    if (j.contains("target_size")) out.target_size = j.at("target_size").get<std::int64_t>();
    return out;
  }
  // Partial specs are allowed: fractions default to balanced and are
  // typically overridden by a setting preset.
  RatioSpec out;
  out.positive_fraction = j.value("positive_fraction", 0.5);
  out.stereotype = stereotype_rows({0.5, 0.5}, {0.5, 0.5});
  if (j.contains("stereotype")) {
    const auto rows = j.at("stereotype");
    if (!rows.is_array() || rows.empty())
      throw std::runtime_error("config: stereotype must be a K x G array");
    const std::size_t cols = rows[0].size();
    out.stereotype = Matrix(rows.size(), cols);
    for (std::size_t y = 0; y < rows.size(); ++y) {
      const auto row = rows[y].get<std::vector<double>>();
      if (row.size() != cols) throw std::runtime_error("config: ragged stereotype rows");
      for (std::size_t g = 0; g < cols; ++g) out.stereotype(y, g) = row[g];
    }
  }
  if (j.contains("target_size")) out.target_size = j.at("target_size").get<std::int64_t>();
  return out;
}

SyntheticSpec parse_synthetic_spec(const json& j) {
  check_keys(j, {"dim", "class_separation", "group_shift", "noise_std", "ratios"}, "synthetic");
  SyntheticSpec spec;
  spec.dim = j.value("dim", 2);
  spec.class_separation = j.value("class_separation", 2.0);
  spec.group_shift = j.value("group_shift", 1.0);
  spec.noise_std = j.value("noise_std", 1.0);
  if (j.contains("ratios")) spec.ratios = parse_ratio_spec(j.at("ratios"));
  return spec;
}

LossSpec parse_loss_spec(const json& j) {
  check_keys(j, {"variant", "C", "beta", "rho", "lambda_adv", "gamma"}, "loss");
  LossSpec spec;
  spec.variant = loss_variant_from_string(j.at("variant").get<std::string>());
  spec.margin_scale = j.value("C", 0.0);
  spec.weight_smoothing = j.value("beta", 0.9999);
  spec.mmd_weight = j.value("rho", 0.0);
  spec.adversary_weight = j.value("lambda_adv", 0.0);
  spec.focal_gamma = j.value("gamma", 2.0);
  spec.validate();
  return spec;
}

TrainConfig parse_train_config(const json& j) {
  check_keys(j, {"hidden_dim", "learning_rate", "momentum", "epochs", "batch_size", "init_scale"},
             "train");
  TrainConfig config;
  config.hidden_dim = j.value("hidden_dim", config.hidden_dim);
  config.learning_rate = j.value("learning_rate", config.learning_rate);
  config.momentum = j.value("momentum", config.momentum);
  config.epochs = j.value("epochs", config.epochs);
  config.batch_size = j.value("batch_size", config.batch_size);
  config.init_scale = j.value("init_scale", config.init_scale);
  config.validate();
  return config;
}

InlpSettings parse_inlp_settings(const json& j) {
  check_keys(j, {"enabled", "max_iters", "stop_accuracy"}, "inlp");
  InlpSettings settings;
  settings.enabled = j.value("enabled", false);
  settings.max_iters = j.value("max_iters", 10);
  settings.stop_accuracy = j.value("stop_accuracy", -1.0);
  return settings;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  const json j = load_json_file(path);
  check_keys(j,
             {"config_id", "setting", "seed", "dataset", "ratios", "test_ratios", "split",
              "loss", "train", "inlp", "selection", "f_floor"},
             "experiment config");
  ExperimentConfig config;
  config.config_id = j.value("config_id", config.config_id);
  config.seed = j.value("seed", std::uint64_t{0});

  const json& ds = j.at("dataset");
  check_keys(ds, {"synthetic", "csv"}, "dataset");
  if (ds.contains("synthetic") == ds.contains("csv"))
    throw std::runtime_error("config: dataset needs exactly one of 'synthetic' or 'csv'");
  if (ds.contains("synthetic")) {
    config.source.synthetic = true;
    config.source.spec = parse_synthetic_spec(ds.at("synthetic"));
  } else {
    const json& csv = ds.at("csv");
    check_keys(csv, {"path", "num_classes", "num_groups"}, "dataset.csv");
    config.source.synthetic = false;
    config.source.csv_path = csv.at("path").get<std::string>();
    config.source.csv_num_classes = csv.value("num_classes", 0);
    config.source.csv_num_groups = csv.value("num_groups", 0);
  }

  if (j.contains("ratios")) config.ratios = parse_ratio_spec(j.at("ratios"));
  if (j.contains("test_ratios")) config.test_ratios = parse_ratio_spec(j.at("test_ratios"));
  if (j.contains("split")) {
    const auto fr = j.at("split").get<std::vector<double>>();
    if (fr.size() != 3) throw std::runtime_error("config: split must be [train,dev,test]");
    config.split_fractions = {fr[0], fr[1], fr[2]};
  }
  config.loss = parse_loss_spec(j.at("loss"));
  if (j.contains("train")) config.train_config = parse_train_config(j.at("train"));
  if (j.contains("inlp")) config.inlp = parse_inlp_settings(j.at("inlp"));
  if (j.contains("selection"))
    config.selection = selection_policy_from_string(j.at("selection").get<std::string>());
  config.f_floor = j.value("f_floor", 0.0);

  if (j.contains("setting")) {
    const std::string setting = j.at("setting").get<std::string>();
    if (is_ratio_preset(setting))
      apply_setting(config, setting);
    else
      config.setting = setting;
  }
  return config;
}

SweepGrid load_sweep_grid(const std::string& path) {
  const json j = load_json_file(path);
  check_keys(j, {"C", "rho", "lambda_adv", "inlp_iterations", "settings"}, "sweep grid");
  SweepGrid grid;
  if (j.contains("C")) grid.margin_scales = j.at("C").get<std::vector<double>>();
  if (j.contains("rho")) grid.mmd_weights = j.at("rho").get<std::vector<double>>();
  if (j.contains("lambda_adv"))
    grid.adversary_weights = j.at("lambda_adv").get<std::vector<double>>();
  if (j.contains("inlp_iterations"))
    grid.inlp_iterations = j.at("inlp_iterations").get<std::vector<int>>();
  if (j.contains("settings")) grid.settings = j.at("settings").get<std::vector<std::string>>();
  return grid;
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
  SyntheticSpec spec = parse_synthetic_spec(load_json_file(path));
  spec.validate();
  return spec;
}

RatioSpec load_ratio_spec(const std::string& path) {
  return parse_ratio_spec(load_json_file(path));
}

}  // namespace fairimb
