#include "fairimb/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fairimb/metrics.hpp"
#include "fairimb/rng.hpp"

namespace fairimb {

namespace {

constexpr std::uint64_t kInitTag = 0x11;
constexpr std::uint64_t kShuffleTag = 0x12;

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("model: non-finite ") + what);
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) s[j] += row[j];
  }
  return s;
}

void fill_uniform(Rng& rng, double bound, std::vector<double>& out) {
  for (double& v : out) v = rng.uniform(-bound, bound);
}

}  // namespace

void ModelParams::validate() const {
  const std::size_t h = w1.rows();
  if (h == 0 || w1.cols() == 0) throw std::invalid_argument("model: empty hidden layer");
  if (b1.size() != h) throw std::invalid_argument("model: b1 size mismatch");
  if (w2.cols() != h || w2.rows() < 2) throw std::invalid_argument("model: w2 shape mismatch");
  if (b2.size() != w2.rows()) throw std::invalid_argument("model: b2 size mismatch");
  if (has_adversary) {
    if (wa.cols() != h || wa.rows() < 2) throw std::invalid_argument("model: wa shape mismatch");
    if (ba.size() != wa.rows()) throw std::invalid_argument("model: ba size mismatch");
  }
  check_finite(w1.data(), "w1");
  check_finite(b1, "b1");
  check_finite(w2.data(), "w2");
  check_finite(b2, "b2");
  if (has_adversary) {
    check_finite(wa.data(), "wa");
    check_finite(ba, "ba");
  }
}

void TrainConfig::validate() const {
  if (hidden_dim < 1) throw std::invalid_argument("TrainConfig: hidden_dim must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw std::invalid_argument("TrainConfig: momentum must be in [0,1)");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(init_scale > 0.0)) throw std::invalid_argument("TrainConfig: init_scale must be > 0");
}

Batch make_batch(const LabeledGroupedDataset& data, const std::vector<std::size_t>& indices) {
  Batch b;
  b.x = Matrix(indices.size(), data.dim());
  b.labels.reserve(indices.size());
  b.groups.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const double* src = data.features.row(indices[r]);
    std::copy(src, src + data.dim(), b.x.row(r));
    b.labels.push_back(data.labels[indices[r]]);
    b.groups.push_back(data.groups[indices[r]]);
  }
  return b;
}

Batch full_batch(const LabeledGroupedDataset& data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return make_batch(data, idx);
}

ModelParams init_params(int input_dim, int hidden_dim, int num_classes, int num_groups,
                        bool with_adversary, double init_scale, std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1 || num_classes < 2)
    throw std::invalid_argument("init_params: bad dimensions");
  ModelParams p;
  p.w1 = Matrix(hidden_dim, input_dim);
  p.b1.assign(hidden_dim, 0.0);
  p.w2 = Matrix(num_classes, hidden_dim);
  p.b2.assign(num_classes, 0.0);
  p.has_adversary = with_adversary;

  Rng rng(mix_seed(seed, kInitTag));
  const double bound1 = init_scale / std::sqrt(static_cast<double>(input_dim));
  const double bound2 = init_scale / std::sqrt(static_cast<double>(hidden_dim));
  fill_uniform(rng, bound1, p.w1.data());
  fill_uniform(rng, bound1, p.b1);
  fill_uniform(rng, bound2, p.w2.data());
  fill_uniform(rng, bound2, p.b2);
  if (with_adversary) {
    if (num_groups < 2) throw std::invalid_argument("init_params: adversary needs G >= 2");
    p.wa = Matrix(num_groups, hidden_dim);
    p.ba.assign(num_groups, 0.0);
    fill_uniform(rng, bound2, p.wa.data());
    fill_uniform(rng, bound2, p.ba);
  }
  return p;
}

Activations forward(const ModelParams& params, const Matrix& x) {
  if (x.cols() != params.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  Activations act;
  act.hidden = matmul_nt(x, params.w1);
  for (std::size_t i = 0; i < act.hidden.rows(); ++i) {
    double* row = act.hidden.row(i);
    for (std::size_t j = 0; j < act.hidden.cols(); ++j)
      row[j] = std::tanh(row[j] + params.b1[j]);
  }
  act.logits = matmul_nt(act.hidden, params.w2);
  for (std::size_t i = 0; i < act.logits.rows(); ++i) {
    double* row = act.logits.row(i);
    for (std::size_t j = 0; j < act.logits.cols(); ++j) row[j] += params.b2[j];
  }
  if (params.has_adversary) {
    act.has_adversary = true;
    act.adv_logits = matmul_nt(act.hidden, params.wa);
    for (std::size_t i = 0; i < act.adv_logits.rows(); ++i) {
      double* row = act.adv_logits.row(i);
      for (std::size_t j = 0; j < act.adv_logits.cols(); ++j) row[j] += params.ba[j];
    }
  }
  return act;
}

namespace {

// Shared backprop used by gradient() and the train loop. Returns the signed
// composite objective of the batch.
ObjectiveBreakdown backprop(const ModelParams& params, const Batch& batch, const LossSpec& spec,
                            const ClassGroupCounts& counts, Gradients& grads) {
  spec.validate();
  if (batch.labels.empty()) throw std::invalid_argument("gradient: empty batch");
  const bool needs_groups =
      uses_group_weights(spec.variant) || uses_mmd(spec.variant) || uses_adversary(spec.variant);
  if (needs_groups && batch.groups.size() != batch.labels.size())
    throw std::invalid_argument("gradient: " + to_string(spec.variant) +
                                " requires group labels but the batch lacks them");
  if (uses_adversary(spec.variant) && !params.has_adversary)
    throw std::invalid_argument("gradient: LDAM_ADV requires a model with an adversary head");

  const Activations act = forward(params, batch.x);
  const ObjectiveBreakdown objective =
      composite_objective(act.logits, act.has_adversary ? &act.adv_logits : nullptr,
                          batch.labels, batch.groups, spec, counts);

  const Matrix dlogits =
      main_objective_logit_grad(act.logits, batch.labels, batch.groups, spec, counts);
  grads.w2 = matmul_tn(dlogits, act.hidden);
  grads.b2 = column_sums(dlogits);
  Matrix dhidden = matmul(dlogits, params.w2);

  if (params.has_adversary) {
    grads.wa = Matrix(params.wa.rows(), params.wa.cols());
    grads.ba.assign(params.ba.size(), 0.0);
  }
  if (uses_adversary(spec.variant)) {
    const Matrix dadv = adversary_ce_grad(act.adv_logits, batch.groups);
    grads.wa = matmul_tn(dadv, act.hidden);
    grads.ba = column_sums(dadv);
    const Matrix dhidden_adv = matmul(dadv, params.wa);
    const double lambda = spec.adversary_weight;
    for (std::size_t i = 0; i < dhidden.size(); ++i)
      dhidden.data()[i] -= lambda * dhidden_adv.data()[i];
  }

  // tanh backprop into the pre-activation.
  for (std::size_t i = 0; i < dhidden.rows(); ++i) {
    double* drow = dhidden.row(i);
    const double* hrow = act.hidden.row(i);
    for (std::size_t j = 0; j < dhidden.cols(); ++j) drow[j] *= 1.0 - hrow[j] * hrow[j];
  }
  grads.w1 = matmul_tn(dhidden, batch.x);
  grads.b1 = column_sums(dhidden);
  return objective;
}

}  // namespace

Gradients gradient(const ModelParams& params, const Batch& batch, const LossSpec& spec,
                   const ClassGroupCounts& counts) {
  Gradients grads;
  backprop(params, batch, spec, counts, grads);
  return grads;
}

namespace {

ClassGroupCounts batch_counts(const ModelParams& params, const Batch& batch) {
  LabeledGroupedDataset view;
  view.features = batch.x;
  view.labels = batch.labels;
  view.groups = batch.groups.empty() ? std::vector<int>(batch.labels.size(), 0) : batch.groups;
  view.num_classes = static_cast<int>(params.num_classes());
  view.num_groups =
      std::max(2, *std::max_element(view.groups.begin(), view.groups.end()) + 1);
  return compute_counts(view);
}

}  // namespace

Gradients gradient(const ModelParams& params, const Batch& batch, const LossSpec& spec) {
  return gradient(params, batch, spec, batch_counts(params, batch));
}

std::pair<ModelParams, TrainHistory> train(const LabeledGroupedDataset& train_data,
                                           const LabeledGroupedDataset& dev_data,
                                           const LossSpec& spec, const TrainConfig& config) {
  train_data.validate();
  config.validate();
  spec.validate();

  const ClassGroupCounts counts = compute_counts(train_data);
  ModelParams params =
      init_params(static_cast<int>(train_data.dim()), config.hidden_dim, train_data.num_classes,
                  train_data.num_groups, uses_adversary(spec.variant), config.init_scale,
                  config.seed);

  Gradients velocity;
  velocity.w1 = Matrix(params.w1.rows(), params.w1.cols());
  velocity.b1.assign(params.b1.size(), 0.0);
  velocity.w2 = Matrix(params.w2.rows(), params.w2.cols());
  velocity.b2.assign(params.b2.size(), 0.0);
  if (params.has_adversary) {
    velocity.wa = Matrix(params.wa.rows(), params.wa.cols());
    velocity.ba.assign(params.ba.size(), 0.0);
  }

  auto update_block = [&](std::vector<double>& p, std::vector<double>& v,
                          const std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = config.momentum * v[i] + g[i];
      p[i] -= config.learning_rate * v[i];
    }
  };

  const std::size_t n = train_data.size();
  const bool can_eval_dev =
      dev_data.size() > 0 && train_data.num_classes == 2 && train_data.num_groups == 2;
  TrainHistory history;
  std::vector<std::size_t> order(n);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(mix_seed(mix_seed(config.seed, kShuffleTag), static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const Batch batch = make_batch(
          train_data, std::vector<std::size_t>(order.begin() + start, order.begin() + stop));
      Gradients grads;
      const ObjectiveBreakdown objective = backprop(params, batch, spec, counts, grads);
      if (!std::isfinite(objective.total))
        throw std::runtime_error("train: objective diverged (non-finite) at epoch " +
                                 std::to_string(epoch));
      epoch_loss += objective.total * static_cast<double>(stop - start);

      update_block(params.w1.data(), velocity.w1.data(), grads.w1.data());
      update_block(params.b1, velocity.b1, grads.b1);
      update_block(params.w2.data(), velocity.w2.data(), grads.w2.data());
      update_block(params.b2, velocity.b2, grads.b2);
      if (params.has_adversary) {
        update_block(params.wa.data(), velocity.wa.data(), grads.wa.data());
        update_block(params.ba, velocity.ba, grads.ba);
      }
      history.total_updates += 1;
    }
    history.train_loss.push_back(epoch_loss / static_cast<double>(n));

    if (can_eval_dev) {
      const EvalReport report = evaluate(predict(params, dev_data.features), dev_data.labels,
                                         dev_data.groups, 2, 2);
      history.dev_macro_f.push_back(report.macro_f);
      history.dev_one_minus_gap.push_back(report.one_minus_gap);
    } else {
      history.dev_macro_f.push_back(std::numeric_limits<double>::quiet_NaN());
      history.dev_one_minus_gap.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return {std::move(params), std::move(history)};
}

int argmax_row(const double* row, std::size_t k) {
  int best = 0;
  for (std::size_t j = 1; j < k; ++j)
    if (row[j] > row[best]) best = static_cast<int>(j);
  return best;
}

std::vector<int> predict(const ModelParams& params, const Matrix& x) {
  const Activations act = forward(params, x);
  std::vector<int> preds(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    preds[i] = argmax_row(act.logits.row(i), act.logits.cols());
  return preds;
}

namespace {

struct ObjectivePair {
  double main = 0.0;  // mean weighted loss + rho * MMD when used
  double adv = 0.0;   // mean adversary CE, 0 without a head
};

ObjectivePair evaluate_objectives(const ModelParams& params, const Batch& batch,
                                  const LossSpec& spec, const ClassGroupCounts& counts) {
  const Activations act = forward(params, batch.x);
  const ObjectiveBreakdown b =
      composite_objective(act.logits, act.has_adversary ? &act.adv_logits : nullptr,
                          batch.labels, batch.groups, spec, counts);
  ObjectivePair out;
  out.main = b.main + spec.mmd_weight * b.mmd;
  if (act.has_adversary && uses_adversary(spec.variant)) out.adv = b.adversary;
  return out;
}

enum class BlockKind { Shared, Classifier, Adversary };

double block_objective(const ModelParams& params, const Batch& batch, const LossSpec& spec,
                       const ClassGroupCounts& counts, BlockKind kind) {
  const ObjectivePair parts = evaluate_objectives(params, batch, spec, counts);
  switch (kind) {
    case BlockKind::Shared:
      return uses_adversary(spec.variant) ? parts.main - spec.adversary_weight * parts.adv
                                          : parts.main;
    case BlockKind::Classifier:
      return parts.main;
    case BlockKind::Adversary:
      return parts.adv;
  }
  return 0.0;
}

double check_block(ModelParams& params, std::vector<double>& values,
                   const std::vector<double>& analytic, const Batch& batch,
                   const LossSpec& spec, const ClassGroupCounts& counts, BlockKind kind,
                   double step) {
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + step;
    const double plus = block_objective(params, batch, spec, counts, kind);
    values[i] = saved - step;
    const double minus = block_objective(params, batch, spec, counts, kind);
    values[i] = saved;
    const double numeric = (plus - minus) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace

double grad_check(const ModelParams& params, const Batch& batch, const LossSpec& spec,
                  double step, const ClassGroupCounts& counts) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be > 0");
  const Gradients grads = gradient(params, batch, spec, counts);
  ModelParams probe = params;

  double worst = 0.0;
  worst = std::max(worst, check_block(probe, probe.w1.data(), grads.w1.data(), batch, spec,
                                      counts, BlockKind::Shared, step));
  worst = std::max(worst, check_block(probe, probe.b1, grads.b1, batch, spec, counts,
                                      BlockKind::Shared, step));
  worst = std::max(worst, check_block(probe, probe.w2.data(), grads.w2.data(), batch, spec,
                                      counts, BlockKind::Classifier, step));
  worst = std::max(worst, check_block(probe, probe.b2, grads.b2, batch, spec, counts,
                                      BlockKind::Classifier, step));
  if (params.has_adversary && uses_adversary(spec.variant)) {
    worst = std::max(worst, check_block(probe, probe.wa.data(), grads.wa.data(), batch, spec,
                                        counts, BlockKind::Adversary, step));
    worst = std::max(worst, check_block(probe, probe.ba, grads.ba, batch, spec, counts,
                                        BlockKind::Adversary, step));
  }
  return worst;
}

double grad_check(const ModelParams& params, const Batch& batch, const LossSpec& spec,
                  double step) {
  return grad_check(params, batch, spec, step, batch_counts(params, batch));
}

namespace {

void write_array(std::FILE* f, const char* name, const std::vector<double>& values,
                 bool trailing_comma) {
  std::fprintf(f, "  \"%s\": [", name);
  for (std::size_t i = 0; i < values.size(); ++i)
    std::fprintf(f, i + 1 < values.size() ? "%.17g," : "%.17g", values[i]);
  std::fprintf(f, trailing_comma ? "],\n" : "]\n");
}

std::vector<double> read_array(const nlohmann::json& j, const char* name, std::size_t expected) {
  if (!j.contains(name)) throw std::runtime_error(std::string("checkpoint: missing field ") + name);
  std::vector<double> out = j.at(name).get<std::vector<double>>();
  if (out.size() != expected)
    throw std::runtime_error(std::string("checkpoint: field ") + name + " has wrong length");
  return out;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  params.validate();
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
  std::fprintf(f, "{\n");
  std::fprintf(f, "  \"format\": \"fairimb-model-v1\",\n");
  std::fprintf(f, "  \"input_dim\": %zu,\n", params.input_dim());
  std::fprintf(f, "  \"hidden_dim\": %zu,\n", params.hidden_dim());
  std::fprintf(f, "  \"num_classes\": %zu,\n", params.num_classes());
  std::fprintf(f, "  \"num_groups\": %zu,\n", params.num_groups());
  std::fprintf(f, "  \"has_adversary\": %s,\n", params.has_adversary ? "true" : "false");
  write_array(f, "w1", params.w1.data(), true);
  write_array(f, "b1", params.b1, true);
  write_array(f, "w2", params.w2.data(), true);
  write_array(f, "b2", params.b2, params.has_adversary);
  if (params.has_adversary) {
    write_array(f, "wa", params.wa.data(), true);
    write_array(f, "ba", params.ba, false);
  }
  std::fprintf(f, "}\n");
  if (std::fclose(f) != 0) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint: invalid JSON in '" + path + "': " + e.what());
  }
  if (j.value("format", "") != "fairimb-model-v1")
    throw std::runtime_error("checkpoint: unsupported format in '" + path + "'");

  const std::size_t d = j.at("input_dim").get<std::size_t>();
  const std::size_t h = j.at("hidden_dim").get<std::size_t>();
  const std::size_t k = j.at("num_classes").get<std::size_t>();
  const std::size_t g = j.at("num_groups").get<std::size_t>();

  ModelParams p;
  p.w1 = Matrix(h, d);
  p.w1.data() = read_array(j, "w1", h * d);
  p.b1 = read_array(j, "b1", h);
  p.w2 = Matrix(k, h);
  p.w2.data() = read_array(j, "w2", k * h);
  p.b2 = read_array(j, "b2", k);
  p.has_adversary = j.at("has_adversary").get<bool>();
  if (p.has_adversary) {
    p.wa = Matrix(g, h);
    p.wa.data() = read_array(j, "wa", g * h);
    p.ba = read_array(j, "ba", g);
  }
  p.validate();
  return p;
}

}  // namespace fairimb
