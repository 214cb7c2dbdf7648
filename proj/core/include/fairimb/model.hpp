#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairimb/dataset.hpp"
#include "fairimb/losses.hpp"
#include "fairimb/matrix.hpp"

namespace fairimb {

/// Single-hidden-layer tanh classifier with an optional linear group
/// predictor sharing the hidden layer.
struct ModelParams {
  Matrix w1;               // h x d
  std::vector<double> b1;  // h
  Matrix w2;               // K x h
  std::vector<double> b2;  // K
  bool has_adversary = false;
  Matrix wa;               // G x h
  std::vector<double> ba;  // G

  std::size_t input_dim() const { return w1.cols(); }
  std::size_t hidden_dim() const { return w1.rows(); }
  std::size_t num_classes() const { return w2.rows(); }
  std::size_t num_groups() const { return has_adversary ? wa.rows() : 0; }

  void validate() const;
};

struct TrainConfig {
  int hidden_dim = 64;
  double learning_rate = 0.1;
  double momentum = 0.9;
  int epochs = 50;
  int batch_size = 64;
  std::uint64_t seed = 0;
  double init_scale = 1.0;  // multiplies the per-layer 1/sqrt(fan_in) bound

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;        // signed composite objective per epoch
  std::vector<double> dev_macro_f;       // NaN when dev is empty or K != 2
  std::vector<double> dev_one_minus_gap;
  std::int64_t total_updates = 0;
};

/// One mini-batch of rows (materialized from a dataset).
struct Batch {
  Matrix x;
  std::vector<int> labels;
  std::vector<int> groups;
};

Batch make_batch(const LabeledGroupedDataset& data, const std::vector<std::size_t>& indices);
Batch full_batch(const LabeledGroupedDataset& data);

struct Activations {
  Matrix hidden;      // n x h, tanh(x w1^T + b1)
  Matrix logits;      // n x K
  Matrix adv_logits;  // n x G, empty unless the adversary head exists
  bool has_adversary = false;
};

/// Uniform(-init_scale/sqrt(fan_in), +...) init of all parameters,
/// deterministic in seed. with_adversary adds the group head.
ModelParams init_params(int input_dim, int hidden_dim, int num_classes, int num_groups,
                        bool with_adversary, double init_scale, std::uint64_t seed);

Activations forward(const ModelParams& params, const Matrix& x);

struct Gradients {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  Matrix wa;
  std::vector<double> ba;
};

/// Analytic gradients of the composite objective under the gradient-reversal
/// contract:
///   w2, b2:  d(main)/d(w2, b2)
///   wa, ba:  d(adversary CE)/d(wa, ba)      (adversary descends its own CE)
///   w1, b1:  d(main)/d(w1, b1) - lambda_adv * d(adversary CE)/d(w1, b1)
/// where main = mean weighted loss + rho * MMD for LDAM_REG. Margins and
/// weights come from `counts`; during training pass the training-set counts.
Gradients gradient(const ModelParams& params, const Batch& batch, const LossSpec& spec,
                   const ClassGroupCounts& counts);

/// Convenience overload: counts tallied from the batch itself.
Gradients gradient(const ModelParams& params, const Batch& batch, const LossSpec& spec);

/// SGD with momentum over seeded per-epoch shuffles. Deterministic in
/// (data, spec, config). Throws on divergence (non-finite loss), naming the
/// epoch. Dev metrics are recorded per epoch when dev is nonempty.
std::pair<ModelParams, TrainHistory> train(const LabeledGroupedDataset& train_data,
                                           const LabeledGroupedDataset& dev_data,
                                           const LossSpec& spec, const TrainConfig& config);

std::vector<int> predict(const ModelParams& params, const Matrix& x);
/// argmax with ties toward the smaller class index.
int argmax_row(const double* row, std::size_t k);

/// Max relative error between analytic gradients and central finite
/// differences of the per-block signed objective (main - lambda * adv for
/// the shared layer, main for the classifier head, adv for the adversary
/// head). Denominator max(|analytic|, |numeric|, 1e-8).
double grad_check(const ModelParams& params, const Batch& batch, const LossSpec& spec,
                  double step, const ClassGroupCounts& counts);
double grad_check(const ModelParams& params, const Batch& batch, const LossSpec& spec,
                  double step);

/// Checkpoint JSON: dims plus row-major parameter arrays at 17 significant
/// digits. Field names documented in the README.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace fairimb
