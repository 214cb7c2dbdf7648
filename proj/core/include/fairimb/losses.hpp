#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairimb/dataset.hpp"
#include "fairimb/matrix.hpp"

namespace fairimb {

enum class LossVariant {
  Vanilla,  // unweighted cross-entropy
  Cw,       // class-weighted cross-entropy
  Iw,       // class-and-group (cell) weighted cross-entropy
  Focal,
  Ldam,
  LdamCw,   // LDAM + class weights
  LdamIw,   // LDAM + smoothed inverse cell-frequency weights
  LdamAdv,  // LDAM - lambda * adversary CE on shared layers
  LdamReg,  // LDAM + rho * group-mean output penalty
};

LossVariant loss_variant_from_string(const std::string& name);
std::string to_string(LossVariant v);

bool uses_margin(LossVariant v);     // LDAM family
bool uses_adversary(LossVariant v);  // LdamAdv
bool uses_mmd(LossVariant v);        // LdamReg
bool uses_group_weights(LossVariant v);
bool uses_class_weights(LossVariant v);

/// Which objective to train with, plus its hyperparameters. Fields not used
/// by the variant are ignored.
struct LossSpec {
  LossVariant variant = LossVariant::Vanilla;
  double margin_scale = 0.0;       // C
  double weight_smoothing = 0.9999;  // beta
  double mmd_weight = 0.0;         // rho
  double adversary_weight = 0.0;   // lambda_adv
  double focal_gamma = 2.0;        // gamma

  void validate() const;
};

/// Per-class margins delta_j = C / n_j^(1/4). Smaller classes get larger
/// margins. Computed as C / sqrt(sqrt(n)) so perfect fourth powers are exact.
struct MarginVector {
  std::vector<double> delta;
};

MarginVector ldam_margins(const ClassGroupCounts& counts, double margin_scale);

/// Margin loss on one row of logits: -log softmax(z - delta_y * e_y)_y,
/// evaluated with max subtraction. delta = 0 reduces to cross-entropy.
double ldam_loss(const std::vector<double>& logits, int label, const MarginVector& margins);

double cross_entropy(const std::vector<double>& logits, int label);

/// FL = -(1 - p_y)^gamma * log p_y with p = softmax(z). gamma = 0 is CE.
double focal_loss(const std::vector<double>& logits, int label, double gamma);

/// Smoothed inverse cell frequency (1 - beta) / (1 - beta^count); the raw
/// value before table normalization.
double raw_group_weight(std::int64_t cell_count, double beta);

/// Inverse class proportion N / n_j, normalized to mean 1 over the classes.
std::vector<double> class_weights(const ClassGroupCounts& counts);

/// K x G table of smoothed inverse cell frequencies, normalized so that the
/// mean weight over the dataset (instance-weighted) is 1. Empty cells get
/// weight 0 and are excluded from the normalization.
Matrix group_instance_weights(const ClassGroupCounts& counts, double beta);

struct WeightTable {
  std::vector<double> class_w;  // length K
  Matrix group_w;               // K x G
};

WeightTable build_weight_table(const ClassGroupCounts& counts, double beta);

/// Multiplicative per-instance weight for (y, g) under the variant.
double instance_weight(const WeightTable& table, LossVariant variant, int label, int group);

/// Sum over groups present in the batch of the squared distance between the
/// group-mean output row and the batch-mean output row. Unscaled; the caller
/// applies rho. In training `outputs` are softmax probabilities.
double mmd_penalty(const Matrix& outputs, const std::vector<int>& groups);

/// d mmd_penalty / d outputs (same shape as outputs).
Matrix mmd_penalty_output_grad(const Matrix& outputs, const std::vector<int>& groups);

/// Row-wise stable softmax.
Matrix softmax_rows(const Matrix& logits);

struct ObjectiveBreakdown {
  double total = 0.0;      // main + rho * mmd (LdamReg), main - lambda * adv (LdamAdv)
  double main = 0.0;       // mean weighted per-instance loss
  double mmd = 0.0;        // unscaled penalty, 0 when unused
  double adversary = 0.0;  // mean adversary CE, 0 when unused
};

/// Assembles the batch objective for any variant from forward results.
/// Margins and weight tables are built from `counts` (pass training-set
/// counts during training). adv_logits may be null for non-adversarial
/// variants; LdamAdv requires it.
ObjectiveBreakdown composite_objective(const Matrix& logits, const Matrix* adv_logits,
                                       const std::vector<int>& labels,
                                       const std::vector<int>& groups, const LossSpec& spec,
                                       const ClassGroupCounts& counts);

/// Gradient of the main objective (mean weighted loss + rho * mmd when used)
/// with respect to the logits.
Matrix main_objective_logit_grad(const Matrix& logits, const std::vector<int>& labels,
                                 const std::vector<int>& groups, const LossSpec& spec,
                                 const ClassGroupCounts& counts);

/// Mean cross-entropy of the group predictor and its gradient in the
/// adversary logits.
double adversary_ce(const Matrix& adv_logits, const std::vector<int>& groups);
Matrix adversary_ce_grad(const Matrix& adv_logits, const std::vector<int>& groups);

}  // namespace fairimb
