#include "fairimb/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fairimb {

namespace {

// logsumexp of z - delta * e_y with max subtraction; also exposes the
// shifted true-class logit.
double margin_row_loss(const double* z, std::size_t k, int y, double delta) {
  double m = z[0] - (y == 0 ? delta : 0.0);
  for (std::size_t j = 1; j < k; ++j)
    m = std::max(m, z[j] - (static_cast<int>(j) == y ? delta : 0.0));
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j)
    s += std::exp(z[j] - (static_cast<int>(j) == y ? delta : 0.0) - m);
  return m + std::log(s) - (z[y] - delta);
}

// softmax of z - delta * e_y into q.
void margin_row_softmax(const double* z, std::size_t k, int y, double delta, double* q) {
  double m = z[0] - (y == 0 ? delta : 0.0);
  for (std::size_t j = 1; j < k; ++j)
    m = std::max(m, z[j] - (static_cast<int>(j) == y ? delta : 0.0));
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    q[j] = std::exp(z[j] - (static_cast<int>(j) == y ? delta : 0.0) - m);
    s += q[j];
  }
  for (std::size_t j = 0; j < k; ++j) q[j] /= s;
}

void check_row_args(std::size_t k, int label) {
  if (k < 2) throw std::invalid_argument("loss: need at least two logits");
  if (label < 0 || static_cast<std::size_t>(label) >= k)
    throw std::invalid_argument("loss: label out of range");
}

}  // namespace

LossVariant loss_variant_from_string(const std::string& name) {
  if (name == "VANILLA") return LossVariant::Vanilla;
  if (name == "CW") return LossVariant::Cw;
  if (name == "IW") return LossVariant::Iw;
  if (name == "FOCAL") return LossVariant::Focal;
  if (name == "LDAM") return LossVariant::Ldam;
  if (name == "LDAM_CW") return LossVariant::LdamCw;
  if (name == "LDAM_IW") return LossVariant::LdamIw;
  if (name == "LDAM_ADV") return LossVariant::LdamAdv;
  if (name == "LDAM_REG") return LossVariant::LdamReg;
  throw std::invalid_argument("unknown loss variant '" + name + "'");
}

std::string to_string(LossVariant v) {
  switch (v) {
    case LossVariant::Vanilla: return "VANILLA";
    case LossVariant::Cw: return "CW";
    case LossVariant::Iw: return "IW";
    case LossVariant::Focal: return "FOCAL";
    case LossVariant::Ldam: return "LDAM";
    case LossVariant::LdamCw: return "LDAM_CW";
    case LossVariant::LdamIw: return "LDAM_IW";
    case LossVariant::LdamAdv: return "LDAM_ADV";
    case LossVariant::LdamReg: return "LDAM_REG";
  }
  return "?";
}

bool uses_margin(LossVariant v) {
  return v == LossVariant::Ldam || v == LossVariant::LdamCw || v == LossVariant::LdamIw ||
         v == LossVariant::LdamAdv || v == LossVariant::LdamReg;
}

bool uses_adversary(LossVariant v) { return v == LossVariant::LdamAdv; }

bool uses_mmd(LossVariant v) { return v == LossVariant::LdamReg; }

bool uses_group_weights(LossVariant v) {
  return v == LossVariant::Iw || v == LossVariant::LdamIw;
}

bool uses_class_weights(LossVariant v) {
  return v == LossVariant::Cw || v == LossVariant::LdamCw;
}

void LossSpec::validate() const {
  if (margin_scale < 0.0) throw std::invalid_argument("LossSpec: C must be >= 0");
  if (!(weight_smoothing >= 0.0 && weight_smoothing < 1.0))
    throw std::invalid_argument("LossSpec: beta must be in [0,1)");
  if (mmd_weight < 0.0) throw std::invalid_argument("LossSpec: rho must be >= 0");
  if (adversary_weight < 0.0) throw std::invalid_argument("LossSpec: lambda_adv must be >= 0");
  if (focal_gamma < 0.0) throw std::invalid_argument("LossSpec: gamma must be >= 0");
}

MarginVector ldam_margins(const ClassGroupCounts& counts, double margin_scale) {
  if (margin_scale < 0.0) throw std::invalid_argument("ldam_margins: C must be >= 0");
  MarginVector m;
  m.delta.resize(counts.per_class.size());
  for (std::size_t j = 0; j < counts.per_class.size(); ++j) {
    if (margin_scale == 0.0) {
      m.delta[j] = 0.0;
    } else {
      if (counts.per_class[j] < 1)
        throw std::invalid_argument("ldam_margins: class " + std::to_string(j) +
                                    " is empty, margin undefined for C > 0");
      m.delta[j] =
          margin_scale / std::sqrt(std::sqrt(static_cast<double>(counts.per_class[j])));
    }
  }
  return m;
}

double ldam_loss(const std::vector<double>& logits, int label, const MarginVector& margins) {
  check_row_args(logits.size(), label);
  if (margins.delta.size() != logits.size())
    throw std::invalid_argument("ldam_loss: margin/logit length mismatch");
  return margin_row_loss(logits.data(), logits.size(), label, margins.delta[label]);
}

double cross_entropy(const std::vector<double>& logits, int label) {
  check_row_args(logits.size(), label);
  return margin_row_loss(logits.data(), logits.size(), label, 0.0);
}

double focal_loss(const std::vector<double>& logits, int label, double gamma) {
  check_row_args(logits.size(), label);
  if (gamma < 0.0) throw std::invalid_argument("focal_loss: gamma must be >= 0");
  const double ce = margin_row_loss(logits.data(), logits.size(), label, 0.0);
  if (gamma == 0.0) return ce;
  const double p = std::exp(-ce);  // p_y
  return std::pow(1.0 - p, gamma) * ce;
}

double raw_group_weight(std::int64_t cell_count, double beta) {
  if (!(beta >= 0.0 && beta < 1.0))
    throw std::invalid_argument("raw_group_weight: beta must be in [0,1)");
  if (cell_count <= 0) return 0.0;
  if (cell_count == 1 || beta == 0.0) return 1.0;
  // 1 - beta^n via expm1 keeps the tiny denominator accurate for beta near 1.
  const double denom = -std::expm1(static_cast<double>(cell_count) * std::log(beta));
  return (1.0 - beta) / denom;
}

std::vector<double> class_weights(const ClassGroupCounts& counts) {
  const std::size_t k = counts.per_class.size();
  std::vector<double> w(k);
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (counts.per_class[j] < 1)
      throw std::invalid_argument("class_weights: class " + std::to_string(j) + " is empty");
    w[j] = static_cast<double>(counts.total) / static_cast<double>(counts.per_class[j]);
    sum += w[j];
  }
  const double mean = sum / static_cast<double>(k);
  for (double& v : w) v /= mean;
  return w;
}

Matrix group_instance_weights(const ClassGroupCounts& counts, double beta) {
  const int k = counts.num_classes();
  const int g = counts.num_groups();
  Matrix w(k, g);
  double weighted_sum = 0.0;
  for (int y = 0; y < k; ++y)
    for (int j = 0; j < g; ++j) {
      w(y, j) = raw_group_weight(counts.cell(y, j), beta);
      weighted_sum += static_cast<double>(counts.cell(y, j)) * w(y, j);
    }
  if (weighted_sum <= 0.0)
    throw std::invalid_argument("group_instance_weights: all cells empty");
  // Dataset-mean weight 1: empty cells stay 0 and are excluded.
  const double mean = weighted_sum / static_cast<double>(counts.total);
  for (double& v : w.data()) v /= mean;
  return w;
}

WeightTable build_weight_table(const ClassGroupCounts& counts, double beta) {
  return WeightTable{class_weights(counts), group_instance_weights(counts, beta)};
}

double instance_weight(const WeightTable& table, LossVariant variant, int label, int group) {
  if (uses_class_weights(variant)) return table.class_w[label];
  if (uses_group_weights(variant)) return table.group_w(label, group);
  return 1.0;
}

double mmd_penalty(const Matrix& outputs, const std::vector<int>& groups) {
  const std::size_t n = outputs.rows();
  if (n < 1) throw std::invalid_argument("mmd_penalty: empty batch");
  if (groups.size() != n) throw std::invalid_argument("mmd_penalty: group length mismatch");
  const std::size_t m = outputs.cols();

  const int num_groups = *std::max_element(groups.begin(), groups.end()) + 1;
  std::vector<std::vector<double>> group_mean(num_groups, std::vector<double>(m, 0.0));
  std::vector<std::int64_t> group_count(num_groups, 0);
  std::vector<double> mean(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = outputs.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      group_mean[groups[i]][j] += row[j];
      mean[j] += row[j];
    }
    group_count[groups[i]] += 1;
  }
  for (std::size_t j = 0; j < m; ++j) mean[j] /= static_cast<double>(n);

  double penalty = 0.0;
  for (int g = 0; g < num_groups; ++g) {
    if (group_count[g] == 0) continue;
    for (std::size_t j = 0; j < m; ++j) {
      const double diff = group_mean[g][j] / static_cast<double>(group_count[g]) - mean[j];
      penalty += diff * diff;
    }
  }
  return penalty;
}

Matrix mmd_penalty_output_grad(const Matrix& outputs, const std::vector<int>& groups) {
  const std::size_t n = outputs.rows();
  const std::size_t m = outputs.cols();
  if (groups.size() != n)
    throw std::invalid_argument("mmd_penalty_output_grad: group length mismatch");

  const int num_groups = *std::max_element(groups.begin(), groups.end()) + 1;
  std::vector<std::vector<double>> diff(num_groups, std::vector<double>(m, 0.0));
  std::vector<std::int64_t> group_count(num_groups, 0);
  std::vector<double> mean(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = outputs.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      diff[groups[i]][j] += row[j];
      mean[j] += row[j];
    }
    group_count[groups[i]] += 1;
  }
  for (std::size_t j = 0; j < m; ++j) mean[j] /= static_cast<double>(n);
  std::vector<double> diff_sum(m, 0.0);  // sum over groups of (mu_g - mu)
  for (int g = 0; g < num_groups; ++g) {
    if (group_count[g] == 0) continue;
    for (std::size_t j = 0; j < m; ++j) {
      diff[g][j] = diff[g][j] / static_cast<double>(group_count[g]) - mean[j];
      diff_sum[j] += diff[g][j];
    }
  }

  Matrix grad(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const int g = groups[i];
    double* out = grad.row(i);
    for (std::size_t j = 0; j < m; ++j)
      out[j] = 2.0 * diff[g][j] / static_cast<double>(group_count[g]) -
               2.0 * diff_sum[j] / static_cast<double>(n);
  }
  return grad;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i)
    margin_row_softmax(logits.row(i), logits.cols(), 0, 0.0, p.row(i));
  return p;
}

namespace {

// Per-row gradient of the weighted per-instance loss (no MMD term), scaled
// by weight / n.
void main_row_grad(const double* z, std::size_t k, int y, const LossSpec& spec, double delta,
                   double scale, double* out) {
  if (spec.variant == LossVariant::Focal && spec.focal_gamma > 0.0) {
    std::vector<double> p(k);
    margin_row_softmax(z, k, y, 0.0, p.data());
    const double ce = margin_row_loss(z, k, y, 0.0);
    const double py = p[y];
    const double one_minus = 1.0 - py;
    double a;  // dFL/dp_y * p_y
    if (one_minus <= 0.0) {
      a = 0.0;
    } else {
      const double gamma = spec.focal_gamma;
      a = -gamma * std::pow(one_minus, gamma - 1.0) * py * ce -
          std::pow(one_minus, gamma);
    }
    for (std::size_t j = 0; j < k; ++j)
      out[j] = scale * a * ((static_cast<int>(j) == y ? 1.0 : 0.0) - p[j]);
    return;
  }
  // CE and the LDAM family share softmax(z - delta*e_y) - e_y.
  std::vector<double> q(k);
  margin_row_softmax(z, k, y, delta, q.data());
  for (std::size_t j = 0; j < k; ++j)
    out[j] = scale * (q[j] - (static_cast<int>(j) == y ? 1.0 : 0.0));
}

}  // namespace

ObjectiveBreakdown composite_objective(const Matrix& logits, const Matrix* adv_logits,
                                       const std::vector<int>& labels,
                                       const std::vector<int>& groups, const LossSpec& spec,
                                       const ClassGroupCounts& counts) {
  spec.validate();
  const std::size_t n = logits.rows();
  if (n < 1) throw std::invalid_argument("composite_objective: empty batch");
  if (labels.size() != n) throw std::invalid_argument("composite_objective: label mismatch");
  const bool needs_groups =
      uses_group_weights(spec.variant) || uses_mmd(spec.variant) || uses_adversary(spec.variant);
  if (needs_groups && groups.size() != n)
    throw std::invalid_argument("composite_objective: variant " + to_string(spec.variant) +
                                " requires group labels for the batch");

  MarginVector margins;
  if (uses_margin(spec.variant)) margins = ldam_margins(counts, spec.margin_scale);
  WeightTable table;
  if (uses_class_weights(spec.variant)) table.class_w = class_weights(counts);
  if (uses_group_weights(spec.variant))
    table.group_w = group_instance_weights(counts, spec.weight_smoothing);

  ObjectiveBreakdown result;
  const std::size_t k = logits.cols();
  std::vector<double> row(k);
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.row(i);
    const int y = labels[i];
    check_row_args(k, y);
    double loss;
    if (spec.variant == LossVariant::Focal) {
      row.assign(z, z + k);
      loss = focal_loss(row, y, spec.focal_gamma);
    } else {
      const double delta = uses_margin(spec.variant) ? margins.delta[y] : 0.0;
      loss = margin_row_loss(z, k, y, delta);
    }
    const double w = instance_weight(table, spec.variant, y,
                                     uses_group_weights(spec.variant) ? groups[i] : 0);
    result.main += w * loss;
  }
  result.main /= static_cast<double>(n);
  result.total = result.main;

  if (uses_mmd(spec.variant)) {
    result.mmd = mmd_penalty(softmax_rows(logits), groups);
    result.total += spec.mmd_weight * result.mmd;
  }
  if (uses_adversary(spec.variant)) {
    if (adv_logits == nullptr)
      throw std::invalid_argument("composite_objective: LDAM_ADV requires adversary logits");
    result.adversary = adversary_ce(*adv_logits, groups);
    result.total -= spec.adversary_weight * result.adversary;
  }
  return result;
}

Matrix main_objective_logit_grad(const Matrix& logits, const std::vector<int>& labels,
                                 const std::vector<int>& groups, const LossSpec& spec,
                                 const ClassGroupCounts& counts) {
  spec.validate();
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();

  MarginVector margins;
  if (uses_margin(spec.variant)) margins = ldam_margins(counts, spec.margin_scale);
  WeightTable table;
  if (uses_class_weights(spec.variant)) table.class_w = class_weights(counts);
  if (uses_group_weights(spec.variant))
    table.group_w = group_instance_weights(counts, spec.weight_smoothing);

  Matrix grad(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    const double delta = uses_margin(spec.variant) ? margins.delta[y] : 0.0;
    const double w =
        instance_weight(table, spec.variant, y,
                        uses_group_weights(spec.variant) ? groups[i] : 0);
    main_row_grad(logits.row(i), k, y, spec, delta, w / static_cast<double>(n), grad.row(i));
  }

  if (uses_mmd(spec.variant)) {
    const Matrix p = softmax_rows(logits);
    const Matrix dp = mmd_penalty_output_grad(p, groups);
    // Chain through row-wise softmax: dz = p .* (dp - <dp, p>).
    for (std::size_t i = 0; i < n; ++i) {
      const double* prow = p.row(i);
      const double* drow = dp.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += drow[j] * prow[j];
      double* grow = grad.row(i);
      for (std::size_t j = 0; j < k; ++j)
        grow[j] += spec.mmd_weight * prow[j] * (drow[j] - dot);
    }
  }
  return grad;
}

double adversary_ce(const Matrix& adv_logits, const std::vector<int>& groups) {
  const std::size_t n = adv_logits.rows();
  if (n < 1 || groups.size() != n)
    throw std::invalid_argument("adversary_ce: batch/group mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    total += margin_row_loss(adv_logits.row(i), adv_logits.cols(), groups[i], 0.0);
  return total / static_cast<double>(n);
}

Matrix adversary_ce_grad(const Matrix& adv_logits, const std::vector<int>& groups) {
  const std::size_t n = adv_logits.rows();
  const std::size_t m = adv_logits.cols();
  Matrix grad(n, m);
  std::vector<double> q(m);
  for (std::size_t i = 0; i < n; ++i) {
    margin_row_softmax(adv_logits.row(i), m, groups[i], 0.0, q.data());
    double* out = grad.row(i);
    for (std::size_t j = 0; j < m; ++j)
      out[j] = (q[j] - (static_cast<int>(j) == groups[i] ? 1.0 : 0.0)) / static_cast<double>(n);
  }
  return grad;
}

}  // namespace fairimb
