#include "fairimb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fairimb {

double macro_f(const std::vector<int>& preds, const std::vector<int>& labels,
               int num_classes) {
  if (preds.empty()) throw std::invalid_argument("macro_f: empty input");
  if (preds.size() != labels.size())
    throw std::invalid_argument("macro_f: preds/labels length mismatch");
  if (num_classes < 2) throw std::invalid_argument("macro_f: K must be >= 2");

  std::vector<std::int64_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], y = labels[i];
    if (p < 0 || p >= num_classes || y < 0 || y >= num_classes)
      throw std::invalid_argument("macro_f: id out of range");
    if (p == y) {
      tp[y] += 1;
    } else {
      fp[p] += 1;
      fn[y] += 1;
    }
  }
  double sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    const double precision = tp[c] + fp[c] > 0
                                 ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c])
                                 : 0.0;
    const double recall = tp[c] + fn[c] > 0
                              ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c])
                              : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall)
                                               : 0.0;
    sum += f1;
  }
  return sum / static_cast<double>(num_classes);
}

GroupRates group_rates(const std::vector<int>& preds, const std::vector<int>& labels,
                       const std::vector<int>& groups, int num_groups) {
  if (preds.empty()) throw std::invalid_argument("group_rates: empty input");
  if (preds.size() != labels.size() || preds.size() != groups.size())
    throw std::invalid_argument("group_rates: length mismatch");
  for (int y : labels)
    if (y != 0 && y != 1)
      throw std::invalid_argument("group_rates: labels must be binary (K = 2)");

  std::vector<std::int64_t> tp(num_groups, 0), fn(num_groups, 0), tn(num_groups, 0),
      fp(num_groups, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int g = groups[i];
    if (g < 0 || g >= num_groups) throw std::invalid_argument("group_rates: group out of range");
    const bool positive = labels[i] == 1;
    const bool predicted_positive = preds[i] == 1;
    if (positive)
      (predicted_positive ? tp : fn)[g] += 1;
    else
      (predicted_positive ? fp : tn)[g] += 1;
  }
  GroupRates rates;
  rates.tpr.resize(num_groups);
  rates.tnr.resize(num_groups);
  for (int g = 0; g < num_groups; ++g) {
    if (tp[g] + fn[g] > 0) {
      rates.tpr[g] = static_cast<double>(tp[g]) / static_cast<double>(tp[g] + fn[g]);
    } else {
      rates.tpr[g] = 1.0;  // no positives in this group: degenerate slice
      rates.degenerate = true;
    }
    if (tn[g] + fp[g] > 0) {
      rates.tnr[g] = static_cast<double>(tn[g]) / static_cast<double>(tn[g] + fp[g]);
    } else {
      rates.tnr[g] = 1.0;
      rates.degenerate = true;
    }
  }
  return rates;
}

double gap(const GroupRates& rates) {
  if (rates.tpr.size() != 2 || rates.tnr.size() != 2)
    throw std::invalid_argument("gap: defined for exactly two groups");
  return 0.5 * (std::abs(rates.tpr[0] - rates.tpr[1]) + std::abs(rates.tnr[0] - rates.tnr[1]));
}

EvalReport evaluate(const std::vector<int>& preds, const std::vector<int>& labels,
                    const std::vector<int>& groups, int num_classes, int num_groups) {
  if (num_classes != 2 || num_groups != 2)
    throw std::invalid_argument("evaluate: report defined for K = 2, G = 2");
  EvalReport report;
  report.macro_f = macro_f(preds, labels, num_classes);
  const GroupRates rates = group_rates(preds, labels, groups, num_groups);
  report.tpr = rates.tpr;
  report.tnr = rates.tnr;
  report.degenerate_rates = rates.degenerate;
  report.gap = gap(rates);
  report.one_minus_gap = 1.0 - report.gap;
  return report;
}

std::vector<TradeoffPoint> pareto_frontier(const std::vector<TradeoffPoint>& points) {
  if (points.empty()) throw std::invalid_argument("pareto_frontier: empty input");

  // Deduplicate identical (f, fairness) pairs toward the lowest config_id.
  std::vector<TradeoffPoint> unique = points;
  std::sort(unique.begin(), unique.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    if (a.f != b.f) return a.f < b.f;
    if (a.fairness != b.fairness) return a.fairness < b.fairness;
    return a.config_id < b.config_id;
  });
  unique.erase(std::unique(unique.begin(), unique.end(),
                           [](const TradeoffPoint& a, const TradeoffPoint& b) {
                             return a.f == b.f && a.fairness == b.fairness;
                           }),
               unique.end());

  std::vector<TradeoffPoint> kept;
  for (const auto& p : unique) {
    bool dominated = false;
    for (const auto& q : unique) {
      if (q.f >= p.f && q.fairness >= p.fairness && (q.f > p.f || q.fairness > p.fairness)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) kept.push_back(p);
  }
  return kept;
}

SelectionPolicy selection_policy_from_string(const std::string& name) {
  if (name == "BEST_DEV_F") return SelectionPolicy::BestDevF;
  if (name == "FAIREST_DEV") return SelectionPolicy::FairestDev;
  if (name == "HARMONIC_MEAN") return SelectionPolicy::HarmonicMean;
  if (name == "F_FLOOR_THEN_MIN_GAP") return SelectionPolicy::FFloorThenMinGap;
  throw std::invalid_argument("unknown selection policy '" + name + "'");
}

std::string to_string(SelectionPolicy policy) {
  switch (policy) {
    case SelectionPolicy::BestDevF: return "BEST_DEV_F";
    case SelectionPolicy::FairestDev: return "FAIREST_DEV";
    case SelectionPolicy::HarmonicMean: return "HARMONIC_MEAN";
    case SelectionPolicy::FFloorThenMinGap: return "F_FLOOR_THEN_MIN_GAP";
  }
  return "?";
}

double harmonic_mean(double f, double fairness) {
  const double denom = f + fairness;
  return denom > 0.0 ? 2.0 * f * fairness / denom : 0.0;
}

std::string select_model(const std::vector<SelectionCandidate>& candidates,
                         SelectionPolicy policy, double f_floor) {
  if (candidates.empty()) throw std::invalid_argument("select_model: empty candidate list");

  // Higher score wins everywhere; ties break toward the smallest config_id.
  auto better = [](double score, const std::string& id, double best_score,
                   const std::string& best_id) {
    return score > best_score || (score == best_score && id < best_id);
  };

  bool found = false;
  double best_score = 0.0;
  std::string best_id;
  for (const auto& c : candidates) {
    double score = 0.0;
    switch (policy) {
      case SelectionPolicy::BestDevF:
        score = c.dev_f;
        break;
      case SelectionPolicy::FairestDev:
        score = 1.0 - c.dev_gap;
        break;
      case SelectionPolicy::HarmonicMean:
        score = harmonic_mean(c.dev_f, 1.0 - c.dev_gap);
        break;
      case SelectionPolicy::FFloorThenMinGap:
        if (c.dev_f < f_floor) continue;
        score = -c.dev_gap;
        break;
    }
    if (!found || better(score, c.config_id, best_score, best_id)) {
      found = true;
      best_score = score;
      best_id = c.config_id;
    }
  }
  if (!found)
    throw std::invalid_argument("select_model: no candidate reaches F floor " +
                                std::to_string(f_floor));
  return best_id;
}

}  // namespace fairimb
