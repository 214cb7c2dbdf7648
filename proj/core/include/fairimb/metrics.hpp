#pragma once

#include <string>
#include <vector>

namespace fairimb {

/// Performance + equalised-odds fairness summary for one model on one split.
struct EvalReport {
  double macro_f = 0.0;
  std::vector<double> tpr;  // per group
  std::vector<double> tnr;  // per group
  double gap = 0.0;
  double one_minus_gap = 1.0;
  /// True when some group had no positives (or no negatives) and its rate
  /// fell back to the degenerate-denominator convention (rate = 1).
  bool degenerate_rates = false;
};

struct GroupRates {
  std::vector<double> tpr;
  std::vector<double> tnr;
  bool degenerate = false;
};

/// Unweighted mean of per-class F1. A class with no true and no predicted
/// positives contributes F1 = 0.
double macro_f(const std::vector<int>& preds, const std::vector<int>& labels, int num_classes);

/// Per-group TPR/TNR for binary labels (class 1 = positive). A group with an
/// undefined denominator gets rate 1 and sets the degenerate flag.
GroupRates group_rates(const std::vector<int>& preds, const std::vector<int>& labels,
                       const std::vector<int>& groups, int num_groups);

/// Mean of the absolute TPR and TNR differences between the two groups.
double gap(const GroupRates& rates);

/// macro_f + group_rates + gap in one report (binary labels, two groups).
EvalReport evaluate(const std::vector<int>& preds, const std::vector<int>& labels,
                    const std::vector<int>& groups, int num_classes, int num_groups);

/// One candidate model in (performance, fairness) space.
struct TradeoffPoint {
  double f = 0.0;         // macro-F
  double fairness = 0.0;  // 1 - GAP
  std::string config_id;
};

/// Points not strictly dominated in (f, fairness); duplicates by
/// (f, fairness) are collapsed to the lowest config_id. Output is sorted by
/// f ascending, then fairness, then config_id.
std::vector<TradeoffPoint> pareto_frontier(const std::vector<TradeoffPoint>& points);

enum class SelectionPolicy {
  BestDevF,
  FairestDev,
  HarmonicMean,
  FFloorThenMinGap,
};

SelectionPolicy selection_policy_from_string(const std::string& name);
std::string to_string(SelectionPolicy policy);

struct SelectionCandidate {
  std::string config_id;
  double dev_f = 0.0;
  double dev_gap = 0.0;
};

double harmonic_mean(double f, double fairness);

/// Picks a config_id per the policy; ties break toward the smallest
/// config_id. FFloorThenMinGap throws if no candidate reaches the floor.
std::string select_model(const std::vector<SelectionCandidate>& candidates,
                         SelectionPolicy policy, double f_floor = 0.0);

}  // namespace fairimb
