#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fairimb/matrix.hpp"

namespace fairimb {

/// Feature matrix with a class label y and a group label g per instance.
struct LabeledGroupedDataset {
  Matrix features;          // N x d
  std::vector<int> labels;  // y in [0, num_classes)
  std::vector<int> groups;  // g in [0, num_groups)
  int num_classes = 2;
  int num_groups = 2;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  /// Throws std::invalid_argument on any broken invariant (shape mismatch,
  /// non-finite feature, out-of-range label/group, N < 1, K or G < 2).
  void validate() const;
};

/// Per-class, per-group and per-cell tallies of a dataset.
struct ClassGroupCounts {
  std::vector<std::int64_t> per_class;             // n_j, length K
  std::vector<std::vector<std::int64_t>> per_cell; // K x G
  std::vector<std::int64_t> per_group;             // length G
  std::int64_t total = 0;

  int num_classes() const { return static_cast<int>(per_class.size()); }
  int num_groups() const { return static_cast<int>(per_group.size()); }
  std::int64_t cell(int y, int g) const { return per_cell[y][g]; }
};

/// Target class balance and within-class group mix for resampling/generation.
/// Binary classes: positive_fraction is the share of class 1.
struct RatioSpec {
  double positive_fraction = 0.5;
  Matrix stereotype = Matrix(2, 2, 0.5);  // K x G, each row sums to 1
  std::int64_t target_size = 0;

  void validate() const;
};

/// Geometry of the synthetic feature clouds: classes split along axis 0,
/// groups along axis 1, isotropic Gaussian noise everywhere.
struct SyntheticSpec {
  int dim = 2;
  double class_separation = 2.0;
  double group_shift = 1.0;
  double noise_std = 1.0;
  RatioSpec ratios;

  void validate() const;
};

/// Hamilton largest-remainder apportionment of `total` over `fractions`
/// (must be >= 0 and sum to 1 within 1e-9). Ties go to the lower index.
std::vector<std::int64_t> largest_remainder(const std::vector<double>& fractions,
                                            std::int64_t total);

/// Flattened (y-major) per-cell targets implied by a RatioSpec.
std::vector<std::int64_t> cell_targets(const RatioSpec& ratios);

ClassGroupCounts compute_counts(const LabeledGroupedDataset& data);

/// Deterministic synthetic dataset: exact largest-remainder cell counts,
/// rows emitted in (class, group) block order. Binary classes and groups.
LabeledGroupedDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Subsample without replacement so counts hit the largest-remainder cell
/// targets exactly. Throws if any required cell lacks instances.
LabeledGroupedDataset resample_to_ratios(const LabeledGroupedDataset& data,
                                         const RatioSpec& ratios, std::uint64_t seed);

struct SplitResult {
  LabeledGroupedDataset train;
  LabeledGroupedDataset dev;
  LabeledGroupedDataset test;
};

/// Stratified split: within every (class, group) cell the three parts get
/// largest-remainder shares of the cell. Fractions must sum to 1.
SplitResult split(const LabeledGroupedDataset& data,
                  const std::array<double, 3>& fractions, std::uint64_t seed);

/// Subset by row indices (kept in the given order).
LabeledGroupedDataset gather(const LabeledGroupedDataset& data,
                             const std::vector<std::size_t>& indices);

/// CSV I/O, format: header `y,g,f0,...,f{d-1}`, one instance per row,
/// floats written with 17 significant digits so round-trips are exact.
/// expected_k/expected_g = 0 infers K (resp. G) as max id + 1 (at least 2).
LabeledGroupedDataset load_csv(const std::string& path, int expected_k = 0,
                               int expected_g = 0);
void save_csv(const LabeledGroupedDataset& data, const std::string& path);

}  // namespace fairimb
