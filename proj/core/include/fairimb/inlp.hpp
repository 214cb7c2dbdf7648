#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairimb/matrix.hpp"

namespace fairimb {

/// Linear predictor of group membership fit on hidden representations.
/// Binary groups store a single separating direction (decision: score > 0
/// predicts group 1); G > 2 stores one one-vs-rest row per group.
struct LinearGroupClassifier {
  Matrix w;                  // G' x h
  std::vector<double> bias;  // G'
  double train_accuracy = 0.0;

  int predict(const double* rep, std::size_t dim) const;
};

struct LinearFitConfig {
  int steps = 500;
  double learning_rate = 0.1;
  double l2_reg = 1e-3;
};

/// L2-regularized hinge loss, deterministic full-batch subgradient descent
/// from zero init. Throws when only one group is present.
LinearGroupClassifier fit_linear_group_classifier(const Matrix& reps,
                                                  const std::vector<int>& groups,
                                                  const LinearFitConfig& config = {});

/// P = I - B^T B for the orthonormalized row basis B of W (Gram-Schmidt,
/// drop tolerance 1e-10). Satisfies P = P^T, P^2 = P, W P = 0.
Matrix nullspace_projection(const Matrix& w);

/// Composed nullspace projection with per-iteration diagnostics.
struct ProjectionState {
  Matrix projection;           // h x h, symmetric idempotent
  int iterations = 0;          // directions removed
  std::vector<double> accuracies;  // adversary train accuracy per fit
  Matrix removed_directions;   // orthonormal rows spanning the removed space
  std::vector<Matrix> classifier_weights;  // raw W per completed iteration
  bool rank_exhausted = false;

  std::size_t hidden_dim() const { return projection.rows(); }
};

/// Iteratively fit a group classifier on projected reps and remove its
/// direction(s). Stops when the fit accuracy drops to stop_accuracy
/// (pass a negative value for the default: majority-group fraction + 0.02),
/// when max_iters fits have run, or when the rank is exhausted.
ProjectionState inlp_run(const Matrix& reps, const std::vector<int>& groups, int max_iters,
                         double stop_accuracy = -1.0);

/// Multinomial logistic head retrained on projected representations.
struct RetrainedHead {
  Matrix w;                  // K x h
  std::vector<double> bias;  // K
};

struct HeadFitConfig {
  int steps = 500;
  double learning_rate = 0.5;
};

/// Projects reps by state.projection and fits the task head from zero init
/// with deterministic full-batch gradient descent.
RetrainedHead apply_and_retrain(const ProjectionState& state, const Matrix& reps,
                                const std::vector<int>& labels, int num_classes,
                                const HeadFitConfig& config = {});

/// Head predictions for (possibly unprojected) reps; the projection is
/// applied internally.
std::vector<int> head_predict(const RetrainedHead& head, const ProjectionState& state,
                              const Matrix& reps);

void save_projection_state(const ProjectionState& state, const std::string& path);
ProjectionState load_projection_state(const std::string& path);

}  // namespace fairimb
