#include "fairimb/inlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fairimb {

namespace {

constexpr double kDropTolerance = 1e-10;

// Subgradient descent on mean hinge + (reg/2)||w||^2 for targets in {-1,+1}.
void fit_binary_hinge(const Matrix& reps, const std::vector<int>& targets,
                      const LinearFitConfig& config, std::vector<double>& w, double& bias) {
  const std::size_t n = reps.rows();
  const std::size_t h = reps.cols();
  w.assign(h, 0.0);
  bias = 0.0;
  std::vector<double> grad(h);
  for (int step = 0; step < config.steps; ++step) {
    for (std::size_t j = 0; j < h; ++j) grad[j] = config.l2_reg * w[j];
    double grad_bias = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = reps.row(i);
      double score = bias;
      for (std::size_t j = 0; j < h; ++j) score += w[j] * x[j];
      const double t = targets[i];
      if (t * score < 1.0) {
        const double scale = -t / static_cast<double>(n);
        for (std::size_t j = 0; j < h; ++j) grad[j] += scale * x[j];
        grad_bias += scale;
      }
    }
    for (std::size_t j = 0; j < h; ++j) w[j] -= config.learning_rate * grad[j];
    bias -= config.learning_rate * grad_bias;
  }
}

}  // namespace

int LinearGroupClassifier::predict(const double* rep, std::size_t dim) const {
  if (w.rows() == 1) {
    double score = bias[0];
    for (std::size_t j = 0; j < dim; ++j) score += w(0, j) * rep[j];
    return score > 0.0 ? 1 : 0;
  }
  int best = 0;
  double best_score = 0.0;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double score = bias[r];
    for (std::size_t j = 0; j < dim; ++j) score += w(r, j) * rep[j];
    if (r == 0 || score > best_score) {
      best = static_cast<int>(r);
      best_score = score;
    }
  }
  return best;
}

LinearGroupClassifier fit_linear_group_classifier(const Matrix& reps,
                                                  const std::vector<int>& groups,
                                                  const LinearFitConfig& config) {
  const std::size_t n = reps.rows();
  if (n < 2) throw std::invalid_argument("fit_linear_group_classifier: need n >= 2");
  if (groups.size() != n)
    throw std::invalid_argument("fit_linear_group_classifier: group length mismatch");
  const int num_groups = *std::max_element(groups.begin(), groups.end()) + 1;
  std::vector<std::int64_t> present(std::max(num_groups, 2), 0);
  for (int g : groups) {
    if (g < 0) throw std::invalid_argument("fit_linear_group_classifier: negative group id");
    present[g] += 1;
  }
  if (std::count_if(present.begin(), present.end(), [](std::int64_t c) { return c > 0; }) < 2)
    throw std::invalid_argument("fit_linear_group_classifier: only one group present");

  LinearGroupClassifier clf;
  const std::size_t h = reps.cols();
  if (num_groups == 2) {
    std::vector<int> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = groups[i] == 1 ? 1 : -1;
    std::vector<double> w;
    double bias = 0.0;
    fit_binary_hinge(reps, targets, config, w, bias);
    clf.w = Matrix(1, h);
    std::copy(w.begin(), w.end(), clf.w.row(0));
    clf.bias.assign(1, bias);
  } else {
    clf.w = Matrix(num_groups, h);
    clf.bias.assign(num_groups, 0.0);
    std::vector<int> targets(n);
    std::vector<double> w;
    for (int r = 0; r < num_groups; ++r) {
      for (std::size_t i = 0; i < n; ++i) targets[i] = groups[i] == r ? 1 : -1;
      double bias = 0.0;
      fit_binary_hinge(reps, targets, config, w, bias);
      std::copy(w.begin(), w.end(), clf.w.row(r));
      clf.bias[r] = bias;
    }
  }

  std::int64_t correct = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (clf.predict(reps.row(i), h) == groups[i]) ++correct;
  clf.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return clf;
}

namespace {

// Orthonormalizes `row` against `basis` (two passes). Returns false when the
// residual falls under the drop tolerance relative to the row norm.
bool orthonormalize_against(const std::vector<std::vector<double>>& basis,
                            std::vector<double>& row) {
  double norm0 = 0.0;
  for (double v : row) norm0 += v * v;
  norm0 = std::sqrt(norm0);
  if (norm0 == 0.0) return false;

  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) dot += row[j] * b[j];
      for (std::size_t j = 0; j < row.size(); ++j) row[j] -= dot * b[j];
    }
  }
  double norm = 0.0;
  for (double v : row) norm += v * v;
  norm = std::sqrt(norm);
  if (norm <= kDropTolerance * norm0) return false;
  for (double& v : row) v /= norm;
  return true;
}

Matrix projection_from_basis(const std::vector<std::vector<double>>& basis, std::size_t h) {
  Matrix p = Matrix::identity(h);
  for (const auto& b : basis)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < h; ++j) p(i, j) -= b[i] * b[j];
  return p;
}

}  // namespace

Matrix nullspace_projection(const Matrix& w) {
  if (w.rows() == 0 || w.cols() == 0)
    throw std::invalid_argument("nullspace_projection: empty matrix");
  std::vector<std::vector<double>> basis;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    std::vector<double> row(w.row(r), w.row(r) + w.cols());
    if (orthonormalize_against(basis, row)) basis.push_back(std::move(row));
  }
  if (basis.empty()) throw std::invalid_argument("nullspace_projection: all-zero W");
  return projection_from_basis(basis, w.cols());
}

ProjectionState inlp_run(const Matrix& reps, const std::vector<int>& groups, int max_iters,
                         double stop_accuracy) {
  if (max_iters < 1) throw std::invalid_argument("inlp_run: max_iters must be >= 1");
  const std::size_t n = reps.rows();
  const std::size_t h = reps.cols();
  if (n < 2 || groups.size() != n) throw std::invalid_argument("inlp_run: bad inputs");

  if (stop_accuracy < 0.0) {
    const int num_groups = *std::max_element(groups.begin(), groups.end()) + 1;
    std::vector<std::int64_t> counts(num_groups, 0);
    for (int g : groups) counts[g] += 1;
    const double majority =
        static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
        static_cast<double>(n);
    stop_accuracy = majority + 0.02;
  }

  ProjectionState state;
  state.projection = Matrix::identity(h);
  std::vector<std::vector<double>> removed;

  for (int iter = 0; iter < max_iters; ++iter) {
    const Matrix projected =
        removed.empty() ? reps : matmul(reps, state.projection);
    const LinearGroupClassifier clf = fit_linear_group_classifier(projected, groups);
    state.accuracies.push_back(clf.train_accuracy);
    if (clf.train_accuracy <= stop_accuracy) break;

    bool added = false;
    for (std::size_t r = 0; r < clf.w.rows(); ++r) {
      std::vector<double> dir(clf.w.row(r), clf.w.row(r) + h);
      if (orthonormalize_against(removed, dir)) {
        removed.push_back(std::move(dir));
        added = true;
      }
    }
    if (!added) {
      state.rank_exhausted = true;  // classifier found nothing outside the removed span
      break;
    }
    state.classifier_weights.push_back(clf.w);
    state.projection = projection_from_basis(removed, h);
    state.iterations += 1;
    if (removed.size() >= h) {
      state.rank_exhausted = true;
      break;
    }
  }

  state.removed_directions = Matrix(removed.size(), h);
  for (std::size_t r = 0; r < removed.size(); ++r)
    std::copy(removed[r].begin(), removed[r].end(), state.removed_directions.row(r));
  return state;
}

RetrainedHead apply_and_retrain(const ProjectionState& state, const Matrix& reps,
                                const std::vector<int>& labels, int num_classes,
                                const HeadFitConfig& config) {
  const std::size_t n = reps.rows();
  const std::size_t h = reps.cols();
  if (n < 1 || labels.size() != n) throw std::invalid_argument("apply_and_retrain: bad inputs");
  if (state.projection.rows() != h) throw std::invalid_argument("apply_and_retrain: dim mismatch");
  for (int y : labels)
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("apply_and_retrain: label out of range");

  const Matrix projected = matmul(reps, state.projection);
  RetrainedHead head;
  head.w = Matrix(num_classes, h);
  head.bias.assign(num_classes, 0.0);

  std::vector<double> p(num_classes);
  Matrix dlogits(n, num_classes);
  for (int step = 0; step < config.steps; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = projected.row(i);
      double max_logit = -1e300;
      for (int c = 0; c < num_classes; ++c) {
        double z = head.bias[c];
        const double* wrow = head.w.row(c);
        for (std::size_t j = 0; j < h; ++j) z += wrow[j] * x[j];
        p[c] = z;
        max_logit = std::max(max_logit, z);
      }
      double sum = 0.0;
      for (int c = 0; c < num_classes; ++c) {
        p[c] = std::exp(p[c] - max_logit);
        sum += p[c];
      }
      double* drow = dlogits.row(i);
      for (int c = 0; c < num_classes; ++c)
        drow[c] = (p[c] / sum - (c == labels[i] ? 1.0 : 0.0)) / static_cast<double>(n);
    }
    const Matrix dw = matmul_tn(dlogits, projected);
    for (std::size_t idx = 0; idx < head.w.size(); ++idx)
      head.w.data()[idx] -= config.learning_rate * dw.data()[idx];
    for (std::size_t i = 0; i < n; ++i) {
      const double* drow = dlogits.row(i);
      for (int c = 0; c < num_classes; ++c) head.bias[c] -= config.learning_rate * drow[c];
    }
  }
  return head;
}

std::vector<int> head_predict(const RetrainedHead& head, const ProjectionState& state,
                              const Matrix& reps) {
  const Matrix projected = matmul(reps, state.projection);
  const std::size_t h = projected.cols();
  std::vector<int> preds(projected.rows());
  for (std::size_t i = 0; i < projected.rows(); ++i) {
    const double* x = projected.row(i);
    int best = 0;
    double best_score = 0.0;
    for (std::size_t c = 0; c < head.w.rows(); ++c) {
      double z = head.bias[c];
      const double* wrow = head.w.row(c);
      for (std::size_t j = 0; j < h; ++j) z += wrow[j] * x[j];
      if (c == 0 || z > best_score) {
        best = static_cast<int>(c);
        best_score = z;
      }
    }
    preds[i] = best;
  }
  return preds;
}

void save_projection_state(const ProjectionState& state, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("projection: cannot write '" + path + "'");
  std::fprintf(f, "{\n");
  std::fprintf(f, "  \"format\": \"fairimb-inlp-v1\",\n");
  std::fprintf(f, "  \"hidden_dim\": %zu,\n", state.hidden_dim());
  std::fprintf(f, "  \"iterations\": %d,\n", state.iterations);
  std::fprintf(f, "  \"rank_exhausted\": %s,\n", state.rank_exhausted ? "true" : "false");
  std::fprintf(f, "  \"accuracies\": [");
  for (std::size_t i = 0; i < state.accuracies.size(); ++i)
    std::fprintf(f, i + 1 < state.accuracies.size() ? "%.17g," : "%.17g", state.accuracies[i]);
  std::fprintf(f, "],\n");
  std::fprintf(f, "  \"removed_directions\": [");
  for (std::size_t r = 0; r < state.removed_directions.rows(); ++r) {
    std::fprintf(f, "[");
    for (std::size_t j = 0; j < state.removed_directions.cols(); ++j)
      std::fprintf(f, j + 1 < state.removed_directions.cols() ? "%.17g," : "%.17g",
                   state.removed_directions(r, j));
    std::fprintf(f, r + 1 < state.removed_directions.rows() ? "]," : "]");
  }
  std::fprintf(f, "]\n}\n");
  if (std::fclose(f) != 0) throw std::runtime_error("projection: write failed for '" + path + "'");
}

ProjectionState load_projection_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("projection: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("projection: invalid JSON in '" + path + "': " + e.what());
  }
  if (j.value("format", "") != "fairimb-inlp-v1")
    throw std::runtime_error("projection: unsupported format in '" + path + "'");

  ProjectionState state;
  const std::size_t h = j.at("hidden_dim").get<std::size_t>();
  state.iterations = j.at("iterations").get<int>();
  state.rank_exhausted = j.at("rank_exhausted").get<bool>();
  state.accuracies = j.at("accuracies").get<std::vector<double>>();

  const auto rows = j.at("removed_directions");
  state.removed_directions = Matrix(rows.size(), h);
  std::vector<std::vector<double>> basis;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = rows[r].get<std::vector<double>>();
    if (row.size() != h) throw std::runtime_error("projection: direction length mismatch");
    std::copy(row.begin(), row.end(), state.removed_directions.row(r));
    basis.push_back(row);
  }
  state.projection = projection_from_basis(basis, h);
  return state;
}

}  // namespace fairimb
