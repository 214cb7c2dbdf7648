#include "fairimb/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fairimb/rng.hpp"

namespace fairimb {

namespace {

std::string cell_name(int y, int g) {
  return "(class " + std::to_string(y) + ", group " + std::to_string(g) + ")";
}

}  // namespace

void LabeledGroupedDataset::validate() const {
  const std::size_t n = labels.size();
  if (n < 1) throw std::invalid_argument("dataset: N must be >= 1");
  if (groups.size() != n || features.rows() != n)
    throw std::invalid_argument("dataset: features/labels/groups length mismatch");
  if (num_classes < 2 || num_groups < 2)
    throw std::invalid_argument("dataset: K and G must be >= 2");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw std::invalid_argument("dataset: label out of range at row " + std::to_string(i));
    if (groups[i] < 0 || groups[i] >= num_groups)
      throw std::invalid_argument("dataset: group out of range at row " + std::to_string(i));
  }
  for (double v : features.data())
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature value");
}

void RatioSpec::validate() const {
  if (!(positive_fraction > 0.0 && positive_fraction < 1.0))
    throw std::invalid_argument("RatioSpec: positive_fraction must be strictly inside (0,1)");
  if (stereotype.rows() < 2 || stereotype.cols() < 2)
    throw std::invalid_argument("RatioSpec: stereotype must be K x G with K,G >= 2");
  for (std::size_t y = 0; y < stereotype.rows(); ++y) {
    double s = 0.0;
    for (std::size_t g = 0; g < stereotype.cols(); ++g) {
      if (stereotype(y, g) < 0.0)
        throw std::invalid_argument("RatioSpec: negative stereotype fraction");
      s += stereotype(y, g);
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument("RatioSpec: stereotype row " + std::to_string(y) +
                                  " does not sum to 1");
  }
  if (target_size < 1) throw std::invalid_argument("RatioSpec: target_size must be >= 1");
}

void SyntheticSpec::validate() const {
  if (dim < 2) throw std::invalid_argument("SyntheticSpec: dim must be >= 2");
  if (!(noise_std > 0.0)) throw std::invalid_argument("SyntheticSpec: noise_std must be > 0");
  if (class_separation < 0.0 || group_shift < 0.0)
    throw std::invalid_argument("SyntheticSpec: separations must be >= 0");
  ratios.validate();
}

std::vector<std::int64_t> largest_remainder(const std::vector<double>& fractions,
                                            std::int64_t total) {
  if (total < 0) throw std::invalid_argument("largest_remainder: negative total");
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("largest_remainder: negative fraction");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("largest_remainder: fractions must sum to 1");

  const std::size_t n = fractions.size();
  std::vector<std::int64_t> counts(n);
  std::vector<double> remainders(n);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double quota = static_cast<double>(total) * fractions[i];
    counts[i] = static_cast<std::int64_t>(std::floor(quota));
    remainders[i] = quota - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (std::int64_t r = total - assigned, i = 0; r > 0; --r, ++i) counts[order[i]] += 1;
  return counts;
}

std::vector<std::int64_t> cell_targets(const RatioSpec& ratios) {
  ratios.validate();
  if (ratios.stereotype.rows() != 2)
    throw std::invalid_argument("cell_targets: positive_fraction semantics require K = 2");
  const std::size_t num_groups = ratios.stereotype.cols();
  const double class_frac[2] = {1.0 - ratios.positive_fraction, ratios.positive_fraction};
  std::vector<double> fractions;
  fractions.reserve(2 * num_groups);
  for (int y = 0; y < 2; ++y)
    for (std::size_t g = 0; g < num_groups; ++g)
      fractions.push_back(class_frac[y] * ratios.stereotype(y, g));
  return largest_remainder(fractions, ratios.target_size);
}

ClassGroupCounts compute_counts(const LabeledGroupedDataset& data) {
  data.validate();
  ClassGroupCounts c;
  c.per_class.assign(data.num_classes, 0);
  c.per_group.assign(data.num_groups, 0);
  c.per_cell.assign(data.num_classes, std::vector<std::int64_t>(data.num_groups, 0));
  c.total = static_cast<std::int64_t>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    c.per_class[data.labels[i]] += 1;
    c.per_group[data.groups[i]] += 1;
    c.per_cell[data.labels[i]][data.groups[i]] += 1;
  }
  return c;
}

LabeledGroupedDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.ratios.stereotype.cols() != 2)
    throw std::invalid_argument("generate_synthetic: generator supports G = 2");
  const auto targets = cell_targets(spec.ratios);

  for (int y = 0; y < 2; ++y)
    for (int g = 0; g < 2; ++g) {
      const std::size_t idx = static_cast<std::size_t>(y) * 2 + g;
      const double frac = (y == 0 ? 1.0 - spec.ratios.positive_fraction
                                  : spec.ratios.positive_fraction) *
                          spec.ratios.stereotype(y, g);
      if (frac > 0.0 && targets[idx] == 0)
        throw std::invalid_argument("generate_synthetic: cell " + cell_name(y, g) +
                                    " starved: fraction " + std::to_string(frac) +
                                    " rounds to 0 instances at target_size " +
                                    std::to_string(spec.ratios.target_size));
    }

  const std::int64_t n = spec.ratios.target_size;
  LabeledGroupedDataset out;
  out.num_classes = 2;
  out.num_groups = 2;
  out.features = Matrix(static_cast<std::size_t>(n), spec.dim);
  out.labels.reserve(n);
  out.groups.reserve(n);

  Rng rng(seed);
  std::size_t row = 0;
  for (int y = 0; y < 2; ++y)
    for (int g = 0; g < 2; ++g) {
      const double class_mean = (y == 0 ? -0.5 : 0.5) * spec.class_separation;
      const double group_mean = (g == 0 ? -0.5 : 0.5) * spec.group_shift;
      const std::int64_t count = targets[static_cast<std::size_t>(y) * 2 + g];
      for (std::int64_t i = 0; i < count; ++i, ++row) {
        double* x = out.features.row(row);
        for (int j = 0; j < spec.dim; ++j) x[j] = spec.noise_std * rng.normal();
        x[0] += class_mean;
        x[1] += group_mean;
        out.labels.push_back(y);
        out.groups.push_back(g);
      }
    }
  return out;
}

LabeledGroupedDataset gather(const LabeledGroupedDataset& data,
                             const std::vector<std::size_t>& indices) {
  LabeledGroupedDataset out;
  out.num_classes = data.num_classes;
  out.num_groups = data.num_groups;
  out.features = Matrix(indices.size(), data.dim());
  out.labels.reserve(indices.size());
  out.groups.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    const double* src = data.features.row(i);
    std::copy(src, src + data.dim(), out.features.row(r));
    out.labels.push_back(data.labels[i]);
    out.groups.push_back(data.groups[i]);
  }
  return out;
}

LabeledGroupedDataset resample_to_ratios(const LabeledGroupedDataset& data,
                                         const RatioSpec& ratios, std::uint64_t seed) {
  data.validate();
  if (data.num_classes != 2)
    throw std::invalid_argument("resample_to_ratios: positive_fraction semantics require K = 2");
  if (static_cast<std::size_t>(ratios.stereotype.cols()) !=
      static_cast<std::size_t>(data.num_groups))
    throw std::invalid_argument("resample_to_ratios: stereotype group count mismatch");
  const auto targets = cell_targets(ratios);

  // Bucket source rows per (class, group) cell, keeping source order.
  const int num_groups = data.num_groups;
  std::vector<std::vector<std::size_t>> buckets(2 * num_groups);
  for (std::size_t i = 0; i < data.size(); ++i)
    buckets[static_cast<std::size_t>(data.labels[i]) * num_groups + data.groups[i]].push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(ratios.target_size);
  for (int y = 0; y < 2; ++y)
    for (int g = 0; g < num_groups; ++g) {
      const std::size_t idx = static_cast<std::size_t>(y) * num_groups + g;
      const std::int64_t need = targets[idx];
      auto& bucket = buckets[idx];
      if (need > static_cast<std::int64_t>(bucket.size()))
        throw std::invalid_argument(
            "resample_to_ratios: insufficient instances in cell " + cell_name(y, g) +
            ": need " + std::to_string(need) + ", have " + std::to_string(bucket.size()) +
            " (deficit " + std::to_string(need - static_cast<std::int64_t>(bucket.size())) + ")");
      rng.shuffle(bucket);
      chosen.insert(chosen.end(), bucket.begin(), bucket.begin() + need);
    }
  return gather(data, chosen);
}

SplitResult split(const LabeledGroupedDataset& data, const std::array<double, 3>& fractions,
                  std::uint64_t seed) {
  data.validate();
  double sum = 0.0;
  int nonzero_parts = 0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("split: negative fraction");
    if (f > 0.0) ++nonzero_parts;
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split: fractions must sum to 1");

  std::vector<std::vector<std::size_t>> buckets(
      static_cast<std::size_t>(data.num_classes) * data.num_groups);
  for (std::size_t i = 0; i < data.size(); ++i)
    buckets[static_cast<std::size_t>(data.labels[i]) * data.num_groups + data.groups[i]]
        .push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> part_indices[3];
  const std::vector<double> fracs(fractions.begin(), fractions.end());
  for (int y = 0; y < data.num_classes; ++y)
    for (int g = 0; g < data.num_groups; ++g) {
      auto& bucket = buckets[static_cast<std::size_t>(y) * data.num_groups + g];
      if (bucket.empty()) continue;
      if (static_cast<int>(bucket.size()) < nonzero_parts)
        throw std::invalid_argument("split: cell " + cell_name(y, g) + " has " +
                                    std::to_string(bucket.size()) + " instances, fewer than " +
                                    std::to_string(nonzero_parts) + " nonzero split parts");
      const auto shares = largest_remainder(fracs, static_cast<std::int64_t>(bucket.size()));
      rng.shuffle(bucket);
      std::size_t offset = 0;
      for (int p = 0; p < 3; ++p) {
        part_indices[p].insert(part_indices[p].end(), bucket.begin() + offset,
                               bucket.begin() + offset + shares[p]);
        offset += shares[p];
      }
    }
  return SplitResult{gather(data, part_indices[0]), gather(data, part_indices[1]),
                     gather(data, part_indices[2])};
}

namespace {

int parse_int_field(const std::string& tok, std::size_t line, const char* what) {
  int value = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw std::runtime_error("csv line " + std::to_string(line) + ": malformed " + what +
                             " '" + tok + "'");
  return value;
}

double parse_double_field(const std::string& tok, std::size_t line) {
  double value = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw std::runtime_error("csv line " + std::to_string(line) + ": malformed feature '" +
                             tok + "'");
  if (!std::isfinite(value))
    throw std::runtime_error("csv line " + std::to_string(line) + ": non-finite feature value");
  return value;
}

std::vector<std::string> split_commas(const std::string& line) {
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

}  // namespace

LabeledGroupedDataset load_csv(const std::string& path, int expected_k, int expected_g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "y" || header[1] != "g")
    throw std::runtime_error("csv line 1: malformed header, expected y,g,f0,...");
  const std::size_t dim = header.size() - 2;
  for (std::size_t j = 0; j < dim; ++j)
    if (header[j + 2] != "f" + std::to_string(j))
      throw std::runtime_error("csv line 1: malformed header, expected column f" +
                               std::to_string(j) + ", got '" + header[j + 2] + "'");

  std::vector<double> values;
  std::vector<int> labels, groups;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != dim + 2)
      throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected " +
                               std::to_string(dim + 2) + " fields, got " +
                               std::to_string(fields.size()));
    const int y = parse_int_field(fields[0], lineno, "label");
    const int g = parse_int_field(fields[1], lineno, "group");
    if (y < 0 || (expected_k > 0 && y >= expected_k))
      throw std::runtime_error("csv line " + std::to_string(lineno) + ": label " +
                               std::to_string(y) + " out of range [0," +
                               std::to_string(expected_k) + ")");
    if (g < 0 || (expected_g > 0 && g >= expected_g))
      throw std::runtime_error("csv line " + std::to_string(lineno) + ": group " +
                               std::to_string(g) + " out of range [0," +
                               std::to_string(expected_g) + ")");
    labels.push_back(y);
    groups.push_back(g);
    for (std::size_t j = 0; j < dim; ++j) values.push_back(parse_double_field(fields[j + 2], lineno));
  }
  if (labels.empty()) throw std::runtime_error("csv: no data rows in '" + path + "'");

  LabeledGroupedDataset out;
  out.num_classes = expected_k > 0 ? expected_k
                                   : std::max(2, *std::max_element(labels.begin(), labels.end()) + 1);
  out.num_groups = expected_g > 0 ? expected_g
                                  : std::max(2, *std::max_element(groups.begin(), groups.end()) + 1);
  out.labels = std::move(labels);
  out.groups = std::move(groups);
  out.features = Matrix(out.labels.size(), dim);
  out.features.data() = std::move(values);
  out.validate();
  return out;
}

void save_csv(const LabeledGroupedDataset& data, const std::string& path) {
  data.validate();
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("csv: cannot write '" + path + "'");
  std::fputs("y,g", f);
  for (std::size_t j = 0; j < data.dim(); ++j) std::fprintf(f, ",f%zu", j);
  std::fputc('\n', f);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::fprintf(f, "%d,%d", data.labels[i], data.groups[i]);
    const double* x = data.features.row(i);
    for (std::size_t j = 0; j < data.dim(); ++j) std::fprintf(f, ",%.17g", x[j]);
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("csv: write failed for '" + path + "'");
}

}  // namespace fairimb
