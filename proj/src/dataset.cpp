#include "boss/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace boss::nn {

void Dataset::validate() const {
  if (labels.empty()) throw Error("dataset has no rows");
  if (features.rows != labels.size()) throw Error("dataset feature/label row mismatch");
  if (n_classes < 2) throw Error("dataset needs at least two classes");
  for (int y : labels)
    if (y < 0 || y >= n_classes) throw Error("dataset label out of range: " + std::to_string(y));
  for (double x : features.data)
    if (!std::isfinite(x)) throw Error("dataset contains a non-finite feature");
}

namespace {

// Centers of a regular simplex with unit edge, embedded in d dims (needs C <= d + 1).
std::vector<std::vector<double>> simplex_centers(std::size_t d, int n_classes) {
  // Start from scaled basis vectors e_0..e_{C-1} in C dims (edge sqrt(2)),
  // center them, then rotate into d dims via Gram-Schmidt on the differences.
  const auto C = static_cast<std::size_t>(n_classes);
  std::vector<std::vector<double>> pts(C, std::vector<double>(C, 0.0));
  for (std::size_t c = 0; c < C; ++c) pts[c][c] = 1.0 / std::sqrt(2.0);
  // Orthonormal basis of span{p_c - p_0}.
  std::vector<std::vector<double>> basis;
  for (std::size_t c = 1; c < C; ++c) {
    std::vector<double> v(C);
    for (std::size_t k = 0; k < C; ++k) v[k] = pts[c][k] - pts[0][k];
    for (const auto& b : basis) {
      double p = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (std::size_t k = 0; k < C; ++k) v[k] -= p * b[k];
    }
    double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  std::vector<std::vector<double>> out(C, std::vector<double>(d, 0.0));
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t j = 0; j < basis.size() && j < d; ++j) {
      std::vector<double> diff(C);
      for (std::size_t k = 0; k < C; ++k) diff[k] = pts[c][k] - pts[0][k];
      out[c][j] = std::inner_product(diff.begin(), diff.end(), basis[j].begin(), 0.0);
    }
  return out;
}

}  // namespace

Dataset make_blobs(std::size_t n, std::size_t d, int n_classes, double separation, std::uint64_t seed) {
  if (n_classes < 2) throw Error("make_blobs: need at least two classes");
  if (d < 1) throw Error("make_blobs: need at least one feature");
  if (n < static_cast<std::size_t>(n_classes)) throw Error("make_blobs: need n >= number of classes");
  if (!(separation >= 0.0) || !std::isfinite(separation)) throw Error("make_blobs: invalid separation");
  Rng rng(mix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto C = static_cast<std::size_t>(n_classes);
  std::vector<std::vector<double>> centers;
  if (C <= d + 1) {
    centers = simplex_centers(d, n_classes);
    for (auto& c : centers)
      for (auto& x : c) x *= separation;
  } else {
    // Random directions at the circumradius of a simplex with this edge.
    double radius = separation / std::sqrt(2.0);
    for (std::size_t c = 0; c < C; ++c) {
      std::vector<double> v(d);
      double norm = 0.0;
      for (auto& x : v) {
        x = normal(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      for (auto& x : v) x *= radius / norm;
      centers.push_back(std::move(v));
    }
  }

  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % C);
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset ds;
  ds.features = Matrix(n, d);
  ds.labels = std::move(labels);
  ds.n_classes = n_classes;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centers[static_cast<std::size_t>(ds.labels[i])];
    for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = c[j] + normal(rng);
  }
  return ds;
}

std::pair<Dataset, Dataset> split_rows(const Dataset& ds, std::size_t n_first) {
  if (n_first == 0 || n_first >= ds.size()) throw Error("split_rows: both halves must be non-empty");
  auto take = [&](std::size_t from, std::size_t to, SplitTag tag) {
    Dataset out;
    out.n_classes = ds.n_classes;
    out.split = tag;
    out.features = Matrix(to - from, ds.dimension());
    std::copy(ds.features.data.begin() + static_cast<std::ptrdiff_t>(from * ds.dimension()),
              ds.features.data.begin() + static_cast<std::ptrdiff_t>(to * ds.dimension()), out.features.data.begin());
    out.labels.assign(ds.labels.begin() + static_cast<std::ptrdiff_t>(from),
                      ds.labels.begin() + static_cast<std::ptrdiff_t>(to));
    return out;
  };
  return {take(0, n_first, SplitTag::train), take(n_first, ds.size(), SplitTag::val)};
}

Dataset inject_label_noise(const Dataset& ds, const LabelNoiseConfig& cfg) {
  if (ds.n_classes < 2) throw Error("inject_label_noise: need at least two classes");
  if (!(cfg.ratio >= 0.0 && cfg.ratio <= 1.0)) throw Error("inject_label_noise: ratio must lie in [0, 1]");
  Dataset out = ds;
  Rng rng(mix64(cfg.seed ^ 0x6e6f697365ULL));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> other(0, ds.n_classes - 2);
  for (auto& y : out.labels) {
    // Both draws happen for every row so the stream stays aligned across ratios.
    double flip = coin(rng);
    int pick = other(rng);
    if (!(flip < cfg.ratio)) continue;
    if (cfg.kind == NoiseKind::symmetric)
      y = pick >= y ? pick + 1 : pick;
    else
      y = (y + 1) % ds.n_classes;
  }
  return out;
}

Dataset load_dataset_csv(const std::filesystem::path& path, int n_classes) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": missing header row");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header.back() != "label")
    throw Error(path.string() + ":1: header must list feature columns followed by 'label'");
  const std::size_t d = header.size() - 1;
  Dataset ds;
  std::vector<double> values;
  int max_label = -1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      if (col < d) {
        double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0')
          throw Error(path.string() + ":" + std::to_string(lineno) + ": bad feature value '" + cell + "'");
        values.push_back(v);
      } else if (col == d) {
        long v = std::strtol(cell.c_str(), &end, 10);
        if (end == cell.c_str() || *end != '\0' || v < 0)
          throw Error(path.string() + ":" + std::to_string(lineno) + ": bad label '" + cell + "'");
        ds.labels.push_back(static_cast<int>(v));
        max_label = std::max(max_label, static_cast<int>(v));
      }
      ++col;
    }
    if (col != d + 1)
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(d + 1) + " columns");
  }
  ds.features.rows = ds.labels.size();
  ds.features.cols = d;
  ds.features.data = std::move(values);
  ds.n_classes = n_classes > 0 ? n_classes : max_label + 1;
  ds.validate();
  return ds;
}

void save_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file " + path.string());
  for (std::size_t j = 0; j < ds.dimension(); ++j) out << 'x' << j << ',';
  out << "label\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double x : ds.features.row(i)) out << x << ',';
    out << ds.labels[i] << '\n';
  }
  if (!out) throw Error("write failed for dataset file " + path.string());
}

}  // namespace boss::nn
