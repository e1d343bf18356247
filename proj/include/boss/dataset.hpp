#pragma once
// Tabular classification data: synthetic Gaussian blobs, label-noise
// injection, and delimited-text import/export.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "boss/common.hpp"

namespace boss::nn {

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool operator==(const Matrix&) const = default;
};

enum class SplitTag { train, val };

struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int n_classes = 0;
  SplitTag split = SplitTag::train;

  std::size_t size() const { return labels.size(); }
  std::size_t dimension() const { return features.cols; }
  // Throws boss::Error when the invariants do not hold.
  void validate() const;
};

// n points from C isotropic unit-variance Gaussian clusters whose centers are
// pairwise `separation` apart when C <= d + 1 (simplex layout), otherwise
// placed on random directions at the same radius. Class counts differ by at
// most one; row order is shuffled.
Dataset make_blobs(std::size_t n, std::size_t d, int n_classes, double separation, std::uint64_t seed);

// First n_first rows vs. the remainder.
std::pair<Dataset, Dataset> split_rows(const Dataset& ds, std::size_t n_first);

enum class NoiseKind { symmetric, asymmetric };

struct LabelNoiseConfig {
  NoiseKind kind = NoiseKind::symmetric;
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

// symmetric: with probability ratio a label is replaced by a uniform draw over
// the other C-1 classes. asymmetric: with probability ratio c -> (c+1) mod C.
Dataset inject_label_noise(const Dataset& ds, const LabelNoiseConfig& cfg);

// Header row of feature column names followed by `label`.
Dataset load_dataset_csv(const std::filesystem::path& path, int n_classes = 0);
void save_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace boss::nn
