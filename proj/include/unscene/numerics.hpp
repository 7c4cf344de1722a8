#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "unscene/matrix.hpp"

namespace unscene::numerics {

struct StandardizedMatrix {
  Matrix values;
  std::vector<double> col_means;
  std::vector<double> col_stds;          // population (divide-by-N)
  std::vector<bool> zero_variance;       // flagged columns are all-zero in `values`
};

StandardizedMatrix standardize(const Matrix& data);

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // descending
  Matrix eigenvectors;              // column k pairs with eigenvalues[k]
};

// Cyclic Jacobi rotations. Each eigenvector's largest-magnitude entry is made
// positive (first such entry on ties).
EigenDecomposition sym_eigen(const Matrix& c);

// Population covariance of already-centered columns.
Matrix covariance(const Matrix& centered);

// Smallest s with cumulative ratio >= ratio (tolerant to rounding at 1.0).
std::size_t retained_dimension(const std::vector<double>& eigenvalues, double ratio);

std::vector<double> cumulative_explained_variance(const std::vector<double>& eigenvalues);

struct PcaModel {
  Matrix components;               // features x s
  std::vector<double> eigenvalues;  // full spectrum, descending, clamped >= 0
  double retained_variance = 0;
  std::size_t s = 0;
};

struct PcaResult {
  Matrix reduced;  // samples x s
  PcaModel model;
  StandardizedMatrix standardized;
};

// Standardizes, then projects onto the leading eigenvectors of the covariance.
// With fewer rows than columns the spectrum comes from the sample-side Gram
// matrix.
PcaResult pca_reduce(const Matrix& data, double var_ratio);

// Same as pca_reduce on an already-standardized matrix.
PcaResult pca_reduce_standardized(StandardizedMatrix standardized, double var_ratio);

struct KMeansResult {
  std::vector<std::size_t> assignments;
  Matrix centroids;
  double inertia = 0;
  int iterations = 0;
};

struct KMeansOptions {
  int max_iterations = 300;
  int restarts = 10;
  // Called with (restart, iteration, inertia) after each assignment step.
  std::function<void(int, int, double)> trace;
};

// Lloyd iterations from greedy k-means++ seeding; best inertia over restarts.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options = {});

double inertia(const Matrix& points, const std::vector<std::size_t>& assignments, const Matrix& centroids);

}  // namespace unscene::numerics
