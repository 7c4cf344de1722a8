#include "unscene/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "unscene/error.hpp"

namespace unscene::numerics {

StandardizedMatrix standardize(const Matrix& data) {
  if (data.rows() == 0 || data.cols() == 0) fail(ErrorKind::argument, "standardize: empty matrix");
  const std::size_t n = data.rows(), p = data.cols();
  StandardizedMatrix out{Matrix(n, p), std::vector<double>(p, 0.0), std::vector<double>(p, 0.0),
                         std::vector<bool>(p, false)};
  for (std::size_t c = 0; c < p; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += data(r, c);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = data(r, c) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    out.col_means[c] = mean;
    out.col_stds[c] = sd;
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
      out.zero_variance[c] = true;
      continue;  // column stays zero
    }
    for (std::size_t r = 0; r < n; ++r) out.values(r, c) = (data(r, c) - mean) / sd;
  }
  return out;
}

Matrix covariance(const Matrix& x) {
  const std::size_t n = x.rows(), p = x.cols();
  Matrix c(p, p);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    for (std::size_t i = 0; i < p; ++i) {
      const double xi = row[i];
      if (xi == 0.0) continue;
      for (std::size_t j = i; j < p; ++j) c(i, j) += xi * row[j];
    }
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) {
      c(i, j) /= static_cast<double>(n);
      c(j, i) = c(i, j);
    }
  return c;
}

namespace {

void fix_sign(Matrix& vectors, std::size_t col) {
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t r = 0; r < vectors.rows(); ++r) {
    const double m = std::abs(vectors(r, col));
    if (m > best) {
      best = m;
      arg = r;
    }
  }
  if (vectors(arg, col) < 0)
    for (std::size_t r = 0; r < vectors.rows(); ++r) vectors(r, col) = -vectors(r, col);
}

}  // namespace

EigenDecomposition sym_eigen(const Matrix& input) {
  const std::size_t n = input.rows();
  if (n == 0 || input.cols() != n) fail(ErrorKind::argument, "sym_eigen: matrix must be square and non-empty");
  double scale = 0.0;
  for (double v : input.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(input(i, j) - input(j, i)) > 1e-9 * std::max(1.0, scale))
        fail(ErrorKind::argument, "sym_eigen: matrix is not symmetric");

  Matrix a = input;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (input(i, j) + input(j, i));
  Matrix v = Matrix::identity(n);

  const double total = frobenius_norm(a);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off == 0.0 || std::sqrt(off) <= 1e-15 * total) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= std::numeric_limits<double>::min()) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = a(p, k) = c * akp - s * akq;
          a(k, q) = a(q, k) = s * akp + c * akq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = v(r, order[k]);
    fix_sign(out.eigenvectors, k);
  }
  return out;
}

std::vector<double> cumulative_explained_variance(const std::vector<double>& eigenvalues) {
  double total = 0.0;
  for (double l : eigenvalues) total += std::max(0.0, l);
  std::vector<double> out;
  out.reserve(eigenvalues.size());
  double acc = 0.0;
  for (double l : eigenvalues) {
    acc += std::max(0.0, l);
    out.push_back(total > 0 ? acc / total : 1.0);
  }
  return out;
}

std::size_t retained_dimension(const std::vector<double>& eigenvalues, double ratio) {
  if (eigenvalues.empty()) return 0;
  const auto cum = cumulative_explained_variance(eigenvalues);
  for (std::size_t k = 0; k < cum.size(); ++k)
    if (cum[k] >= ratio - 1e-12) return k + 1;
  return cum.size();
}

PcaResult pca_reduce(const Matrix& data, double var_ratio) {
  if (!(var_ratio > 0.0 && var_ratio <= 1.0)) fail(ErrorKind::argument, "pca_reduce: var_ratio must be in (0, 1]");
  return pca_reduce_standardized(standardize(data), var_ratio);
}

PcaResult pca_reduce_standardized(StandardizedMatrix standardized, double var_ratio) {
  if (!(var_ratio > 0.0 && var_ratio <= 1.0)) fail(ErrorKind::argument, "pca_reduce: var_ratio must be in (0, 1]");
  const Matrix& x = standardized.values;
  const std::size_t n = x.rows(), p = x.cols();
  if (n == 0 || p == 0) fail(ErrorKind::argument, "pca_reduce: empty matrix");

  PcaResult out;
  std::vector<double> lambda;
  Matrix vectors;  // p x m candidate components
  if (n >= p) {
    auto eig = sym_eigen(covariance(x));
    lambda = std::move(eig.eigenvalues);
    vectors = std::move(eig.eigenvectors);
  } else {
    // Gram side: (X X^T / n) u = l u  =>  v = X^T u / sqrt(n l).
    auto eig = sym_eigen(covariance(x.transposed()));
    lambda = std::move(eig.eigenvalues);
    for (auto& l : lambda) l *= static_cast<double>(p) / static_cast<double>(n);
    vectors = Matrix(p, n);
    const double top = std::max(0.0, lambda.front());
    for (std::size_t k = 0; k < n; ++k) {
      if (!(lambda[k] > 1e-12 * top) || top == 0.0) continue;
      const double norm = std::sqrt(static_cast<double>(n) * lambda[k]);
      for (std::size_t r = 0; r < n; ++r) {
        const double u = eig.eigenvectors(r, k);
        if (u == 0.0) continue;
        const auto xr = x.row(r);
        for (std::size_t c = 0; c < p; ++c) vectors(c, k) += xr[c] * u;
      }
      for (std::size_t c = 0; c < p; ++c) vectors(c, k) /= norm;
      fix_sign(vectors, k);
    }
  }
  for (auto& l : lambda) l = std::max(0.0, l);

  std::size_t s = retained_dimension(lambda, var_ratio);
  std::size_t positive = 0;
  for (double l : lambda)
    if (l > 1e-12 * std::max(1e-300, lambda.front())) ++positive;
  s = std::max<std::size_t>(std::min(s, positive), positive == 0 ? 0 : 1);

  out.model.s = s;
  out.model.components = Matrix(p, s);
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t k = 0; k < s; ++k) out.model.components(r, k) = vectors(r, k);
  const auto cum = cumulative_explained_variance(lambda);
  out.model.retained_variance = s == 0 ? 0.0 : cum[s - 1];
  out.model.eigenvalues = std::move(lambda);
  out.reduced = x * out.model.components;
  out.standardized = std::move(standardized);
  return out;
}

double inertia(const Matrix& points, const std::vector<std::size_t>& assignments, const Matrix& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto pr = points.row(i);
    const auto cr = centroids.row(assignments[i]);
    for (std::size_t d = 0; d < points.cols(); ++d) {
      const double diff = pr[d] - cr[d];
      total += diff * diff;
    }
  }
  return total;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double x = a[d] - b[d];
    s += x * x;
  }
  return s;
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Greedy k-means++: each new center is the best of a few D^2-weighted candidates.
Matrix seed_centers(const Matrix& pts, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = pts.rows(), dim = pts.cols();
  Matrix centers(k, dim);
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::size_t first = std::min(n - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(n)));
  std::copy(pts.row(first).begin(), pts.row(first).end(), centers.row(0).begin());
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(pts.row(i), centers.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    const double potential = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t best_candidate = 0;
    double best_potential = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
      std::size_t cand = 0;
      if (potential > 0) {
        const double target = unit(rng) * potential;
        double acc = 0.0;
        cand = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += d2[i];
          if (acc > target) {
            cand = i;
            break;
          }
        }
      } else {
        cand = std::min(n - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(n)));
      }
      double pot = 0.0;
      for (std::size_t i = 0; i < n; ++i) pot += std::min(d2[i], sq_dist(pts.row(i), pts.row(cand)));
      if (pot < best_potential) {
        best_potential = pot;
        best_candidate = cand;
      }
    }
    std::copy(pts.row(best_candidate).begin(), pts.row(best_candidate).end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(pts.row(i), centers.row(c)));
  }
  return centers;
}

KMeansResult lloyd(const Matrix& pts, Matrix centers, int max_iterations,
                   const std::function<void(int, double)>& trace) {
  const std::size_t n = pts.rows(), k = centers.rows(), dim = pts.cols();
  KMeansResult res{std::vector<std::size_t>(n, k), std::move(centers), 0.0, 0};
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t arg = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(pts.row(i), res.centroids.row(c));
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      if (res.assignments[i] != arg) {
        res.assignments[i] = arg;
        changed = true;
      }
    }
    // Repair empty clusters with the point farthest from its centroid.
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : res.assignments) ++sizes[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[res.assignments[i]] < 2) continue;
        const double d = sq_dist(pts.row(i), res.centroids.row(res.assignments[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far == n) break;
      --sizes[res.assignments[far]];
      res.assignments[far] = c;
      sizes[c] = 1;
      changed = true;
    }

    Matrix next(k, dim);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = next.row(res.assignments[i]);
      const auto p = pts.row(i);
      for (std::size_t d = 0; d < dim; ++d) row[d] += p[d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) {
        std::copy(res.centroids.row(c).begin(), res.centroids.row(c).end(), next.row(c).begin());
        continue;
      }
      for (auto& v : next.row(c)) v /= static_cast<double>(sizes[c]);
    }
    res.centroids = std::move(next);
    res.iterations = it + 1;
    res.inertia = inertia(pts, res.assignments, res.centroids);
    if (trace) trace(it, res.inertia);
    if (!changed) break;
  }
  return res;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  if (k < 1 || k > points.rows()) fail(ErrorKind::argument, "kmeans: k must be in [1, rows]");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  const int restarts = std::max(1, options.restarts);
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(r));
    auto centers = seed_centers(points, k, rng);
    std::function<void(int, double)> trace;
    if (options.trace) trace = [&](int it, double v) { options.trace(r, it, v); };
    auto res = lloyd(points, std::move(centers), options.max_iterations, trace);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

}  // namespace unscene::numerics
