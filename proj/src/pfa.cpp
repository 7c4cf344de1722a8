#include "unscene/pfa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "unscene/error.hpp"
#include "unscene/numerics.hpp"

namespace unscene {

PfaResult principal_feature_analysis(const Matrix& data, const PfaOptions& opt) {
  const std::size_t p = data.cols();
  if (p < 2) fail(ErrorKind::argument, "pfa: need at least 2 feature columns");
  if (!(opt.var_pfa > 0.0 && opt.var_pfa < 1.0)) fail(ErrorKind::argument, "pfa: var_pfa must be in (0, 1)");
  if (!opt.cluster_count && opt.q_offset < 1) fail(ErrorKind::argument, "pfa: q_offset must be >= 1");

  const auto standardized = numerics::standardize(data);
  const auto eig = numerics::sym_eigen(numerics::covariance(standardized.values));
  std::vector<double> lambda = eig.eigenvalues;
  for (auto& l : lambda) l = std::max(0.0, l);

  PfaResult out;
  out.cumulative_variance = numerics::cumulative_explained_variance(lambda);
  out.s = numerics::retained_dimension(lambda, opt.var_pfa);
  out.q = opt.cluster_count ? *opt.cluster_count : out.s + opt.q_offset;
  if (out.q < 1 || out.q > p)
    fail(ErrorKind::argument, "pfa: cluster count " + std::to_string(out.q) + " outside [1, " +
                                  std::to_string(p) + "]");

  // Row i of A_s holds feature i's loadings; similarity is judged on magnitudes.
  Matrix rows(p, out.s);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t k = 0; k < out.s; ++k) rows(i, k) = std::abs(eig.eigenvectors(i, k));

  const auto km = numerics::kmeans(rows, out.q, opt.seed);
  for (std::size_t i = 0; i < p; ++i) out.feature_clusters[km.assignments[i]].push_back(i);
  for (const auto& [cluster, members] : out.feature_clusters) {
    std::size_t best = members.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (auto i : members) {
      double d = 0.0;
      for (std::size_t k = 0; k < out.s; ++k) {
        const double diff = rows(i, k) - km.centroids(cluster, k);
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    out.selected_features.push_back(best);
  }
  std::sort(out.selected_features.begin(), out.selected_features.end());
  return out;
}

}  // namespace unscene
