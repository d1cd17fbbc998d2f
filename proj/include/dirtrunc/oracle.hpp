#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirtrunc/chain_trace.hpp"
#include "dirtrunc/diagnostics.hpp"
#include "dirtrunc/simplex.hpp"
#include "dirtrunc/truncated_model.hpp"

namespace dirtrunc {

inline constexpr std::size_t kOracleMaxDimension = 4;
inline constexpr std::size_t kOracleMinResolution = 8;

/// Centroids of the h^(n-1) equal-volume cells of the Freudenthal
/// subdivision of the simplex, each carrying the same weight.
struct SimplexGrid {
  std::size_t n = 0;
  std::size_t resolution = 0;
  std::vector<SimplexPoint> points;
  /// Lebesgue measure of one cell in the first n-1 coordinates.
  double weight = 0.0;
};

/// Cells are indexed by a lattice corner c in [0, h)^(n-1) and a
/// permutation; in the ordered coordinates y_1 <= ... <= y_{n-1} the cell's
/// centroid is c + z with z_{perm[k]} = (n-1-k)/n. Only cells inside the
/// ordered region are kept, and y maps to the simplex by differencing.
inline SimplexGrid build_grid(std::size_t n, std::size_t resolution) {
  if (n < 2 || n > kOracleMaxDimension)
    throw std::invalid_argument("build_grid: n must be in [2, " +
                                std::to_string(kOracleMaxDimension) + "], got " +
                                std::to_string(n));
  if (resolution < 1) throw std::invalid_argument("build_grid: resolution must be >= 1");
  const std::size_t d = n - 1;
  const double h = static_cast<double>(resolution);

  SimplexGrid grid;
  grid.n = n;
  grid.resolution = resolution;
  double cells = 1.0, fact = 1.0;
  for (std::size_t k = 0; k < d; ++k) {
    cells *= h;
    fact *= static_cast<double>(k + 1);
  }
  grid.weight = 1.0 / (fact * cells);
  grid.points.reserve(static_cast<std::size_t>(cells));

  std::vector<std::size_t> corner(d, 0);
  std::vector<std::size_t> perm(d);
  std::vector<double> y(d), pi(n);
  while (true) {
    std::iota(perm.begin(), perm.end(), 0);
    do {
      for (std::size_t k = 0; k < d; ++k)
        y[perm[k]] = static_cast<double>(corner[perm[k]]) +
                     static_cast<double>(d - k) / static_cast<double>(d + 1);
      bool inside = y[0] > 0.0 && y[d - 1] < h;
      for (std::size_t k = 1; k < d && inside; ++k) inside = y[k - 1] < y[k];
      if (inside) {
        pi[0] = y[0] / h;
        for (std::size_t k = 1; k < d; ++k) pi[k] = (y[k] - y[k - 1]) / h;
        pi[d] = (h - y[d - 1]) / h;
        grid.points.emplace_back(pi);
      }
    } while (std::next_permutation(perm.begin(), perm.end()));

    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++corner[k] < resolution) break;
      corner[k] = 0;
      if (k == 0) return grid;
    }
  }
}

struct GridPosterior {
  SimplexGrid grid;
  /// Unnormalized log posterior at each grid point.
  std::vector<double> log_density;
  double log_normalizer = 0.0;
  std::vector<double> mean;
  std::vector<double> variance;

  /// Normalized probability mass carried by point k.
  double mass(std::size_t k) const {
    return std::exp(std::log(grid.weight) + log_density[k] - log_normalizer);
  }
};

/// Posterior moments by direct summation over the grid. Accumulation runs
/// in grid order.
inline GridPosterior grid_posterior(const DirichletParams& alpha, const ObservationModel& model,
                                    std::size_t resolution) {
  detail::require_same_size(alpha.size(), model.dimension(), "grid_posterior");
  if (resolution < kOracleMinResolution)
    throw std::invalid_argument("grid_posterior: resolution must be >= " +
                                std::to_string(kOracleMinResolution));
  GridPosterior out;
  out.grid = build_grid(alpha.size(), resolution);
  const auto& pts = out.grid.points;
  out.log_density.resize(pts.size());
  double hi = kNegInf;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    out.log_density[k] = posterior_log_density_unnormalized(pts[k], alpha, model);
    hi = std::max(hi, out.log_density[k]);
  }
  if (!std::isfinite(hi)) throw std::domain_error("grid_posterior: posterior vanishes on the grid");
  double z = 0.0;
  for (double l : out.log_density) z += std::exp(l - hi);
  out.log_normalizer = hi + std::log(z) + std::log(out.grid.weight);

  const std::size_t n = alpha.size();
  out.mean.assign(n, 0.0);
  std::vector<double> second(n, 0.0);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double p = std::exp(out.log_density[k] - hi) / z;
    for (std::size_t i = 0; i < n; ++i) {
      out.mean[i] += p * pts[k][i];
      second[i] += p * pts[k][i] * pts[k][i];
    }
  }
  out.variance.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.variance[i] = second[i] - out.mean[i] * out.mean[i];
  return out;
}

struct MomentTolerance {
  double mean_abs = 0.01;
  double var_abs = 0.002;
  double se_multiple = 3.0;
};

struct MomentReport {
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> mean_deviation;
  std::vector<double> var_deviation;
  std::vector<double> mean_se;
  std::vector<double> var_se;
  bool pass = false;
};

namespace detail {

inline double sd_of(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Component deviations against reference moments, with standard errors from
// the spread of per-group moments.
inline MomentReport compare_groups(const std::vector<double>& ref_mean,
                                   const std::vector<double>& ref_var,
                                   const std::vector<TraceView>& groups,
                                   const MomentTolerance& tol) {
  const std::size_t n = ref_mean.size();
  const std::size_t g = groups.size();
  if (g < 2) throw std::invalid_argument("compare_moments: need at least 2 groups for an error bar");
  std::vector<std::vector<double>> gm(n), gv(n);
  std::vector<double> sum(n, 0.0);
  std::size_t count = 0;
  for (const auto& v : groups) {
    detail::require_same_size(v.dimension(), n, "compare_moments");
    const auto [m, s2] = view_moments(v);
    for (std::size_t i = 0; i < n; ++i) {
      gm[i].push_back(m[i]);
      gv[i].push_back(s2[i]);
    }
    for (std::size_t s = 0; s < v.size(); ++s)
      for (std::size_t i = 0; i < n; ++i) sum[i] += v.at(s, i);
    count += v.size();
  }
  MomentReport r;
  r.mean.resize(n);
  r.variance.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) r.mean[i] = sum[i] / static_cast<double>(count);
  for (const auto& v : groups)
    for (std::size_t s = 0; s < v.size(); ++s)
      for (std::size_t i = 0; i < n; ++i) {
        const double d = v.at(s, i) - r.mean[i];
        r.variance[i] += d * d;
      }
  r.pass = true;
  const double rg = std::sqrt(static_cast<double>(g));
  for (std::size_t i = 0; i < n; ++i) {
    r.variance[i] /= static_cast<double>(count - 1);
    r.mean_deviation.push_back(r.mean[i] - ref_mean[i]);
    r.var_deviation.push_back(r.variance[i] - ref_var[i]);
    r.mean_se.push_back(sd_of(gm[i]) / rg);
    r.var_se.push_back(sd_of(gv[i]) / rg);
    if (std::abs(r.mean_deviation[i]) > std::max(tol.mean_abs, tol.se_multiple * r.mean_se[i]))
      r.pass = false;
    if (std::abs(r.var_deviation[i]) > std::max(tol.var_abs, tol.se_multiple * r.var_se[i]))
      r.pass = false;
  }
  return r;
}

}  // namespace detail

/// Grid moments against an ensemble: retained halves at t, standard errors
/// from the between-chain spread.
inline MomentReport compare_moments(const GridPosterior& grid, const ChainEnsemble& ensemble,
                                    std::size_t t, const MomentTolerance& tol = {}) {
  std::vector<TraceView> groups;
  for (const auto& c : ensemble.chains()) groups.push_back(burn_in_slice(c, t));
  return detail::compare_groups(grid.mean, grid.variance, groups, tol);
}

/// Grid moments against a single trace: the retained half is cut into
/// `batches` contiguous batches that stand in for chains.
inline MomentReport compare_moments(const GridPosterior& grid, const ChainTrace& trace,
                                    std::size_t t, const MomentTolerance& tol = {},
                                    std::size_t batches = 20) {
  const TraceView whole = burn_in_slice(trace, t);
  if (whole.size() < 2 * batches)
    throw std::invalid_argument("compare_moments: retained slice too short for batching");
  std::vector<TraceView> groups;
  const std::size_t per = whole.size() / batches;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = whole.first_index() + b * per;
    groups.emplace_back(trace, begin, begin + per);
  }
  return detail::compare_groups(grid.mean, grid.variance, groups, tol);
}

/// Grid against itself: zero deviations.
inline MomentReport compare_moments(const GridPosterior& a, const GridPosterior& b,
                                    const MomentTolerance& tol = {}) {
  detail::require_same_size(a.mean.size(), b.mean.size(), "compare_moments");
  MomentReport r;
  r.mean = b.mean;
  r.variance = b.variance;
  r.pass = true;
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    r.mean_deviation.push_back(b.mean[i] - a.mean[i]);
    r.var_deviation.push_back(b.variance[i] - a.variance[i]);
    r.mean_se.push_back(0.0);
    r.var_se.push_back(0.0);
    if (std::abs(r.mean_deviation[i]) > tol.mean_abs || std::abs(r.var_deviation[i]) > tol.var_abs)
      r.pass = false;
  }
  return r;
}

}  // namespace dirtrunc
