#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "dirtrunc/chain_trace.hpp"

namespace dirtrunc {

/// Read-only window of consecutive rows of a trace.
class TraceView {
 public:
  TraceView(const ChainTrace& trace, std::size_t begin, std::size_t end)
      : trace_(&trace), begin_(begin), end_(end) {}

  std::size_t size() const noexcept { return end_ - begin_; }
  std::size_t dimension() const noexcept { return trace_->dimension(); }
  /// Index of the first retained row in the underlying trace.
  std::size_t first_index() const noexcept { return begin_; }
  std::span<const double> row(std::size_t k) const { return trace_->row(begin_ + k); }
  double at(std::size_t k, std::size_t i) const { return trace_->at(begin_ + k, i); }

 private:
  const ChainTrace* trace_;
  std::size_t begin_;
  std::size_t end_;
};

/// Rows [floor(t/2), t): the half kept when a statistic is computed from the
/// first t samples.
inline TraceView burn_in_slice(const ChainTrace& trace, std::size_t t) {
  if (t < 1 || t > trace.size())
    throw std::out_of_range("burn_in_slice: t=" + std::to_string(t) + " outside [1, " +
                            std::to_string(trace.size()) + "]");
  return TraceView(trace, t / 2, t);
}

/// Biased sample autocorrelation of one component of the retained slice,
/// one value per lag. A constant series yields NaN for every lag.
inline std::vector<double> autocorrelation(const ChainTrace& trace, std::size_t component,
                                           std::span<const std::size_t> lags, std::size_t t) {
  const TraceView view = burn_in_slice(trace, t);
  if (component >= view.dimension())
    throw std::out_of_range("autocorrelation: component out of range");
  const std::size_t len = view.size();
  std::vector<double> x(len);
  double mean = 0.0;
  for (std::size_t s = 0; s < len; ++s) {
    x[s] = view.at(s, component);
    mean += x[s];
  }
  mean /= static_cast<double>(len);
  double denom = 0.0;
  for (double& v : x) {
    v -= mean;
    denom += v * v;
  }
  std::vector<double> out;
  out.reserve(lags.size());
  for (std::size_t lag : lags) {
    if (lag >= len)
      throw std::out_of_range("autocorrelation: lag " + std::to_string(lag) +
                              " not below retained length " + std::to_string(len));
    if (denom == 0.0) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    if (lag == 0) {
      out.push_back(1.0);
      continue;
    }
    double num = 0.0;
    for (std::size_t s = 0; s + lag < len; ++s) num += x[s] * x[s + lag];
    out.push_back(num / denom);
  }
  return out;
}

/// Orthonormal basis of the sum-zero subspace, n x (n-1).
struct ProjectionBasis {
  Eigen::MatrixXd q;
};

/// Thin QR of the matrix whose k-th column is 1 everywhere except -(n-1) in
/// row k; Q is fixed by requiring a positive diagonal in R.
inline ProjectionBasis projection_basis(std::size_t n) {
  if (n < 2) throw std::invalid_argument("projection_basis: n must be >= 2");
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = rows - 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(rows, cols);
  for (Eigen::Index k = 0; k < cols; ++k) a(k, k) = -static_cast<double>(n - 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Eigen::Index k = 0; k < cols; ++k)
    if (r(k, k) < 0.0) q.col(k) = -q.col(k);
  return {std::move(q)};
}

struct MpsrfResult {
  Eigen::MatrixXd w;
  Eigen::MatrixXd b_over_t;
  Eigen::MatrixXd v_hat;
  double r_hat = 0.0;
  /// Retained samples per chain.
  std::size_t retained = 0;
  /// Set when W needed the one-off diagonal jitter to factorize.
  bool jittered = false;
};

namespace detail {

inline void symmetrize(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = v;
      m(j, i) = v;
    }
}

}  // namespace detail

/// Multivariate PSRF of the retained halves of the first t samples of each
/// chain, after projecting onto the sum-zero subspace. R-hat is the largest
/// root of det(lambda W - V) = 0, found through the Cholesky factor of W.
inline MpsrfResult mpsrf(const ChainEnsemble& ensemble, std::size_t t,
                         const std::optional<ProjectionBasis>& basis = std::nullopt) {
  const std::size_t m = ensemble.num_chains();
  if (m < 2) throw std::invalid_argument("mpsrf: need at least 2 chains");
  const std::size_t n = ensemble.dimension();
  const ProjectionBasis qb = basis ? *basis : projection_basis(n);
  if (static_cast<std::size_t>(qb.q.rows()) != n)
    throw std::invalid_argument("mpsrf: projection basis has the wrong dimension");
  const Eigen::Index p = qb.q.cols();

  std::vector<Eigen::MatrixXd> projected;
  projected.reserve(m);
  std::size_t len = 0;
  for (const auto& chain : ensemble.chains()) {
    const TraceView view = burn_in_slice(chain, t);
    len = view.size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < len; ++s)
      for (std::size_t i = 0; i < n; ++i)
        x(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = view.at(s, i);
    projected.push_back(x * qb.q);
  }
  if (len < 2) throw std::invalid_argument("mpsrf: need at least 2 retained samples per chain");

  const double dlen = static_cast<double>(len);
  const double dm = static_cast<double>(m);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd means(static_cast<Eigen::Index>(m), p);
  for (std::size_t j = 0; j < m; ++j) {
    const Eigen::RowVectorXd mu = projected[j].colwise().mean();
    means.row(static_cast<Eigen::Index>(j)) = mu;
    const Eigen::MatrixXd centered = projected[j].rowwise() - mu;
    w += centered.transpose() * centered / (dlen - 1.0);
  }
  w /= dm;
  const Eigen::RowVectorXd grand = means.colwise().mean();
  const Eigen::MatrixXd mc = means.rowwise() - grand;
  Eigen::MatrixXd b_over_t = mc.transpose() * mc / (dm - 1.0);
  detail::symmetrize(w);
  detail::symmetrize(b_over_t);
  Eigen::MatrixXd v_hat = ((dlen - 1.0) / dlen) * w + (1.0 + 1.0 / dm) * b_over_t;
  detail::symmetrize(v_hat);

  MpsrfResult out;
  out.retained = len;
  // Simplex coordinates are O(1), so projected variances below this are
  // rounding residue from a constant direction.
  constexpr double kVarianceFloor = 1e-24;
  if (w.diagonal().minCoeff() < kVarianceFloor)
    throw std::domain_error(
        "mpsrf: within-chain covariance is singular after projection (a chain may be "
        "stuck or some coordinate constant)");
  Eigen::LLT<Eigen::MatrixXd> llt(w);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-12 * w.trace() / static_cast<double>(p);
    llt.compute(w + jitter * Eigen::MatrixXd::Identity(p, p));
    out.jittered = true;
    if (llt.info() != Eigen::Success || !(jitter > 0.0))
      throw std::domain_error(
          "mpsrf: within-chain covariance is singular after projection (a chain may be "
          "stuck or some coordinate constant)");
  }
  // C = L^{-1} V L^{-T} shares its eigenvalues with W^{-1} V.
  const auto l = llt.matrixL();
  Eigen::MatrixXd c = l.solve(v_hat);
  c = l.solve(c.transpose()).transpose();
  detail::symmetrize(c);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
  out.r_hat = eig.eigenvalues().maxCoeff();
  out.w = std::move(w);
  out.b_over_t = std::move(b_over_t);
  out.v_hat = std::move(v_hat);
  return out;
}

/// Checkpoints k*T/count for k = 1..count.
inline std::vector<std::size_t> equally_spaced_checkpoints(std::size_t total, std::size_t count) {
  if (count == 0 || count > total)
    throw std::invalid_argument("equally_spaced_checkpoints: need 1 <= count <= T");
  std::vector<std::size_t> out(count);
  for (std::size_t k = 1; k <= count; ++k) out[k - 1] = k * total / count;
  return out;
}

/// Linear-interpolation percentile, q in [0, 100]. NaNs are ignored.
inline double percentile(std::vector<double> values, double q) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

struct BandSummary {
  double mean = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
};

/// Mean with the 10th and 90th percentiles across chains.
inline BandSummary summarize_across_chains(const std::vector<double>& values) {
  BandSummary b;
  double s = 0.0;
  std::size_t k = 0;
  for (double v : values)
    if (!std::isnan(v)) {
      s += v;
      ++k;
    }
  b.mean = k == 0 ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(k);
  b.p10 = percentile(values, 10.0);
  b.p90 = percentile(values, 90.0);
  return b;
}

/// Componentwise mean and variance (divisor L-1, zero for L = 1) of a view.
inline std::pair<std::vector<double>, std::vector<double>> view_moments(const TraceView& view) {
  const std::size_t n = view.dimension();
  const std::size_t len = view.size();
  std::vector<double> mean(n, 0.0), var(n, 0.0);
  for (std::size_t s = 0; s < len; ++s)
    for (std::size_t i = 0; i < n; ++i) mean[i] += view.at(s, i);
  for (double& v : mean) v /= static_cast<double>(len);
  if (len > 1) {
    for (std::size_t s = 0; s < len; ++s)
      for (std::size_t i = 0; i < n; ++i) {
        const double d = view.at(s, i) - mean[i];
        var[i] += d * d;
      }
    for (double& v : var) v /= static_cast<double>(len - 1);
  }
  return {std::move(mean), std::move(var)};
}

struct ConvergenceResult {
  std::vector<std::size_t> checkpoints;
  /// [checkpoint][chain]
  std::vector<std::vector<double>> mean_error;
  std::vector<std::vector<double>> var_error;
  std::vector<BandSummary> mean_band;
  std::vector<BandSummary> var_band;
};

/// l2 distance of the burn-in-sliced componentwise mean and variance from
/// reference vectors, at every checkpoint and for every chain.
inline ConvergenceResult statistic_convergence(const ChainEnsemble& ensemble,
                                               std::span<const double> reference_mean,
                                               std::span<const double> reference_var,
                                               std::span<const std::size_t> checkpoints) {
  const std::size_t n = ensemble.dimension();
  if (reference_mean.size() != n || reference_var.size() != n)
    throw std::invalid_argument("statistic_convergence: reference dimension mismatch");
  ConvergenceResult out;
  out.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  for (std::size_t t : checkpoints) {
    if (t < 1 || t > ensemble.length())
      throw std::out_of_range("statistic_convergence: checkpoint beyond chain length");
    std::vector<double> me, ve;
    for (const auto& chain : ensemble.chains()) {
      const auto [mean, var] = view_moments(burn_in_slice(chain, t));
      double dm = 0.0, dv = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dm += (mean[i] - reference_mean[i]) * (mean[i] - reference_mean[i]);
        dv += (var[i] - reference_var[i]) * (var[i] - reference_var[i]);
      }
      me.push_back(std::sqrt(dm));
      ve.push_back(std::sqrt(dv));
    }
    out.mean_band.push_back(summarize_across_chains(me));
    out.var_band.push_back(summarize_across_chains(ve));
    out.mean_error.push_back(std::move(me));
    out.var_error.push_back(std::move(ve));
  }
  return out;
}

/// Pooled componentwise mean and variance over the retained halves of all
/// chains at t.
inline std::pair<std::vector<double>, std::vector<double>> pooled_moments(
    std::span<const ChainTrace* const> chains, std::size_t t) {
  if (chains.empty()) throw std::invalid_argument("pooled_moments: no chains");
  const std::size_t n = chains.front()->dimension();
  std::vector<double> sum(n, 0.0), sq(n, 0.0);
  std::size_t count = 0;
  for (const ChainTrace* c : chains) {
    const TraceView v = burn_in_slice(*c, t);
    for (std::size_t s = 0; s < v.size(); ++s)
      for (std::size_t i = 0; i < n; ++i) sum[i] += v.at(s, i);
    count += v.size();
  }
  std::vector<double> mean(n);
  for (std::size_t i = 0; i < n; ++i) mean[i] = sum[i] / static_cast<double>(count);
  for (const ChainTrace* c : chains) {
    const TraceView v = burn_in_slice(*c, t);
    for (std::size_t s = 0; s < v.size(); ++s)
      for (std::size_t i = 0; i < n; ++i) {
        const double d = v.at(s, i) - mean[i];
        sq[i] += d * d;
      }
  }
  std::vector<double> var(n);
  for (std::size_t i = 0; i < n; ++i)
    var[i] = count > 1 ? sq[i] / static_cast<double>(count - 1) : 0.0;
  return {std::move(mean), std::move(var)};
}

}  // namespace dirtrunc
