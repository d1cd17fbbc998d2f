#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirtrunc/random.hpp"

namespace dirtrunc {

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

// Sums in ascending order so the result does not depend on the order the
// terms were produced in.
inline double canonical_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace detail

/// A probability vector on the simplex.
///
/// Construction renormalizes when the coordinates sum to 1 within
/// kSimplexTolerance (beyond roundoff) and rejects anything further off, negative, or
/// non-finite.
class SimplexPoint {
 public:
  SimplexPoint() = default;

  explicit SimplexPoint(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.empty()) throw std::invalid_argument("SimplexPoint: empty vector");
    double s = 0.0;
    for (double c : coords_) {
      if (!std::isfinite(c) || c < 0.0)
        throw std::invalid_argument("SimplexPoint: coordinates must be finite and >= 0");
      s += c;
    }
    if (std::abs(s - 1.0) > kSimplexTolerance)
      throw std::invalid_argument("SimplexPoint: coordinates sum to " + std::to_string(s) +
                                  ", not 1");
    // Deviations at the level of summation roundoff are left alone.
    const double roundoff = 4.0 * static_cast<double>(coords_.size()) *
                            std::numeric_limits<double>::epsilon();
    if (std::abs(s - 1.0) > roundoff)
      for (double& c : coords_) c /= s;
  }

  /// Uniform point (the barycenter).
  static SimplexPoint uniform(std::size_t n) {
    return SimplexPoint(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::span<const double> coords() const noexcept { return coords_; }
  const std::vector<double>& vector() const noexcept { return coords_; }

  bool has_zero() const noexcept {
    return std::any_of(coords_.begin(), coords_.end(), [](double c) { return c == 0.0; });
  }

  friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

 private:
  std::vector<double> coords_;
};

/// Dirichlet concentration vector; every component strictly positive.
class DirichletParams {
 public:
  DirichletParams() = default;

  explicit DirichletParams(std::vector<double> alpha) : alpha_(std::move(alpha)) {
    if (alpha_.empty()) throw std::invalid_argument("DirichletParams: empty vector");
    for (double a : alpha_)
      if (!(a > 0.0) || !std::isfinite(a))
        throw std::invalid_argument("DirichletParams: components must be finite and > 0");
  }

  static DirichletParams symmetric(std::size_t n, double a) {
    return DirichletParams(std::vector<double>(n, a));
  }

  std::size_t size() const noexcept { return alpha_.size(); }
  double operator[](std::size_t i) const { return alpha_[i]; }
  std::span<const double> values() const noexcept { return alpha_; }
  const std::vector<double>& vector() const noexcept { return alpha_; }

  double total() const {
    std::vector<double> t = alpha_;
    return detail::canonical_sum(t);
  }

  /// Mean of Dir(alpha).
  std::vector<double> mean() const {
    const double s = total();
    std::vector<double> m(alpha_.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = alpha_[i] / s;
    return m;
  }

  /// Componentwise variance of Dir(alpha).
  std::vector<double> variance() const {
    const double s = total();
    std::vector<double> v(alpha_.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double p = alpha_[i] / s;
      v[i] = p * (1.0 - p) / (s + 1.0);
    }
    return v;
  }

  friend bool operator==(const DirichletParams&, const DirichletParams&) = default;

 private:
  std::vector<double> alpha_;
};

/// Nonnegative integer counts.
class CountVector {
 public:
  CountVector() = default;

  explicit CountVector(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
    for (auto c : counts_)
      if (c < 0) throw std::invalid_argument("CountVector: counts must be >= 0");
  }

  static CountVector zeros(std::size_t n) {
    return CountVector(std::vector<std::int64_t>(n, 0));
  }

  std::size_t size() const noexcept { return counts_.size(); }
  std::int64_t operator[](std::size_t i) const { return counts_[i]; }
  std::span<const std::int64_t> values() const noexcept { return counts_; }
  const std::vector<std::int64_t>& vector() const noexcept { return counts_; }

  std::int64_t total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
  }

  friend bool operator==(const CountVector&, const CountVector&) = default;

 private:
  std::vector<std::int64_t> counts_;
};

/// sum_i (alpha_i - 1) log pi_i, the Dirichlet log-density without its
/// normalizing constant.
///
/// Returns -inf on a face where the exponent is positive. A zero coordinate
/// with alpha_i < 1 makes the density diverge and is a domain error.
inline double dirichlet_log_kernel(const SimplexPoint& pi, const DirichletParams& alpha) {
  detail::require_same_size(pi.size(), alpha.size(), "dirichlet_log_kernel");
  std::vector<double> terms;
  terms.reserve(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const double e = alpha[i] - 1.0;
    if (pi[i] == 0.0) {
      if (e > 0.0) return kNegInf;
      if (e < 0.0)
        throw std::domain_error("dirichlet_log_kernel: zero coordinate with alpha < 1");
      continue;
    }
    terms.push_back(e * std::log(pi[i]));
  }
  return detail::canonical_sum(terms);
}

/// log Gamma(sum alpha) - sum log Gamma(alpha_i).
inline double dirichlet_log_normalizer(const DirichletParams& alpha) {
  std::vector<double> lg(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) lg[i] = std::lgamma(alpha[i]);
  return std::lgamma(alpha.total()) - detail::canonical_sum(lg);
}

inline double dirichlet_log_density(const SimplexPoint& pi, const DirichletParams& alpha) {
  const double k = dirichlet_log_kernel(pi, alpha);
  if (k == kNegInf) return k;
  return dirichlet_log_normalizer(alpha) + k;
}

/// Draw from Dir(alpha) by normalizing independent gamma variates, in log
/// space.
template <class Rng>
SimplexPoint sample_dirichlet(const DirichletParams& alpha, Rng& rng) {
  const std::size_t n = alpha.size();
  std::vector<double> logs(n);
  double hi = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    logs[i] = sample_log_gamma(alpha[i], rng);
    hi = std::max(hi, logs[i]);
  }
  std::vector<double> x(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::exp(logs[i] - hi);
    s += x[i];
  }
  for (double& v : x) v /= s;
  return SimplexPoint(std::move(x));
}

/// sum_i m_i log pi_i. No multinomial coefficient.
inline double multinomial_log_likelihood(const CountVector& m, const SimplexPoint& pi) {
  detail::require_same_size(m.size(), pi.size(), "multinomial_log_likelihood");
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0) continue;
    if (pi[i] == 0.0) return kNegInf;
    s += static_cast<double>(m[i]) * std::log(pi[i]);
  }
  return s;
}

/// alpha + m.
inline DirichletParams conjugate_posterior(const DirichletParams& alpha, const CountVector& m) {
  detail::require_same_size(alpha.size(), m.size(), "conjugate_posterior");
  std::vector<double> out(alpha.vector());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += static_cast<double>(m[i]);
  return DirichletParams(std::move(out));
}

}  // namespace dirtrunc
