#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirtrunc/simplex.hpp"

namespace dirtrunc {

/// Largest admissible observed total for one term.
inline constexpr std::int64_t kMaxTermTotal = std::int64_t{1} << 32;

/// A proper subset of {0, ..., n-1}, stored sorted and deduplicated.
class TruncationSet {
 public:
  TruncationSet() = default;

  TruncationSet(std::vector<std::size_t> indices, std::size_t n) : indices_(std::move(indices)), n_(n) {
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    for (auto i : indices_)
      if (i >= n_)
        throw std::invalid_argument("TruncationSet: index " + std::to_string(i) +
                                    " out of range for n=" + std::to_string(n_));
    if (indices_.size() >= n_)
      throw std::invalid_argument("TruncationSet: must be a proper subset");
    mask_.assign(n_, false);
    for (auto i : indices_) mask_[i] = true;
  }

  std::size_t dimension() const noexcept { return n_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  bool contains(std::size_t i) const { return i < n_ && mask_[i]; }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }

  /// Total mass of pi on the truncated indices.
  double mass(const SimplexPoint& pi) const {
    double s = 0.0;
    for (auto i : indices_) s += pi[i];
    return s;
  }

 private:
  std::vector<std::size_t> indices_;
  std::vector<bool> mask_;
  std::size_t n_ = 0;
};

/// One truncated multinomial likelihood term: counts supported off the
/// truncation set.
class TruncatedCounts {
 public:
  TruncatedCounts() = default;

  TruncatedCounts(TruncationSet trunc, CountVector counts)
      : trunc_(std::move(trunc)), counts_(std::move(counts)) {
    detail::require_same_size(trunc_.dimension(), counts_.size(), "TruncatedCounts");
    for (auto i : trunc_.indices())
      if (counts_[i] != 0)
        throw std::invalid_argument("TruncatedCounts: nonzero count at truncated index " +
                                    std::to_string(i));
    total_ = counts_.total();
    if (total_ > kMaxTermTotal)
      throw std::invalid_argument("TruncatedCounts: total count exceeds 2^32");
  }

  TruncatedCounts(std::vector<std::size_t> truncated, const std::vector<std::int64_t>& counts)
      : TruncatedCounts(TruncationSet(std::move(truncated), counts.size()), CountVector(counts)) {}

  const TruncationSet& trunc() const noexcept { return trunc_; }
  const CountVector& counts() const noexcept { return counts_; }
  std::int64_t total() const noexcept { return total_; }
  std::size_t dimension() const noexcept { return counts_.size(); }

 private:
  TruncationSet trunc_;
  CountVector counts_;
  std::int64_t total_ = 0;
};

/// Ordered list of likelihood terms over a common dimension.
class ObservationModel {
 public:
  ObservationModel() = default;

  explicit ObservationModel(std::vector<TruncatedCounts> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw std::invalid_argument("ObservationModel: needs at least one term");
    for (const auto& t : terms_)
      detail::require_same_size(t.dimension(), terms_.front().dimension(), "ObservationModel");
  }

  std::size_t dimension() const noexcept { return terms_.front().dimension(); }
  std::size_t num_terms() const noexcept { return terms_.size(); }
  const std::vector<TruncatedCounts>& terms() const noexcept { return terms_; }
  const TruncatedCounts& operator[](std::size_t l) const { return terms_[l]; }

  std::int64_t observed_total() const noexcept {
    std::int64_t s = 0;
    for (const auto& t : terms_) s += t.total();
    return s;
  }

 private:
  std::vector<TruncatedCounts> terms_;
};

/// -m. log(1 - sum_{i in I} pi_i) + sum_{i not in I} m_i log pi_i.
inline double truncated_log_likelihood(const TruncatedCounts& term, const SimplexPoint& pi) {
  detail::require_same_size(term.dimension(), pi.size(), "truncated_log_likelihood");
  if (term.total() == 0) return 0.0;
  const double s = term.trunc().mass(pi);
  if (!(s < 1.0))
    throw std::domain_error("truncated_log_likelihood: truncated mass must be < 1");
  const double ll = multinomial_log_likelihood(term.counts(), pi);
  if (ll == kNegInf) return ll;
  return ll - static_cast<double>(term.total()) * std::log1p(-s);
}

/// Unnormalized log posterior: Dirichlet kernel plus every likelihood term.
inline double posterior_log_density_unnormalized(const SimplexPoint& pi,
                                                 const DirichletParams& alpha,
                                                 const ObservationModel& model) {
  detail::require_same_size(pi.size(), model.dimension(), "posterior_log_density_unnormalized");
  const double prior = dirichlet_log_kernel(pi, alpha);
  if (prior == kNegInf) return prior;
  std::vector<double> parts;
  parts.reserve(model.num_terms());
  for (const auto& t : model.terms()) {
    const double ll = truncated_log_likelihood(t, pi);
    if (ll == kNegInf) return ll;
    parts.push_back(ll);
  }
  return prior + detail::canonical_sum(parts);
}

/// Exact draw from Dir(alpha) * TruncMult_I(m).
///
/// The truncated-block mass keeps its prior Beta(sum alpha_I, sum alpha_rest)
/// law because the likelihood only sees the renormalized complement, which
/// is conjugate with Dir(alpha_rest + m_rest).
template <class Rng>
SimplexPoint sample_single_truncation_posterior(const DirichletParams& alpha,
                                                const TruncatedCounts& term, Rng& rng) {
  detail::require_same_size(alpha.size(), term.dimension(), "sample_single_truncation_posterior");
  const std::size_t n = alpha.size();
  const auto& trunc = term.trunc();

  std::vector<double> a_in, a_out;
  std::vector<std::size_t> idx_out;
  for (std::size_t i = 0; i < n; ++i) {
    if (trunc.contains(i)) {
      a_in.push_back(alpha[i]);
    } else {
      a_out.push_back(alpha[i] + static_cast<double>(term.counts()[i]));
      idx_out.push_back(i);
    }
  }

  std::vector<double> pi(n, 0.0);
  const SimplexPoint x_out = sample_dirichlet(DirichletParams(a_out), rng);
  if (a_in.empty()) {
    for (std::size_t k = 0; k < idx_out.size(); ++k) pi[idx_out[k]] = x_out[k];
    return SimplexPoint(std::move(pi));
  }

  double sum_in = 0.0, sum_out = 0.0;
  for (auto i : trunc.indices()) sum_in += alpha[i];
  for (std::size_t i = 0; i < n; ++i)
    if (!trunc.contains(i)) sum_out += alpha[i];
  const double lg_in = sample_log_gamma(sum_in, rng);
  const double lg_out = sample_log_gamma(sum_out, rng);
  // s = G_in / (G_in + G_out), computed from the log ratio.
  const double block_mass = 1.0 / (1.0 + std::exp(lg_out - lg_in));

  const SimplexPoint x_in = sample_dirichlet(DirichletParams(a_in), rng);
  for (std::size_t k = 0; k < trunc.size(); ++k) pi[trunc.indices()[k]] = block_mass * x_in[k];
  for (std::size_t k = 0; k < idx_out.size(); ++k) pi[idx_out[k]] = (1.0 - block_mass) * x_out[k];
  return SimplexPoint(std::move(pi));
}

template <class Rng>
SimplexPoint sample_single_truncation_posterior(const DirichletParams& alpha,
                                                const ObservationModel& model, Rng& rng) {
  if (model.num_terms() != 1)
    throw std::invalid_argument(
        "sample_single_truncation_posterior: exact sampler needs exactly one term");
  return sample_single_truncation_posterior(alpha, model[0], rng);
}

}  // namespace dirtrunc
