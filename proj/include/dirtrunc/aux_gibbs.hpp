#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "dirtrunc/chain_trace.hpp"
#include "dirtrunc/simplex.hpp"
#include "dirtrunc/truncated_model.hpp"

namespace dirtrunc {

/// How the geometric auxiliaries are drawn. Both give the same law for the
/// per-index totals.
enum class AuxMode {
  /// One geometric draw per observation, each split multinomially.
  PerObservation,
  /// One negative binomial draw per term for the total, split once.
  Aggregated,
};

/// Auxiliary geometric counts, kept as per-index totals for each term.
/// `alloc[l][k]` belongs to index `model[l].trunc().indices()[k]`.
struct AuxCounts {
  std::vector<std::vector<std::int64_t>> alloc;

  std::int64_t total() const noexcept {
    std::int64_t s = 0;
    for (const auto& a : alloc)
      for (auto v : a) s += v;
    return s;
  }
};

struct GibbsState {
  SimplexPoint pi;
  AuxCounts aux;
};

namespace detail {

// Splits `total` over the cells with probabilities proportional to `weights`
// using sequential conditional binomials. Appends into `out`.
template <class Rng>
void multinomial_split(std::int64_t total, std::span<const double> weights,
                       std::span<std::int64_t> out, Rng& rng) {
  double remaining_w = 0.0;
  for (double w : weights) remaining_w += w;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (total == 0 || k + 1 == weights.size()) {
      out[k] += total;
      total = 0;
      continue;
    }
    double p = remaining_w > 0.0 ? weights[k] / remaining_w : 0.0;
    p = std::clamp(p, 0.0, 1.0);
    std::binomial_distribution<std::int64_t> b(total, p);
    const std::int64_t take = b(rng);
    out[k] += take;
    total -= take;
    remaining_w -= weights[k];
  }
}

// Number of failures before `successes` successes, success probability
// 1 - s, drawn as a gamma-Poisson mixture.
template <class Rng>
std::int64_t negative_binomial_failures(std::int64_t successes, double s, Rng& rng) {
  if (successes == 0 || s == 0.0) return 0;
  const double odds = s / (1.0 - s);
  std::gamma_distribution<double> g(static_cast<double>(successes), odds);
  const double rate = g(rng);
  if (!(rate > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> p(rate);
  return p(rng);
}

}  // namespace detail

/// Draws k | pi, m. For every term with truncated mass s < 1, each of the
/// m. observations carries a Geometric(1 - s) failure count, shared out over
/// the truncated indices in proportion to pi_i / s.
template <class Rng>
AuxCounts sample_aux(const ObservationModel& model, const SimplexPoint& pi, Rng& rng,
                     AuxMode mode = AuxMode::Aggregated) {
  detail::require_same_size(model.dimension(), pi.size(), "sample_aux");
  AuxCounts aux;
  aux.alloc.reserve(model.num_terms());
  std::vector<double> w;
  for (const auto& term : model.terms()) {
    const auto& idx = term.trunc().indices();
    std::vector<std::int64_t> alloc(idx.size(), 0);
    const double s = term.trunc().mass(pi);
    if (term.total() > 0 && !(s < 1.0))
      throw std::domain_error("sample_aux: truncated mass must be < 1");
    if (term.total() > 0 && s > 0.0 && 1.0 - s < 1.0) {
      w.resize(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) w[k] = pi[idx[k]];
      if (mode == AuxMode::Aggregated) {
        const std::int64_t total = detail::negative_binomial_failures(term.total(), s, rng);
        detail::multinomial_split(total, w, alloc, rng);
      } else {
        std::geometric_distribution<std::int64_t> geo(1.0 - s);
        for (std::int64_t j = 0; j < term.total(); ++j)
          detail::multinomial_split(geo(rng), w, alloc, rng);
      }
    }
    aux.alloc.push_back(std::move(alloc));
  }
  return aux;
}

/// Observed counts of every term plus the auxiliary totals on the truncated
/// indices.
inline CountVector augmented_counts(const ObservationModel& model, const AuxCounts& aux) {
  if (aux.alloc.size() != model.num_terms())
    throw std::invalid_argument("augmented_counts: one allocation per term required");
  std::vector<std::int64_t> m(model.dimension(), 0);
  for (std::size_t l = 0; l < model.num_terms(); ++l) {
    const auto& term = model[l];
    const auto& idx = term.trunc().indices();
    if (aux.alloc[l].size() != idx.size())
      throw std::invalid_argument("augmented_counts: allocation shape mismatch");
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += term.counts()[i];
    for (std::size_t k = 0; k < idx.size(); ++k) m[idx[k]] += aux.alloc[l][k];
  }
  return CountVector(std::move(m));
}

/// One sweep: k ~ q(k | pi, m), then pi ~ Dir(alpha + augmented counts).
template <class Rng>
GibbsState gibbs_step(const GibbsState& state, const DirichletParams& alpha,
                      const ObservationModel& model, Rng& rng,
                      AuxMode mode = AuxMode::Aggregated) {
  GibbsState next;
  next.aux = sample_aux(model, state.pi, rng, mode);
  next.pi = sample_dirichlet(conjugate_posterior(alpha, augmented_counts(model, next.aux)), rng);
  return next;
}

/// Runs `steps` sweeps from `init` and records pi after each one. The
/// auxiliaries are dropped.
template <class Rng>
ChainTrace run_aux_chain(const DirichletParams& alpha, const ObservationModel& model,
                         const SimplexPoint& init, std::size_t steps, Rng& rng,
                         AuxMode mode = AuxMode::Aggregated) {
  if (steps < 1) throw std::invalid_argument("run_aux_chain: steps must be >= 1");
  detail::require_same_size(alpha.size(), model.dimension(), "run_aux_chain");
  detail::require_same_size(init.size(), model.dimension(), "run_aux_chain");
  ChainTrace trace(alpha.size());
  trace.reserve(steps);
  trace.metadata().sampler = "aux";
  trace.metadata().info["aux_mode_aggregated"] = mode == AuxMode::Aggregated ? 1.0 : 0.0;
  GibbsState state{init, {}};
  Stopwatch clock;
  for (std::size_t t = 0; t < steps; ++t) {
    state = gibbs_step(state, alpha, model, rng, mode);
    trace.append(state.pi, clock.seconds());
  }
  return trace;
}

}  // namespace dirtrunc
