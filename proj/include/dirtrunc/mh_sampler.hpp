#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "dirtrunc/chain_trace.hpp"
#include "dirtrunc/simplex.hpp"
#include "dirtrunc/truncated_model.hpp"

namespace dirtrunc {

inline constexpr std::size_t kTuningBatchSize = 100;
inline constexpr double kTuningRate = 0.5;
inline constexpr double kTuningBand = 0.05;

struct MhConfig {
  double beta = 100.0;
  double target_acceptance = 0.24;
  std::size_t adapt_steps = 0;

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("MhConfig: beta must be > 0");
    if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
      throw std::invalid_argument("MhConfig: target_acceptance must lie in (0, 1)");
  }
};

struct MhStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepts = 0;
  double current_beta = 0.0;

  double acceptance_rate() const noexcept {
    return proposals == 0 ? 0.0 : static_cast<double>(accepts) / static_cast<double>(proposals);
  }
};

/// Draw from the Dir(beta * pi) proposal. Empty when some beta * pi_i is not
/// a valid concentration; the caller treats that as a rejection.
template <class Rng>
std::optional<SimplexPoint> propose(const SimplexPoint& pi, double beta, Rng& rng) {
  std::vector<double> conc(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) {
    conc[i] = beta * pi[i];
    if (!(conc[i] > 0.0) || !std::isfinite(conc[i])) return std::nullopt;
  }
  return sample_dirichlet(DirichletParams(std::move(conc)), rng);
}

/// log Dir(to | beta * from).
inline double proposal_log_density(const SimplexPoint& to, const SimplexPoint& from, double beta) {
  std::vector<double> conc(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) conc[i] = beta * from[i];
  return dirichlet_log_density(to, DirichletParams(std::move(conc)));
}

/// log of p(proposed) q(current | proposed) / (p(current) q(proposed | current)).
/// -inf whenever the proposal touches the boundary.
inline double mh_log_ratio(const SimplexPoint& current, const SimplexPoint& proposed,
                           const DirichletParams& alpha, const ObservationModel& model,
                           double beta) {
  if (proposed.has_zero()) return kNegInf;
  const double target_new = posterior_log_density_unnormalized(proposed, alpha, model);
  if (!std::isfinite(target_new)) return kNegInf;
  const double target_old = posterior_log_density_unnormalized(current, alpha, model);
  const double fwd = proposal_log_density(proposed, current, beta);
  const double rev = proposal_log_density(current, proposed, beta);
  return (target_new - target_old) + (rev - fwd);
}

struct MhStepResult {
  SimplexPoint pi;
  bool accepted = false;
};

template <class Rng>
MhStepResult mh_step(const SimplexPoint& pi, const DirichletParams& alpha,
                     const ObservationModel& model, double beta, Rng& rng) {
  auto proposed = propose(pi, beta, rng);
  if (!proposed) return {pi, false};
  const double log_r = mh_log_ratio(pi, *proposed, alpha, model, beta);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double v = u(rng);
  if (log_r >= 0.0 || std::log(v) < log_r) return {std::move(*proposed), true};
  return {pi, false};
}

template <class Rng>
MhStepResult mh_step(const SimplexPoint& pi, const DirichletParams& alpha,
                     const ObservationModel& model, const MhConfig& cfg, Rng& rng) {
  return mh_step(pi, alpha, model, cfg.beta, rng);
}

struct TuningResult {
  double beta = 0.0;
  /// Acceptance over the last tenth of the adaptation batches.
  double final_acceptance = 0.0;
  bool in_band = false;
  std::size_t batches = 0;
  MhStats stats;
};

/// Burn-in adaptation of beta. After every batch of kTuningBatchSize steps,
///   log beta -= (kTuningRate / sqrt(batch)) * (batch_acceptance - target),
/// so beta shrinks (bolder proposals) while acceptance is above target. The
/// returned beta is meant to be frozen for sampling.
template <class Rng>
TuningResult tune_beta(const DirichletParams& alpha, const ObservationModel& model,
                       const MhConfig& cfg, Rng& rng, std::optional<SimplexPoint> init = {}) {
  cfg.validate();
  if (cfg.adapt_steps == 0) throw std::invalid_argument("tune_beta: adapt_steps must be > 0");
  SimplexPoint pi = init ? *init : sample_dirichlet(alpha, rng);
  double beta = cfg.beta;
  const std::size_t batches = (cfg.adapt_steps + kTuningBatchSize - 1) / kTuningBatchSize;
  const std::size_t tail = std::max<std::size_t>(1, batches / 10);
  std::uint64_t tail_props = 0, tail_accepts = 0;
  TuningResult out;
  for (std::size_t b = 1; b <= batches; ++b) {
    std::size_t accepted = 0;
    for (std::size_t s = 0; s < kTuningBatchSize; ++s) {
      auto r = mh_step(pi, alpha, model, beta, rng);
      pi = std::move(r.pi);
      accepted += r.accepted ? 1 : 0;
    }
    out.stats.proposals += kTuningBatchSize;
    out.stats.accepts += accepted;
    if (b + tail > batches) {
      tail_props += kTuningBatchSize;
      tail_accepts += accepted;
    }
    const double rate = static_cast<double>(accepted) / static_cast<double>(kTuningBatchSize);
    const double eta = kTuningRate / std::sqrt(static_cast<double>(b));
    beta *= std::exp(-eta * (rate - cfg.target_acceptance));
  }
  out.beta = beta;
  out.batches = batches;
  out.final_acceptance = static_cast<double>(tail_accepts) / static_cast<double>(tail_props);
  out.in_band = std::abs(out.final_acceptance - cfg.target_acceptance) <= kTuningBand;
  out.stats.current_beta = beta;
  return out;
}

/// Fixed-beta MH chain; records pi after each step.
template <class Rng>
ChainTrace run_mh_chain(const DirichletParams& alpha, const ObservationModel& model,
                        const SimplexPoint& init, std::size_t steps, const MhConfig& cfg,
                        Rng& rng) {
  cfg.validate();
  if (steps < 1) throw std::invalid_argument("run_mh_chain: steps must be >= 1");
  detail::require_same_size(alpha.size(), model.dimension(), "run_mh_chain");
  detail::require_same_size(init.size(), model.dimension(), "run_mh_chain");
  if (!std::isfinite(posterior_log_density_unnormalized(init, alpha, model)))
    throw std::invalid_argument("run_mh_chain: target density is zero at the initial point");
  ChainTrace trace(alpha.size());
  trace.reserve(steps);
  MhStats stats;
  stats.current_beta = cfg.beta;
  SimplexPoint pi = init;
  Stopwatch clock;
  for (std::size_t t = 0; t < steps; ++t) {
    auto r = mh_step(pi, alpha, model, cfg.beta, rng);
    pi = std::move(r.pi);
    ++stats.proposals;
    stats.accepts += r.accepted ? 1 : 0;
    trace.append(pi, clock.seconds());
  }
  auto& meta = trace.metadata();
  meta.sampler = "mh";
  meta.info["beta"] = stats.current_beta;
  meta.info["proposals"] = static_cast<double>(stats.proposals);
  meta.info["accepts"] = static_cast<double>(stats.accepts);
  meta.info["acceptance_rate"] = stats.acceptance_rate();
  meta.info["tuning_batch_size"] = static_cast<double>(kTuningBatchSize);
  meta.info["tuning_rate"] = kTuningRate;
  return trace;
}

}  // namespace dirtrunc
