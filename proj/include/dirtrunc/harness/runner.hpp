#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dirtrunc/aux_gibbs.hpp"
#include "dirtrunc/harness/config.hpp"
#include "dirtrunc/mh_sampler.hpp"
#include "dirtrunc/random.hpp"

namespace dirtrunc::harness {

/// Seed streams under the master seed.
inline constexpr std::uint64_t kAuxStream = 1;
inline constexpr std::uint64_t kMhStream = 2;
inline constexpr std::uint64_t kTuningStream = 3;

/// Runs job(0..count-1) on up to `threads` workers (0 = hardware count).
/// The first exception thrown by any job is rethrown after all workers join.
template <class Job>
void parallel_for(std::size_t count, std::size_t threads, Job job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < count;) {
      try {
        job(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

/// Random start from the prior, redrawn while the target density is zero.
template <class Rng>
SimplexPoint random_start(const DirichletParams& alpha, const ObservationModel& model, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    SimplexPoint pi = sample_dirichlet(alpha, rng);
    if (!pi.has_zero() && std::isfinite(posterior_log_density_unnormalized(pi, alpha, model)))
      return pi;
  }
  throw std::runtime_error("random_start: no prior draw with positive posterior density");
}

/// Outcome of the once-per-experiment MH tuning run.
struct MhTuningSummary {
  double beta = 0.0;
  bool tuned = false;
  double final_acceptance = 0.0;
  bool in_band = false;
  std::size_t batches = 0;
};

inline MhTuningSummary tune_for_experiment(const ExperimentConfig& cfg) {
  MhTuningSummary out;
  if (cfg.mh.fixed_beta) {
    out.beta = *cfg.mh.fixed_beta;
    return out;
  }
  const auto alpha = cfg.alpha_params();
  const auto model = cfg.model();
  auto rng = make_random_source(derive_seed(cfg.seed, kTuningStream, 0));
  MhConfig mc;
  mc.beta = cfg.mh.initial_beta;
  mc.target_acceptance = cfg.mh.target_acceptance;
  mc.adapt_steps = cfg.mh.adapt_steps;
  const auto r = tune_beta(alpha, model, mc, rng, random_start(alpha, model, rng));
  out.beta = r.beta;
  out.tuned = true;
  out.final_acceptance = r.final_acceptance;
  out.in_band = r.in_band;
  out.batches = r.batches;
  return out;
}

/// Runs cfg.chains chains of one sampler. Each chain draws its start and
/// its steps from its own derived seed, so results do not depend on the
/// thread count or on scheduling.
inline ChainEnsemble run_chains(const ExperimentConfig& cfg, const std::string& sampler,
                                std::optional<double> mh_beta = {}) {
  const auto alpha = cfg.alpha_params();
  const auto model = cfg.model();
  MhConfig mc;
  if (sampler == "mh") {
    mc.beta = mh_beta ? *mh_beta : tune_for_experiment(cfg).beta;
    mc.target_acceptance = cfg.mh.target_acceptance;
  } else if (sampler != "aux") {
    throw std::invalid_argument("run_chains: unknown sampler '" + sampler + "'");
  }
  const std::uint64_t stream = sampler == "aux" ? kAuxStream : kMhStream;

  std::vector<ChainTrace> chains(cfg.chains);
  parallel_for(cfg.chains, cfg.threads, [&](std::size_t j) {
    const std::uint64_t seed = derive_seed(cfg.seed, stream, j);
    auto rng = make_random_source(seed);
    const SimplexPoint init = random_start(alpha, model, rng);
    ChainTrace trace = sampler == "aux" ? run_aux_chain(alpha, model, init, cfg.steps, rng, cfg.aux_mode)
                                        : run_mh_chain(alpha, model, init, cfg.steps, mc, rng);
    trace.metadata().seed = seed;
    chains[j] = std::move(trace);
  });
  return ChainEnsemble(std::move(chains));
}

}  // namespace dirtrunc::harness
