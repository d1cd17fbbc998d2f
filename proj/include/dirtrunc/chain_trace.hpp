#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirtrunc/simplex.hpp"

namespace dirtrunc {

struct TraceMetadata {
  std::uint64_t seed = 0;
  std::string sampler;
  /// Free-form numeric record (tuning constants, acceptance counts, ...).
  std::map<std::string, double> info;
};

/// T x n matrix of simplex samples with per-sample elapsed seconds.
class ChainTrace {
 public:
  ChainTrace() = default;
  explicit ChainTrace(std::size_t n) : n_(n) {}

  /// Builds from raw row-major data. Every row must lie on the simplex and
  /// timestamps must be nondecreasing.
  ChainTrace(std::size_t n, std::vector<double> samples, std::vector<double> seconds)
      : n_(n), samples_(std::move(samples)), seconds_(std::move(seconds)) {
    if (n_ == 0 || samples_.size() % n_ != 0)
      throw std::invalid_argument("ChainTrace: sample buffer is not a multiple of n");
    if (seconds_.size() != samples_.size() / n_)
      throw std::invalid_argument("ChainTrace: one timestamp per sample required");
    for (std::size_t t = 0; t < size(); ++t) {
      double s = 0.0;
      for (double v : row(t)) {
        if (!(v >= 0.0)) throw std::invalid_argument("ChainTrace: negative coordinate");
        s += v;
      }
      if (std::abs(s - 1.0) > kSimplexTolerance)
        throw std::invalid_argument("ChainTrace: row " + std::to_string(t) + " is off the simplex");
      if (t > 0 && seconds_[t] < seconds_[t - 1])
        throw std::invalid_argument("ChainTrace: timestamps must be nondecreasing");
    }
  }

  void reserve(std::size_t steps) {
    samples_.reserve(steps * n_);
    seconds_.reserve(steps);
  }

  void append(const SimplexPoint& pi, double seconds) {
    detail::require_same_size(pi.size(), n_, "ChainTrace::append");
    if (!seconds_.empty() && seconds < seconds_.back()) seconds = seconds_.back();
    samples_.insert(samples_.end(), pi.coords().begin(), pi.coords().end());
    seconds_.push_back(seconds);
  }

  std::size_t size() const noexcept { return n_ == 0 ? 0 : samples_.size() / n_; }
  std::size_t dimension() const noexcept { return n_; }
  std::span<const double> row(std::size_t t) const {
    return std::span<const double>(samples_).subspan(t * n_, n_);
  }
  double at(std::size_t t, std::size_t i) const { return samples_[t * n_ + i]; }
  const std::vector<double>& samples() const noexcept { return samples_; }
  const std::vector<double>& seconds() const noexcept { return seconds_; }

  TraceMetadata& metadata() noexcept { return meta_; }
  const TraceMetadata& metadata() const noexcept { return meta_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> samples_;
  std::vector<double> seconds_;
  TraceMetadata meta_;
};

/// M traces of common length and dimension.
class ChainEnsemble {
 public:
  ChainEnsemble() = default;
  explicit ChainEnsemble(std::vector<ChainTrace> chains) : chains_(std::move(chains)) {
    for (const auto& c : chains_) {
      if (c.size() != chains_.front().size() || c.dimension() != chains_.front().dimension())
        throw std::invalid_argument("ChainEnsemble: chains must share length and dimension");
    }
  }

  std::size_t num_chains() const noexcept { return chains_.size(); }
  std::size_t length() const noexcept { return chains_.empty() ? 0 : chains_.front().size(); }
  std::size_t dimension() const noexcept {
    return chains_.empty() ? 0 : chains_.front().dimension();
  }
  const ChainTrace& operator[](std::size_t j) const { return chains_[j]; }
  const std::vector<ChainTrace>& chains() const noexcept { return chains_; }

 private:
  std::vector<ChainTrace> chains_;
};

/// Monotonic seconds since construction.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace dirtrunc
