#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace mltherm {

/// Worker count: MLTHERM_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("MLTHERM_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(b) for b in [0, count). Results must be written to per-index slots by fn.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned workers = worker_count()) {
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t b = 0; b < count; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t b = next++; b < count; b = next++) {
        try {
          fn(b);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Running mean / sum of squared deviations, mergeable in a fixed order.
struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const Moments& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double delta = other.mean - mean;
    const double n = na + nb;
    mean += delta * nb / n;
    m2 += other.m2 + delta * delta * na * nb / n;
    count += other.count;
  }

  /// Standard error of the mean; empty when fewer than two samples.
  std::optional<double> stderr_of_mean() const {
    if (count < 2) return std::nullopt;
    const double var = m2 / static_cast<double>(count - 1);
    return std::sqrt(var / static_cast<double>(count));
  }
};

}  // namespace mltherm
