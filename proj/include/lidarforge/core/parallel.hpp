// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace lidarforge {

/// Worker count from LIDARFORGE_WORKERS, else the hardware concurrency (at least 1).
inline unsigned default_workers() {
  if (const char* env = std::getenv("LIDARFORGE_WORKERS"); env != nullptr && *env != '\0') {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
      // Fall through to the hardware default.
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls `body(i)` for every i in [0, n) on up to `workers` threads, handing out
/// blocks of `grain` indices. Results must be written to per-index slots; the
/// schedule is not deterministic but anything keyed by index is.
///
/// If bodies throw, the exception from the lowest failing index is rethrown
/// after all threads join.
template <typename Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body, std::size_t grain = 1) {
  if (n == 0) return;
  grain = std::max<std::size_t>(grain, 1);
  const std::size_t blocks = (n + grain - 1) / grain;
  workers = static_cast<unsigned>(std::clamp<std::size_t>(workers, 1, blocks));

  std::atomic<std::size_t> next_block{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = std::numeric_limits<std::size_t>::max();

  auto run = [&] {
    for (;;) {
      const std::size_t block = next_block.fetch_add(1, std::memory_order_relaxed);
      if (block >= blocks) return;
      const std::size_t end = std::min(n, (block + 1) * grain);
      for (std::size_t i = block * grain; i < end; ++i) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (i < error_index) {
            error_index = i;
            error = std::current_exception();
          }
          break;
        }
      }
    }
  };

  if (workers == 1) {
    run();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) threads.emplace_back(run);
    run();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace lidarforge
