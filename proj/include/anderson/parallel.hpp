#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <functional>
#include <future>
#include <thread>
#include <type_traits>
#include <vector>

namespace anderson {

/// Worker count and progress sink for realization loops. The progress callback
/// is only ever invoked from the calling thread, at most every `progress_interval`.
struct ExecutionContext {
  unsigned workers = 1;
  std::function<void(std::size_t done, std::size_t total)> progress;
  std::chrono::milliseconds progress_interval{500};
};

/// results[i] = fn(i) for i in [0, count). Workers own contiguous index ranges
/// and write disjoint slots, so the output does not depend on the worker count.
template <class Fn>
auto parallel_map(std::size_t count, const ExecutionContext& ctx, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using Result = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<Result> results(count);
  const unsigned workers = static_cast<unsigned>(std::clamp<std::size_t>(ctx.workers, 1, std::max<std::size_t>(count, 1)));
  using clock = std::chrono::steady_clock;
  auto last_report = clock::now();

  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      results[i] = fn(i);
      if (ctx.progress && clock::now() - last_report >= ctx.progress_interval) {
        ctx.progress(i + 1, count);
        last_report = clock::now();
      }
    }
    if (ctx.progress) ctx.progress(count, count);
    return results;
  }

  std::atomic<std::size_t> done{0};
  std::vector<std::future<void>> jobs;
  jobs.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = count * w / workers;
    const std::size_t end = count * (w + 1) / workers;
    jobs.push_back(std::async(std::launch::async, [&, begin, end] {
      for (std::size_t i = begin; i < end; ++i) {
        results[i] = fn(i);
        done.fetch_add(1, std::memory_order_relaxed);
      }
    }));
  }
  std::exception_ptr failure;
  for (auto& job : jobs) {
    while (job.wait_for(std::chrono::milliseconds(50)) != std::future_status::ready) {
      if (ctx.progress && clock::now() - last_report >= ctx.progress_interval) {
        ctx.progress(done.load(std::memory_order_relaxed), count);
        last_report = clock::now();
      }
    }
    try {
      job.get();
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  if (ctx.progress) ctx.progress(count, count);
  return results;
}

}  // namespace anderson
