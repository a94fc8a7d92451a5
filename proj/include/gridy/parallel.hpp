#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace gridy {

/// Selects between the OpenMP kernels and the serial reference path.
/// Both paths draw from per-index sub-seeds, so their results agree bitwise.
enum class Execution { serial, parallel };

/// Caps the number of OpenMP threads used by every kernel. Values < 1 reset to
/// the runtime default (or GRIDY_THREADS when set).
void set_thread_cap(int threads);
int thread_cap();

/// Reads GRIDY_THREADS from the environment; returns 0 when unset or invalid.
int thread_cap_from_env();

/// Runs fn(i) for i in [0, n). Exceptions thrown inside the parallel region are
/// captured and the first one is rethrown on the calling thread.
template <class Fn>
void parallel_for(Execution exec, std::ptrdiff_t n, Fn&& fn) {
  if (exec == Execution::serial || n < 2) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic) num_threads(thread_cap())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace gridy
